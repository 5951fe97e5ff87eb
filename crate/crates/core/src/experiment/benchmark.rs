//! Composite benchmarking metric and its parts, anchor points, and the
//! perturbation neighborhood used for resilience.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensitivity::{sobol_points, FmhBounds};
use crate::stats::{pearson, spearman, TestResult};

/// Lower clamp for normalized baseline scores in the ratio metric.
pub const GS_BASELINE_FLOOR: f64 = 1e-6;
/// Neighborhood half-width as a fraction of each parameter's range.
pub const DEFAULT_RESILIENCE_SIGMA: f64 = 0.05;
pub const DEFAULT_RESILIENCE_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CompositeWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn equal() -> Self {
        Self {
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weights must be nonnegative with a positive sum, got {all:?}"
            )));
        }
        Ok(())
    }
}

/// Mean of `p_i / max(gs_i, floor)` over paired normalized scores.
pub fn gs_weighted_metric(p: &[f64], gs: &[f64]) -> Result<f64> {
    if p.len() != gs.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: gs.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::InvalidArgument("no scores".into()));
    }
    let mut sum = 0.0;
    for (&a, &b) in p.iter().zip(gs) {
        if !(a.is_finite() && b.is_finite()) || b < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid score pair ({a}, {b})")));
        }
        let denom = b.max(GS_BASELINE_FLOOR);
        if denom <= 0.0 {
            return Err(Error::DegenerateInput("baseline score is zero".into()));
        }
        sum += a / denom;
    }
    Ok(sum / p.len() as f64)
}

pub fn generalization_metric(p_inner: f64, p_mid: f64, p_outer: f64) -> f64 {
    (p_inner + p_mid + p_outer) / 3.0
}

/// `1 - mean((P_i - P_ref)^2) / P_ref`. Not clipped; large deviations can
/// drive it negative.
pub fn resilience_metric(p_ref: f64, perturbed: &[f64]) -> Result<f64> {
    if !(p_ref > 0.0 && p_ref.is_finite()) {
        return Err(Error::DegenerateInput(format!("reference score must be positive, got {p_ref}")));
    }
    if perturbed.is_empty() {
        return Err(Error::InvalidArgument("no perturbed scores".into()));
    }
    let msd = perturbed.iter().map(|p| (p - p_ref).powi(2)).sum::<f64>() / perturbed.len() as f64;
    Ok(1.0 - msd / p_ref)
}

pub fn composite_metric(weights: &CompositeWeights, gsw: f64, gm: f64, r: f64) -> f64 {
    weights.alpha * gsw + weights.beta * gm + weights.gamma * r
}

/// Pearson and Spearman between two methods' scores over the same rows.
pub fn complexity_correlation(scores_a: &[f64], scores_b: &[f64]) -> Result<(TestResult, TestResult)> {
    Ok((pearson(scores_a, scores_b)?, spearman(scores_a, scores_b)?))
}

/// Per-parameter midpoints of the lower half, the full range and the upper
/// half of the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorPoints {
    pub inner: Vec<f64>,
    pub mid: Vec<f64>,
    pub outer: Vec<f64>,
}

impl AnchorPoints {
    pub fn named(&self) -> [(&'static str, &[f64]); 3] {
        [("inner", &self.inner), ("mid", &self.mid), ("outer", &self.outer)]
    }
}

pub fn anchor_points(bounds: &FmhBounds) -> Result<AnchorPoints> {
    bounds.validate()?;
    let mut a = AnchorPoints {
        inner: Vec::new(),
        mid: Vec::new(),
        outer: Vec::new(),
    };
    for p in &bounds.parameters {
        let mid = p.midpoint();
        let round = |x: f64| if p.integer { x.round() } else { x };
        a.inner.push(round(0.5 * (p.lower + mid)));
        a.mid.push(round(mid));
        a.outer.push(round(0.5 * (mid + p.upper)));
    }
    Ok(a)
}

/// `n` Sobol points spread over `center +- sigma_fraction * range`, clipped
/// to the bounds, integer parameters rounded.
pub fn resilience_neighborhood(
    bounds: &FmhBounds,
    center: &[f64],
    sigma_fraction: f64,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    bounds.validate()?;
    if center.len() != bounds.dimension() {
        return Err(Error::LengthMismatch {
            expected: bounds.dimension(),
            actual: center.len(),
        });
    }
    if !(sigma_fraction > 0.0 && sigma_fraction.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "neighborhood needs sigma > 0 and at least one point, got sigma {sigma_fraction}, n {n}"
        )));
    }
    let unit = sobol_points(bounds.dimension(), n)?;
    Ok(unit
        .iter()
        .map(|u| {
            bounds
                .parameters
                .iter()
                .zip(center)
                .zip(u)
                .map(|((p, &c), &u)| {
                    let sigma = sigma_fraction * (p.upper - p.lower);
                    let x = (c + sigma * (2.0 * u - 1.0)).clamp(p.lower, p.upper);
                    if p.integer {
                        x.round()
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::Parameter;

    #[test]
    fn gs_weighted_cases() {
        let gs = [0.4, 0.6, 0.9];
        assert_eq!(gs_weighted_metric(&gs, &gs).unwrap(), 1.0);
        let doubled: Vec<f64> = gs.iter().map(|v| 2.0 * v).collect();
        assert!((gs_weighted_metric(&doubled, &gs).unwrap() - 2.0).abs() < 1e-15);
        assert!((gs_weighted_metric(&[0.2, 0.9], &[0.4, 0.6]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gs_weighted_floors_zero_baseline() {
        let v = gs_weighted_metric(&[0.5], &[0.0]).unwrap();
        assert_eq!(v, 0.5 / GS_BASELINE_FLOOR);
        assert!(gs_weighted_metric(&[0.5], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn generalization_cases() {
        assert_eq!(generalization_metric(0.2, 0.5, 0.8), 0.5);
        assert_eq!(generalization_metric(1.0, 1.0, 1.0), 1.0);
        assert!((generalization_metric(0.0, 0.3, 0.9) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn resilience_cases() {
        assert_eq!(resilience_metric(0.7, &[0.7; 5]).unwrap(), 1.0);
        assert_eq!(resilience_metric(1.0, &[0.5]).unwrap(), 0.75);
        assert!((resilience_metric(0.5, &[0.5, 0.4]).unwrap() - 0.99).abs() < 1e-12);
        assert!(matches!(resilience_metric(0.0, &[0.1]).unwrap_err(), Error::DegenerateInput(_)));
    }

    #[test]
    fn composite_cases() {
        let w = CompositeWeights::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(composite_metric(&w, 1.7, 0.2, 0.3), 1.7);
        let w = CompositeWeights::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(composite_metric(&w, 1.7, 0.2, 0.75), 0.75);
        assert!((composite_metric(&CompositeWeights::equal(), 1.0, 0.5, 0.75) - 0.75).abs() < 1e-15);
        assert!(CompositeWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(CompositeWeights::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn complexity_correlation_cases() {
        let a = [0.3, 0.1, 0.9, 0.5, 0.7];
        let (p, s) = complexity_correlation(&a, &a).unwrap();
        assert!((p.statistic - 1.0).abs() < 1e-12 && (s.statistic - 1.0).abs() < 1e-12);
        let reversed = [0.5, 0.9, 0.1, 0.3, 0.2];
        let (_, s) = complexity_correlation(&a, &reversed).unwrap();
        assert!((s.statistic + 1.0).abs() < 1e-12);
    }

    #[test]
    fn anchors_on_reference_bounds() {
        let a = anchor_points(&FmhBounds::reference()).unwrap();
        assert!((a.mid[0] - 1000e-9).abs() < 1e-18);
        assert!((a.mid[1] - 42e-6).abs() < 1e-18);
        assert_eq!(a.mid[2], 2064.0);
        assert!((a.mid[3] - 0.75).abs() < 1e-15);
        assert!((a.inner[0] - 600e-9).abs() < 1e-18);
        assert!((a.outer[0] - 1400e-9).abs() < 1e-18);
    }

    #[test]
    fn anchors_on_unit_bounds() {
        let a = anchor_points(&FmhBounds::unit(4)).unwrap();
        assert_eq!(a.mid, vec![0.5; 4]);
        assert_eq!(a.inner, vec![0.25; 4]);
        assert_eq!(a.outer, vec![0.75; 4]);
    }

    #[test]
    fn neighborhood_stays_in_box_and_bounds() {
        let bounds = FmhBounds::new(vec![
            Parameter::new("a", 0.0, 10.0, false),
            Parameter::new("n", 64.0, 256.0, true),
        ])
        .unwrap();
        let pts = resilience_neighborhood(&bounds, &[0.2, 100.0], 0.05, 32).unwrap();
        assert_eq!(pts.len(), 32);
        for p in &pts {
            assert!((0.0..=0.7).contains(&p[0]), "{p:?}");
            assert!((90.0..=110.0).contains(&p[1]) && p[1].fract() == 0.0, "{p:?}");
        }
        assert!(pts.iter().any(|p| p[0] == 0.0), "clipped at lower bound");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn resilience_never_exceeds_one(p_ref in 0.01f64..1.0, pert in proptest::collection::vec(0.0f64..1.0, 1..20)) {
                let r = resilience_metric(p_ref, &pert).unwrap();
                prop_assert!(r <= 1.0);
                prop_assert_eq!(r == 1.0, pert.iter().all(|&p| p == p_ref));
            }

            #[test]
            fn gs_weighted_scale_invariant(pairs in proptest::collection::vec((0.01f64..1.0, 0.01f64..1.0), 1..20), c in 0.1f64..10.0) {
                let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
                let g: Vec<f64> = pairs.iter().map(|x| x.1).collect();
                let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
                let gs: Vec<f64> = g.iter().map(|v| v * c).collect();
                let a = gs_weighted_metric(&p, &g).unwrap();
                let b = gs_weighted_metric(&ps, &gs).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }

            #[test]
            fn anchors_inside_and_idempotent(lo in -10.0f64..10.0, width in 0.1f64..10.0) {
                let bounds = FmhBounds::new(vec![Parameter::new("x", lo, lo + width, false)]).unwrap();
                let a = anchor_points(&bounds).unwrap();
                prop_assert_eq!(&a, &anchor_points(&bounds).unwrap());
                for v in [a.inner[0], a.mid[0], a.outer[0]] {
                    prop_assert!(v > lo && v < lo + width);
                }
                prop_assert!(a.inner[0] < a.mid[0] && a.mid[0] < a.outer[0]);
            }
        }
    }
}

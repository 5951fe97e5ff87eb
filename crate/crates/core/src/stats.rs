//! Correlation coefficients and the Wilcoxon signed-rank test.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Largest zero-free sample size for which the Wilcoxon p-value is computed
/// exactly; above it the tie-corrected normal approximation is used.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    Less,
    Greater,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Less => "less",
            Alternative::Greater => "greater",
        })
    }
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "two_sided" => Ok(Alternative::TwoSided),
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            other => Err(Error::InvalidArgument(format!("unknown alternative {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub alternative: Alternative,
}

fn check_pair(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < min_n {
        return Err(Error::InvalidArgument(format!(
            "need at least {min_n} paired samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    Ok(())
}

fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("correlation needs nonzero variance in both samples".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a correlation via Student's t with `n - 2` dof.
fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let dof = (n - 2) as f64;
    let t = r * (dof / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("dof is positive");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_pair(x, y, 3)?;
    let r = correlation(x, y)?;
    Ok(TestResult {
        statistic: r,
        p_value: correlation_p_value(r, x.len()),
        n: x.len(),
        alternative: Alternative::TwoSided,
    })
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("median of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Average (1-based) ranks; tied values share the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_pair(x, y, 3)?;
    let rx = mid_ranks(x);
    let ry = mid_ranks(y);
    let rho = correlation(&rx, &ry)
        .map_err(|_| Error::DegenerateInput("spearman is undefined when one sample is entirely tied".into()))?;
    Ok(TestResult {
        statistic: rho,
        p_value: correlation_p_value(rho, x.len()),
        n: x.len(),
        alternative: Alternative::TwoSided,
    })
}

/// Wilcoxon signed-rank test on the paired differences `x - y`.
///
/// Zero differences are dropped; tied `|d|` get mid-ranks. The statistic is
/// the rank sum of positive differences. "less" tests whether `x` tends to be
/// smaller than `y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alternative: Alternative) -> Result<TestResult> {
    check_pair(x, y, 1)?;
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::DegenerateInput("all paired differences are zero".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = diffs.len();
    let p_value = if n <= WILCOXON_EXACT_MAX_N {
        wilcoxon_exact_p(&ranks, w, alternative)
    } else {
        wilcoxon_normal_p(&ranks, w, alternative)
    };
    Ok(TestResult {
        statistic: w,
        p_value,
        n,
        alternative,
    })
}

/// Exact null distribution of the positive rank sum, by dynamic programming
/// over doubled (integer) ranks. Every sign pattern is equally likely.
fn wilcoxon_exact_p(ranks: &[f64], w: f64, alternative: Alternative) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w).round() as usize;
    let le: f64 = counts[..=w2].iter().sum::<f64>() / total;
    let ge: f64 = counts[w2..].iter().sum::<f64>() / total;
    match alternative {
        Alternative::Less => le,
        Alternative::Greater => ge,
        Alternative::TwoSided => (2.0 * le.min(ge)).min(1.0),
    }
}

fn wilcoxon_normal_p(ranks: &[f64], w: f64, alternative: Alternative) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t) / 48 over groups of tied ranks.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j;
    }
    let sd = var.sqrt();
    let normal = Normal::standard();
    match alternative {
        Alternative::Less => normal.cdf((w - mean + 0.5) / sd),
        Alternative::Greater => normal.sf((w - mean - 0.5) / sd),
        Alternative::TwoSided => {
            let z = ((w - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * normal.sf(z)).min(1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over all 2^n sign assignments.
    fn sign_enumeration_p(ranks: &[f64], w: f64, alternative: Alternative) -> f64 {
        let n = ranks.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if s <= w + 1e-9 {
                le += 1;
            }
            if s >= w - 1e-9 {
                ge += 1;
            }
        }
        let total = (1u64 << n) as f64;
        match alternative {
            Alternative::Less => le as f64 / total,
            Alternative::Greater => ge as f64 / total,
            Alternative::TwoSided => (2.0 * (le.min(ge) as f64) / total).min(1.0),
        }
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((pearson(&x, &x).unwrap().statistic - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap().statistic + 1.0).abs() < 1e-15);

        // Hand computation: means 3 and 3.2; Sxy = 10, Sxx = 10, Syy = 14.8.
        let y = [2.0, 1.0, 4.0, 3.0, 6.0];
        let r = pearson(&x, &y).unwrap();
        assert!((r.statistic - 10.0 / (10.0f64 * 14.8).sqrt()).abs() < 1e-12);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);

        assert!(matches!(
            pearson(&x, &[1.0; 5]).unwrap_err(),
            Error::DegenerateInput(_)
        ));
    }

    #[test]
    fn pearson_p_value_reference() {
        // r = 0.8 with n = 10: t = 3.7712, two-sided p = 0.005456.
        let p = correlation_p_value(0.8, 10);
        assert!((p - 0.005456).abs() < 1e-9, "{p}");
    }

    #[test]
    fn spearman_cases() {
        let x: Vec<f64> = (1..=8).map(|v| v as f64).collect();
        let cubic: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        assert!((spearman(&x, &cubic).unwrap().statistic - 1.0).abs() < 1e-15);
        let decay: Vec<f64> = x.iter().map(|v| (-v).exp()).collect();
        assert!((spearman(&x, &decay).unwrap().statistic + 1.0).abs() < 1e-15);
        assert!(matches!(
            spearman(&x, &[2.0; 8]).unwrap_err(),
            Error::DegenerateInput(_)
        ));
    }

    #[test]
    fn spearman_with_ties_matches_hand_ranks() {
        // x ranks (1, 2.5, 2.5, 4); y ranks (1, 3, 2, 4).
        let x = [1.0, 2.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_eq!(mid_ranks(&x), vec![1.0, 2.5, 2.5, 4.0]);
        let rx = [1.0, 2.5, 2.5, 4.0];
        let ry = [1.0, 3.0, 2.0, 4.0];
        // Both rank vectors have mean 2.5.
        let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - 2.5) * (b - 2.5)).sum();
        let sxx: f64 = rx.iter().map(|a| (a - 2.5) * (a - 2.5)).sum();
        let syy: f64 = ry.iter().map(|b| (b - 2.5) * (b - 2.5)).sum();
        let expected = sxy / (sxx * syy).sqrt();
        assert!((spearman(&x, &y).unwrap().statistic - expected).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_exact_matches_enumeration() {
        let x = [1.1, 2.5, 0.3, 4.0, 2.2, 5.0];
        let y = [0.9, 3.0, 0.0, 2.5, 2.2 - 0.7, 4.1];
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let ranks = mid_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
        for alt in [Alternative::Less, Alternative::Greater, Alternative::TwoSided] {
            let r = wilcoxon_signed_rank(&x, &y, alt).unwrap();
            assert_eq!(r.n, 6);
            let oracle = sign_enumeration_p(&ranks, r.statistic, alt);
            assert!((r.p_value - oracle).abs() < 1e-15, "{alt}: {} vs {oracle}", r.p_value);
        }
    }

    #[test]
    fn wilcoxon_drops_zeros_and_rejects_all_zero() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(wilcoxon_signed_rank(&x, &y, Alternative::Greater).unwrap().n, 3);
        assert!(matches!(
            wilcoxon_signed_rank(&x, &x, Alternative::Less).unwrap_err(),
            Error::DegenerateInput(_)
        ));
    }

    #[test]
    fn wilcoxon_all_less_large_sample() {
        let n = 1024;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| i as f64 + 1.0 + (i % 7) as f64).collect();
        let r = wilcoxon_signed_rank(&x, &y, Alternative::Less).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value < 1e-100 && r.p_value > 0.0, "{}", r.p_value);
    }

    #[test]
    fn one_sided_p_values_overlap() {
        let x = [0.3, -1.2, 2.2, 0.8, -0.1, 1.7, 0.9, -0.4];
        let y = [0.0; 8];
        let less = wilcoxon_signed_rank(&x, &y, Alternative::Less).unwrap().p_value;
        let greater = wilcoxon_signed_rank(&x, &y, Alternative::Greater).unwrap().p_value;
        assert!(less + greater >= 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn correlations_symmetric(pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)) {
                let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&y, &x)) {
                    prop_assert!((a.statistic - b.statistic).abs() < 1e-12);
                }
                if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&y, &x)) {
                    prop_assert!((a.statistic - b.statistic).abs() < 1e-12);
                    let ex: Vec<f64> = x.iter().map(|v| (v / 50.0).exp()).collect();
                    let c = spearman(&ex, &y).unwrap();
                    prop_assert!((a.statistic - c.statistic).abs() < 1e-12);
                }
            }

            #[test]
            fn wilcoxon_tails_overlap(d in proptest::collection::vec(-5.0f64..5.0, 1..60)) {
                let zeros = vec![0.0; d.len()];
                if let (Ok(l), Ok(g)) = (
                    wilcoxon_signed_rank(&d, &zeros, Alternative::Less),
                    wilcoxon_signed_rank(&d, &zeros, Alternative::Greater),
                ) {
                    prop_assert!(l.p_value + g.p_value >= 1.0 - 1e-12);
                    prop_assert!((0.0..=1.0).contains(&l.p_value));
                }
            }

            #[test]
            fn stronger_shift_never_raises_p(d in proptest::collection::vec(-1.0f64..1.0, 5..60), shift in 0.0f64..2.0) {
                let zeros = vec![0.0; d.len()];
                let shifted: Vec<f64> = d.iter().map(|v| v + shift).collect();
                if let (Ok(a), Ok(b)) = (
                    wilcoxon_signed_rank(&d, &zeros, Alternative::Greater),
                    wilcoxon_signed_rank(&shifted, &zeros, Alternative::Greater),
                ) {
                    prop_assert!(b.p_value <= a.p_value + 1e-12);
                }
            }
        }
    }
}

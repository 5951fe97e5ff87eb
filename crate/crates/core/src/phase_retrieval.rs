//! Gerchberg-Saxton phase retrieval with seeded random initialization.
//!
//! One iteration alternates the two amplitude constraints:
//!
//! ```text
//! E_tp  <- sqrt(I) exp(i phi)
//! E_slm <- Psi^-1(E_tp)
//! phi_slm <- arg(E_slm)
//! E_tp  <- Psi(a exp(i phi_slm))
//! phi   <- arg(E_tp)
//! ```
//!
//! Metrics are taken on `|E_tp|^2` against `I` after the full cycle, without
//! rescaling the reconstruction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Image, IntensityMap};
use crate::metrics::MetricRecord;
use crate::propagation::{Direction, FmhConfig, ForwardModel, Propagator};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsConfig {
    pub forward_model: ForwardModel,
    pub fmh: FmhConfig,
    pub iterations: usize,
    pub seed: u64,
    pub slm_amplitude: f64,
}

impl GsConfig {
    pub fn new(forward_model: ForwardModel, fmh: FmhConfig, iterations: usize, seed: u64) -> Self {
        Self {
            forward_model,
            fmh,
            iterations,
            seed,
            slm_amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("GS needs at least one iteration".into()));
        }
        if !(self.slm_amplitude > 0.0 && self.slm_amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SLM amplitude must be positive, got {}",
                self.slm_amplitude
            )));
        }
        self.fmh.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub metrics: MetricRecord,
    /// `sum (|E_tp| - sqrt(I))^2` before the target-plane projection.
    pub amplitude_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsTrace {
    pub records: Vec<IterationRecord>,
    pub final_slm_phase: Vec<f64>,
    pub final_reconstruction: IntensityMap,
}

impl GsTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("a trace has at least one record")
    }
}

/// `m * m` phases i.i.d. uniform on `[-pi, pi)` from [`SplitMix64`], row-major.
pub fn random_phase(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    (0..m * m).map(|_| rng.next_phase()).collect()
}

/// Runs GS from a seeded random target-plane phase.
pub fn gs_run(target: &Image, cfg: &GsConfig) -> Result<GsTrace> {
    let phase = random_phase(cfg.fmh.slm_resolution, cfg.seed);
    gs_run_from_phase(target, cfg, &phase)
}

/// Runs GS from an explicit initial target-plane phase (`cfg.seed` unused).
pub fn gs_run_from_phase(target: &Image, cfg: &GsConfig, initial_phase: &[f64]) -> Result<GsTrace> {
    gs_run_recorded(target, cfg, initial_phase, |_| true)
}

/// Like [`gs_run_from_phase`] but only evaluates metrics for iterations where
/// `record(iteration)` holds; the trace then holds just those records.
pub fn gs_run_recorded(
    target: &Image,
    cfg: &GsConfig,
    initial_phase: &[f64],
    record: impl Fn(usize) -> bool,
) -> Result<GsTrace> {
    cfg.validate()?;
    let m = cfg.fmh.slm_resolution;
    if target.width() != m || target.height() != m {
        return Err(Error::SizeMismatch(format!(
            "target is {}x{}, configuration expects {m}x{m}",
            target.width(),
            target.height()
        )));
    }
    if initial_phase.len() != m * m {
        return Err(Error::LengthMismatch {
            expected: m * m,
            actual: initial_phase.len(),
        });
    }
    let propagator = Propagator::new(cfg.forward_model, cfg.fmh)?;
    let amplitude: Vec<f64> = target.data().iter().map(|v| v.sqrt()).collect();

    let mut phase = initial_phase.to_vec();
    let mut slm_phase = vec![0.0; m * m];
    let mut field = vec![Complex64::new(0.0, 0.0); m * m];
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut intensity = vec![0.0; m * m];

    for iteration in 1..=cfg.iterations {
        for ((z, &a), &p) in field.iter_mut().zip(&amplitude).zip(&phase) {
            *z = Complex64::from_polar(a, p);
        }
        propagator.apply_in_place(&mut field, Direction::Inverse);
        for (z, p) in field.iter_mut().zip(slm_phase.iter_mut()) {
            *p = z.arg();
            *z = Complex64::from_polar(cfg.slm_amplitude, *p);
        }
        propagator.apply_in_place(&mut field, Direction::Forward);

        if !record(iteration) && iteration < cfg.iterations {
            for (z, p) in field.iter().zip(phase.iter_mut()) {
                *p = z.arg();
            }
            continue;
        }
        let mut amplitude_error = 0.0;
        for (((z, p), i), a) in field.iter().zip(phase.iter_mut()).zip(intensity.iter_mut()).zip(&amplitude) {
            *p = z.arg();
            *i = z.norm_sqr();
            let e = z.norm() - a;
            amplitude_error += e * e;
        }
        if !record(iteration) {
            continue;
        }
        let recon = IntensityMap::new(m, m, intensity.clone())?;
        records.push(IterationRecord {
            iteration,
            metrics: MetricRecord::evaluate(&recon, target)?,
            amplitude_error,
        });
    }

    Ok(GsTrace {
        records,
        final_slm_phase: slm_phase,
        final_reconstruction: IntensityMap::new(m, m, intensity)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fourier_cfg(m: usize, iterations: usize, seed: u64) -> GsConfig {
        let fmh = FmhConfig::new(1e-6, 8e-6, m, 0.1).unwrap();
        GsConfig::new(ForwardModel::Fourier, fmh, iterations, seed)
    }

    #[test]
    fn random_phase_is_deterministic_and_seeded() {
        assert_eq!(random_phase(4, 7), random_phase(4, 7));
        assert_ne!(random_phase(4, 7), random_phase(4, 8));
    }

    #[test]
    fn random_phase_statistics() {
        let p = random_phase(64, 42);
        assert!(p.iter().all(|v| (-PI..PI).contains(v)));
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn trace_shape_and_phase_range() {
        let target = Image::constant(16, 16, 0.5).unwrap();
        let trace = gs_run(&target, &fourier_cfg(16, 5, 1)).unwrap();
        assert_eq!(trace.records.len(), 5);
        assert_eq!(trace.records[0].iteration, 1);
        assert!(trace.final_slm_phase.iter().all(|p| (-PI..=PI).contains(p)));
        assert!(trace.records.iter().all(|r| r.metrics.ssim.is_some()));
    }

    #[test]
    fn rejects_bad_inputs() {
        let target = Image::constant(8, 8, 0.5).unwrap();
        assert!(matches!(
            gs_run(&target, &fourier_cfg(16, 3, 1)).unwrap_err(),
            Error::SizeMismatch(_)
        ));
        assert!(gs_run(&target, &fourier_cfg(8, 0, 1)).is_err());
    }

    #[test]
    fn sparse_recording_matches_full_trace() {
        let target = Image::new(16, 16, (0..256).map(|i| (i % 17) as f64 / 16.0).collect()).unwrap();
        let cfg = fourier_cfg(16, 6, 11);
        let phase = random_phase(16, 11);
        let full = gs_run_from_phase(&target, &cfg, &phase).unwrap();
        let sparse = gs_run_recorded(&target, &cfg, &phase, |t| t == 2 || t == 5).unwrap();
        assert_eq!(sparse.records, vec![full.records[1], full.records[4]]);
        assert_eq!(sparse.final_slm_phase, full.final_slm_phase);
        assert_eq!(sparse.final_reconstruction, full.final_reconstruction);
    }

    #[test]
    fn fourier_reconstruction_energy_equals_slm_energy() {
        let target = Image::constant(8, 8, 0.25).unwrap();
        let mut cfg = fourier_cfg(8, 2, 3);
        cfg.slm_amplitude = 0.5;
        let trace = gs_run(&target, &cfg).unwrap();
        let energy: f64 = trace.final_reconstruction.data().iter().sum();
        assert!((energy - 0.25 * 64.0).abs() < 1e-10);
    }
}

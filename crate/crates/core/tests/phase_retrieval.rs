mod common;

use common::*;
use holosa::corpus::synthesize_image;
use holosa::field::{resize_bilinear, Image};
use holosa::metrics::PSNR_EPSILON;
use holosa::phase_retrieval::{gs_run_from_phase, random_phase};
use holosa::propagation::{Dft2, Direction};
use holosa::{gs_run, FmhConfig, ForwardModel, GsConfig};
use num_complex::Complex64;

fn fourier_cfg(m: usize, iterations: usize, seed: u64) -> GsConfig {
    GsConfig::new(ForwardModel::Fourier, FmhConfig::new(633e-9, 8e-6, m, 0.1).unwrap(), iterations, seed)
}

/// Intensity produced by a known SLM phase, scaled into `[0, 1]`, together
/// with the matching SLM amplitude and the exact target-plane phase.
fn reachable_target(m: usize, seed: u64) -> (Image, f64, Vec<f64>) {
    let phi = random_phase(m, seed);
    let mut buf: Vec<Complex64> = phi.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    Dft2::new(m).process_centered(&mut buf, Direction::Forward);
    let a = 1.0 / buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let img = Image::new(m, m, buf.iter().map(|z| (a * z.norm()).powi(2)).collect()).unwrap();
    (img, a, buf.iter().map(|z| z.arg()).collect())
}

#[test]
fn self_consistent_target_hits_psnr_cap() {
    let cap = -10.0 * PSNR_EPSILON.log10();
    for (m, seed) in [(16, 1), (64, 2)] {
        let (target, a, phase) = reachable_target(m, seed);
        let mut cfg = fourier_cfg(m, 3, 0);
        cfg.slm_amplitude = a;
        let trace = gs_run_from_phase(&target, &cfg, &phase).unwrap();
        assert_eq!(trace.records[0].metrics.psnr, cap);
        assert!(trace.records[0].amplitude_error < 1e-20);
    }
}

#[test]
fn fourier_error_never_increases() {
    let m = 64;
    for seed in 0..100u64 {
        let target = if seed % 2 == 0 {
            resize_bilinear(&synthesize_image(128, seed).unwrap(), m).unwrap()
        } else {
            random_image(m, seed)
        };
        let trace = gs_run(&target, &fourier_cfg(m, 30, seed)).unwrap();
        assert_eq!(trace.records.len(), 30);
        for w in trace.records.windows(2) {
            let (prev, next) = (w[0].amplitude_error, w[1].amplitude_error);
            assert!(next <= prev + 1e-9 * prev.max(1.0), "seed {seed}, iteration {}: {prev} -> {next}", w[1].iteration);
        }
    }
}

#[test]
fn small_grid_matches_straight_line_loop() {
    let m = 16;
    for seed in [3u64, 4, 5] {
        let target = random_image(m, seed);
        let phase = random_phase(m, seed + 100);
        for iterations in [1, 7, 30] {
            let trace = gs_run_from_phase(&target, &fourier_cfg(m, iterations, 0), &phase).unwrap();
            let (slm, intensity) = straight_line_gs_fourier(&target, &phase, iterations, 1.0);
            assert_eq!(trace.final_slm_phase, slm);
            assert_eq!(trace.final_reconstruction.data(), &intensity[..]);
        }
    }
}

#[test]
fn small_grid_matches_brute_force_loop() {
    let m = 16;
    let target = random_image(m, 9);
    let phase = random_phase(m, 10);
    let trace = gs_run_from_phase(&target, &fourier_cfg(m, 5, 0), &phase).unwrap();
    let naive = naive_gs_fourier(&target, &phase, 5);
    let worst = trace
        .final_reconstruction
        .data()
        .iter()
        .zip(&naive)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn asm_run_is_reproducible_and_bounded() {
    let m = 32;
    let target = resize_bilinear(&synthesize_image(64, 1).unwrap(), m).unwrap();
    let cfg = GsConfig::new(ForwardModel::Asm, FmhConfig::new(532e-9, 8e-6, m, 0.05).unwrap(), 10, 42);
    let a = gs_run(&target, &cfg).unwrap();
    let b = gs_run(&target, &cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.final_slm_phase, b.final_slm_phase);
    // The SLM field carries M^2 units of energy and ASM cannot add any.
    let e: f64 = a.final_reconstruction.data().iter().sum();
    assert!(e <= (m * m) as f64 * (1.0 + 1e-12));
}

#[test]
fn rejects_mismatched_target() {
    let target = random_image(8, 1);
    assert!(gs_run(&target, &fourier_cfg(16, 2, 0)).is_err());
    assert!(gs_run(&random_image(16, 1), &fourier_cfg(16, 0, 0)).is_err());
}

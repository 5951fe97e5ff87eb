//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use holosa::field::Image;
use holosa::propagation::{Dft2, Direction};
use holosa::rng::SplitMix64;
use num_complex::Complex64;

/// Direct O(M^4) orthonormal 2-D DFT, forward kernel `exp(-2 pi i (px + qy) / M)`.
pub fn naive_dft2(data: &[Complex64], m: usize, direction: Direction) -> Vec<Complex64> {
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for q in 0..m {
        for p in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..m {
                for x in 0..m {
                    let k = ((p * x + q * y) % m) as f64 / m as f64;
                    acc += data[y * m + x] * Complex64::from_polar(1.0, sign * 2.0 * PI * k);
                }
            }
            out[q * m + p] = acc / m as f64;
        }
    }
    out
}

/// Centered variant of [`naive_dft2`]: spatial and frequency origins at `M/2`.
pub fn naive_dft2_centered(data: &[Complex64], m: usize, direction: Direction) -> Vec<Complex64> {
    let c = m / 2;
    let mut shifted = vec![Complex64::new(0.0, 0.0); m * m];
    for y in 0..m {
        for x in 0..m {
            shifted[((y + m - c) % m) * m + (x + m - c) % m] = data[y * m + x];
        }
    }
    let t = naive_dft2(&shifted, m, direction);
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for q in 0..m {
        for p in 0..m {
            out[((q + c) % m) * m + (p + c) % m] = t[q * m + p];
        }
    }
    out
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn energy(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn random_field(m: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = SplitMix64::new(seed);
    (0..m * m)
        .map(|_| Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0))
        .collect()
}

pub fn random_image(m: usize, seed: u64) -> Image {
    let mut rng = SplitMix64::new(seed);
    Image::new(m, m, (0..m * m).map(|_| rng.next_f64()).collect()).unwrap()
}

/// Ishigami function on `[-pi, pi]^3`.
pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

/// Closed-form first- and total-order indices of the Ishigami function.
pub fn ishigami_indices(a: f64, b: f64) -> ([f64; 3], [f64; 3]) {
    let pi4 = PI.powi(4);
    let pi8 = PI.powi(8);
    let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * pi8 * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    ([v1 / v, v2 / v, 0.0], [(v1 + v13) / v, v2 / v, v13 / v])
}

/// Straight-line GS for the Fourier model on the same transform as the
/// library, written without the library's loop.
pub fn straight_line_gs_fourier(target: &Image, phase0: &[f64], iterations: usize, amplitude: f64) -> (Vec<f64>, Vec<f64>) {
    let m = target.width();
    let dft = Dft2::new(m);
    let sqrt_i: Vec<f64> = target.data().iter().map(|v| v.sqrt()).collect();
    let mut phi = phase0.to_vec();
    let mut slm = vec![0.0; m * m];
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    for _ in 0..iterations {
        for k in 0..m * m {
            buf[k] = Complex64::from_polar(sqrt_i[k], phi[k]);
        }
        dft.process_centered(&mut buf, Direction::Inverse);
        for k in 0..m * m {
            slm[k] = buf[k].arg();
            buf[k] = Complex64::from_polar(amplitude, slm[k]);
        }
        dft.process_centered(&mut buf, Direction::Forward);
        for k in 0..m * m {
            phi[k] = buf[k].arg();
        }
    }
    (slm, buf.iter().map(|z| z.norm_sqr()).collect())
}

/// The same loop on the brute-force DFT; returns the final intensity.
pub fn naive_gs_fourier(target: &Image, phase0: &[f64], iterations: usize) -> Vec<f64> {
    let m = target.width();
    let mut phi = phase0.to_vec();
    let mut intensity = vec![0.0; m * m];
    for _ in 0..iterations {
        let e_tp: Vec<Complex64> = target
            .data()
            .iter()
            .zip(&phi)
            .map(|(i, p)| Complex64::from_polar(i.sqrt(), *p))
            .collect();
        let slm: Vec<Complex64> = naive_dft2_centered(&e_tp, m, Direction::Inverse)
            .iter()
            .map(|z| Complex64::from_polar(1.0, z.arg()))
            .collect();
        let forward = naive_dft2_centered(&slm, m, Direction::Forward);
        phi = forward.iter().map(|z| z.arg()).collect();
        intensity = forward.iter().map(|z| z.norm_sqr()).collect();
    }
    intensity
}

//! Forward models between the SLM plane and the target plane.
//!
//! Two models are provided: Fourier holography (a lens between the planes,
//! modeled as a centered unitary DFT) and free-space propagation by the
//! band-limited angular spectrum method. Both are built on an orthonormal
//! 2-D DFT, so every transform here preserves the L2 norm up to the energy
//! the ASM band limit deliberately discards.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForwardModel {
    Fourier,
    Asm,
}

impl fmt::Display for ForwardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForwardModel::Fourier => "fourier",
            ForwardModel::Asm => "asm",
        })
    }
}

impl FromStr for ForwardModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" => Ok(ForwardModel::Fourier),
            "asm" | "free" => Ok(ForwardModel::Asm),
            other => Err(Error::InvalidArgument(format!(
                "unknown forward model {other:?} (expected fourier or asm)"
            ))),
        }
    }
}

/// One point in forward-model hyperparameter space. Lengths are in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmhConfig {
    pub wavelength: f64,
    pub pixel_pitch: f64,
    pub slm_resolution: usize,
    pub distance: f64,
}

impl FmhConfig {
    pub fn new(wavelength: f64, pixel_pitch: f64, slm_resolution: usize, distance: f64) -> Result<Self> {
        let cfg = Self {
            wavelength,
            pixel_pitch,
            slm_resolution,
            distance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pixel pitch must be positive, got {}",
                self.pixel_pitch
            )));
        }
        if self.slm_resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "SLM resolution must be at least 2, got {}",
                self.slm_resolution
            )));
        }
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "propagation distance must be nonnegative, got {}",
                self.distance
            )));
        }
        Ok(())
    }

    /// Frequency-grid spacing `1 / (M dx)` of the unpadded grid.
    pub fn frequency_step(&self) -> f64 {
        1.0 / (self.slm_resolution as f64 * self.pixel_pitch)
    }

    /// Band limit `1 / (lambda * sqrt((2 d du)^2 + 1))`, identical on both axes.
    pub fn band_limit(&self) -> f64 {
        let t = 2.0 * self.distance * self.frequency_step();
        1.0 / (self.wavelength * (t * t + 1.0).sqrt())
    }
}

/// Signed spatial-frequency index of DFT bin `p` on an `m`-point grid, in
/// `{-ceil(m/2)+1, ..., floor(m/2)}`.
pub fn frequency_index(p: usize, m: usize) -> i64 {
    if p <= m / 2 {
        p as i64
    } else {
        p as i64 - m as i64
    }
}

/// Cached forward and inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct Dft2 {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for Dft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft2").field("size", &self.size).finish()
    }
}

impl Dft2 {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            size,
            forward,
            inverse,
            scratch_len,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Orthonormal 2-D DFT in place (`1/sqrt(M)` per axis).
    pub fn process(&self, data: &mut [Complex64], direction: Direction) {
        let m = self.size;
        assert_eq!(data.len(), m * m, "buffer does not match plan size");
        let fft = match direction {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        fft.process_with_scratch(data, &mut scratch);
        transpose_in_place(data, m);
        fft.process_with_scratch(data, &mut scratch);
        transpose_in_place(data, m);
        let scale = 1.0 / m as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Centered variant: DC sits at index `M/2` on both axes.
    pub fn process_centered(&self, data: &mut [Complex64], direction: Direction) {
        let shift = self.size / 2;
        roll2(data, self.size, self.size - shift);
        self.process(data, direction);
        roll2(data, self.size, shift);
    }
}

fn transpose_in_place(data: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in (r + 1)..m {
            data.swap(r * m + c, c * m + r);
        }
    }
}

/// Circularly shifts both axes so index `i` moves to `(i + by) mod m`.
fn roll2(data: &mut [Complex64], m: usize, by: usize) {
    let by = by % m;
    if by == 0 {
        return;
    }
    for row in data.chunks_exact_mut(m) {
        row.rotate_right(by);
    }
    data.rotate_right(by * m);
}

/// Orthonormal 2-D DFT; `inverse(forward(x)) == x` and norms are preserved.
pub fn unitary_dft2(field: &ComplexField, direction: Direction) -> Result<ComplexField> {
    if field.size() < 2 {
        return Err(Error::InvalidArgument("DFT needs M >= 2".into()));
    }
    let mut data = field.data().to_vec();
    Dft2::new(field.size()).process(&mut data, direction);
    Ok(field.with_data(data))
}

/// The band-limited ASM transfer function sampled in DFT index order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    size: usize,
    values: Vec<Complex64>,
}

impl TransferFunction {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at signed frequency indices `(mu, mv)`.
    pub fn at(&self, mu: i64, mv: i64) -> Complex64 {
        let m = self.size as i64;
        let p = mu.rem_euclid(m) as usize;
        let q = mv.rem_euclid(m) as usize;
        self.values[q * self.size + p]
    }

    /// 1 where the transfer function passes light, 0 elsewhere.
    pub fn band_indicator(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|z| if *z == Complex64::new(0.0, 0.0) { 0.0 } else { 1.0 })
            .collect()
    }
}

/// Builds `H(u, v)` for propagation over `sign * d`.
///
/// A sample is `exp(i 2 pi w(u,v) sign d)` with `w = sqrt(1/lambda^2 - u^2 - v^2)`
/// when the frequency propagates (`u^2 + v^2 <= 1/lambda^2`) and lies inside the
/// band limit on both axes; otherwise it is zero.
pub fn asm_transfer(fmh: &FmhConfig, sign: i8) -> Result<TransferFunction> {
    fmh.validate()?;
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let m = fmh.slm_resolution;
    let du = fmh.frequency_step();
    let inv_lambda_sq = 1.0 / (fmh.wavelength * fmh.wavelength);
    let limit = fmh.band_limit();
    let signed_d = sign as f64 * fmh.distance;
    let freqs: Vec<f64> = (0..m).map(|p| frequency_index(p, m) as f64 * du).collect();

    let mut values = Vec::with_capacity(m * m);
    for &v in &freqs {
        for &u in &freqs {
            let radial = u * u + v * v;
            let passes = radial <= inv_lambda_sq && u.abs() <= limit && v.abs() <= limit;
            if passes {
                let w = (inv_lambda_sq - radial).sqrt();
                // Reduce the cycle count before scaling by 2 pi to keep the phase accurate
                // when w * d is in the millions.
                let cycles = (w * signed_d).rem_euclid(1.0);
                values.push(Complex64::from_polar(1.0, 2.0 * PI * cycles));
            } else {
                values.push(Complex64::new(0.0, 0.0));
            }
        }
    }
    Ok(TransferFunction { size: m, values })
}

/// Band-limited angular-spectrum propagation: `IDFT(DFT(field) * H(+-d))`.
pub fn propagate_asm(field: &ComplexField, fmh: &FmhConfig, direction: Direction) -> Result<ComplexField> {
    check_field_matches(field, fmh)?;
    let sign = match direction {
        Direction::Forward => 1,
        Direction::Inverse => -1,
    };
    let h = asm_transfer(fmh, sign)?;
    let dft = Dft2::new(field.size());
    let mut data = field.data().to_vec();
    apply_transfer(&dft, &mut data, h.values());
    Ok(field.with_data(data))
}

fn apply_transfer(dft: &Dft2, data: &mut [Complex64], h: &[Complex64]) {
    dft.process(data, Direction::Forward);
    for (z, t) in data.iter_mut().zip(h) {
        *z *= t;
    }
    dft.process(data, Direction::Inverse);
}

fn check_field_matches(field: &ComplexField, fmh: &FmhConfig) -> Result<()> {
    if field.size() != fmh.slm_resolution {
        return Err(Error::SizeMismatch(format!(
            "field is {}x{}, configuration expects M = {}",
            field.size(),
            field.size(),
            fmh.slm_resolution
        )));
    }
    let rel = (field.pitch() - fmh.pixel_pitch).abs() / fmh.pixel_pitch;
    if rel > 1e-12 {
        return Err(Error::SizeMismatch(format!(
            "field pitch {} differs from configured pitch {}",
            field.pitch(),
            fmh.pixel_pitch
        )));
    }
    Ok(())
}

/// Fourier holography: centered unitary DFT (forward) or its inverse.
///
/// The lens prefactor `exp(2ikf) / (i lambda f)` is a global complex scale and
/// is left out.
pub fn propagate_fourier(field: &ComplexField, direction: Direction) -> Result<ComplexField> {
    if field.size() < 2 {
        return Err(Error::InvalidArgument("DFT needs M >= 2".into()));
    }
    let mut data = field.data().to_vec();
    Dft2::new(field.size()).process_centered(&mut data, direction);
    Ok(field.with_data(data))
}

/// A forward model bound to one configuration, with plans and transfer
/// functions precomputed. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Propagator {
    model: ForwardModel,
    fmh: FmhConfig,
    dft: Dft2,
    h_forward: Option<Vec<Complex64>>,
    h_inverse: Option<Vec<Complex64>>,
}

impl Propagator {
    pub fn new(model: ForwardModel, fmh: FmhConfig) -> Result<Self> {
        fmh.validate()?;
        let (h_forward, h_inverse) = match model {
            ForwardModel::Fourier => (None, None),
            ForwardModel::Asm => (
                Some(asm_transfer(&fmh, 1)?.values),
                Some(asm_transfer(&fmh, -1)?.values),
            ),
        };
        Ok(Self {
            model,
            fmh,
            dft: Dft2::new(fmh.slm_resolution),
            h_forward,
            h_inverse,
        })
    }

    pub fn model(&self) -> ForwardModel {
        self.model
    }

    pub fn fmh(&self) -> &FmhConfig {
        &self.fmh
    }

    pub fn size(&self) -> usize {
        self.fmh.slm_resolution
    }

    /// Applies the model to a raw `M*M` buffer in place.
    pub fn apply_in_place(&self, data: &mut [Complex64], direction: Direction) {
        match self.model {
            ForwardModel::Fourier => self.dft.process_centered(data, direction),
            ForwardModel::Asm => {
                let h = match direction {
                    Direction::Forward => self.h_forward.as_deref(),
                    Direction::Inverse => self.h_inverse.as_deref(),
                };
                apply_transfer(&self.dft, data, h.expect("ASM transfer functions are built in new"));
            }
        }
    }

    pub fn apply(&self, field: &ComplexField, direction: Direction) -> Result<ComplexField> {
        if field.size() != self.size() {
            return Err(Error::SizeMismatch(format!(
                "field is {}x{}, propagator expects M = {}",
                field.size(),
                field.size(),
                self.size()
            )));
        }
        if self.model == ForwardModel::Asm {
            check_field_matches(field, &self.fmh)?;
        }
        let mut data = field.data().to_vec();
        self.apply_in_place(&mut data, direction);
        Ok(field.with_data(data))
    }
}

//! Reconstruction quality: PSNR, SSIM, normalized-correlation accuracy and
//! min-max score normalization.
//!
//! All functions treat intensities as having a dynamic range of 1.0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Raster;

/// Default MSE floor; caps PSNR at 120 dB.
pub const PSNR_EPSILON: f64 = 1e-12;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Metrics of one reconstruction. `ssim` is absent for images smaller than
/// the SSIM window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub psnr: f64,
    pub ssim: Option<f64>,
    pub accuracy: f64,
}

impl MetricRecord {
    pub fn evaluate<R: Raster, T: Raster>(recon: &R, target: &T) -> Result<Self> {
        let psnr = psnr(recon, target, PSNR_EPSILON)?;
        let ssim = if recon.width() >= SSIM_WINDOW && recon.height() >= SSIM_WINDOW {
            Some(ssim(recon, target)?)
        } else {
            None
        };
        // A dark reconstruction carries no correlation with the target.
        let accuracy = match accuracy(recon, target) {
            Ok(a) => a,
            Err(Error::DegenerateInput(_)) if recon.samples().iter().all(|&v| v == 0.0) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(Self {
            psnr,
            ssim,
            accuracy,
        })
    }
}

fn check_dims<R: Raster, T: Raster>(a: &R, b: &T) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::SizeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn mse<R: Raster, T: Raster>(a: &R, b: &T) -> Result<f64> {
    check_dims(a, b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// `10 log10(1 / (MSE + eps))`.
pub fn psnr<R: Raster, T: Raster>(recon: &R, target: &T, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    Ok(10.0 * (1.0 / (mse(recon, target)? + eps)).log10())
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn gaussian_taps(len: usize, sigma: f64) -> Vec<f64> {
    let c = (len as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..len)
        .map(|i| {
            let x = i as f64 - c;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering: output is `(w - n + 1) x (h - n + 1)`.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * rows[(y + k) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1).
pub fn ssim<R: Raster, T: Raster>(recon: &R, target: &T) -> Result<f64> {
    check_dims(recon, target)?;
    let (w, h) = (recon.width(), recon.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "image {w}x{h} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let x = recon.samples();
    let y = target.samples();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = filter_valid(x, w, h, &taps);
    let mu_y = filter_valid(y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let total: f64 = (0..mu_x.len())
        .map(|i| ssim_from_moments(mu_x[i], mu_y[i], e_xx[i], e_yy[i], e_xy[i], c1, c2))
        .sum();
    Ok(total / mu_x.len() as f64)
}

pub(crate) fn ssim_from_moments(mx: f64, my: f64, exx: f64, eyy: f64, exy: f64, c1: f64, c2: f64) -> f64 {
    let vx = exx - mx * mx;
    let vy = eyy - my * my;
    let cov = exy - mx * my;
    ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Normalized cross-correlation `sum(I' I) / sqrt(sum I^2 sum I'^2)`.
pub fn accuracy<R: Raster, T: Raster>(recon: &R, target: &T) -> Result<f64> {
    check_dims(recon, target)?;
    let (mut cross, mut rr, mut tt) = (0.0, 0.0, 0.0);
    for (r, t) in recon.samples().iter().zip(target.samples()) {
        cross += r * t;
        rr += r * r;
        tt += t * t;
    }
    if rr == 0.0 || tt == 0.0 {
        return Err(Error::DegenerateInput(
            "accuracy is undefined when either image is identically zero".into(),
        ));
    }
    Ok(cross / (rr * tt).sqrt())
}

/// `(x - min) / (max - min)`; a constant sequence maps to 0.5 everywhere.
pub fn minmax_normalize(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("cannot normalize an empty sequence".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(normalize_with_range(scores, lo, hi))
}

/// Min-max normalization against an externally chosen range.
pub fn normalize_with_range(scores: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    if hi == lo {
        return vec![0.5; scores.len()];
    }
    let span = hi - lo;
    scores.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}

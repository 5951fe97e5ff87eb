//! Intensity images, PGM ingestion and the complex field shared by the
//! optics code.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Read-only access to a row-major grid of real samples.
///
/// Implemented by both [`Image`] (targets, always in `[0, 1]`) and
/// [`IntensityMap`] (reconstructions, which may exceed 1), so the metrics
/// accept either.
pub trait Raster {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn samples(&self) -> &[f64];
}

/// A grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "image sample {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl Raster for Image {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[f64] {
        &self.data
    }
}

/// A nonnegative intensity distribution, e.g. `|E|^2` at the target plane.
///
/// Unlike [`Image`] the samples are not bounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl IntensityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intensity sample {bad} is negative or not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_field(field: &ComplexField) -> Self {
        Self {
            width: field.size(),
            height: field.size(),
            data: field.intensity(),
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Rescales so the mean matches `target_mean`. Used for visualization only.
    pub fn scaled_to_mean(&self, target_mean: f64) -> Self {
        let m = self.mean();
        let k = if m > 0.0 { target_mean / m } else { 0.0 };
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    /// Clamps into `[0, 1]` for export as an 8/16-bit image.
    pub fn to_image_clamped(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    /// Divides by the peak so the brightest sample becomes 1.
    pub fn to_image_peak_normalized(&self) -> Image {
        let peak = self.data.iter().cloned().fold(0.0, f64::max);
        let k = if peak > 0.0 { 1.0 / peak } else { 0.0 };
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| (v * k).min(1.0)).collect(),
        }
    }
}

impl Raster for IntensityMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[f64] {
        &self.data
    }
}

/// A square grid of complex amplitudes sampled at pitch `pitch` (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    size: usize,
    pitch: f64,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(size: usize, pitch: f64, data: Vec<Complex64>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("field size must be positive".into()));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pixel pitch must be positive and finite, got {pitch}"
            )));
        }
        if data.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                actual: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Self { size, pitch, data })
    }

    pub fn zeros(size: usize, pitch: f64) -> Result<Self> {
        Self::new(size, pitch, vec![Complex64::new(0.0, 0.0); size * size])
    }

    /// Unit-modulus field `amplitude * exp(i * phase)`.
    pub fn from_phase(size: usize, pitch: f64, amplitude: f64, phase: &[f64]) -> Result<Self> {
        if phase.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                actual: phase.len(),
            });
        }
        let data = phase
            .iter()
            .map(|&p| Complex64::from_polar(amplitude, p))
            .collect();
        Self::new(size, pitch, data)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Replaces the samples, keeping size and pitch.
    pub(crate) fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            size: self.size,
            pitch: self.pitch,
            data,
        }
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn phase(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.arg()).collect()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Builds `sqrt(I) * exp(i * phase)` from a square target image.
pub fn field_from_target(img: &Image, pitch: f64, phase: &[f64]) -> Result<ComplexField> {
    if !img.is_square() {
        return Err(Error::SizeMismatch(format!(
            "target must be square, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    if phase.len() != img.data().len() {
        return Err(Error::SizeMismatch(format!(
            "phase grid has {} samples, image has {}",
            phase.len(),
            img.data().len()
        )));
    }
    let data = img
        .data()
        .iter()
        .zip(phase)
        .map(|(&i, &p)| Complex64::from_polar(i.sqrt(), p))
        .collect();
    ComplexField::new(img.width(), pitch, data)
}

/// Bilinear resampling onto an `m x m` grid.
///
/// Pixel centers are aligned (`src = (dst + 0.5) * scale - 0.5`) and edges
/// are clamped; each axis is scaled independently.
pub fn resize_bilinear(img: &Image, m: usize) -> Result<Image> {
    if m == 0 {
        return Err(Error::InvalidArgument("target size must be at least 1".into()));
    }
    if img.width() == m && img.height() == m {
        return Ok(img.clone());
    }
    let xs = axis_weights(img.width(), m);
    let ys = axis_weights(img.height(), m);
    let w = img.width();
    let src = img.data();
    let mut data = Vec::with_capacity(m * m);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            // Convex combination; clamp guards the last ulp.
            data.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
        }
    }
    Image::new(m, m, data)
}

fn axis_weights(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let last = (src_len - 1) as f64;
    (0..dst_len)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Loads a binary PGM (P5) and scales samples by the declared maxval.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<Image> {
    read_pgm(path).map(|(img, _)| img)
}

/// Loads a binary PGM (P5), returning the image and its maxval.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<(Image, u16)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<(Image, u16)> {
    let mut pos = 0usize;
    let magic = header_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::MalformedHeader(format!(
            "expected magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!(
            "maxval must be in 1..=65535, got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing whitespace before raster".into())),
    }
    let count = width * height;
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let raster = &bytes[pos..];
    if raster.len() < count * bytes_per_sample {
        return Err(Error::MalformedHeader(format!(
            "raster truncated: need {} bytes, have {}",
            count * bytes_per_sample,
            raster.len()
        )));
    }
    let scale = 1.0 / maxval as f64;
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let v = if bytes_per_sample == 2 {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
        } else {
            raster[i] as usize
        };
        if v > maxval {
            return Err(Error::MalformedHeader(format!(
                "sample {v} exceeds maxval {maxval}"
            )));
        }
        data.push(v as f64 * scale);
    }
    Ok((Image::new(width, height, data)?, maxval as u16))
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| {
            Error::MalformedHeader(format!(
                "{what} is not a number: {:?}",
                String::from_utf8_lossy(tok)
            ))
        })
}

/// Encodes an image as P5 with the given maxval (16-bit big-endian above 255).
pub fn encode_pgm(img: &Image, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::InvalidArgument("maxval must be positive".into()));
    }
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    let m = maxval as f64;
    for &v in img.data() {
        let q = (v * m).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(img, maxval)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Writes a 16-bit PGM; 8-bit sources survive exactly since 65535 = 255 * 257.
pub fn save_grayscale(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_pgm(path, img, u16::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p5(width: usize, height: usize, maxval: u16, raster: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
        v.extend_from_slice(raster);
        v
    }

    #[test]
    fn decodes_8bit_scaled_by_maxval() {
        let (img, maxval) = decode_pgm(&p5(2, 2, 255, &[0, 255, 128, 64])).unwrap();
        assert_eq!(maxval, 255);
        assert_eq!(img.data(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
        assert!((img.data()[2] - 0.50196).abs() < 1e-5);
        assert!((img.data()[3] - 0.25098).abs() < 1e-5);
    }

    #[test]
    fn decodes_16bit_big_endian() {
        let (img, _) = decode_pgm(&p5(2, 1, 1000, &[0x03, 0xe8, 0x01, 0xf4])).unwrap();
        assert_eq!(img.data(), &[1.0, 0.5]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5 # made by hand\n# another\n1 1\n# max\n255\n\x80".to_vec();
        let (img, _) = decode_pgm(&bytes).unwrap();
        assert_eq!(img.data(), &[128.0 / 255.0]);
    }

    #[test]
    fn zero_maxval_rejected() {
        let err = decode_pgm(&p5(1, 1, 0, &[0])).unwrap_err();
        assert!(matches!(err, Error::MalformedHeader(_)));
    }

    #[test]
    fn wrong_magic_and_truncation_rejected() {
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0").unwrap_err(),
            Error::MalformedHeader(_)
        ));
        assert!(matches!(
            decode_pgm(&p5(2, 2, 255, &[1, 2])).unwrap_err(),
            Error::MalformedHeader(_)
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_grayscale("/nonexistent/definitely/missing.pgm").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn encode_is_inverse_of_decode_for_canonical_headers() {
        let src = p5(3, 1, 255, &[7, 200, 255]);
        let (img, maxval) = decode_pgm(&src).unwrap();
        assert_eq!(encode_pgm(&img, maxval).unwrap(), src);
        let wide = p5(1, 2, 4095, &[0x0f, 0xff, 0x00, 0x01]);
        let (img, maxval) = decode_pgm(&wide).unwrap();
        assert_eq!(encode_pgm(&img, maxval).unwrap(), wide);
    }

    #[test]
    fn sixteen_bit_save_keeps_8bit_samples() {
        let (img, _) = decode_pgm(&p5(2, 2, 255, &[0, 1, 254, 255])).unwrap();
        let (back, _) = decode_pgm(&encode_pgm(&img, u16::MAX).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn resize_constant_and_identity() {
        let c = Image::constant(5, 3, 0.3).unwrap();
        for m in [1, 2, 7, 16] {
            let r = resize_bilinear(&c, m).unwrap();
            assert!(r.data().iter().all(|v| (v - 0.3).abs() < 1e-15));
        }
        let img = Image::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(resize_bilinear(&img, 2).unwrap(), img);
        assert!(resize_bilinear(&img, 0).is_err());
    }

    #[test]
    fn resize_matches_direct_bilinear_formula() {
        let img = Image::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let r = resize_bilinear(&img, 4).unwrap();
        // Target column i maps to source x = (i + 0.5) / 2 - 0.5, clamped to [0, 1];
        // the image only varies along x, so every row reads [0, 0.25, 0.75, 1].
        let expected_row = [0.0, 0.25, 0.75, 1.0];
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(r.get(x, y), expected_row[x]);
            }
        }
    }

    #[test]
    fn field_from_target_cases() {
        let ones = Image::constant(2, 2, 1.0).unwrap();
        let f = field_from_target(&ones, 1e-6, &[0.0; 4]).unwrap();
        assert!(f.data().iter().all(|z| *z == Complex64::new(1.0, 0.0)));

        let zeros = Image::constant(2, 2, 0.0).unwrap();
        let f = field_from_target(&zeros, 1e-6, &[0.3, -1.0, 2.0, PI]).unwrap();
        assert!(f.data().iter().all(|z| z.norm() == 0.0));

        let q = Image::constant(1, 1, 0.25).unwrap();
        let f = field_from_target(&q, 1e-6, &[PI / 2.0]).unwrap();
        assert!(f.data()[0].re.abs() < 1e-16);
        assert!((f.data()[0].im - 0.5).abs() < 1e-16);

        assert!(matches!(
            field_from_target(&ones, 1e-6, &[0.0; 3]).unwrap_err(),
            Error::SizeMismatch(_)
        ));
    }

    #[test]
    fn image_rejects_out_of_range() {
        assert!(Image::new(1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Image::new(0, 1, vec![]).is_err());
    }
}

//! Image corpora: loading a directory of PGM files and synthesizing a
//! deterministic stand-in corpus of natural-looking scenes.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{load_grayscale, write_pgm, Image};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub sha256: String,
    pub image: Image,
}

/// Loads up to `limit` `.pgm` files from `dir`, ordered by file name.
pub fn load_corpus(dir: impl AsRef<Path>, limit: usize) -> Result<Vec<CorpusEntry>> {
    let dir = dir.as_ref();
    if limit == 0 {
        return Err(Error::InvalidArgument("image limit must be at least 1".into()));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort();
    paths.truncate(limit);
    if paths.is_empty() {
        return Err(Error::EmptyCorpus(dir.display().to_string()));
    }
    paths
        .into_iter()
        .map(|path| {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let sha256 = hex::encode(Sha256::digest(&bytes));
            let image = load_grayscale(&path)?;
            Ok(CorpusEntry { path, sha256, image })
        })
        .collect()
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise with octaves halving in amplitude, roughly 1/f.
fn value_noise(size: usize, rng: &mut SplitMix64, octaves: usize) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    let mut amplitude = 1.0;
    let mut total = 0.0;
    for octave in 0..octaves {
        let cells = 2usize << octave;
        let lattice: Vec<f64> = (0..(cells + 1) * (cells + 1)).map(|_| rng.next_f64()).collect();
        let at = |i: usize, j: usize| lattice[i * (cells + 1) + j];
        for y in 0..size {
            let fy = y as f64 / size as f64 * cells as f64;
            let (iy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
            for x in 0..size {
                let fx = x as f64 / size as f64 * cells as f64;
                let (ix, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
                let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
                let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
                out[y * size + x] += amplitude * (top * (1.0 - ty) + bottom * ty);
            }
        }
        total += amplitude;
        amplitude *= 0.5;
    }
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// One synthetic scene: textured background, soft blobs and a few hard-edged
/// shapes, clamped to [0, 1].
pub fn synthesize_image(size: usize, seed: u64) -> Result<Image> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!("image size must be at least 2, got {size}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut data = value_noise(size, &mut rng, 6);
    let base = 0.15 + 0.35 * rng.next_f64();
    let contrast = 0.3 + 0.4 * rng.next_f64();
    for v in data.iter_mut() {
        *v = base + contrast * (*v - 0.5);
    }

    let s = size as f64;
    for _ in 0..(3 + rng.next_below(5)) {
        let (cx, cy) = (rng.next_f64() * s, rng.next_f64() * s);
        let r = (0.04 + 0.2 * rng.next_f64()) * s;
        let gain = 0.6 * (rng.next_f64() - 0.3);
        for y in 0..size {
            for x in 0..size {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                data[y * size + x] += gain * (-d2 / (2.0 * r * r)).exp();
            }
        }
    }

    for _ in 0..(2 + rng.next_below(4)) {
        let level = rng.next_f64();
        let (cx, cy) = (rng.next_f64() * s, rng.next_f64() * s);
        let (hw, hh) = ((0.03 + 0.15 * rng.next_f64()) * s, (0.03 + 0.15 * rng.next_f64()) * s);
        let disk = rng.next_below(2) == 0;
        for y in 0..size {
            for x in 0..size {
                let (dx, dy) = ((x as f64 - cx) / hw, (y as f64 - cy) / hh);
                let inside = if disk { dx * dx + dy * dy <= 1.0 } else { dx.abs() <= 1.0 && dy.abs() <= 1.0 };
                if inside {
                    data[y * size + x] = level;
                }
            }
        }
    }

    data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Image::new(size, size, data)
}

/// Writes `count` 8-bit scenes named `scene_000.pgm`, ... into `dir`.
pub fn write_synthetic_corpus(dir: impl AsRef<Path>, count: usize, size: usize, seed: u64) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..count)
        .map(|i| {
            let img = synthesize_image(size, derive_seed(seed, &[i as u64]))?;
            let path = dir.join(format!("scene_{i:03}.pgm"));
            write_pgm(&path, &img, 255)?;
            Ok(path)
        })
        .collect()
}

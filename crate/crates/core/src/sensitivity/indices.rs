//! First-, second- and total-order Sobol indices from a Saltelli design.
//!
//! First order uses the Saltelli (2010) estimator, total order the Jansen
//! estimator. Confidence half-widths come from a bootstrap over base-sample
//! indices: one resample picks `N` base indices with replacement and every
//! block is read at those indices.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::design::{Block, SaltelliDesign};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Normal-approximation multiplier for the 95% half-width.
pub const Z_95: f64 = 1.96;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// 95% half-width.
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolIndices {
    pub names: Vec<String>,
    pub first_order: Vec<Estimate>,
    pub total_order: Vec<Estimate>,
    /// `second_order[i][j]` for `i < j`; `None` on and below the diagonal.
    pub second_order: Option<Vec<Vec<Option<Estimate>>>>,
    pub confidence_level: f64,
}

impl SobolIndices {
    pub fn s1(&self) -> Vec<f64> {
        self.first_order.iter().map(|e| e.value).collect()
    }

    pub fn st(&self) -> Vec<f64> {
        self.total_order.iter().map(|e| e.value).collect()
    }

    pub fn s2(&self, i: usize, j: usize) -> Option<Estimate> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.second_order.as_ref().and_then(|m| m[i][j])
    }

    /// Index of the parameter with the largest total-order estimate.
    pub fn top_total_order(&self) -> usize {
        self.total_order
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.value.total_cmp(&b.1.value))
            .map(|(i, _)| i)
            .expect("at least one parameter")
    }

    /// `param,order,S,conf` with pairs written as `a:b`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "param,order,S,conf")?;
        for (name, e) in self.names.iter().zip(&self.first_order) {
            writeln!(out, "{name},S1,{},{}", e.value, e.conf)?;
        }
        for (name, e) in self.names.iter().zip(&self.total_order) {
            writeln!(out, "{name},ST,{},{}", e.value, e.conf)?;
        }
        let k = self.names.len();
        for i in 0..k {
            for j in (i + 1)..k {
                if let Some(e) = self.s2(i, j) {
                    writeln!(out, "{}:{},S2,{},{}", self.names[i], self.names[j], e.value, e.conf)?;
                }
            }
        }
        Ok(())
    }
}

/// Model outputs rearranged by block: `a[j]`, `b[j]`, `ab[i][j]`, `ba[i][j]`.
struct Blocks {
    a: Vec<f64>,
    b: Vec<f64>,
    ab: Vec<Vec<f64>>,
    ba: Option<Vec<Vec<f64>>>,
}

impl Blocks {
    fn split(design: &SaltelliDesign, y: &[f64]) -> Self {
        let n = design.base_samples;
        let k = design.dimension();
        let pick = |block: Block| -> Vec<f64> { (0..n).map(|j| y[design.row_index(j, block)]).collect() };
        Self {
            a: pick(Block::A),
            b: pick(Block::B),
            ab: (0..k).map(|i| pick(Block::AB(i))).collect(),
            ba: design
                .second_order
                .then(|| (0..k).map(|i| pick(Block::BA(i))).collect()),
        }
    }
}

struct PointEstimates {
    s1: Vec<f64>,
    st: Vec<f64>,
    s2: Option<Vec<Vec<f64>>>,
}

fn estimate(blocks: &Blocks, idx: &[usize]) -> Option<PointEstimates> {
    let n = idx.len() as f64;
    let k = blocks.ab.len();
    let mean_ab: f64 = idx.iter().map(|&j| blocks.a[j] + blocks.b[j]).sum::<f64>() / (2.0 * n);
    let var = idx
        .iter()
        .map(|&j| {
            let da = blocks.a[j] - mean_ab;
            let db = blocks.b[j] - mean_ab;
            da * da + db * db
        })
        .sum::<f64>()
        / (2.0 * n);
    if !(var > 0.0) {
        return None;
    }
    let s1: Vec<f64> = (0..k)
        .map(|i| {
            idx.iter()
                .map(|&j| blocks.b[j] * (blocks.ab[i][j] - blocks.a[j]))
                .sum::<f64>()
                / n
                / var
        })
        .collect();
    let st: Vec<f64> = (0..k)
        .map(|i| {
            idx.iter()
                .map(|&j| {
                    let d = blocks.a[j] - blocks.ab[i][j];
                    d * d
                })
                .sum::<f64>()
                / n
                / (2.0 * var)
        })
        .collect();
    let s2 = blocks.ba.as_ref().map(|ba| {
        let mean_a_b = idx.iter().map(|&j| blocks.a[j] * blocks.b[j]).sum::<f64>() / n;
        let mut m = vec![vec![f64::NAN; k]; k];
        for i in 0..k {
            for l in (i + 1)..k {
                let cross = idx.iter().map(|&j| ba[i][j] * blocks.ab[l][j]).sum::<f64>() / n;
                m[i][l] = (cross - mean_a_b) / var - s1[i] - s1[l];
            }
        }
        m
    });
    Some(PointEstimates { s1, st, s2 })
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Estimates S1, ST (and S2 for second-order designs) from outputs aligned
/// with `design.rows`.
pub fn sobol_indices(design: &SaltelliDesign, y: &[f64], bootstrap_resamples: usize, seed: u64) -> Result<SobolIndices> {
    if y.len() != design.len() {
        return Err(Error::LengthMismatch {
            expected: design.len(),
            actual: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("model outputs must be finite".into()));
    }
    let blocks = Blocks::split(design, y);
    let n = design.base_samples;
    let k = design.dimension();
    let all: Vec<usize> = (0..n).collect();
    let point = estimate(&blocks, &all).ok_or(Error::VarianceZero)?;

    let mut rng = SplitMix64::new(seed);
    let mut boot_s1 = vec![Vec::with_capacity(bootstrap_resamples); k];
    let mut boot_st = vec![Vec::with_capacity(bootstrap_resamples); k];
    let mut boot_s2 = vec![vec![Vec::with_capacity(bootstrap_resamples); k]; k];
    let mut idx = vec![0usize; n];
    for _ in 0..bootstrap_resamples {
        for slot in idx.iter_mut() {
            *slot = rng.next_below(n);
        }
        // A resample whose A/B outputs happen to be constant carries no information.
        let Some(r) = estimate(&blocks, &idx) else { continue };
        for i in 0..k {
            boot_s1[i].push(r.s1[i]);
            boot_st[i].push(r.st[i]);
        }
        if let Some(m) = &r.s2 {
            for i in 0..k {
                for l in (i + 1)..k {
                    boot_s2[i][l].push(m[i][l]);
                }
            }
        }
    }

    let first_order = (0..k)
        .map(|i| Estimate {
            value: point.s1[i],
            conf: Z_95 * sample_std(&boot_s1[i]),
        })
        .collect();
    let total_order = (0..k)
        .map(|i| Estimate {
            value: point.st[i],
            conf: Z_95 * sample_std(&boot_st[i]),
        })
        .collect();
    let second_order = point.s2.map(|m| {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|l| {
                        (l > i).then(|| Estimate {
                            value: m[i][l],
                            conf: Z_95 * sample_std(&boot_s2[i][l]),
                        })
                    })
                    .collect()
            })
            .collect()
    });

    Ok(SobolIndices {
        names: design.bounds.names(),
        first_order,
        total_order,
        second_order,
        confidence_level: 0.95,
    })
}

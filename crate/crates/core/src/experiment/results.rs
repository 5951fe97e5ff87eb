//! Per-row, per-iteration corpus means and their CSV form.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::FmhConfig;

pub const RESULTS_HEADER: &str = "row,block,lambda_m,pitch_m,M,d_m,iteration,mean_psnr_db,mean_ssim,mean_accuracy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Psnr,
    Ssim,
    Accuracy,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Psnr, Metric::Ssim, Metric::Accuracy];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
            Metric::Accuracy => "accuracy",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psnr" => Ok(Metric::Psnr),
            "ssim" => Ok(Metric::Ssim),
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// Arithmetic means over the corpus at one iteration. `ssim` is `None` when
/// the grid is smaller than the SSIM window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub iteration: usize,
    pub psnr: f64,
    pub ssim: Option<f64>,
    pub accuracy: f64,
}

impl MeanMetrics {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Psnr => Some(self.psnr),
            Metric::Ssim => self.ssim,
            Metric::Accuracy => Some(self.accuracy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub row: usize,
    /// Design block (`A`, `AB1`, ...) or another row label such as the
    /// forward model name.
    pub label: String,
    pub fmh: FmhConfig,
    pub records: Vec<MeanMetrics>,
}

impl ResultRow {
    pub fn at(&self, iteration: usize) -> Option<&MeanMetrics> {
        self.records.iter().find(|r| r.iteration == iteration)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for r in &self.records {
            let ssim = r.ssim.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.row,
                self.label,
                self.fmh.wavelength,
                self.fmh.pixel_pitch,
                self.fmh.slm_resolution,
                self.fmh.distance,
                r.iteration,
                r.psnr,
                ssim,
                r.accuracy
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Recorded iterations of the first row.
    pub fn iterations(&self) -> Vec<usize> {
        self.rows
            .first()
            .map(|r| r.records.iter().map(|m| m.iteration).collect())
            .unwrap_or_default()
    }

    /// One value per row, in row order.
    pub fn column(&self, metric: Metric, iteration: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                row.at(iteration)
                    .and_then(|m| m.get(metric))
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "row {} ({}) has no {metric} value at iteration {iteration}",
                            row.row, row.label
                        ))
                    })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RESULTS_HEADER}")?;
        for row in &self.rows {
            row.write_csv(&mut out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text).map_err(|e| match e {
            Error::Parse { context, message } => Error::Parse {
                context: format!("{}: {context}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// Parses a results CSV. Consecutive lines with the same `(row, block)`
    /// form one row. A trailing line without a newline is ignored, since it
    /// can only come from an interrupted write.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.split_inclusive('\n');
        match lines.next() {
            Some(h) if h.trim_end() == RESULTS_HEADER => {}
            Some(h) => return Err(Error::parse("results header", format!("unexpected header {:?}", h.trim_end()))),
            None => return Err(Error::parse("results header", "empty file")),
        }
        let mut rows: Vec<ResultRow> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if !line.ends_with('\n') {
                break;
            }
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let ctx = || format!("line {}", lineno + 2);
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::parse(ctx(), format!("expected 10 fields, got {}", f.len())));
            }
            let num = |i: usize| -> Result<f64> {
                f[i].parse::<f64>()
                    .map_err(|e| Error::parse(ctx(), format!("field {}: {e}", i + 1)))
            };
            let int = |i: usize| -> Result<usize> {
                f[i].parse::<usize>()
                    .map_err(|e| Error::parse(ctx(), format!("field {}: {e}", i + 1)))
            };
            let row = int(0)?;
            let label = f[1].to_string();
            let fmh = FmhConfig {
                wavelength: num(2)?,
                pixel_pitch: num(3)?,
                slm_resolution: int(4)?,
                distance: num(5)?,
            };
            let record = MeanMetrics {
                iteration: int(6)?,
                psnr: num(7)?,
                ssim: if f[8].is_empty() { None } else { Some(num(8)?) },
                accuracy: num(9)?,
            };
            match rows.last_mut() {
                Some(last) if last.row == row && last.label == label => {
                    if last.fmh != fmh {
                        return Err(Error::parse(ctx(), "configuration changes within a row"));
                    }
                    last.records.push(record);
                }
                _ => rows.push(ResultRow {
                    row,
                    label,
                    fmh,
                    records: vec![record],
                }),
            }
        }
        Ok(Self { rows })
    }
}

//! Campaign execution: evaluating GS over many forward-model configurations
//! and a corpus, with append-only persistence and resume.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::results::{MeanMetrics, Metric, ResultRow, ResultTable};
use crate::corpus::{load_corpus, CorpusEntry};
use crate::error::{Error, Result};
use crate::field::{resize_bilinear, Image};
use crate::phase_retrieval::{gs_run_recorded, random_phase, GsConfig};
use crate::propagation::{FmhConfig, ForwardModel};
use crate::rng::derive_seed;
use crate::sensitivity::{
    saltelli_design, sobol_indices, sobol_points, FmhBounds, SaltelliDesign, SobolIndices,
};
use crate::stats::{median, pearson, spearman, wilcoxon_signed_rank, Alternative, TestResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const DESIGN_FILE: &str = "design.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One configuration to evaluate over the whole corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkItem {
    pub row: usize,
    pub label: String,
    pub model: ForwardModel,
    pub fmh: FmhConfig,
}

/// Settings shared by every work item of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub iterations: usize,
    /// Iterations whose metrics are kept; empty means every iteration.
    pub record_iterations: Vec<usize>,
    pub master_seed: u64,
    pub workers: usize,
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if let Some(&bad) = self.record_iterations.iter().find(|&&t| t == 0 || t > self.iterations) {
            return Err(Error::InvalidArgument(format!(
                "recorded iteration {bad} outside 1..={}",
                self.iterations
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn records(&self, iteration: usize) -> bool {
        self.record_iterations.is_empty() || self.record_iterations.contains(&iteration)
    }

    fn recorded_count(&self) -> usize {
        if self.record_iterations.is_empty() {
            self.iterations
        } else {
            let mut r = self.record_iterations.clone();
            r.sort_unstable();
            r.dedup();
            r.len()
        }
    }
}

/// Seed of the GS initial phase for one (row, image) pair.
pub fn image_seed(master_seed: u64, row: usize, image: usize) -> u64 {
    derive_seed(master_seed, &[row as u64, image as u64])
}

/// Runs GS on every image for one configuration and averages the metrics.
pub fn evaluate_item(item: &WorkItem, images: &[Image], settings: &EvalSettings) -> Result<ResultRow> {
    if images.is_empty() {
        return Err(Error::EmptyCorpus("no images to evaluate".into()));
    }
    let m = item.fmh.slm_resolution;
    let cfg = GsConfig::new(item.model, item.fmh, settings.iterations, 0);
    let mut sums: Vec<(f64, Option<f64>, f64)> = Vec::new();
    let mut iterations = Vec::new();
    for (index, image) in images.iter().enumerate() {
        let target = resize_bilinear(image, m)?;
        let phase = random_phase(m, image_seed(settings.master_seed, item.row, index));
        let trace = gs_run_recorded(&target, &cfg, &phase, |t| settings.records(t))?;
        if sums.is_empty() {
            sums = vec![(0.0, Some(0.0), 0.0); trace.records.len()];
            iterations = trace.records.iter().map(|r| r.iteration).collect();
        }
        for (acc, rec) in sums.iter_mut().zip(&trace.records) {
            acc.0 += rec.metrics.psnr;
            acc.1 = acc.1.zip(rec.metrics.ssim).map(|(a, b)| a + b);
            acc.2 += rec.metrics.accuracy;
        }
    }
    let n = images.len() as f64;
    Ok(ResultRow {
        row: item.row,
        label: item.label.clone(),
        fmh: item.fmh,
        records: iterations
            .into_iter()
            .zip(sums)
            .map(|(iteration, (p, s, a))| MeanMetrics {
                iteration,
                psnr: p / n,
                ssim: s.map(|s| s / n),
                accuracy: a / n,
            })
            .collect(),
    })
}

/// Evaluates `items` in order on a pool of `settings.workers` threads.
///
/// With `sink`, each finished chunk of rows is appended to that CSV and
/// flushed. If the file already holds a prefix of these items, those rows are
/// reused and evaluation resumes after them.
pub fn run_items(
    items: &[WorkItem],
    images: &[Image],
    settings: &EvalSettings,
    sink: Option<&Path>,
) -> Result<ResultTable> {
    use rayon::prelude::*;

    settings.validate()?;
    let mut table = ResultTable::default();
    let mut writer = match sink {
        Some(path) => {
            table = resume_prefix(path, items, settings)?;
            let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
            table.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))?;
            Some((path, w))
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let chunk = (4 * settings.workers).max(8);
    for batch in items[table.len()..].chunks(chunk) {
        let rows: Vec<ResultRow> = pool.install(|| {
            batch
                .par_iter()
                .map(|item| evaluate_item(item, images, settings))
                .collect::<Result<_>>()
        })?;
        if let Some((path, w)) = writer.as_mut() {
            for row in &rows {
                row.write_csv(w).map_err(|e| Error::io(*path, e))?;
            }
            w.flush().map_err(|e| Error::io(*path, e))?;
        }
        table.rows.extend(rows);
    }
    Ok(table)
}

/// Rows already on disk that match the head of `items`.
fn resume_prefix(path: &Path, items: &[WorkItem], settings: &EvalSettings) -> Result<ResultTable> {
    if !path.exists() {
        return Ok(ResultTable::default());
    }
    let mut existing = ResultTable::read_csv(path)?;
    let expected = settings.recorded_count();
    let keep = existing
        .rows
        .iter()
        .zip(items)
        .take_while(|(row, item)| {
            row.row == item.row && row.label == item.label && row.fmh == item.fmh && row.records.len() == expected
        })
        .count();
    // Only a torn final row may differ from the planned items.
    let torn_tail = keep + 1 == existing.rows.len()
        && items.get(keep).is_some_and(|item| {
            let row = &existing.rows[keep];
            row.row == item.row && row.label == item.label && row.fmh == item.fmh && row.records.len() < expected
        });
    if keep < existing.rows.len() && !torn_tail {
        return Err(Error::SizeMismatch(format!(
            "{} does not match this run from row {keep} on; use a fresh output directory",
            path.display()
        )));
    }
    existing.rows.truncate(keep);
    Ok(existing)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub bounds: FmhBounds,
    pub base_samples: usize,
    pub second_order: bool,
    pub forward_model: ForwardModel,
    pub iterations: usize,
    pub record_iterations: Vec<usize>,
    pub corpus: PathBuf,
    pub image_limit: usize,
    pub master_seed: u64,
    pub workers: usize,
}

impl CampaignConfig {
    pub fn settings(&self) -> EvalSettings {
        EvalSettings {
            iterations: self.iterations,
            record_iterations: self.record_iterations.clone(),
            master_seed: self.master_seed,
            workers: self.workers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !self.bounds.is_fmh() {
            return Err(Error::InvalidArgument(format!(
                "campaign bounds must be (wavelength, pixel_pitch, slm_resolution, distance), got {:?}",
                self.bounds.names()
            )));
        }
        if self.image_limit == 0 {
            return Err(Error::InvalidArgument("image_limit must be at least 1".into()));
        }
        self.settings().validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub design: SaltelliDesign,
    pub design_hash: String,
    pub master_seed: u64,
    pub table: ResultTable,
}

impl CampaignResult {
    /// Model outputs aligned with the design rows.
    pub fn outputs(&self, metric: Metric, iteration: usize) -> Result<Vec<f64>> {
        if self.table.len() != self.design.len() {
            return Err(Error::LengthMismatch {
                expected: self.design.len(),
                actual: self.table.len(),
            });
        }
        self.table.column(metric, iteration)
    }

    pub fn indices(&self, metric: Metric, iteration: usize, resamples: usize, seed: u64) -> Result<SobolIndices> {
        sobol_indices(&self.design, &self.outputs(metric, iteration)?, resamples, seed)
    }
}

pub fn design_items(design: &SaltelliDesign, model: ForwardModel) -> Result<Vec<WorkItem>> {
    design
        .rows
        .iter()
        .enumerate()
        .map(|(row, d)| {
            Ok(WorkItem {
                row,
                label: d.block.to_string(),
                model,
                fmh: design.bounds.to_fmh(&d.scaled)?,
            })
        })
        .collect()
}

/// Loads the corpus named by a campaign, checking the image limit.
pub fn load_images(dir: &Path, limit: usize) -> Result<(Vec<CorpusEntry>, Vec<Image>)> {
    let entries = load_corpus(dir, limit)?;
    let images = entries.iter().map(|e| e.image.clone()).collect();
    Ok((entries, images))
}

/// Saltelli campaign over the forward-model bounds. With `out_dir`, writes
/// the design, the results (incrementally, resumable) and a manifest.
pub fn run_fmh_campaign(cfg: &CampaignConfig, out_dir: Option<&Path>) -> Result<CampaignResult> {
    cfg.validate()?;
    let start = Instant::now();
    let (entries, images) = load_images(&cfg.corpus, cfg.image_limit)?;
    let design = saltelli_design(&cfg.bounds, cfg.base_samples, cfg.second_order)?;
    let design_hash = design.content_hash();
    let items = design_items(&design, cfg.forward_model)?;

    let sink = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let design_path = dir.join(DESIGN_FILE);
            let file = File::create(&design_path).map_err(|e| Error::io(&design_path, e))?;
            design
                .write_csv(BufWriter::new(file))
                .map_err(|e| Error::io(&design_path, e))?;
            Some(dir.join(RESULTS_FILE))
        }
        None => None,
    };
    let eval_start = Instant::now();
    let table = run_items(&items, &images, &cfg.settings(), sink.as_deref())?;
    let eval_secs = eval_start.elapsed().as_secs_f64();

    if let Some(dir) = out_dir {
        let mut manifest = RunManifest::new("campaign", serde_json::to_value(cfg).expect("config serializes"), cfg.master_seed);
        manifest.design_hash = Some(design_hash.clone());
        manifest.corpus = entries
            .iter()
            .map(|e| FileHash {
                path: e.path.display().to_string(),
                sha256: e.sha256.clone(),
            })
            .collect();
        manifest.timings.insert("evaluation_s".into(), eval_secs);
        manifest.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
        manifest.add_output(&dir.join(DESIGN_FILE))?;
        manifest.add_output(&dir.join(RESULTS_FILE))?;
        manifest.write(&dir.join(MANIFEST_FILE))?;
    }
    Ok(CampaignResult {
        design,
        design_hash,
        master_seed: cfg.master_seed,
        table,
    })
}

/// Paired Fourier/ASM evaluation along the SLM-resolution axis with the other
/// parameters held at the midpoint of `bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmComparisonConfig {
    pub bounds: FmhBounds,
    pub resolution_range: (usize, usize),
    pub samples: usize,
    pub iterations: usize,
    pub record_iterations: Vec<usize>,
    pub corpus: PathBuf,
    pub image_limit: usize,
    pub master_seed: u64,
    pub workers: usize,
}

impl FmComparisonConfig {
    pub fn settings(&self) -> EvalSettings {
        EvalSettings {
            iterations: self.iterations,
            record_iterations: self.record_iterations.clone(),
            master_seed: self.master_seed,
            workers: self.workers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !self.bounds.is_fmh() {
            return Err(Error::InvalidArgument("comparison bounds must be forward-model bounds".into()));
        }
        let (lo, hi) = self.resolution_range;
        if lo < 2 || hi < lo {
            return Err(Error::InvalidArgument(format!("invalid resolution range [{lo}, {hi}]")));
        }
        if self.samples == 0 || self.image_limit == 0 {
            return Err(Error::InvalidArgument("samples and image_limit must be at least 1".into()));
        }
        self.settings().validate()
    }

    /// Resolutions from a one-dimensional Sobol sequence, rounded.
    pub fn resolutions(&self) -> Result<Vec<usize>> {
        let (lo, hi) = self.resolution_range;
        Ok(sobol_points(1, self.samples)?
            .iter()
            .map(|u| (lo as f64 + u[0] * (hi - lo) as f64).round() as usize)
            .collect())
    }

    pub fn items(&self) -> Result<Vec<WorkItem>> {
        let mid = super::benchmark::anchor_points(&self.bounds)?.mid;
        let mut items = Vec::with_capacity(2 * self.samples);
        for (row, m) in self.resolutions()?.into_iter().enumerate() {
            let fmh = FmhConfig::new(mid[0], mid[1], m, mid[3])?;
            for model in [ForwardModel::Fourier, ForwardModel::Asm] {
                items.push(WorkItem {
                    row,
                    label: model.to_string(),
                    model,
                    fmh,
                });
            }
        }
        Ok(items)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmComparison {
    pub resolutions: Vec<usize>,
    pub fourier: ResultTable,
    pub asm: ResultTable,
    /// Rows in evaluation order, alternating Fourier and ASM.
    pub table: ResultTable,
}

impl FmComparison {
    fn from_table(table: ResultTable) -> Result<Self> {
        let (mut fourier, mut asm) = (ResultTable::default(), ResultTable::default());
        for row in &table.rows {
            match row.label.parse::<ForwardModel>()? {
                ForwardModel::Fourier => fourier.rows.push(row.clone()),
                ForwardModel::Asm => asm.rows.push(row.clone()),
            }
        }
        if fourier.len() != asm.len() || fourier.rows.iter().zip(&asm.rows).any(|(f, a)| f.fmh != a.fmh) {
            return Err(Error::SizeMismatch("Fourier and ASM rows are not paired".into()));
        }
        Ok(Self {
            resolutions: fourier.rows.iter().map(|r| r.fmh.slm_resolution).collect(),
            fourier,
            asm,
            table,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(ResultTable::read_csv(path)?)
    }

    /// Statistics per recorded iteration; the Wilcoxon alternative is that
    /// Fourier scores exceed ASM scores.
    pub fn statistics(&self, metric: Metric) -> Result<Vec<FmIterationStats>> {
        let m: Vec<f64> = self.resolutions.iter().map(|&m| m as f64).collect();
        self.fourier
            .iterations()
            .into_iter()
            .map(|iteration| {
                let f = self.fourier.column(metric, iteration)?;
                let a = self.asm.column(metric, iteration)?;
                Ok(FmIterationStats {
                    iteration,
                    metric,
                    n: f.len(),
                    median_fourier: median(&f)?,
                    median_asm: median(&a)?,
                    wilcoxon_fourier_greater: wilcoxon_signed_rank(&f, &a, Alternative::Greater).ok(),
                    spearman_m_fourier: spearman(&m, &f).ok(),
                    spearman_m_asm: spearman(&m, &a).ok(),
                    pearson_fourier_asm: pearson(&f, &a).ok(),
                    spearman_fourier_asm: spearman(&f, &a).ok(),
                })
            })
            .collect()
    }
}

/// Tests that cannot be computed on degenerate data are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmIterationStats {
    pub iteration: usize,
    pub metric: Metric,
    pub n: usize,
    pub median_fourier: f64,
    pub median_asm: f64,
    pub wilcoxon_fourier_greater: Option<TestResult>,
    pub spearman_m_fourier: Option<TestResult>,
    pub spearman_m_asm: Option<TestResult>,
    pub pearson_fourier_asm: Option<TestResult>,
    pub spearman_fourier_asm: Option<TestResult>,
}

pub fn run_fm_comparison(cfg: &FmComparisonConfig, out_dir: Option<&Path>) -> Result<FmComparison> {
    cfg.validate()?;
    let start = Instant::now();
    let (entries, images) = load_images(&cfg.corpus, cfg.image_limit)?;
    let items = cfg.items()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let sink = out_dir.map(|d| d.join(RESULTS_FILE));
    let table = run_items(&items, &images, &cfg.settings(), sink.as_deref())?;
    if let Some(dir) = out_dir {
        let mut manifest = RunManifest::new("fm-comparison", serde_json::to_value(cfg).expect("config serializes"), cfg.master_seed);
        manifest.corpus = entries
            .iter()
            .map(|e| FileHash {
                path: e.path.display().to_string(),
                sha256: e.sha256.clone(),
            })
            .collect();
        manifest.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
        manifest.add_output(&dir.join(RESULTS_FILE))?;
        manifest.write(&dir.join(MANIFEST_FILE))?;
    }
    FmComparison::from_table(table)
}

/// Evaluates GS at explicit points (anchors, resilience neighborhoods) with
/// the given labels.
pub fn run_points(
    points: &[(String, FmhConfig)],
    model: ForwardModel,
    images: &[Image],
    settings: &EvalSettings,
    sink: Option<&Path>,
) -> Result<ResultTable> {
    let items: Vec<WorkItem> = points
        .iter()
        .enumerate()
        .map(|(row, (label, fmh))| WorkItem {
            row,
            label: label.clone(),
            model,
            fmh: *fmh,
        })
        .collect();
    run_items(&items, images, settings, sink)
}

/// Index table for one metric column of a campaign, as CSV and JSON.
pub fn write_index_report(indices: &SobolIndices, csv_path: &Path, json_path: &Path) -> Result<()> {
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut w = BufWriter::new(file);
    indices.write_csv(&mut w).map_err(|e| Error::io(csv_path, e))?;
    w.flush().map_err(|e| Error::io(csv_path, e))?;
    let json = serde_json::to_string_pretty(indices).expect("indices serialize");
    fs::write(json_path, json + "\n").map_err(|e| Error::io(json_path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

pub fn hash_file(path: &Path) -> Result<FileHash> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileHash {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub design_hash: Option<String>,
    pub corpus: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub notes: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, master_seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            master_seed,
            design_hash: None,
            corpus: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let h = hash_file(path)?;
        self.outputs.retain(|o| o.path != h.path);
        self.outputs.push(h);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use holosa::corpus::write_synthetic_corpus;
use holosa::experiment::{
    anchor_points, composite_metric, generalization_metric, gs_weighted_metric, load_images, resilience_metric,
    resilience_neighborhood, run_fm_comparison, run_fmh_campaign, run_points, write_index_report, CampaignConfig,
    CompositeWeights, EvalSettings, FmComparisonConfig, Metric, ResultTable, RunManifest,
    DEFAULT_RESILIENCE_POINTS, DEFAULT_RESILIENCE_SIGMA, MANIFEST_FILE, RESULTS_FILE,
};
use holosa::field::{field_from_target, load_grayscale, resize_bilinear, save_grayscale, Image};
use holosa::metrics::normalize_with_range;
use holosa::phase_retrieval::{gs_run, random_phase, GsConfig};
use holosa::sensitivity::{saltelli_design, FmhBounds, DEFAULT_BOOTSTRAP_RESAMPLES};
use holosa::{Direction, FmhConfig, ForwardModel, Propagator};

use crate::config::Config;
use crate::{CampaignArgs, Cli, Command, CompareArgs, GsArgs, MetricArgs, OpticsArgs, PropagateArgs, ResilienceArgs};

/// Marks errors that should exit with the usage status.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Ctx {
    cfg: Config,
    out: Option<PathBuf>,
}

impl Ctx {
    fn seed(&self) -> Result<u64> {
        self.cfg.get_or("master_seed", 0)
    }

    fn workers(&self) -> Result<usize> {
        self.cfg.get_or("workers", 1)
    }

    fn out_dir(&self, default: &str) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from(default));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn bounds(&self) -> Result<FmhBounds> {
        let r = FmhBounds::reference();
        let p = &r.parameters;
        let pair = |lo: &str, hi: &str, i: usize| -> Result<(f64, f64)> {
            Ok((self.cfg.get_or(lo, p[i].lower)?, self.cfg.get_or(hi, p[i].upper)?))
        };
        FmhBounds::fmh(
            pair("lambda_min", "lambda_max", 0)?,
            pair("pitch_min", "pitch_max", 1)?,
            pair("m_min", "m_max", 2)?,
            pair("d_min", "d_max", 3)?,
        )
        .map_err(|e| usage(e.to_string()))
    }

    fn model(&self, default: ForwardModel) -> Result<ForwardModel> {
        match self.cfg.raw("forward_model") {
            Some(s) => s.parse().map_err(|e: holosa::Error| usage(e.to_string())),
            None => Ok(default),
        }
    }

    fn corpus(&self) -> Result<PathBuf> {
        self.cfg
            .get::<PathBuf>("corpus")?
            .ok_or_else(|| usage("a corpus directory is required (--corpus or config key corpus)"))
    }

    fn settings(&self) -> Result<EvalSettings> {
        let iterations = self.cfg.get_or("iterations", 30)?;
        Ok(EvalSettings {
            iterations,
            record_iterations: self.cfg.list("record_iterations")?.unwrap_or_default(),
            master_seed: self.seed()?,
            workers: self.workers()?,
        })
    }

    fn manifest(&self, command: &str) -> Result<RunManifest> {
        Ok(RunManifest::new(command, self.cfg.snapshot(), self.seed()?))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| usage(format!("{e:#}")))?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("master_seed", seed);
    }
    if let Some(w) = cli.workers {
        cfg.set("workers", w);
    }
    let out = cli.out.clone().or(cfg.get::<PathBuf>("out")?);
    let mut ctx = Ctx { cfg, out };
    match cli.command {
        Command::Propagate(a) => propagate(&mut ctx, a),
        Command::Gs(a) => gs(&mut ctx, a),
        Command::Sample(a) => {
            set_opt(&mut ctx.cfg, "base_samples", a.n);
            if a.second_order {
                ctx.cfg.set("second_order", true);
            }
            sample(&ctx, a.k)
        }
        Command::Sa(a) => {
            campaign_flags(&mut ctx.cfg, &a);
            sa(&ctx)
        }
        Command::CompareFm(a) => {
            compare_flags(&mut ctx.cfg, &a);
            compare_fm(&ctx)
        }
        Command::Anchors(a) => {
            campaign_flags(&mut ctx.cfg, &a);
            anchors(&ctx)
        }
        Command::Resilience(a) => resilience(&mut ctx, a),
        Command::Metric(a) => metric(&ctx, a),
        Command::Report(a) => report(&ctx, &a.inputs),
        Command::Corpus(a) => {
            let dir = ctx.out_dir("corpus")?;
            let paths = write_synthetic_corpus(&dir, a.count, a.size, ctx.seed()?)?;
            println!("wrote {} images to {}", paths.len(), dir.display());
            Ok(())
        }
    }
}

fn set_opt<T: ToString>(cfg: &mut Config, key: &str, value: Option<T>) {
    if let Some(v) = value {
        cfg.set(key, v);
    }
}

fn campaign_flags(cfg: &mut Config, a: &CampaignArgs) {
    set_opt(cfg, "base_samples", a.n);
    set_opt(cfg, "forward_model", a.fm.as_ref());
    set_opt(cfg, "iterations", a.iters);
    set_opt(cfg, "corpus", a.corpus.as_ref().map(|p| p.display()));
    set_opt(cfg, "image_limit", a.image_limit);
}

fn compare_flags(cfg: &mut Config, a: &CompareArgs) {
    set_opt(cfg, "samples", a.samples);
    set_opt(cfg, "m_min", a.m_min);
    set_opt(cfg, "m_max", a.m_max);
    set_opt(cfg, "iterations", a.iters);
    set_opt(cfg, "corpus", a.corpus.as_ref().map(|p| p.display()));
    set_opt(cfg, "image_limit", a.image_limit);
}

fn optics_flags(cfg: &mut Config, a: &OpticsArgs) {
    set_opt(cfg, "forward_model", a.fm.as_ref());
    set_opt(cfg, "slm_resolution", a.m);
    set_opt(cfg, "wavelength", a.wavelength);
    set_opt(cfg, "pixel_pitch", a.pitch);
    set_opt(cfg, "distance", a.distance);
}

/// Single-configuration optics: explicit values, else the midpoint of the
/// configured bounds; M defaults to the image size.
fn single_fmh(ctx: &Ctx, image: &Image) -> Result<FmhConfig> {
    let mid = anchor_points(&ctx.bounds()?)?.mid;
    let m = match ctx.cfg.get::<usize>("slm_resolution")? {
        Some(m) => m,
        None if image.is_square() => image.width(),
        None => return Err(usage("the target is not square; pass --m")),
    };
    FmhConfig::new(
        ctx.cfg.get_or("wavelength", mid[0])?,
        ctx.cfg.get_or("pixel_pitch", mid[1])?,
        m,
        ctx.cfg.get_or("distance", mid[3])?,
    )
    .map_err(|e| usage(e.to_string()))
}

fn propagate(ctx: &mut Ctx, a: PropagateArgs) -> Result<()> {
    optics_flags(&mut ctx.cfg, &a.optics);
    let direction = match a.direction.as_str() {
        "forward" => Direction::Forward,
        "inverse" => Direction::Inverse,
        other => return Err(usage(format!("unknown direction {other:?}"))),
    };
    let model = ctx.model(ForwardModel::Fourier)?;
    let source = load_grayscale(&a.input)?;
    let fmh = single_fmh(ctx, &source)?;
    let m = fmh.slm_resolution;
    let target = resize_bilinear(&source, m)?;
    let phase = if a.random_phase {
        random_phase(m, ctx.seed()?)
    } else {
        vec![0.0; m * m]
    };
    let field = field_from_target(&target, fmh.pixel_pitch, &phase)?;
    let output = Propagator::new(model, fmh)?.apply(&field, direction)?;
    let intensity = holosa::IntensityMap::from_field(&output);

    let dir = ctx.out_dir("propagate-out")?;
    let path = dir.join("intensity.pgm");
    save_grayscale(&path, &intensity.to_image_peak_normalized())?;
    let mut manifest = ctx.manifest("propagate")?;
    manifest.corpus.push(holosa::experiment::hash_file(&a.input)?);
    manifest.add_output(&path)?;
    manifest.notes.push(format!("peak intensity {}", intensity.data().iter().cloned().fold(0.0, f64::max)));
    manifest.write(&dir.join(MANIFEST_FILE))?;
    println!("{}", path.display());
    Ok(())
}

fn gs(ctx: &mut Ctx, a: GsArgs) -> Result<()> {
    optics_flags(&mut ctx.cfg, &a.optics);
    set_opt(&mut ctx.cfg, "iterations", a.iters);
    let model = ctx.model(ForwardModel::Fourier)?;
    let source = load_grayscale(&a.target)?;
    let fmh = single_fmh(ctx, &source)?;
    let target = resize_bilinear(&source, fmh.slm_resolution)?;
    let cfg = GsConfig::new(model, fmh, ctx.cfg.get_or("iterations", 30)?, ctx.seed()?);
    let trace = gs_run(&target, &cfg)?;

    let dir = ctx.out_dir("gs-out")?;
    let trace_path = dir.join("trace.csv");
    let mut w = BufWriter::new(File::create(&trace_path)?);
    writeln!(w, "iteration,psnr_db,ssim,accuracy,amplitude_error")?;
    for r in &trace.records {
        let ssim = r.metrics.ssim.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", r.iteration, r.metrics.psnr, ssim, r.metrics.accuracy, r.amplitude_error)?;
    }
    w.flush()?;
    drop(w);
    let recon_path = dir.join("reconstruction.pgm");
    save_grayscale(&recon_path, &trace.final_reconstruction.to_image_clamped())?;
    let m = fmh.slm_resolution;
    let phase_img = Image::new(
        m,
        m,
        trace
            .final_slm_phase
            .iter()
            .map(|p| ((p + std::f64::consts::PI) / std::f64::consts::TAU).clamp(0.0, 1.0))
            .collect(),
    )?;
    let phase_path = dir.join("slm_phase.pgm");
    save_grayscale(&phase_path, &phase_img)?;

    let mut manifest = ctx.manifest("gs")?;
    manifest.corpus.push(holosa::experiment::hash_file(&a.target)?);
    for p in [&trace_path, &recon_path, &phase_path] {
        manifest.add_output(p)?;
    }
    manifest.write(&dir.join(MANIFEST_FILE))?;
    let last = trace.final_record();
    println!("iteration {}: psnr {:.4} dB, accuracy {:.4}", last.iteration, last.metrics.psnr, last.metrics.accuracy);
    Ok(())
}

fn warn_power_of_two(n: usize) {
    if !n.is_power_of_two() {
        eprintln!("warning: N = {n} is not a power of two; Sobol balance properties are weaker");
    }
}

fn sample(ctx: &Ctx, k: Option<usize>) -> Result<()> {
    let n: usize = ctx
        .cfg
        .get("base_samples")?
        .ok_or_else(|| usage("sample needs --n or config key base_samples"))?;
    let bounds = match k {
        None | Some(4) => ctx.bounds()?,
        Some(0) => return Err(usage("k must be at least 1")),
        Some(k) => FmhBounds::unit(k),
    };
    warn_power_of_two(n);
    let design = saltelli_design(&bounds, n, ctx.cfg.get_or("second_order", false)?).map_err(|e| usage(e.to_string()))?;
    match &ctx.out {
        Some(_) => {
            let dir = ctx.out_dir("")?;
            let path = dir.join("design.csv");
            design.write_csv(BufWriter::new(File::create(&path)?))?;
            let mut manifest = ctx.manifest("sample")?;
            manifest.design_hash = Some(design.content_hash());
            manifest.add_output(&path)?;
            manifest.write(&dir.join(MANIFEST_FILE))?;
        }
        None => design.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn campaign_config(ctx: &Ctx) -> Result<CampaignConfig> {
    let s = ctx.settings()?;
    Ok(CampaignConfig {
        bounds: ctx.bounds()?,
        base_samples: ctx
            .cfg
            .get("base_samples")?
            .ok_or_else(|| usage("sa needs --n or config key base_samples"))?,
        second_order: ctx.cfg.get_or("second_order", true)?,
        forward_model: ctx.model(ForwardModel::Asm)?,
        iterations: s.iterations,
        record_iterations: s.record_iterations,
        corpus: ctx.corpus()?,
        image_limit: ctx.cfg.get_or("image_limit", 100)?,
        master_seed: s.master_seed,
        workers: s.workers,
    })
}

fn sa(ctx: &Ctx) -> Result<()> {
    let cfg = campaign_config(ctx)?;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    warn_power_of_two(cfg.base_samples);
    let dir = ctx.out_dir("sa-out")?;
    let result = run_fmh_campaign(&cfg, Some(&dir))?;
    let iterations = ctx
        .cfg
        .list::<usize>("report_iterations")?
        .unwrap_or_else(|| vec![cfg.iterations]);
    let resamples = ctx.cfg.get_or("bootstrap_resamples", DEFAULT_BOOTSTRAP_RESAMPLES)?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    manifest.config = serde_json::json!({ "campaign": manifest.config, "cli": ctx.cfg.snapshot() });
    for &t in &iterations {
        for metric in Metric::ALL {
            let Ok(indices) = result.indices(metric, t, resamples, cfg.master_seed) else {
                eprintln!("warning: no {metric} indices at iteration {t}");
                continue;
            };
            let stem = format!("indices_{metric}_it{t}");
            let (csv, json) = (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")));
            write_index_report(&indices, &csv, &json)?;
            manifest.add_output(&csv)?;
            manifest.add_output(&json)?;
            if metric == Metric::Psnr {
                println!(
                    "iteration {t}: largest total-order index for psnr is {}",
                    indices.names[indices.top_total_order()]
                );
            }
        }
    }
    manifest.write(&manifest_path)?;
    Ok(())
}

fn compare_fm(ctx: &Ctx) -> Result<()> {
    let s = ctx.settings()?;
    let bounds = ctx.bounds()?;
    let cfg = FmComparisonConfig {
        resolution_range: (
            bounds.parameters[2].lower.round() as usize,
            bounds.parameters[2].upper.round() as usize,
        ),
        bounds,
        samples: ctx.cfg.get_or("samples", 128)?,
        iterations: s.iterations,
        record_iterations: s.record_iterations,
        corpus: ctx.corpus()?,
        image_limit: ctx.cfg.get_or("image_limit", 100)?,
        master_seed: s.master_seed,
        workers: s.workers,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let dir = ctx.out_dir("compare-fm-out")?;
    let cmp = run_fm_comparison(&cfg, Some(&dir))?;

    let stats_csv = dir.join("stats.csv");
    let mut w = BufWriter::new(File::create(&stats_csv)?);
    writeln!(w, "metric,iteration,n,median_fourier,median_asm,wilcoxon_w,wilcoxon_p,spearman_m_fourier,spearman_m_fourier_p,spearman_m_asm,spearman_m_asm_p,pearson_fourier_asm,spearman_fourier_asm")?;
    let mut all = Vec::new();
    let fmt = |t: &Option<holosa::stats::TestResult>, p: bool| {
        t.map(|t| if p { t.p_value } else { t.statistic }.to_string()).unwrap_or_default()
    };
    for metric in Metric::ALL {
        let Ok(stats) = cmp.statistics(metric) else { continue };
        for st in &stats {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                metric,
                st.iteration,
                st.n,
                st.median_fourier,
                st.median_asm,
                fmt(&st.wilcoxon_fourier_greater, false),
                fmt(&st.wilcoxon_fourier_greater, true),
                fmt(&st.spearman_m_fourier, false),
                fmt(&st.spearman_m_fourier, true),
                fmt(&st.spearman_m_asm, false),
                fmt(&st.spearman_m_asm, true),
                fmt(&st.pearson_fourier_asm, false),
                fmt(&st.spearman_fourier_asm, false),
            )?;
        }
        all.extend(stats);
    }
    w.flush()?;
    drop(w);
    let stats_json = dir.join("stats.json");
    fs::write(&stats_json, serde_json::to_string_pretty(&all)? + "\n")?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    manifest.add_output(&stats_csv)?;
    manifest.add_output(&stats_json)?;
    manifest.write(&manifest_path)?;
    for st in all.iter().filter(|s| s.metric == Metric::Psnr) {
        println!(
            "iteration {}: median psnr fourier {:.4} dB, asm {:.4} dB, one-sided p {}",
            st.iteration,
            st.median_fourier,
            st.median_asm,
            fmt(&st.wilcoxon_fourier_greater, true)
        );
    }
    Ok(())
}

fn run_labelled(ctx: &Ctx, command: &str, points: Vec<(String, FmhConfig)>) -> Result<()> {
    let s = ctx.settings()?;
    s.validate().map_err(|e| usage(e.to_string()))?;
    let model = ctx.model(ForwardModel::Asm)?;
    let corpus = ctx.corpus()?;
    let (entries, images) = load_images(&corpus, ctx.cfg.get_or("image_limit", 100)?)?;
    let dir = ctx.out_dir(&format!("{command}-out"))?;
    let results = dir.join(RESULTS_FILE);
    run_points(&points, model, &images, &s, Some(&results))?;
    let mut manifest = ctx.manifest(command)?;
    manifest.corpus = entries
        .iter()
        .map(|e| holosa::experiment::FileHash {
            path: e.path.display().to_string(),
            sha256: e.sha256.clone(),
        })
        .collect();
    manifest.add_output(&results)?;
    manifest.write(&dir.join(MANIFEST_FILE))?;
    println!("{}", results.display());
    Ok(())
}

fn anchors(ctx: &Ctx) -> Result<()> {
    let bounds = ctx.bounds()?;
    let a = anchor_points(&bounds)?;
    let points = a
        .named()
        .iter()
        .map(|(label, p)| Ok((label.to_string(), bounds.to_fmh(p)?)))
        .collect::<Result<Vec<_>>>()?;
    run_labelled(ctx, "anchors", points)
}

fn resilience(ctx: &mut Ctx, a: ResilienceArgs) -> Result<()> {
    campaign_flags(&mut ctx.cfg, &a.campaign);
    set_opt(&mut ctx.cfg, "anchor", a.anchor.as_ref());
    set_opt(&mut ctx.cfg, "sigma", a.sigma);
    set_opt(&mut ctx.cfg, "points", a.points);
    let bounds = ctx.bounds()?;
    let anchors = anchor_points(&bounds)?;
    let which = ctx.cfg.raw("anchor").unwrap_or("mid").to_string();
    let center = match which.as_str() {
        "inner" => anchors.inner,
        "mid" => anchors.mid,
        "outer" => anchors.outer,
        other => return Err(usage(format!("unknown anchor {other:?}"))),
    };
    let neighborhood = resilience_neighborhood(
        &bounds,
        &center,
        ctx.cfg.get_or("sigma", DEFAULT_RESILIENCE_SIGMA)?,
        ctx.cfg.get_or("points", DEFAULT_RESILIENCE_POINTS)?,
    )
    .map_err(|e| usage(e.to_string()))?;
    let mut points = vec![("ref".to_string(), bounds.to_fmh(&center)?)];
    for p in &neighborhood {
        points.push(("perturbed".to_string(), bounds.to_fmh(p)?));
    }
    run_labelled(ctx, "resilience", points)
}

fn metric(ctx: &Ctx, a: MetricArgs) -> Result<()> {
    let metric: Metric = a.metric.parse().map_err(|e: holosa::Error| usage(e.to_string()))?;
    let cand = ResultTable::read_csv(&a.candidate)?;
    let base = ResultTable::read_csv(&a.baseline)?;
    let iteration = match a.iteration {
        Some(t) => t,
        None => *cand.iterations().last().ok_or_else(|| anyhow!("{} has no rows", a.candidate.display()))?,
    };
    if cand.len() != base.len() || cand.rows.iter().zip(&base.rows).any(|(c, b)| c.fmh != b.fmh) {
        bail!("candidate and baseline results are not aligned row by row");
    }
    let p_raw = cand.column(metric, iteration)?;
    let gs_raw = base.column(metric, iteration)?;

    let labelled = |path: &Path, labels: &[&str]| -> Result<Vec<Vec<f64>>> {
        let t = ResultTable::read_csv(path)?;
        labels
            .iter()
            .map(|l| {
                let rows: Vec<_> = t.rows.iter().filter(|r| r.label == *l).cloned().collect();
                if rows.is_empty() {
                    bail!("{} has no rows labelled {l}", path.display());
                }
                ResultTable { rows }.column(metric, iteration).map_err(Into::into)
            })
            .collect()
    };
    let anchor_raw = a
        .anchors
        .as_deref()
        .map(|p| labelled(p, &["inner", "mid", "outer"]))
        .transpose()?;
    let res_raw = a
        .resilience
        .as_deref()
        .map(|p| labelled(p, &["ref", "perturbed"]))
        .transpose()?;

    let mut pool: Vec<f64> = p_raw.iter().chain(&gs_raw).copied().collect();
    for group in anchor_raw.iter().chain(&res_raw) {
        pool.extend(group.iter().flatten());
    }
    let lo = pool.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pool.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm = |v: &[f64]| normalize_with_range(v, lo, hi);

    let gsw = gs_weighted_metric(&norm(&p_raw), &norm(&gs_raw))?;
    let gm = anchor_raw
        .map(|g| {
            let mean = |v: &[f64]| norm(v).iter().sum::<f64>() / v.len() as f64;
            generalization_metric(mean(&g[0]), mean(&g[1]), mean(&g[2]))
        });
    let r = res_raw
        .map(|g| resilience_metric(norm(&g[0])[0], &norm(&g[1])))
        .transpose()?;

    let present = [true, gm.is_some(), r.is_some()];
    let share = 1.0 / present.iter().filter(|p| **p).count() as f64;
    let pick = |flag: Option<f64>, i: usize| flag.unwrap_or(if present[i] { share } else { 0.0 });
    let weights = CompositeWeights::new(pick(a.alpha, 0), pick(a.beta, 1), pick(a.gamma, 2)).map_err(|e| usage(e.to_string()))?;
    if (weights.beta > 0.0 && gm.is_none()) || (weights.gamma > 0.0 && r.is_none()) {
        return Err(usage("a weighted component needs its input file (--anchors / --resilience)"));
    }
    let composite = composite_metric(&weights, gsw, gm.unwrap_or(0.0), r.unwrap_or(0.0));
    let report = serde_json::json!({
        "metric": metric,
        "iteration": iteration,
        "normalization": {
            "population": "pooled candidate, baseline, anchor and resilience scores for this metric",
            "min": lo,
            "max": hi,
        },
        "gs_weighted": gsw,
        "generalization": gm,
        "resilience": r,
        "weights": weights,
        "composite": composite,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &ctx.out {
        Some(_) => {
            let dir = ctx.out_dir("")?;
            let path = dir.join("metric.json");
            fs::write(&path, &text)?;
            let mut manifest = ctx.manifest("metric")?;
            for input in [Some(&a.candidate), Some(&a.baseline), a.anchors.as_ref(), a.resilience.as_ref()]
                .into_iter()
                .flatten()
            {
                manifest.corpus.push(holosa::experiment::hash_file(input)?);
            }
            manifest.add_output(&path)?;
            manifest.write(&dir.join(MANIFEST_FILE))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report(ctx: &Ctx, inputs: &[PathBuf]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "source,row,block,lambda_m,pitch_m,M,d_m,iteration,metric,value")?;
    for path in inputs {
        let table = ResultTable::read_csv(path)?;
        let source = path
            .parent()
            .and_then(|p| p.file_name())
            .or_else(|| path.file_stem())
            .map(|s| s.to_string_lossy().replace(',', "_"))
            .unwrap_or_default();
        for row in &table.rows {
            for rec in &row.records {
                for metric in Metric::ALL {
                    if let Some(v) = rec.get(metric) {
                        writeln!(
                            buf,
                            "{source},{},{},{},{},{},{},{},{metric},{v}",
                            row.row,
                            row.label,
                            row.fmh.wavelength,
                            row.fmh.pixel_pitch,
                            row.fmh.slm_resolution,
                            row.fmh.distance,
                            rec.iteration
                        )?;
                    }
                }
            }
        }
    }
    match &ctx.out {
        Some(_) => {
            let dir = ctx.out_dir("")?;
            let path = dir.join("report.csv");
            fs::write(&path, &buf)?;
            let mut manifest = ctx.manifest("report")?;
            for input in inputs {
                manifest.corpus.push(holosa::experiment::hash_file(input)?);
            }
            manifest.add_output(&path)?;
            manifest.write(&dir.join(MANIFEST_FILE))?;
        }
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

use lesion_core::dataset::{load_manifest, save_manifest, scan_dataset, split_train_val};
use lesion_core::evaluation::{metrics_report, parse_prediction_log, write_prediction_log};
use lesion_core::preprocess::preprocess_pipeline;
use lesion_core::probe::{extract_features, predict_label, train_probe as fit, Example};
use lesion_core::quality::{summarize, write_report, QualitySummary};
use lesion_core::raster::{encode_pgm, encode_ppm, read_netpbm, write_netpbm};
use lesion_core::synthetic::{generate, SynthConfig};
use lesion_core::{
    Image, Label, ManifestEntry, PredictionRecord, PreprocessConfig, QualityRow, Raster, Split,
    SplitConfig, TrainConfig, TrainingCurve,
};

use crate::args::{
    Cli, EvalArgs, PreprocessArgs, QualityArgs, ReportArgs, SplitArgs, SynthArgs, TrainArgs,
};
use crate::svg::render_curve;
use crate::UsageError;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")
}

fn log_config<T: Serialize>(name: &str, cfg: &T) {
    info!(
        "{name} config: {}",
        serde_json::to_string(cfg).expect("plain data")
    );
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_rgb(path: &Path) -> Result<Image> {
    let raster = read_netpbm(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match raster {
        Raster::Rgb(img) => img,
        Raster::Gray(g) => Image::from_channels(&[g.clone(), g.clone(), g]),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// `<root>/<split>/<label>/<stem>` for a manifest entry.
fn output_base(root: &Path, e: &ManifestEntry) -> Result<PathBuf> {
    let stem = Path::new(&e.path)
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("{}: no file name", e.path))?;
    Ok(root
        .join(e.split.to_string())
        .join(e.label.as_str())
        .join(stem))
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_entries(path: &Path) -> Result<Vec<ManifestEntry>> {
    load_manifest(path).with_context(|| format!("loading manifest {}", path.display()))
}

#[derive(Serialize)]
struct PreprocessRun<'a> {
    manifest: &'a Path,
    out: &'a Path,
    jobs: usize,
    preprocess: &'a PreprocessConfig,
}

#[derive(Serialize)]
struct SidecarRecord<'a> {
    source: &'a str,
    image: String,
    mask: String,
    masked_pixels: usize,
    config: &'a PreprocessConfig,
}

pub fn preprocess(cli: &Cli, a: &PreprocessArgs) -> Result<()> {
    let mut cfg: PreprocessConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => PreprocessConfig::default(),
    };
    cfg.sharpen &= !a.no_sharpen;
    cfg.remove_hair &= !a.no_hair_removal;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    log_config(
        "preprocess",
        &PreprocessRun {
            manifest: &a.manifest,
            out: &a.out,
            jobs: cli.jobs,
            preprocess: &cfg,
        },
    );

    let entries = load_entries(&a.manifest)?;
    if entries.is_empty() {
        warn!(
            "manifest {} lists no images; nothing to do",
            a.manifest.display()
        );
        return Ok(());
    }
    let mut bases = Vec::with_capacity(entries.len());
    let mut seen = std::collections::HashSet::new();
    for e in &entries {
        let base = output_base(&a.out, e)?;
        if !seen.insert(base.clone()) {
            bail!("{}: output name collides with an earlier entry", e.path);
        }
        bases.push(base);
    }

    let results: Vec<Result<SidecarRecord>> = pool(cli.jobs)?.install(|| {
        entries
            .par_iter()
            .zip(&bases)
            .map(|(e, base)| {
                let img = load_rgb(Path::new(&e.path))?;
                let out = preprocess_pipeline(&img, &cfg).with_context(|| e.path.clone())?;
                let image = with_suffix(base, ".pre.ppm");
                let mask = with_suffix(base, ".mask.pgm");
                write_file(&image, &encode_ppm(&out.image))?;
                write_file(&mask, &encode_pgm(&out.mask.to_gray()))?;
                debug!(
                    "{} -> {} ({} masked)",
                    e.path,
                    image.display(),
                    out.mask.count()
                );
                Ok(SidecarRecord {
                    source: &e.path,
                    image: image.to_string_lossy().into_owned(),
                    mask: mask.to_string_lossy().into_owned(),
                    masked_pixels: out.mask.count(),
                    config: &cfg,
                })
            })
            .collect()
    });

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let sidecar_path = a.out.join("preprocess.jsonl");
    let mut sidecar = BufWriter::new(
        fs::File::create(&sidecar_path)
            .with_context(|| format!("writing {}", sidecar_path.display()))?,
    );
    let mut failures = 0;
    for r in &results {
        match r {
            Ok(rec) => writeln!(sidecar, "{}", serde_json::to_string(rec)?)?,
            Err(e) => {
                failures += 1;
                log::error!("{e:#}");
            }
        }
    }
    sidecar.flush()?;
    info!(
        "processed {} of {} images",
        results.len() - failures,
        results.len()
    );
    if failures > 0 {
        bail!("{failures} image(s) failed");
    }
    Ok(())
}

#[derive(Serialize)]
struct QualityRun<'a> {
    manifest: &'a Path,
    pre_root: &'a Path,
    out: Option<&'a Path>,
    jobs: usize,
}

pub fn quality(cli: &Cli, a: &QualityArgs) -> Result<()> {
    log_config(
        "quality",
        &QualityRun {
            manifest: &a.manifest,
            pre_root: &a.pre_root,
            out: a.out.as_deref(),
            jobs: cli.jobs,
        },
    );
    let entries = load_entries(&a.manifest)?;
    let rows: Vec<QualityRow> = pool(cli.jobs)?.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let reference = load_rgb(Path::new(&e.path))?;
                let pre = with_suffix(&output_base(&a.pre_root, e)?, ".pre.ppm");
                let test = load_rgb(&pre).with_context(|| format!("counterpart of {}", e.path))?;
                QualityRow::compute(e.path.clone(), &reference, &test)
                    .with_context(|| e.path.clone())
            })
            .collect::<Result<_>>()
    })?;
    match &a.out {
        Some(path) => {
            let file =
                fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            write_report(&rows, BufWriter::new(file))?;
        }
        None => write_report(&rows, io::stdout().lock())?,
    }
    print_quality_summary(&summarize(&rows));
    Ok(())
}

fn print_quality_summary(s: &QualitySummary) {
    let psnr = s
        .mean_psnr
        .map(|v| format!("{v:.4}"))
        .unwrap_or_else(|| "inf".to_string());
    info!(
        "{} pairs ({} identical): mean psnr_db {psnr}, mse {:.4}, maxerr {:.4}, l2rat {:.4}",
        s.rows, s.identical, s.mean_mse, s.mean_maxerr, s.mean_l2rat
    );
}

#[derive(Serialize)]
struct SplitRun<'a> {
    root: &'a Path,
    out: &'a Path,
    split: &'a SplitConfig,
}

pub fn split(cli: &Cli, a: &SplitArgs) -> Result<()> {
    let cfg = SplitConfig {
        train_fraction: a.fraction,
        seed: cli.seed,
    };
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(usage(format!(
            "--fraction must lie in (0, 1), got {}",
            a.fraction
        )));
    }
    log_config(
        "split",
        &SplitRun {
            root: &a.root,
            out: &a.out,
            split: &cfg,
        },
    );
    let scanned = scan_dataset(&a.root)?;
    let entries = split_train_val(&scanned, &cfg)?;
    save_manifest(&a.out, &entries)?;
    let count = |s: Split| entries.iter().filter(|e| e.split == s).count();
    info!(
        "{} entries: {} train, {} val, {} test",
        entries.len(),
        count(Split::Train),
        count(Split::Val),
        count(Split::Test)
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainRun<'a> {
    manifest: &'a Path,
    out: &'a Path,
    jobs: usize,
    train: &'a TrainConfig,
}

pub fn train_probe(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    cfg.seed = cli.seed;
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = a.eval_interval {
        cfg.eval_interval = v;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    log_config(
        "train-probe",
        &TrainRun {
            manifest: &a.manifest,
            out: &a.out,
            jobs: cli.jobs,
            train: &cfg,
        },
    );

    let entries = load_entries(&a.manifest)?;
    let examples: Vec<Example> = pool(cli.jobs)?.install(|| {
        entries
            .par_iter()
            .map(|e| {
                Ok(Example::new(
                    extract_features(&load_rgb(Path::new(&e.path))?),
                    e.label,
                ))
            })
            .collect::<Result<_>>()
    })?;
    let pick = |s: Split| -> Vec<(&ManifestEntry, Example)> {
        entries
            .iter()
            .zip(&examples)
            .filter(|(e, _)| e.split == s)
            .map(|(e, x)| (e, x.clone()))
            .collect()
    };
    let train: Vec<Example> = pick(Split::Train).into_iter().map(|(_, x)| x).collect();
    let val: Vec<Example> = pick(Split::Val).into_iter().map(|(_, x)| x).collect();
    let test = pick(Split::Test);
    info!(
        "{} train, {} val, {} test examples",
        train.len(),
        val.len(),
        test.len()
    );

    let (model, curve) = fit(&train, &val, &cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_file(&a.out.join("model.txt"), model.to_text().as_bytes())?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    write_file(&a.out.join("curve.csv"), &buf)?;
    if let Some(last) = curve.last() {
        info!(
            "iteration {}: train acc {:.4}, train xent {:.4}",
            last.iteration, last.train_accuracy, last.train_cross_entropy
        );
    }

    if !test.is_empty() {
        let records = test
            .iter()
            .map(|(e, x)| {
                let (predicted, confidence) = predict_label(&model, &x.features)?;
                Ok(PredictionRecord {
                    case_id: e.path.clone(),
                    predicted,
                    confidence,
                    truth: e.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        write_file(
            &a.out.join("predictions.csv"),
            write_prediction_log(&records).as_bytes(),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalRun<'a> {
    log: &'a Path,
    paper_rounding: bool,
    json: Option<&'a Path>,
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    log_config(
        "eval",
        &EvalRun {
            log: &a.log,
            paper_rounding: a.paper_rounding,
            json: a.json.as_deref(),
        },
    );
    let bytes = fs::read(&a.log).with_context(|| format!("reading {}", a.log.display()))?;
    let records = parse_prediction_log(&bytes).with_context(|| a.log.display().to_string())?;
    let ev = metrics_report(&records)?;
    print!("{}", ev.render_text(a.paper_rounding));
    if let Some(path) = &a.json {
        write_file(path, (serde_json::to_string_pretty(&ev)? + "\n").as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportRun<'a> {
    curve: Option<&'a Path>,
    quality: Option<&'a Path>,
    render_svg: Option<&'a Path>,
}

#[derive(serde::Deserialize)]
struct ReportRow {
    id: String,
    psnr_db: f64,
    mse: f64,
    maxerr: u8,
    l2rat: f64,
    width: u32,
    height: u32,
}

fn opt4(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}"))
        .unwrap_or_else(|| "n/a".to_string())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    log_config(
        "report",
        &ReportRun {
            curve: a.curve.as_deref(),
            quality: a.quality.as_deref(),
            render_svg: a.render_svg.as_deref(),
        },
    );
    if a.curve.is_none() && a.quality.is_none() {
        return Err(usage("report needs --curve and/or --quality"));
    }
    if a.render_svg.is_some() && a.curve.is_none() {
        return Err(usage("--render-svg needs --curve"));
    }
    if let Some(path) = &a.curve {
        let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
        let curve = TrainingCurve::read_csv(file).with_context(|| path.display().to_string())?;
        let last = curve
            .last()
            .ok_or_else(|| anyhow!("{}: curve has no rows", path.display()))?;
        println!("curve        {}", path.display());
        println!("points       {}", curve.points.len());
        println!("iterations   {}", last.iteration);
        println!("train_acc    {:.4}", last.train_accuracy);
        println!("train_xent   {:.4}", last.train_cross_entropy);
        println!("val_acc      {}", opt4(last.val_accuracy));
        println!("val_xent     {}", opt4(last.val_cross_entropy));
        let best = curve
            .points
            .iter()
            .filter_map(|p| p.val_accuracy.map(|v| (p.iteration, v)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            });
        if let Some((i, v)) = best {
            println!("best_val_acc {v:.4} at {i}");
        }
        if let Some(svg) = &a.render_svg {
            write_file(svg, render_curve(&curve).as_bytes())?;
        }
    }
    if let Some(path) = &a.quality {
        let mut rd =
            csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let rows = rd
            .deserialize::<ReportRow>()
            .map(|r| {
                let r = r?;
                Ok(QualityRow {
                    image_id: r.id,
                    psnr: r.psnr_db,
                    mse: r.mse,
                    maxerr: r.maxerr,
                    l2rat: r.l2rat,
                    width: r.width,
                    height: r.height,
                })
            })
            .collect::<Result<Vec<_>>>()
            .with_context(|| path.display().to_string())?;
        let s = summarize(&rows);
        println!("quality      {}", path.display());
        println!("pairs        {} ({} identical)", s.rows, s.identical);
        println!(
            "mean_psnr_db {}",
            s.mean_psnr
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "inf".into())
        );
        println!("mean_mse     {:.4}", s.mean_mse);
        println!("mean_maxerr  {:.4}", s.mean_maxerr);
        println!("mean_l2rat   {:.4}", s.mean_l2rat);
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthRun<'a> {
    out: &'a Path,
    count: usize,
    seed: u64,
}

/// Hairy synthetic lesions under `<out>/{train,test}/{benign,malignant}`.
/// Class labels are nominal; the images carry no class signal.
pub fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    log_config(
        "synth",
        &SynthRun {
            out: &a.out,
            count: a.count,
            seed: cli.seed,
        },
    );
    let cfg = SynthConfig::default();
    let mut jobs = Vec::new();
    for split in ["train", "test"] {
        for label in [Label::Benign, Label::Malignant] {
            for i in 0..a.count {
                jobs.push((split, label, i));
            }
        }
    }
    pool(cli.jobs)?.install(|| {
        jobs.par_iter()
            .enumerate()
            .try_for_each(|(k, &(split, label, i))| {
                let s = generate(cli.seed.wrapping_add(k as u64), &cfg);
                let path = a
                    .out
                    .join(split)
                    .join(label.as_str())
                    .join(format!("synth_{i:04}.ppm"));
                if let Some(dir) = path.parent() {
                    fs::create_dir_all(dir)?;
                }
                write_netpbm(&path, &Raster::Rgb(s.hairy))
                    .with_context(|| path.display().to_string())
            })
    })?;
    info!("wrote {} images under {}", jobs.len(), a.out.display());
    Ok(())
}

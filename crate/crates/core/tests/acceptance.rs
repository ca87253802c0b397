//! Acceptance suite. Each test prints one `[PASS]` or `[FAIL]` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! readable scoreboard.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use lesion_core::dataset::{scan_dataset, split_train_val};
use lesion_core::evaluation::{
    confusion, f1, format_percent, metrics_report, parse_prediction_log,
};
use lesion_core::preprocess::{close_line, preprocess_pipeline, Orientation};
use lesion_core::probe::{gradient_check, train_probe, Example, LinearProbeModel, TrainConfig};
use lesion_core::quality::{psnr, psnr_from_mse, quality_report};
use lesion_core::raster::read_netpbm;
use lesion_core::synthetic::{generate, mask_scores, SynthConfig};
use lesion_core::{GrayImage, Label, ManifestEntry, PreprocessConfig, Split, SplitConfig};

fn verdict(id: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {detail}");
    assert!(ok, "{id} failed: {detail}");
}

#[test]
fn ac01_psnr_mse_consistency() {
    // (row, psnr_db, mse) reference values
    let rows = [
        (1, 19.4205, 743.0656),
        (2, 21.5481, 655.2738),
        (3, 22.1285, 398.3229),
        (4, 23.2953, 304.4737),
        (5, 22.4291, 371.6785),
        (6, 24.0840, 329.9128),
        (7, 18.6732, 882.5930),
        (8, 19.3975, 847.0221),
    ];
    let consistent = [1, 3, 4, 5, 7];
    let mut ok = true;
    let mut notes = Vec::new();
    for (row, want_psnr, want_mse) in rows {
        let got = psnr_from_mse(want_mse);
        let delta = (got - want_psnr).abs();
        let expect_match = consistent.contains(&row);
        if expect_match != (delta <= 1e-3) {
            ok = false;
        }
        notes.push(format!("r{row}:{delta:.4}"));
    }
    verdict(
        "AC-1",
        ok,
        &format!(
            "rows 1,3,4,5,7 within 0.001 dB; rows 2,6,8 off ({})",
            notes.join(" ")
        ),
    );
}

fn reference_log(name: &str) -> Vec<lesion_core::PredictionRecord> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name);
    parse_prediction_log(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn ac02_reference_accuracy() {
    let orig = metrics_report(&reference_log("reference_original.csv")).unwrap();
    let proc = metrics_report(&reference_log("reference_processed.csv")).unwrap();
    let (a0, a1) = (orig.metrics.accuracy, proc.metrics.accuracy);
    let ok = (a0 - 100.0 * 17.0 / 21.0).abs() < 1e-9
        && (a1 - 100.0 * 18.0 / 21.0).abs() < 1e-9
        && format!("{a0:.2}") == "80.95"
        && format!("{a1:.2}") == "85.71"
        && format_percent(Some(a0), true) == "81%"
        && format_percent(Some(a1), true) == "86%";
    verdict(
        "AC-2",
        ok,
        &format!(
            "original {} -> {}, processed {} -> {}",
            format_percent(Some(a0), false),
            format_percent(Some(a0), true),
            format_percent(Some(a1), false),
            format_percent(Some(a1), true)
        ),
    );
}

#[test]
fn ac03_f1_rounding() {
    let cases = [((70.0, 87.5), "77%"), ((80.0, 89.0), "84%")];
    let mut ok = true;
    let mut notes = Vec::new();
    for ((p, r), want) in cases {
        let v = f1(p, r).unwrap();
        let got = format_percent(Some(v), true);
        ok &= got == want;
        notes.push(format!("f1({p},{r})={v:.4} -> {got} (expected {want})"));
    }
    verdict("AC-3", ok, &notes.join("; "));
}

fn brute_line(img: &GrayImage, len: usize, o: Orientation, dilate: bool) -> GrayImage {
    let (dx, dy) = o.step();
    let r = (len / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let vals = (-r..=r).filter_map(|k| {
            let (sx, sy) = (x as i64 + k * dx as i64, y as i64 + k * dy as i64);
            (sx >= 0 && sx < w && sy >= 0 && sy < h).then(|| img.get(sx as u32, sy as u32))
        });
        if dilate {
            vals.max().unwrap()
        } else {
            vals.min().unwrap()
        }
    })
}

#[test]
fn ac04_closing_axioms() {
    let start = Instant::now();
    let len = 11;
    let failures: usize = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let img = GrayImage::from_fn(32, 32, |_, _| rng.random());
            let mut bad = 0;
            for o in Orientation::ALL {
                let oracle = brute_line(&brute_line(&img, len, o, true), len, o, false);
                let closed = close_line(&img, len, o).unwrap();
                let twice = close_line(&closed, len, o).unwrap();
                let extensive = closed
                    .as_raw()
                    .iter()
                    .zip(img.as_raw())
                    .all(|(c, v)| c >= v);
                if closed != oracle || !extensive || twice != closed {
                    bad += 1;
                }
            }
            bad
        })
        .sum();
    verdict(
        "AC-4",
        failures == 0,
        &format!(
            "4000 closings, {failures} violations, {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

struct CorpusResult {
    recall: f64,
    psnr_in: f64,
    psnr_out: f64,
    outside_changed: usize,
}

fn run_corpus(n: u64) -> Vec<CorpusResult> {
    let synth = SynthConfig::default();
    let cfg = PreprocessConfig::default();
    let no_hair = PreprocessConfig {
        remove_hair: false,
        ..cfg.clone()
    };
    (0..n)
        .into_par_iter()
        .map(|seed| {
            let s = generate(seed, &synth);
            let out = preprocess_pipeline(&s.hairy, &cfg).unwrap();
            // Reference for locality: the sharpened input, before any hair stage.
            let sharpened = preprocess_pipeline(&s.hairy, &no_hair).unwrap().image;
            let mut outside_changed = 0;
            for y in 0..s.hairy.height() {
                for x in 0..s.hairy.width() {
                    if !out.mask.get(x, y) && out.image.pixel(x, y) != sharpened.pixel(x, y) {
                        outside_changed += 1;
                    }
                }
            }
            CorpusResult {
                recall: mask_scores(&out.mask, &s.hair).0,
                psnr_in: psnr(&s.clean, &s.hairy).unwrap(),
                psnr_out: psnr(&s.clean, &out.image).unwrap(),
                outside_changed,
            }
        })
        .collect()
}

#[test]
fn ac05_hair_removal_efficacy() {
    let start = Instant::now();
    let res = run_corpus(100);
    let n = res.len() as f64;
    let recall = res.iter().map(|r| r.recall).sum::<f64>() / n;
    let min_recall = res.iter().map(|r| r.recall).fold(1.0, f64::min);
    let psnr_in = res.iter().map(|r| r.psnr_in).sum::<f64>() / n;
    let psnr_out = res.iter().map(|r| r.psnr_out).sum::<f64>() / n;
    let ok = recall >= 0.90 && psnr_out - psnr_in >= 3.0;
    verdict(
        "AC-5",
        ok,
        &format!(
            "recall mean {recall:.4} (min {min_recall:.4}), PSNR {psnr_in:.2} -> {psnr_out:.2} dB, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn ac06_pipeline_locality() {
    let res = run_corpus(100);
    let changed: usize = res.iter().map(|r| r.outside_changed).sum();
    verdict(
        "AC-6",
        changed == 0,
        &format!(
            "{changed} unmasked pixels altered over {} images",
            res.len()
        ),
    );
}

#[test]
fn ac07_gradient_check() {
    let start = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.random_range(1..=20);
        let weights = (0..2 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let model = LinearProbeModel::from_parts(dim, weights, bias).unwrap();
        let batch: Vec<Example> = (0..rng.random_range(1..=16))
            .map(|_| {
                let f = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let label = if rng.random::<bool>() {
                    Label::Malignant
                } else {
                    Label::Benign
                };
                Example::new(f, label)
            })
            .collect();
        let refs: Vec<&Example> = batch.iter().collect();
        worst = worst.max(gradient_check(&model, &refs).unwrap());
    }
    verdict(
        "AC-7",
        worst < 1e-5,
        &format!(
            "max relative error {worst:.3e} over 100 instances, {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

fn blobs(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (label, c) = if i % 2 == 0 {
                (Label::Benign, -1.0)
            } else {
                (Label::Malignant, 1.0)
            };
            let f = vec![
                c + rng.random_range(-0.5..0.5),
                c + rng.random_range(-0.5..0.5),
            ];
            Example::new(f, label)
        })
        .collect()
}

#[test]
fn ac08_probe_training_sanity() {
    let start = Instant::now();
    let train = blobs(100, 3);
    let cfg = TrainConfig::default();
    let run = || {
        let (_, curve) = train_probe(&train, &[], &cfg).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        (curve, buf)
    };
    let (curve, a) = run();
    let (_, b) = run();
    let acc = curve.last().unwrap().train_accuracy;
    let ok = acc == 1.0 && a == b;
    verdict(
        "AC-8",
        ok,
        &format!(
            "train accuracy {acc}, reruns identical: {}, {:.2}s",
            a == b,
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn ac09_split_contract() {
    let entries: Vec<ManifestEntry> = (0..2637)
        .map(|i| ManifestEntry {
            path: format!("img{i:05}.ppm"),
            label: if i < 1440 {
                Label::Benign
            } else {
                Label::Malignant
            },
            split: Split::Train,
        })
        .collect();
    let cfg = SplitConfig::new(2024);
    let a = split_train_val(&entries, &cfg).unwrap();
    let b = split_train_val(&entries, &cfg).unwrap();
    let train = a.iter().filter(|e| e.split == Split::Train).count();
    let val = a.iter().filter(|e| e.split == Split::Val).count();
    let ok = train == 1977 && val == 660 && a == b;
    verdict(
        "AC-9",
        ok,
        &format!("{train}/{val}, reruns identical: {}", a == b),
    );
}

#[test]
fn ac10_full_dataset_smoke() {
    let Some(root) = std::env::var_os("LESION_DATASET") else {
        println!("[SKIP] AC-10 set LESION_DATASET to a dataset root to run");
        return;
    };
    let start = Instant::now();
    let entries = scan_dataset(&root).unwrap();
    let train = entries.iter().filter(|e| e.split == Split::Train).count();
    let test = entries.iter().filter(|e| e.split == Split::Test).count();
    let cfg = PreprocessConfig::default();
    let images: Vec<(String, lesion_core::Image)> = entries
        .iter()
        .filter_map(|e| {
            let img = read_netpbm(&e.path).ok()?.into_rgb().ok()?;
            Some((e.path.clone(), img))
        })
        .take(50)
        .collect();
    let processed: Vec<lesion_core::Image> = images
        .par_iter()
        .map(|(_, img)| preprocess_pipeline(img, &cfg).unwrap().image)
        .collect();
    let rows = quality_report(
        images
            .iter()
            .zip(&processed)
            .map(|((id, a), b)| (id.as_str(), a, b)),
    )
    .unwrap();
    let finite = rows.iter().all(|r| r.psnr.is_finite() && r.psnr > 0.0);
    let ok = train == 2637 && test == 660 && rows.len() >= 50 && finite;
    verdict(
        "AC-10",
        ok,
        &format!(
            "train {train}, test {test}, {} images scored, all PSNR finite and positive: {finite}, {:.1}s",
            rows.len(),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn reference_log_confusions() {
    let orig = confusion(&reference_log("reference_original.csv")).unwrap();
    let proc = confusion(&reference_log("reference_processed.csv")).unwrap();
    assert_eq!((orig.tp, orig.fp, orig.fn_, orig.tn), (10, 3, 1, 7));
    assert_eq!((proc.tp, proc.fp, proc.fn_, proc.tn), (10, 2, 1, 8));
}

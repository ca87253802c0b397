//! Corpus-level and randomized properties of the preprocessing pipeline.

use proptest::prelude::*;
use rayon::prelude::*;

use lesion_core::preprocess::{
    detect_hair_mask, filter_components, inpaint_hair, preprocess_pipeline, smooth_inpainted,
    unsharp_mask, HairMask,
};
use lesion_core::synthetic::{generate, mask_scores, SynthConfig};
use lesion_core::{Image, PreprocessConfig};

fn draw_segment(img: &mut Image, truth: &mut HairMask, a: (f64, f64), b: (f64, f64)) {
    // 2-px-wide segment: every pixel within 1 px of the centre line
    let (w, h) = img.dimensions();
    for y in 0..h {
        for x in 0..w {
            let p = (f64::from(x), f64::from(y));
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let d = ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt();
            if d <= 1.0 {
                img.set_pixel(x, y, [30, 30, 30]);
                truth.set(x, y, true);
            }
        }
    }
}

#[test]
fn detection_covers_drawn_segments() {
    let mut img = Image::filled(224, 224, [180, 180, 180]);
    let mut truth = HairMask::empty(224, 224);
    let segments = [
        ((20.0, 30.0), (120.0, 40.0)),
        ((40.0, 200.0), (90.0, 110.0)),
        ((150.0, 20.0), (160.0, 140.0)),
        ((100.0, 180.0), (210.0, 215.0)),
        ((130.0, 100.0), (200.0, 60.0)),
    ];
    for (a, b) in segments {
        draw_segment(&mut img, &mut truth, a, b);
    }
    let mask = detect_hair_mask(&img, &PreprocessConfig::default()).unwrap();
    let (recall, _) = mask_scores(&mask, &truth);
    assert!(recall >= 0.90, "recall {recall}");
}

#[test]
fn uniform_image_passes_through() {
    let img = Image::filled(40, 30, [120, 90, 200]);
    let out = preprocess_pipeline(&img, &PreprocessConfig::default()).unwrap();
    assert_eq!(out.image, img);
    assert_eq!(out.mask.count(), 0);
}

#[test]
fn corpus_mask_quality() {
    let cfg = PreprocessConfig::default();
    let synth = SynthConfig::default();
    let counts: Vec<[usize; 5]> = (0..40u64)
        .into_par_iter()
        .map(|seed| {
            let s = generate(seed, &synth);
            let sharpened = unsharp_mask(&s.hairy, &cfg).unwrap();
            let kept = filter_components(&detect_hair_mask(&sharpened, &cfg).unwrap(), &cfg);
            let out = preprocess_pipeline(&s.hairy, &cfg).unwrap();
            let hits = |m: &HairMask| {
                m.bits()
                    .iter()
                    .zip(s.hair.bits())
                    .filter(|(a, b)| **a && **b)
                    .count()
            };
            [
                s.hair.count(),
                hits(&out.mask),
                kept.count(),
                hits(&kept),
                out.mask.count(),
            ]
        })
        .collect();
    let sum = |i: usize| counts.iter().map(|c| c[i]).sum::<usize>() as f64;
    let recall = sum(1) / sum(0);
    let precision = sum(3) / sum(2);
    let dilated_precision = sum(1) / sum(4);
    println!(
        "recall {recall:.4}, precision of kept components {precision:.4}, \
         precision after dilation {dilated_precision:.4}"
    );
    assert!(recall >= 0.90, "recall {recall}");
    assert!(precision >= 0.60, "precision {precision}");
}

#[test]
fn near_idempotent_on_corpus() {
    let cfg = PreprocessConfig::default();
    let synth = SynthConfig::default();
    let (changed, total) = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let s = generate(seed, &synth);
            let once = preprocess_pipeline(&s.hairy, &cfg).unwrap().image;
            let twice = preprocess_pipeline(&once, &cfg).unwrap().image;
            let changed = once
                .as_raw()
                .chunks(3)
                .zip(twice.as_raw().chunks(3))
                .filter(|(a, b)| a.iter().zip(b.iter()).any(|(p, q)| p.abs_diff(*q) > 2))
                .count();
            (changed, once.pixel_count())
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let frac = changed as f64 / total as f64;
    assert!(
        frac < 0.01,
        "{:.3}% of pixels changed by more than 2",
        100.0 * frac
    );
}

fn arb_image() -> impl Strategy<Value = Image> {
    (8u32..40, 8u32..40).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), (w * h * 3) as usize)
            .prop_map(move |data| Image::new(w, h, data).unwrap())
    })
}

fn arb_mask_for(img: &Image, seed: u64) -> HairMask {
    let (w, h) = img.dimensions();
    let mut s = seed | 1;
    let bits = (0..w * h)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s.is_multiple_of(5)
        })
        .collect();
    HairMask::from_bits(w, h, bits).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stages_never_touch_unmasked_pixels(img in arb_image(), seed in any::<u64>()) {
        let cfg = PreprocessConfig::default();
        let mask = arb_mask_for(&img, seed);
        let inpainted = inpaint_hair(&img, &mask, &cfg).unwrap();
        let smoothed = smooth_inpainted(&inpainted, &mask, &cfg).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if !mask.get(x, y) {
                    prop_assert_eq!(inpainted.pixel(x, y), img.pixel(x, y));
                    prop_assert_eq!(smoothed.pixel(x, y), img.pixel(x, y));
                }
            }
        }
    }

    #[test]
    fn pipeline_handles_any_raster(img in arb_image()) {
        // u8 storage bounds values to [0, 255]; this checks no stage panics
        // on saturating inputs and that shapes are preserved.
        let out = preprocess_pipeline(&img, &PreprocessConfig::default()).unwrap();
        prop_assert_eq!(out.image.dimensions(), img.dimensions());
        prop_assert_eq!(out.mask.dimensions(), img.dimensions());
    }

    #[test]
    fn constant_images_have_empty_masks(w in 1u32..30, h in 1u32..30, rgb in any::<[u8; 3]>()) {
        let img = Image::filled(w, h, rgb);
        prop_assert_eq!(detect_hair_mask(&img, &PreprocessConfig::default()).unwrap().count(), 0);
    }
}

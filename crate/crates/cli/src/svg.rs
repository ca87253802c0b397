//! Minimal SVG line chart of a training curve: accuracy on the left panel,
//! cross-entropy on the right.

use std::fmt::Write as _;

use lesion_core::TrainingCurve;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const PAD: f64 = 40.0;

fn polyline(out: &mut String, pts: &[(f64, f64)], x0: f64, xmax: f64, ymax: f64, color: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| {
            let px = x0 + PAD + (x / xmax) * (PANEL_W - 2.0 * PAD);
            let py = PANEL_H - PAD - (y / ymax) * (PANEL_H - 2.0 * PAD);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    )
    .unwrap();
}

fn axes(out: &mut String, x0: f64, title: &str, ymax: f64, xmax: f64) {
    let (l, r, t, b) = (x0 + PAD, x0 + PANEL_W - PAD, PAD, PANEL_H - PAD);
    writeln!(
        out,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{l}" y="{}" font-size="12">{title}</text>"#,
        t - 10.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{ymax:.2}</text>"#,
        l - 4.0,
        t + 4.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">0</text>"#,
        l - 4.0,
        b
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{r}" y="{}" font-size="10" text-anchor="end">{xmax}</text>"#,
        b + 14.0
    )
    .unwrap();
}

/// Train series in blue, validation series in orange.
pub fn render_curve(curve: &TrainingCurve) -> String {
    let xmax = curve.points.last().map_or(1, |p| p.iteration).max(1) as f64;
    let pick = |f: &dyn Fn(&lesion_core::probe::CurvePoint) -> Option<f64>| -> Vec<(f64, f64)> {
        curve
            .points
            .iter()
            .filter_map(|p| f(p).map(|v| (p.iteration as f64, v)))
            .collect()
    };
    let train_acc = pick(&|p| Some(p.train_accuracy));
    let val_acc = pick(&|p| p.val_accuracy);
    let train_xent = pick(&|p| Some(p.train_cross_entropy));
    let val_xent = pick(&|p| p.val_cross_entropy);
    let xent_max = train_xent
        .iter()
        .chain(&val_xent)
        .map(|p| p.1)
        .fold(0.0, f64::max)
        .max(1e-9);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{PANEL_H}" font-family="sans-serif">"#,
        2.0 * PANEL_W
    )
    .unwrap();
    axes(&mut s, 0.0, "accuracy", 1.0, xmax);
    polyline(&mut s, &train_acc, 0.0, xmax, 1.0, "#1f77b4");
    polyline(&mut s, &val_acc, 0.0, xmax, 1.0, "#ff7f0e");
    axes(&mut s, PANEL_W, "cross-entropy", xent_max, xmax);
    polyline(&mut s, &train_xent, PANEL_W, xmax, xent_max, "#1f77b4");
    polyline(&mut s, &val_xent, PANEL_W, xmax, xent_max, "#ff7f0e");
    s.push_str("</svg>\n");
    s
}

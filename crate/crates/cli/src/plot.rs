//! CSV and SVG renderings of embedded paths.

use canonrep_core::skorohod::EmbeddedPath;
use std::fmt::Write as _;

/// Trajectories drawn in the SVG.
pub const MAX_TRAJECTORIES: usize = 20;

pub fn paths_csv(paths: &[EmbeddedPath], limit: usize) -> String {
    let dim = paths.first().and_then(|p| p.values.first()).map_or(0, Vec::len);
    let mut out = String::from("path,t");
    for i in 1..=dim {
        let _ = write!(out, ",F_{i}");
    }
    out.push('\n');
    for (m, p) in paths.iter().take(limit).enumerate() {
        for (t, v) in p.times.iter().zip(&p.values) {
            let _ = write!(out, "{m},{t}");
            for x in v {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
    }
    out
}

/// Static figure: `t` against the first coordinate of `F_t`.
pub fn paths_svg(paths: &[EmbeddedPath], depth: usize) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let shown = &paths[..paths.len().min(MAX_TRAJECTORIES)];
    let ys = shown.iter().flat_map(|p| p.values.iter().map(|v| v[0]));
    let (lo, hi) = ys.fold((0.0f64, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let sx = |t: f64| pad + (w - 2.0 * pad) * t / depth.max(1) as f64;
    let sy = |y: f64| h - pad - (h - 2.0 * pad) * (y - lo) / span;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{pad}" y1="{y0:.2}" x2="{x1}" y2="{y0:.2}" stroke="black"/>"#,
        y0 = sy(0.0),
        x1 = w - pad
    );
    let _ = writeln!(out, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{y1}" stroke="black"/>"#, y1 = h - pad);
    for n in 0..=depth {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y}" font-size="12" text-anchor="middle">{n}</text>"#,
            x = sx(n as f64),
            y = h - pad / 3.0
        );
    }
    let _ = writeln!(out, r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">t</text>"#, x = w / 2.0, y = h - 4.0);
    let _ = writeln!(out, r#"<text x="12" y="{y}" font-size="12">F</text>"#, y = h / 2.0);
    for (i, p) in shown.iter().enumerate() {
        let hue = (i * 360) / MAX_TRAJECTORIES;
        let pts: Vec<String> = p
            .times
            .iter()
            .zip(&p.values)
            .map(|(t, v)| format!("{:.2},{:.2}", sx(*t), sy(v[0])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="hsl({hue},70%,45%)" stroke-width="1.2" points="{}"/>"#,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

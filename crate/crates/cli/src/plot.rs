//! Static SVG line and bar charts, written by hand: overlays of ground
//! truth / corrupted / reconstruction, loss traces, and mean-SNR bars.

use std::path::Path;

use rinst_core::error::Result;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str) -> Canvas {
        let mut body = String::new();
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
             text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            esc(title)
        ));
        Canvas { body }
    }

    fn axes(&mut self) {
        self.body.push_str(&format!(
            "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#444\"/>\n\
             <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"#444\"/>\n",
            m = MARGIN,
            r = WIDTH - MARGIN,
            t = MARGIN,
            b = HEIGHT - MARGIN
        ));
    }

    fn finish(mut self, path: &Path) -> Result<()> {
        self.body.push_str("</svg>\n");
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.body)?;
        Ok(())
    }
}

fn polyline(canvas: &mut Canvas, xs: &[f64], ys: &[f64], lo: f64, hi: f64, color: &str) {
    let span = (hi - lo).max(1e-12);
    let n = xs.len().max(2) as f64;
    let mut points = String::new();
    for (i, &y) in ys.iter().enumerate() {
        let px = MARGIN + (WIDTH - 2.0 * MARGIN) * xs[i] / (n - 1.0);
        let py = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * ((y - lo) / span).clamp(0.0, 1.0);
        points.push_str(&format!("{px:.2},{py:.2} "));
    }
    canvas.body.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{points}\"/>\n"
    ));
}

fn legend(canvas: &mut Canvas, entries: &[(&str, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        canvas.body.push_str(&format!(
            "<rect x=\"{x}\" y=\"{ry}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            esc(label),
            x = WIDTH - MARGIN - 150.0,
            ry = y - 4.0,
            tx = WIDTH - MARGIN - 132.0,
            ty = y
        ));
    }
}

/// Ground truth / observation / reconstruction overlay. Series whose
/// length differs from the truth (e.g. compressed measurements) are
/// skipped.
pub fn overlay_svg(
    path: &Path,
    title: &str,
    truth: &[f64],
    observed: Option<&[f64]>,
    estimate: &[f64],
) -> Result<()> {
    let mut canvas = Canvas::new(title);
    canvas.axes();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut series: Vec<(&[f64], &str, &str)> = Vec::new();
    series.push((truth, "#222222", "ground truth"));
    if let Some(obs) = observed {
        if obs.len() == truth.len() {
            series.push((obs, "#d08080", "observed"));
        }
    }
    series.push((estimate, "#2060c0", "reconstruction"));
    for (data, _, _) in &series {
        for &v in *data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let xs: Vec<f64> = (0..truth.len()).map(|i| i as f64).collect();
    // draw the observation underneath the cleaner curves
    for (data, color, _) in series.iter().rev() {
        polyline(&mut canvas, &xs, data, lo, hi, color);
    }
    legend(
        &mut canvas,
        &series.iter().map(|(_, c, l)| (*l, *c)).collect::<Vec<_>>(),
    );
    canvas.finish(path)
}

/// Per-iteration loss trace on a log scale.
pub fn trace_svg(path: &Path, title: &str, trace: &[f64]) -> Result<()> {
    let mut canvas = Canvas::new(title);
    canvas.axes();
    let logs: Vec<f64> = trace.iter().map(|&v| v.max(1e-12).log10()).collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = (0..logs.len()).map(|i| i as f64).collect();
    polyline(&mut canvas, &xs, &logs, lo, hi, "#2060c0");
    legend(&mut canvas, &[("log10 loss", "#2060c0")]);
    canvas.finish(path)
}

/// Bar chart of labelled values (e.g. mean SNR per method).
pub fn bars_svg(path: &Path, title: &str, labels: &[String], values: &[f64]) -> Result<()> {
    let mut canvas = Canvas::new(title);
    canvas.axes();
    let lo = values.iter().cloned().fold(0.0f64, f64::min);
    let hi = values.iter().cloned().fold(0.0f64, f64::max).max(lo + 1e-9);
    let span = hi - lo;
    let n = values.len().max(1) as f64;
    let slot = (WIDTH - 2.0 * MARGIN) / n;
    let bar_w = slot * 0.6;
    let zero_y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * ((0.0 - lo) / span).clamp(0.0, 1.0);
    for (i, (&v, label)) in values.iter().zip(labels).enumerate() {
        let x = MARGIN + slot * i as f64 + (slot - bar_w) / 2.0;
        let vy = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * ((v - lo) / span).clamp(0.0, 1.0);
        let (top, h) = if v >= 0.0 { (vy, zero_y - vy) } else { (zero_y, vy - zero_y) };
        canvas.body.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{bar_w:.2}\" height=\"{:.2}\" fill=\"#4878b8\"/>\n\
             <text x=\"{cx:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n\
             <text x=\"{cx:.2}\" y=\"{vy2:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{v:.2}</text>\n",
            h.max(0.5),
            esc(label),
            cx = x + bar_w / 2.0,
            ly = HEIGHT - MARGIN + 16.0,
            vy2 = top - 4.0,
        ));
    }
    canvas.finish(path)
}

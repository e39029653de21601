//! Plot data for an [`AnalysisReport`] as CSV files with a one-line header,
//! plus plain SVG renderings of the scatter and sweep plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::difficulty::Formulation;
use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, SweepRow};

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn stem(f: Formulation) -> String {
    f.short().to_ascii_lowercase()
}

/// `(file name, contents)` pairs in a fixed order.
pub fn report_files(report: &AnalysisReport, svg: bool) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mts = report.ids.movement_times();
    for f in Formulation::ALL {
        let ids = report.ids.column(f);
        let predicted = report.predicted_mt(f);
        files.push((
            format!("regression_{}.csv", stem(f)),
            csv_text(
                &["id_bits", "mt_s", "predicted_mt_s"],
                ids.iter()
                    .zip(&mts)
                    .zip(&predicted)
                    .map(|((i, m), p)| vec![num(*i), num(*m), num(*p)]),
            ),
        ));
        files.push((
            format!("throughput_{}.csv", stem(f)),
            csv_text(
                &["id_bits", "tp_bits_per_s"],
                ids.iter().zip(&mts).map(|(i, m)| vec![num(*i), num(i / m)]),
            ),
        ));
        if svg {
            let fit = &report.formulation(f).regression;
            files.push((
                format!("regression_{}.svg", stem(f)),
                scatter_svg(
                    &format!("MT vs {f} (R² = {:.4})", fit.r_squared),
                    &format!("{f} (bits)"),
                    "MT (s)",
                    &ids,
                    &mts,
                    Some((fit.intercept, fit.slope)),
                ),
            ));
        }
    }
    for (f, h) in &report.histograms {
        files.push((
            format!("histogram_{}.csv", stem(*f)),
            csv_text(
                &["bin_lo", "bin_hi", "count"],
                h.edges
                    .windows(2)
                    .zip(&h.counts)
                    .map(|(e, c)| vec![num(e[0]), num(e[1]), c.to_string()]),
            ),
        ));
    }
    let ta = report.predicted_mt(Formulation::Ta);
    let tsa = report.predicted_mt(Formulation::Tsa);
    files.push((
        "temporal_factor.csv".into(),
        csv_text(
            &["mt_s", "t", "predicted_mt_ta_s", "predicted_mt_tsa_s"],
            report
                .ids
                .rows
                .iter()
                .zip(ta.iter().zip(&tsa))
                .map(|(r, (a, b))| vec![num(r.mt_s), num(r.t), num(*a), num(*b)]),
        ),
    ));
    files.push((
        "predicted_mt_boxplot.csv".into(),
        csv_text(
            &[
                "series",
                "min",
                "q1",
                "median",
                "q3",
                "max",
                "lower_whisker",
                "upper_whisker",
                "outliers_low",
                "outliers_high",
            ],
            report.boxplots.iter().map(|b| {
                let s = b.stats;
                vec![
                    b.series.clone(),
                    num(s.min),
                    num(s.q1),
                    num(s.median),
                    num(s.q3),
                    num(s.max),
                    num(s.lower_whisker),
                    num(s.upper_whisker),
                    s.outliers_low.to_string(),
                    s.outliers_high.to_string(),
                ]
            }),
        ),
    ));
    files
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    csv_text(
        &["sd_multiplier", "accepted", "r2_na", "r2_sa", "r2_ta", "r2_tsa", "flag"],
        rows.iter().map(|r| {
            let mut cells = vec![num(r.sd_multiplier), r.accepted.to_string()];
            match r.r_squared {
                Some(r2) => cells.extend(r2.iter().map(|v| num(*v))),
                None => cells.extend(std::iter::repeat_n(String::new(), 4)),
            }
            cells.push(r.flag.clone().unwrap_or_default());
            cells
        }),
    )
}

/// Writes `(name, contents)` pairs into `dir`, creating it if needed.
pub fn write_files(dir: impl AsRef<Path>, files: &[(String, String)]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo < hi) {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(xs);
        let (y0, y1) = range(ys);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>
<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
<text x="{MARGIN}" y="{}" text-anchor="middle">{:.3}</text>
<text x="{}" y="{}" text-anchor="middle">{:.3}</text>
<text x="{}" y="{}" text-anchor="end">{:.3}</text>
<text x="{}" y="{}" text-anchor="end">{:.3}</text>
"##,
        W / 2.0,
        escape(title),
        H - MARGIN,
        W - MARGIN,
        H - MARGIN,
        H - MARGIN,
        W / 2.0,
        H - 12.0,
        escape(x_label),
        H / 2.0,
        H / 2.0,
        escape(y_label),
        H - MARGIN + 16.0,
        frame.x0,
        W - MARGIN,
        H - MARGIN + 16.0,
        frame.x1,
        MARGIN - 4.0,
        H - MARGIN,
        frame.y0,
        MARGIN - 4.0,
        MARGIN + 4.0,
        frame.y1,
    );
    s
}

/// Scatter plot with an optional fitted line `y = a + b·x`.
pub fn scatter_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    line: Option<(f64, f64)>,
) -> String {
    let frame = Frame::fit(xs, ys);
    let mut s = svg_open(title, x_label, y_label, &frame);
    s.push_str("<g fill=\"steelblue\" fill-opacity=\"0.35\">\n");
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.6\"/>",
            frame.px(*x),
            frame.py(*y)
        );
    }
    s.push_str("</g>\n");
    if let Some((a, b)) = line {
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"crimson\" stroke-width=\"2\"/>",
            frame.px(frame.x0),
            frame.py(a + b * frame.x0),
            frame.px(frame.x1),
            frame.py(a + b * frame.x1)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Line chart of R² against the SD multiplier, one series per formulation.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let pts: Vec<(f64, [f64; 4])> = rows
        .iter()
        .filter_map(|r| r.r_squared.map(|r2| (r.sd_multiplier, r2)))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = pts.iter().flat_map(|p| p.1).collect();
    ys.extend([0.0, 1.0]);
    let frame = Frame::fit(&xs, &ys);
    let mut s = svg_open("R² vs SD multiplier", "SD multiplier", "R²", &frame);
    let colors = ["gray", "olive", "steelblue", "crimson"];
    for f in Formulation::ALL {
        let path: Vec<String> = pts
            .iter()
            .map(|(k, r2)| format!("{:.2},{:.2}", frame.px(*k), frame.py(r2[f as usize])))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            colors[f as usize],
            path.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{}\">{f}</text>",
            W - MARGIN + 4.0 - 50.0,
            MARGIN + 16.0 * f as usize as f64,
            colors[f as usize]
        );
    }
    s.push_str("</svg>\n");
    s
}

//! Self-contained SVG views of the report tables. Plots read the CSVs back
//! rather than in-memory results, and each mark's `<title>` carries the
//! CSV fields it was drawn from.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{create, finish};

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotSummary {
    pub written: Vec<PathBuf>,
    /// Tables that were expected but absent; their plots were skipped.
    pub missing: Vec<PathBuf>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Schema(format!("{}: {other:?}", path.display())),
        })?;
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("table has no `{name}` column")))
    }

    /// Rows whose listed columns all parse as numbers, with their raw text.
    fn numeric(&self, names: &[&str]) -> Result<Vec<(Vec<f64>, Vec<String>)>> {
        let idx: Vec<usize> = names.iter().map(|n| self.col(n)).collect::<Result<_>>()?;
        Ok(self
            .rows
            .iter()
            .filter_map(|r| {
                let raw: Vec<String> = idx.iter().map(|&i| r[i].clone()).collect();
                let vals: Option<Vec<f64>> = raw.iter().map(|s| s.parse().ok()).collect();
                vals.map(|v| (v, raw))
            })
            .collect())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Axes { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn svg_open(title: &str, x_label: &str, y_label: &str, axes: &Axes) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (PAD, W - PAD, PAD, H - PAD);
    let _ = writeln!(s, r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (axes.x0, "start", l, b + 16.0),
        (axes.x1, "end", r, b + 16.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, short(v));
    }
    for (v, y) in [(axes.y0, b), (axes.y1, t + 4.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, l - 4.0, short(v));
    }
    s
}

fn short(v: f64) -> String {
    format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
}

fn title_tag(header: &[&str], raw: &[String]) -> String {
    let parts: Vec<String> = header.iter().zip(raw).map(|(h, v)| format!("{h}={v}")).collect();
    format!("<title>{}</title>", escape(&parts.join(", ")))
}

fn histogram_svg(t: &Table) -> Result<String> {
    let names = ["bin_start", "bin_end", "count"];
    let rows = t.numeric(&names)?;
    let axes = Axes::new(
        rows.iter().flat_map(|(v, _)| [v[0], v[1]]),
        rows.iter().map(|(v, _)| v[2]).chain([0.0]),
    );
    let mut s = svg_open("Reproduction time of reproduced papers", "days", "papers", &axes);
    for (v, raw) in &rows {
        let (x0, x1) = (axes.px(v[0]), axes.px(v[1]));
        let (y, base) = (axes.py(v[2]), axes.py(0.0));
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#4a7ab5" stroke="white">{}</rect>"##,
            (x1 - x0).max(0.0),
            (base - y).max(0.0),
            title_tag(&names, raw)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn km_svg(t: &Table) -> Result<String> {
    let names = ["time", "survival", "at_risk", "events"];
    let rows = t.numeric(&names)?;
    let axes = Axes::new(rows.iter().map(|(v, _)| v[0]).chain([0.0]), [0.0, 1.0].into_iter());
    let mut s = svg_open("Kaplan-Meier estimate", "days", "fraction not yet reproduced", &axes);
    let mut d = format!("M{:.2},{:.2}", axes.px(0.0), axes.py(1.0));
    let mut prev = 1.0;
    for (v, _) in &rows {
        let x = axes.px(v[0]);
        let _ = write!(d, " L{x:.2},{:.2} L{x:.2},{:.2}", axes.py(prev), axes.py(v[1]));
        prev = v[1];
    }
    let _ = writeln!(s, r##"<path d="{d}" fill="none" stroke="#b5442a" stroke-width="1.5"/>"##);
    for (v, raw) in &rows {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#b5442a">{}</circle>"##,
            axes.px(v[0]),
            axes.py(v[1]),
            title_tag(&names, raw)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn summary_svg(t: &Table) -> Result<String> {
    let names = ["mean_abs_shap", "q05", "q95"];
    let rows = t.numeric(&names)?;
    let fcol = t.col("feature")?;
    let labels: Vec<&str> = t.rows.iter().map(|r| r[fcol].as_str()).collect();
    let lo = rows.iter().map(|(v, _)| v[1]).fold(0.0, f64::min);
    let hi = rows.iter().map(|(v, _)| v[0].max(v[2])).fold(0.0, f64::max);
    let n = rows.len().max(1);
    let height = (PAD * 2.0 + 18.0 * n as f64).max(H);
    let left = 260.0;
    let scale = |v: f64| left + (v - lo) / (hi - lo).max(f64::MIN_POSITIVE) * (W - left - 24.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">Mean |SHAP| (bars) and 5-95% range (lines), log-hazard units</text>"#, W / 2.0);
    for (k, ((v, raw), label)) in rows.iter().zip(&labels).enumerate() {
        let y = PAD + 18.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 10.0, escape(label));
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="12" fill="#4a7ab5">{}</rect>"##,
            scale(0.0),
            (scale(v[0]) - scale(0.0)).max(0.0),
            title_tag(&names, raw)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="black"/>"#,
            scale(v[1]),
            scale(v[2]),
            y + 6.0,
            y + 6.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn dependence_svg(t: &Table, feature: &str) -> Result<String> {
    let names = ["feature_value", "shap", "color_value"];
    let rows = t.numeric(&names)?;
    let axes = Axes::new(rows.iter().map(|(v, _)| v[0]), rows.iter().map(|(v, _)| v[1]));
    let (c0, c1) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (v, _)| (a.min(v[2]), b.max(v[2])));
    let mut s = svg_open(&format!("SHAP dependence: {feature}"), feature, "SHAP value (log-hazard)", &axes);
    for (v, raw) in &rows {
        let c = if c1 > c0 { (v[2] - c0) / (c1 - c0) } else { 0.5 };
        let (r, b) = ((40.0 + 200.0 * c) as u8, (240.0 - 200.0 * c) as u8);
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="rgb({r},60,{b})" fill-opacity="0.8">{}</circle>"#,
            axes.px(v[0]),
            axes.py(v[1]),
            title_tag(&names, raw)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn write_svg(path: &Path, body: &str, summary: &mut PlotSummary) -> Result<()> {
    let mut w = create(path)?;
    std::io::Write::write_all(&mut w, body.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(w, path)?;
    summary.written.push(path.to_path_buf());
    Ok(())
}

/// Renders every known table found under `dir` into `dir/plots`. Absent
/// tables are listed in [`PlotSummary::missing`]; malformed ones are errors.
pub fn emit_plots(dir: &Path) -> Result<PlotSummary> {
    let mut summary = PlotSummary::default();
    let plots = dir.join("plots");
    type Render = fn(&Table) -> Result<String>;
    let fixed: [(&str, &str, Render); 3] = [
        ("duration_histogram.csv", "duration_histogram.svg", histogram_svg),
        ("km_curve.csv", "km_curve.svg", km_svg),
        ("shap_summary.csv", "shap_summary.svg", summary_svg),
    ];
    for (table, svg, render) in fixed {
        let path = dir.join(table);
        if !path.exists() {
            summary.missing.push(path);
            continue;
        }
        write_svg(&plots.join(svg), &render(&Table::read(&path)?)?, &mut summary)?;
    }
    let dep_dir = dir.join("shap_dependence");
    let mut deps: Vec<PathBuf> = match std::fs::read_dir(&dep_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => {
            summary.missing.push(dep_dir.clone());
            Vec::new()
        }
    };
    deps.sort();
    for path in deps {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("feature").to_string();
        let svg = dependence_svg(&Table::read(&path)?, &stem.replace('_', " "))?;
        write_svg(&plots.join("shap_dependence").join(format!("{stem}.svg")), &svg, &mut summary)?;
    }
    Ok(summary)
}

//! File output shared by the command-line tools: CSV tables, two-column
//! plot data and a minimal SVG line plot.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Header line plus one row per record, newline terminated.
pub fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Two whitespace-separated columns with a `#` comment header.
pub fn plot_data(x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("# {x_label} {y_label}\n");
    for (x, y) in points {
        let _ = writeln!(out, "{x:.17e} {y:.17e}");
    }
    out
}

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// One polyline of an [`svg_plot`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl PlotOptions {
    pub fn log_log(title: &str, x_label: &str, y_label: &str) -> Self {
        PlotOptions {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: true,
            log_y: true,
            width: 640.0,
            height: 420.0,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot with markers, axis ticks at the data range ends and a legend.
///
/// Points that cannot be shown on a logarithmic axis are rejected.
pub fn svg_plot(series: &[Series], opts: &PlotOptions) -> Result<String> {
    let tx = |x: f64| if opts.log_x { x.log10() } else { x };
    let ty = |y: f64| if opts.log_y { y.log10() } else { y };
    let mut bounds = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) || (opts.log_x && x <= 0.0) || (opts.log_y && y <= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "point ({x}, {y}) of '{}' cannot be plotted",
                    s.label
                )));
            }
            let (u, v) = (tx(x), ty(y));
            bounds = (bounds.0.min(u), bounds.1.max(u), bounds.2.min(v), bounds.3.max(v));
        }
    }
    if !bounds.0.is_finite() {
        return Err(Error::InvalidInput("nothing to plot".into()));
    }
    let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (x0, x1) = pad(bounds.0, bounds.1);
    let (y0, y1) = pad(bounds.2, bounds.3);
    let (w, h) = (opts.width, opts.height);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let px = |u: f64| left + (u - x0) / (x1 - x0) * (w - left - right);
    let py = |v: f64| h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom);
    let tick = |v: f64, log: bool| {
        if log {
            format!("{:.3e}", 10f64.powf(v))
        } else {
            format!("{v:.3e}")
        }
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#,
        l = left,
        t = top,
        b = h - bottom,
        r = w - right
    );
    for (u, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
            px(u),
            h - bottom + 16.0,
            tick(u, opts.log_x)
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 4.0,
            py(v) + 4.0,
            tick(v, opts.log_y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + w - right) / 2.0,
        h - 12.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&opts.y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2} {:.2} ",
                if j == 0 { "M" } else { "L" },
                px(tx(x)),
                py(ty(y))
            );
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(tx(x)),
                py(ty(y))
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
            left + 10.0,
            top + 14.0 * (i as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

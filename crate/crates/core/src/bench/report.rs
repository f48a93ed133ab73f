use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::BenchReport;
use crate::error::{Error, Result};
use crate::metrics::format_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" | "txt" => Ok(ReportFormat::Text),
            _ => Err(Error::Config(format!("unknown report format `{s}`"))),
        }
    }
}

/// Column order of the CSV rendering; one row per run.
pub const CSV_HEADER: &str = "storage,resample,quantize_order,n_trees,seed,train_rows,test_rows,\
matrix_bytes,overflow_cells,fit_cpu_seconds,fit_wall_seconds,predict_cpu_seconds,\
predict_wall_seconds,tp,fp,fn,tn,accuracy,precision_fraud,recall_fraud,f1,roc_auc";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn csv_row(r: &BenchReport) -> String {
    let c = &r.config;
    [
        c.precision.to_string(),
        c.resample.to_string(),
        c.quantize_order.name().to_string(),
        c.forest.n_trees.to_string(),
        c.forest.seed.to_string(),
        r.train_rows.to_string(),
        r.test_rows.to_string(),
        r.matrix_bytes.to_string(),
        r.overflow_cells.to_string(),
        r.timing.fit_cpu_seconds.to_string(),
        r.timing.fit_wall_seconds.to_string(),
        r.timing.predict_cpu_seconds.to_string(),
        r.timing.predict_wall_seconds.to_string(),
        r.confusion.tp.to_string(),
        r.confusion.fp.to_string(),
        r.confusion.fn_.to_string(),
        r.confusion.tn.to_string(),
        cell(r.metrics.accuracy),
        cell(r.metrics.precision),
        cell(r.metrics.recall),
        cell(r.metrics.f1),
        cell(r.roc_auc),
    ]
    .join(",")
}

fn text(r: &BenchReport) -> String {
    let m = &r.metrics;
    let pair = |v: [Option<f64>; 2]| {
        let show = |x: Option<f64>| x.map_or("—".to_string(), |x| format!("{x:.8}"));
        format!("[{} {}]", show(v[0]), show(v[1]))
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Random Forest Classifier ({}, {})",
        r.config.precision, r.config.resample
    );
    let _ = writeln!(s);
    let acc = m.accuracy.map_or("—".to_string(), |a| format!("{a:.9}"));
    let _ = writeln!(s, "Accuracy\t{acc}");
    let _ = writeln!(s, "Precision\t{}", pair(m.per_class_precision));
    let _ = writeln!(s, "Recall\t\t{}", pair(m.per_class_recall));
    let auc = r.roc_auc.map_or("—".to_string(), |a| format!("{a}"));
    let _ = writeln!(s, "AUC\t\t{auc}");
    let _ = writeln!(s);
    let c = &r.confusion;
    let _ = writeln!(s, "Confusion matrix (actual rows, predicted columns)");
    let _ = writeln!(s, "{:>12}{:>12}{:>12}", "", "Not Fraud", "Fraud");
    let _ = writeln!(s, "{:>12}{:>12}{:>12}", "Not Fraud", c.tn, c.fp);
    let _ = writeln!(s, "{:>12}{:>12}{:>12}", "Fraud", c.fn_, c.tp);
    let _ = writeln!(s);
    s.push_str(&format_table(c, m));
    let _ = writeln!(s);
    let t = &r.timing;
    let _ = writeln!(
        s,
        "fit      {:.3} s cpu, {:.3} s wall (median of {})",
        t.fit_cpu_seconds,
        t.fit_wall_seconds,
        t.fit_cpu_samples.len()
    );
    let _ = writeln!(
        s,
        "predict  {:.3} s cpu, {:.3} s wall",
        t.predict_cpu_seconds, t.predict_wall_seconds
    );
    let _ = writeln!(s, "matrix   {} bytes", r.matrix_bytes);
    s
}

pub fn render_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Csv => format!("{CSV_HEADER}\n{}\n", csv_row(report)),
        ReportFormat::Text => text(report),
    })
}

pub fn emit_report(report: &BenchReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}

/// One bar of the timing chart, in SVG user units.
#[derive(Clone, Debug, PartialEq)]
pub struct Bar {
    pub label: String,
    pub seconds: f64,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

const PLOT_TOP: f64 = 40.0;
const PLOT_HEIGHT: f64 = 300.0;
const BAR_WIDTH: f64 = 48.0;
const BAR_GAP: f64 = 12.0;
const GROUP_GAP: f64 = 36.0;
const LEFT: f64 = 60.0;

/// Layout of the fit-time chart: bars grouped by resampling mode, one per
/// (precision, resample) pair, height proportional to median fit CPU time.
pub fn chart_bars(reports: &[BenchReport]) -> Result<Vec<Bar>> {
    if reports.is_empty() {
        return Err(Error::EmptyChart);
    }
    let mut groups: Vec<String> = Vec::new();
    for r in reports {
        let g = r.config.resample.to_string();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let max = reports
        .iter()
        .map(|r| r.timing.fit_cpu_seconds)
        .fold(0.0f64, f64::max);
    let mut bars = Vec::new();
    let mut x = LEFT;
    for g in &groups {
        for r in reports.iter().filter(|r| &r.config.resample.to_string() == g) {
            let seconds = r.timing.fit_cpu_seconds;
            let height = if max > 0.0 {
                seconds / max * PLOT_HEIGHT
            } else {
                0.0
            };
            bars.push(Bar {
                label: r.label(),
                seconds,
                x,
                y: PLOT_TOP + PLOT_HEIGHT - height,
                width: BAR_WIDTH,
                height,
            });
            x += BAR_WIDTH + BAR_GAP;
        }
        x += GROUP_GAP;
    }
    Ok(bars)
}

fn color(label: &str) -> &'static str {
    match label.split('/').next() {
        Some("single32") => "#4c72b0",
        Some("half16") => "#dd8452",
        Some("brain16") => "#55a868",
        _ => "#8172b2",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static SVG bar chart of median fit CPU time per run.
pub fn render_timing_chart(reports: &[BenchReport]) -> Result<String> {
    let bars = chart_bars(reports)?;
    let width = bars.last().map_or(0.0, |b| b.x + b.width) + LEFT;
    let height = PLOT_TOP + PLOT_HEIGHT + 70.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">CPU execution time, training</text>"#,
        width / 2.0
    );
    let base = PLOT_TOP + PLOT_HEIGHT;
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{base}" x2="{}" y2="{base}" stroke="#333"/>"##,
        LEFT - 10.0,
        width - LEFT + 10.0
    );
    for b in &bars {
        let cx = b.x + b.width / 2.0;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            b.x,
            b.y,
            b.width,
            b.height,
            color(&b.label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" text-anchor="middle">{:.2} s</text>"#,
            b.y - 4.0,
            b.seconds
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" text-anchor="end" transform="rotate(-30 {cx} {})">{}</text>"#,
            base + 16.0,
            base + 16.0,
            escape(&b.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_timing_chart(reports: &[BenchReport], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_timing_chart(reports)?)?;
    Ok(())
}

use super::compare::{Comparison, Metric};
use super::metrics::MetricsReport;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Bars are clipped at this magnitude of percent change and marked.
pub const PCT_CLIP: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to report: {0}")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Six significant digits, plain notation where reasonable.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..=9).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut s = String::from("Target,mae_mean,mae_std,rmse_mean,rmse_std,r2_mean,r2_std\n");
    for t in &report.tasks {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            csv_field(&t.target),
            format_sig(t.mae_mean),
            format_sig(t.mae_std),
            format_sig(t.rmse_mean),
            format_sig(t.rmse_std),
            opt(t.r2_mean),
            opt(t.r2_std)
        );
    }
    s
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut s = String::from("task,metric,ref_value,new_value,pct_change,better\n");
    for r in &c.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&r.task),
            r.metric.name(),
            opt(r.ref_value),
            opt(r.new_value),
            opt(r.pct_change),
            r.better
        );
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

const METRIC_COLORS: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#8172b3"];

/// Grouped bar chart of percent change, one group per task and one bar per metric.
pub fn comparison_svg(c: &Comparison) -> String {
    let tasks = c.tasks();
    let (bar_w, gap, left, top, plot_h) = (14.0, 18.0, 60.0, 40.0, 300.0);
    let group_w = 4.0 * bar_w + gap;
    let width = left + group_w * tasks.len() as f64 + 20.0;
    let height = top + plot_h + 90.0;
    let zero_y = top + plot_h / 2.0;
    let scale = (plot_h / 2.0) / PCT_CLIP;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<title>{}</title>"#,
        xml_escape(&format!("% change of {} relative to {}", c.new_mode, c.ref_mode))
    );
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="20" font-size="12">{}</text>"#,
        xml_escape(&format!("{} vs {} (%), {}", c.new_mode, c.ref_mode, c.summary_line()))
    );
    for (ti, task) in tasks.iter().enumerate() {
        let gx = left + ti as f64 * group_w;
        for (mi, metric) in Metric::ALL.iter().enumerate() {
            let row = c
                .rows
                .iter()
                .find(|r| r.task == *task && r.metric == *metric)
                .expect("every task has every metric");
            let pct = row.pct_change.unwrap_or(0.0);
            let clipped = pct.abs() > PCT_CLIP;
            let shown = pct.clamp(-PCT_CLIP, PCT_CLIP);
            let h = shown.abs() * scale;
            // Positive change is drawn upward.
            let y = if shown >= 0.0 { zero_y - h } else { zero_y };
            let x = gx + mi as f64 * bar_w;
            let status = if row.pct_change.is_none() {
                "undefined"
            } else if row.better {
                "improved"
            } else {
                "worse"
            };
            let stroke = if row.better { r##" stroke="#000" stroke-width="1.5""## } else { "" };
            let _ = writeln!(
                s,
                r#"<rect class="bar {status}" data-task="{}" data-metric="{}" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{}"{stroke}/>"#,
                xml_escape(task),
                metric.name(),
                bar_w - 2.0,
                METRIC_COLORS[mi]
            );
            if clipped {
                let my = if shown > 0.0 { y - 4.0 } else { y + h + 10.0 };
                let _ = writeln!(
                    s,
                    r#"<text class="clipped" x="{:.2}" y="{my:.2}" font-size="9">^</text>"#,
                    x + 2.0
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" transform="rotate(45 {:.2} {:.2})">{}</text>"#,
            gx,
            top + plot_h + 14.0,
            gx,
            top + plot_h + 14.0,
            xml_escape(task)
        );
    }
    let _ = writeln!(
        s,
        r##"<line class="zero" x1="{left}" y1="{zero_y}" x2="{:.2}" y2="{zero_y}" stroke="#333" stroke-dasharray="4 3"/>"##,
        width - 20.0
    );
    for (mi, metric) in Metric::ALL.iter().enumerate() {
        let lx = left + mi as f64 * 110.0;
        let ly = height - 14.0;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{lx}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{ly}" font-size="10">{}</text>"#,
            ly - 9.0,
            METRIC_COLORS[mi],
            lx + 14.0,
            metric.name()
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes metrics tables, comparison tables, charts and `summary.txt`.
/// Everything is rendered before the first file is written.
pub fn emit_report(
    comparisons: &[Comparison],
    metrics: &[MetricsReport],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if comparisons.is_empty() {
        return Err(ReportError::EmptyInput("no comparisons"));
    }
    if metrics.is_empty() {
        return Err(ReportError::EmptyInput("no metrics"));
    }
    if comparisons.iter().any(|c| c.rows.is_empty()) || metrics.iter().any(|m| m.tasks.is_empty()) {
        return Err(ReportError::EmptyInput("a report has no tasks"));
    }
    let mut files: Vec<(String, String)> = Vec::new();
    for m in metrics {
        files.push((format!("metrics_{}.csv", m.mode), metrics_csv(m)));
    }
    let mut summary = String::new();
    for c in comparisons {
        let stem = format!("compare_{}_vs_{}", c.ref_mode, c.new_mode);
        files.push((format!("{stem}.csv"), comparison_csv(c)));
        files.push((format!("{stem}.svg"), comparison_svg(c)));
        let _ = writeln!(summary, "{} vs {}: {}", c.new_mode, c.ref_mode, c.summary_line());
    }
    files.push(("summary.txt".into(), summary));

    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

//! Result emission: a flat CSV, a full JSON dump (re-renderable), and a
//! self-contained SVG of accuracy against context size. All three renders
//! are deterministic, so re-emission is byte-identical.

use std::path::Path;

use super::{ExperimentError, ResultRow, ResultTable, RowStatus};

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const CURVES_SVG: &str = "curves.svg";

const CSV_HEADER: &str =
    "strategy,k,n_scored,n_discarded,n_transport,accuracy,ci_low,ci_high,status";

fn opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn render_results_csv(table: &ResultTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let status = match row.status {
            RowStatus::Ok => "ok",
            RowStatus::Skipped => "skipped",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.strategy,
            row.k,
            row.n_scored,
            row.n_discarded,
            row.n_transport,
            opt(row.accuracy),
            opt(row.ci_low),
            opt(row.ci_high),
            status
        ));
    }
    out
}

pub fn render_results_json(table: &ResultTable) -> String {
    let mut out = serde_json::to_string_pretty(table).expect("table serializes");
    out.push('\n');
    out
}

const PALETTE: [&str; 6] = [
    "#1b6ca8", "#d1495b", "#2e8b57", "#e08e29", "#6a4c93", "#3b3b3b",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Accuracy-vs-k curves, one per strategy, with shaded confidence bands.
pub fn render_curves_svg(table: &ResultTable) -> String {
    let ks = &table.metadata.k_values;
    let k_min = ks.iter().copied().min().unwrap_or(0) as f64;
    let k_max = ks.iter().copied().max().unwrap_or(1) as f64;
    let k_span = (k_max - k_min).max(1.0);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |k: f64| MARGIN_LEFT + (k - k_min) / k_span * plot_w;
    let y = |a: f64| MARGIN_TOP + (1.0 - a) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" \
         viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );

    // Axes and gridlines.
    for tick in 0..=4 {
        let a = tick as f64 * 0.25;
        let py = y(a);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" \
             stroke=\"#dddddd\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{a:.2}</text>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 6.0,
            py + 4.0
        ));
    }
    for &k in ks {
        let px = x(k as f64);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{k}</text>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 16.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">prior fixations k</text>\n\
         <text x=\"14.00\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14.00 {:.2})\">accuracy</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // One curve per strategy, in first-appearance order.
    let mut strategies: Vec<&str> = Vec::new();
    for row in &table.rows {
        if !strategies.contains(&row.strategy.as_str()) {
            strategies.push(&row.strategy);
        }
    }
    for (index, strategy) in strategies.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let points: Vec<&ResultRow> = table
            .rows
            .iter()
            .filter(|r| r.strategy == *strategy && r.accuracy.is_some())
            .collect();
        if points.len() >= 2 {
            let mut band = String::new();
            for row in &points {
                band.push_str(&format!(
                    "{:.2},{:.2} ",
                    x(row.k as f64),
                    y(row.ci_high.unwrap_or_else(|| row.accuracy.unwrap()))
                ));
            }
            for row in points.iter().rev() {
                band.push_str(&format!(
                    "{:.2},{:.2} ",
                    x(row.k as f64),
                    y(row.ci_low.unwrap_or_else(|| row.accuracy.unwrap()))
                ));
            }
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
                band.trim_end()
            ));
            let line: Vec<String> = points
                .iter()
                .map(|row| format!("{:.2},{:.2}", x(row.k as f64), y(row.accuracy.unwrap())))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                line.join(" ")
            ));
        }
        for row in &points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                x(row.k as f64),
                y(row.accuracy.unwrap())
            ));
        }
        // Legend entry.
        let ly = MARGIN_TOP + 8.0 + index as f64 * 18.0;
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\">{strategy}</text>\n",
            WIDTH - MARGIN_RIGHT + 16.0,
            ly - 10.0,
            WIDTH - MARGIN_RIGHT + 34.0,
            ly
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes results.csv, results.json and curves.svg under `out_dir`.
pub fn emit_results(table: &ResultTable, out_dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(RESULTS_CSV), render_results_csv(table))?;
    std::fs::write(out_dir.join(RESULTS_JSON), render_results_json(table))?;
    std::fs::write(out_dir.join(CURVES_SVG), render_curves_svg(table))?;
    Ok(())
}

//! CSV tables, a markdown summary and an SVG chart of a simulated run.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::Config;
use crate::harness::{
    run_fusion_table, run_modality_experiment, FusionRun, ItemResult, Modality, ModalityTable,
    DEFAULT_BLOCKS, DEFAULT_BLOCK_SIZE, DEFAULT_PER_REPETITION, DEFAULT_REPETITIONS,
};
use crate::reference;
use crate::rng::SimRng;
use crate::stats::{fused_error_summary, mean_accuracy};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("chart label {0} is empty")]
    EmptyLabel(usize),
    #[error("series {name:?} has {got} values for {expected} groups")]
    SeriesLength {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("series {name:?} has a value that is negative or not finite")]
    BadValue { name: String },
    #[error("table is empty")]
    Empty,
    #[error("configuration: {0}")]
    Config(String),
}

pub fn pct(v: f64) -> String {
    format!("{v:.1}")
}

pub fn variance(v: f64) -> String {
    format!("{v:.2}")
}

/// Simulated tables for one run.
#[derive(Debug, Clone)]
pub struct RunTables {
    pub gestures: ModalityTable,
    pub speech: ModalityTable,
    pub fusion: Vec<FusionRun>,
    pub seed: u64,
}

/// Runs all three experiments at the published trial counts.
pub fn simulate_tables(config: &Config, seed: u64) -> Result<RunTables, ReportError> {
    let operator = config.operator();
    let (fusion_cfg, _) = config
        .calibrated_fusion()
        .map_err(|e| ReportError::Config(e.to_string()))?;
    let map = &config.normalization;
    let gestures = run_modality_experiment(
        Modality::Emg,
        &operator,
        map,
        DEFAULT_REPETITIONS,
        DEFAULT_PER_REPETITION,
        SimRng::derive_seed(seed, 2),
    );
    let speech = run_modality_experiment(
        Modality::Speech,
        &operator,
        map,
        DEFAULT_REPETITIONS,
        DEFAULT_PER_REPETITION,
        SimRng::derive_seed(seed, 3),
    );
    let fusion = run_fusion_table(
        &operator,
        &fusion_cfg,
        DEFAULT_BLOCKS,
        DEFAULT_BLOCK_SIZE,
        SimRng::derive_seed(seed, 4),
    )
    .map_err(|_| ReportError::Empty)?;
    Ok(RunTables {
        gestures,
        speech,
        fusion,
        seed,
    })
}

fn write_modality_csv(
    path: &Path,
    header: [&str; 3],
    items: &[ItemResult],
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for item in items {
        w.write_record([
            item.item.label(),
            pct(item.error_pct),
            pct(item.correct_pct()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fusion_csv(path: &Path, runs: &[FusionRun]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["fusion_operation".to_string()];
    let blocks = runs.first().map_or(0, |r| r.stats.block_errors.len());
    let size = runs.first().map_or(0, |r| r.stats.block_size);
    header.extend((1..=blocks as u64).map(|i| format!("block_{}", i * size)));
    header.extend(["error_pct".to_string(), "variance".to_string()]);
    w.write_record(&header)?;
    for run in runs {
        let mut row = vec![run.op.label.to_string()];
        row.extend(run.stats.block_errors.iter().map(u64::to_string));
        row.push(pct(run.stats.error_pct));
        row.push(variance(run.stats.variance));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Markdown comparison of the simulated tables with the published values.
pub fn summary_markdown(tables: &RunTables) -> Result<String, ReportError> {
    let g_mean = mean_accuracy(&tables.gestures.correct_pcts()).map_err(|_| ReportError::Empty)?;
    let s_mean = mean_accuracy(&tables.speech.correct_pcts()).map_err(|_| ReportError::Empty)?;
    let stats: Vec<_> = tables.fusion.iter().map(|r| r.stats.clone()).collect();
    let f_mean = fused_error_summary(&stats).map_err(|_| ReportError::Empty)?;

    let mut md = String::new();
    let _ = writeln!(md, "# Simulation summary (seed {})\n", tables.seed);
    md.push_str("| table | simulated mean | published mean |\n|---|---|---|\n");
    let _ = writeln!(
        md,
        "| gesture accuracy % | {} | {:.2} |",
        pct(g_mean),
        reference::GESTURE_MEAN_ACCURACY
    );
    let _ = writeln!(
        md,
        "| speech accuracy % | {} | {:.2} |",
        pct(s_mean),
        reference::SPEECH_MEAN_ACCURACY
    );
    let _ = writeln!(
        md,
        "| fused error % | {} | {:.1} |",
        pct(f_mean),
        reference::FUSED_MEAN_ERROR
    );

    md.push_str("\n| fused operation | simulated error % | published error % | wrong undetected | speech failed | window expired |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for run in &tables.fusion {
        use crate::fusion::ErrorKind::*;
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} |",
            run.op.label,
            pct(run.stats.error_pct),
            pct(reference::fused_error_pct(run.op)),
            run.count(UndetectedWrongGesture),
            run.count(FallbackFailed),
            run.count(WindowExpired),
        );
    }

    let _ = writeln!(
        md,
        "\nThe published fused errors average {:.1}%, i.e. {:.1}% accuracy. The separately \
         quoted {:.2}% fused accuracy does not follow from them and is not used as a target.",
        reference::FUSED_MEAN_ERROR,
        100.0 - reference::FUSED_MEAN_ERROR,
        reference::CLAIMED_FUSED_ACCURACY,
    );
    Ok(md)
}

/// Writes `table2.csv`, `table3.csv`, `table4.csv`, `summary.md` and
/// `fused_errors.svg` into `dir`, creating it if needed.
pub fn emit_report(dir: &Path, tables: &RunTables) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = [
        "table2.csv",
        "table3.csv",
        "table4.csv",
        "summary.md",
        "fused_errors.svg",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect();
    write_modality_csv(
        &paths[0],
        ["gesture", "wrong_or_missed_pct", "correct_pct"],
        &tables.gestures.items,
    )?;
    write_modality_csv(
        &paths[1],
        ["command", "wrong_output_pct", "correct_pct"],
        &tables.speech.items,
    )?;
    write_fusion_csv(&paths[2], &tables.fusion)?;
    fs::write(&paths[3], summary_markdown(tables)?)?;

    let labels: Vec<String> = tables
        .fusion
        .iter()
        .map(|r| r.op.label.to_string())
        .collect();
    let series = [
        ChartSeries {
            name: "gesture".into(),
            values: tables
                .fusion
                .iter()
                .map(|r| reference::gesture_error_pct(r.op.gesture))
                .collect(),
        },
        ChartSeries {
            name: "speech".into(),
            values: tables
                .fusion
                .iter()
                .map(|r| reference::speech_error_pct(r.op.speech))
                .collect(),
        },
        ChartSeries {
            name: "fused".into(),
            values: tables.fusion.iter().map(|r| r.stats.error_pct).collect(),
        },
    ];
    fs::write(
        &paths[4],
        render_chart("Error % by operation", &labels, &series)?,
    )?;
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub name: String,
    pub values: Vec<f64>,
}

const PALETTE: [&str; 6] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948",
];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Grouped bar chart, one group per label and one bar per series. Output is
/// a pure function of the inputs.
pub fn render_chart(
    title: &str,
    labels: &[String],
    series: &[ChartSeries],
) -> Result<String, ReportError> {
    if let Some(i) = labels.iter().position(|l| l.trim().is_empty()) {
        return Err(ReportError::EmptyLabel(i));
    }
    for s in series {
        if s.values.len() != labels.len() {
            return Err(ReportError::SeriesLength {
                name: s.name.clone(),
                got: s.values.len(),
                expected: labels.len(),
            });
        }
        if s.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ReportError::BadValue {
                name: s.name.clone(),
            });
        }
    }

    let (bar_w, gap, left, top, plot_h) = (18.0, 24.0, 50.0, 40.0, 240.0);
    let group_w = bar_w * series.len().max(1) as f64 + gap;
    let width = left + group_w * labels.len() as f64 + 20.0;
    let height = top + plot_h + 80.0;
    let max = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(0.0f64, f64::max);
    let scale_max = if max > 0.0 {
        (max / 5.0).ceil() * 5.0
    } else {
        1.0
    };
    let y = |v: f64| top + plot_h - plot_h * v / scale_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="20" font-size="14">{}</text>"#,
        escape_xml(title)
    );
    for tick in 0..=5 {
        let v = scale_max * tick as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#ddd"/><text x="{2}" y="{3:.1}" text-anchor="end">{v:.1}</text>"##,
            y(v),
            width - 20.0,
            left - 4.0,
            y(v) + 4.0,
        );
    }
    for (gi, label) in labels.iter().enumerate() {
        let gx = left + gap / 2.0 + group_w * gi as f64;
        for (si, s) in series.iter().enumerate() {
            let v = s.values[gi];
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w}" height="{:.1}" fill="{}"/>"#,
                gx + bar_w * si as f64,
                y(v),
                plot_h * v / scale_max,
                PALETTE[si % PALETTE.len()],
            );
        }
        let cx = gx + bar_w * series.len() as f64 / 2.0;
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-30 {cx:.1} {:.1})">{}</text>"#,
            top + plot_h + 14.0,
            top + plot_h + 14.0,
            escape_xml(label),
        );
    }
    for (si, s) in series.iter().enumerate() {
        let lx = left + 90.0 * si as f64;
        let ly = height - 14.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 9.0,
            PALETTE[si % PALETTE.len()],
            lx + 14.0,
            escape_xml(&s.name),
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> Vec<ChartSeries> {
        vec![ChartSeries {
            name: "a".into(),
            values,
        }]
    }

    #[test]
    fn number_formats() {
        assert_eq!(pct(7.5), "7.5");
        assert_eq!(pct(4.0), "4.0");
        assert_eq!(variance(16.75 / 3.0), "5.58");
        assert_eq!(variance(0.25), "0.25");
    }

    #[test]
    fn chart_is_deterministic() {
        let labels = vec!["x".to_string(), "y & z".to_string()];
        let a = render_chart("t", &labels, &series(vec![1.0, 2.5])).unwrap();
        let b = render_chart("t", &labels, &series(vec![1.0, 2.5])).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("y &amp; z"));
        assert_eq!(a.matches("<rect").count(), 2 + 1);
    }

    #[test]
    fn chart_rejects_bad_input() {
        let labels = vec!["x".to_string(), " ".to_string()];
        assert!(matches!(
            render_chart("t", &labels, &series(vec![1.0, 1.0])),
            Err(ReportError::EmptyLabel(1))
        ));
        let labels = vec!["x".to_string()];
        assert!(matches!(
            render_chart("t", &labels, &series(vec![])),
            Err(ReportError::SeriesLength { .. })
        ));
        assert!(matches!(
            render_chart("t", &labels, &series(vec![f64::NAN])),
            Err(ReportError::BadValue { .. })
        ));
    }

    #[test]
    fn all_zero_chart_renders() {
        let labels = vec!["x".to_string()];
        assert!(render_chart("t", &labels, &series(vec![0.0])).is_ok());
    }
}

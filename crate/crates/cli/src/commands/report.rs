//! Comparison tables: one block per metric, one row per rate limit, one
//! column per game and mode.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use vrtraffic::metrics::{write_reports_csv, MetricsReport};

use crate::args::{ReportArgs, ReportFormat};
use crate::error::{input_error, Classify, Result};
use crate::io::{check_inputs, emit, read_input, stem};

/// A report with its table coordinates resolved.
#[derive(Debug, Clone)]
pub struct Entry {
    pub column: String,
    pub limit: String,
    pub report: MetricsReport,
}

fn load(path: &Path) -> Result<Vec<Entry>> {
    let bytes = read_input(path)?;
    let reports: Vec<MetricsReport> = serde_json::Deserializer::from_slice(&bytes)
        .into_iter()
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("reading reports from {}", path.display()))
        .input()?;
    let fallback = stem(path);
    Ok(reports
        .into_iter()
        .map(|report| {
            let l = &report.labels;
            let game = l.game.clone().unwrap_or_else(|| fallback.clone());
            let column = match &l.mode {
                Some(mode) => format!("{game} {mode}"),
                None => game,
            };
            let limit = l.limit.clone().unwrap_or_else(|| "normal".to_string());
            Entry { column, limit, report }
        })
        .collect())
}

/// `normal` first, then numeric limits from high to low, then the rest in
/// order of appearance.
fn limit_order(limits: &mut [String]) {
    let rank = |s: &str| -> (u8, f64) {
        if s.eq_ignore_ascii_case("normal") {
            (0, 0.0)
        } else if let Ok(v) = s.parse::<f64>() {
            (1, -v)
        } else {
            (2, 0.0)
        }
    };
    limits.sort_by(|a, b| {
        let (ra, va) = rank(a);
        let (rb, vb) = rank(b);
        ra.cmp(&rb).then(va.total_cmp(&vb))
    });
}

struct Metric {
    title: &'static str,
    value: fn(&MetricsReport) -> Option<f64>,
    decimals: usize,
}

const METRICS: [Metric; 5] = [
    Metric { title: "Avg frame size (B)", value: |r| Some(r.avg_frame_size), decimals: 0 },
    Metric { title: "Data rate (Mbps)", value: |r| Some(r.data_rate), decimals: 2 },
    Metric { title: "Avg inter-arrival (ms)", value: |r| Some(r.avg_inter_arrival), decimals: 2 },
    Metric { title: "Frame loss rate (%)", value: |r| Some(r.frame_loss_rate * 100.0), decimals: 2 },
    Metric { title: "Avg frame latency (ms)", value: |r| r.avg_frame_latency, decimals: 2 },
];

pub fn markdown(entries: &[Entry]) -> String {
    let mut columns: Vec<&str> = Vec::new();
    let mut limits: Vec<String> = Vec::new();
    for e in entries {
        if !columns.contains(&e.column.as_str()) {
            columns.push(&e.column);
        }
        if !limits.contains(&e.limit) {
            limits.push(e.limit.clone());
        }
    }
    limit_order(&mut limits);
    // later entries win on duplicate cells
    let cell = |col: &str, limit: &str| entries.iter().rev().find(|e| e.column == col && e.limit == limit);

    let mut out = String::new();
    for (i, m) in METRICS.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "### {}\n", m.title);
        let _ = writeln!(out, "| limit | {} |", columns.join(" | "));
        let _ = writeln!(out, "|---{}|", "|---".repeat(columns.len()));
        for limit in &limits {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| match cell(c, limit).and_then(|e| (m.value)(&e.report)) {
                    Some(v) => format!("{v:.*}", m.decimals),
                    None => "-".to_string(),
                })
                .collect();
            let _ = writeln!(out, "| {limit} | {} |", cells.join(" | "));
        }
    }
    out
}

pub fn run(args: &ReportArgs) -> Result<()> {
    check_inputs(&args.inputs)?;
    let mut entries = Vec::new();
    for p in &args.inputs {
        entries.extend(load(p)?);
    }
    if entries.is_empty() {
        return Err(input_error("no reports in the given files"));
    }
    let bytes = match args.format {
        ReportFormat::Markdown => markdown(&entries).into_bytes(),
        ReportFormat::Csv => {
            let reports: Vec<MetricsReport> = entries.into_iter().map(|e| e.report).collect();
            let mut buf = Vec::new();
            write_reports_csv(&reports, &mut buf).expect("writing to memory");
            buf
        }
        ReportFormat::Json => {
            let reports: Vec<MetricsReport> = entries.into_iter().map(|e| e.report).collect();
            let mut s = serde_json::to_string(&reports).expect("reports serialize");
            s.push('\n');
            s.into_bytes()
        }
    };
    emit(args.out.as_deref(), &bytes)
}

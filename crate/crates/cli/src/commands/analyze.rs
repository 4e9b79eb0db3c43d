use std::path::{Path, PathBuf};

use vrtraffic::frames::{write_frames_jsonl, AnalyzerConfig};
use vrtraffic::metrics::{analyze, write_reports_csv, Analysis, MetricsError, MetricsReport};

use crate::args::{AnalyzeArgs, Labels, OutputFormat, TraceFormatArg};
use crate::config::FileConfig;
use crate::error::{input_error, Kind, Result};
use crate::io::{check_inputs, emit, ensure_dir, par_map, read_trace, stem, write_atomic};

fn classify(e: MetricsError) -> crate::error::CliError {
    let kind = match e {
        MetricsError::Frames(vrtraffic::frames::FrameError::InvalidConfig(_)) => Kind::Input,
        _ => Kind::Domain,
    };
    crate::error::CliError { kind, source: e.into() }
}

pub fn run_one(path: &Path, format: Option<TraceFormatArg>, labels: &Labels, cfg: &AnalyzerConfig) -> Result<Analysis> {
    let mut trace = read_trace(path, format)?;
    let Labels { game, mode, limit } = labels;
    for (key, value) in [("game", game), ("mode", mode), ("limit", limit)] {
        if let Some(v) = value {
            trace = trace.with_label(key, v.clone());
        }
    }
    let analysis = analyze(&trace, cfg).map_err(|e| {
        let mut err = classify(e);
        err.source = err.source.context(path.display().to_string());
        err
    })?;
    log::info!("{}: {} frames", path.display(), analysis.report.frame_count);
    Ok(analysis)
}

fn render(reports: &[MetricsReport], format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => reports.iter().flat_map(|r| format!("{}\n", r.to_json()).into_bytes()).collect(),
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_reports_csv(reports, &mut buf).expect("writing to memory");
            buf
        }
    }
}

fn frames_bytes(a: &Analysis) -> Vec<u8> {
    let mut buf = Vec::new();
    write_frames_jsonl(&a.frames, &mut buf).expect("writing to memory");
    buf
}

pub fn run(args: &AnalyzeArgs, file: &FileConfig) -> Result<()> {
    check_inputs(&args.inputs)?;
    let many = args.inputs.len() > 1;
    if many && args.out.is_some() {
        return Err(input_error("--out takes a single input; use --out-dir for several"));
    }
    let frames_path: Option<Option<&PathBuf>> = args.frames.as_ref().map(|p| p.as_ref());
    match frames_path {
        Some(Some(_)) if many => return Err(input_error("--frames PATH takes a single input; use --out-dir")),
        Some(None) if args.out_dir.is_none() => return Err(input_error("--frames without PATH needs --out-dir")),
        _ => {}
    }
    let cfg = super::analyzer_config(&args.analyzer, &file.analyzer)?;
    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
    }
    let ext = match args.format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };

    let results = par_map(&args.inputs, args.jobs, |path| -> Result<MetricsReport> {
        let a = run_one(path, args.analyzer.input_format, &args.labels, &cfg)?;
        if let Some(dir) = &args.out_dir {
            let name = stem(path);
            write_atomic(&dir.join(format!("{name}.report.{ext}")), &render(std::slice::from_ref(&a.report), args.format))?;
            if let Some(None) = frames_path {
                write_atomic(&dir.join(format!("{name}.frames.jsonl")), &frames_bytes(&a))?;
            }
        }
        if let Some(Some(p)) = frames_path {
            write_atomic(p, &frames_bytes(&a))?;
        }
        Ok(a.report)
    });

    let mut first_err = None;
    let mut reports = Vec::new();
    for (path, r) in args.inputs.iter().zip(results) {
        match r {
            Ok(report) => reports.push(report),
            Err(e) => {
                if many {
                    log::error!("{}: {e}", path.display());
                }
                first_err.get_or_insert(e);
            }
        }
    }
    if args.out_dir.is_none() && !reports.is_empty() {
        emit(args.out.as_deref(), &render(&reports, args.format))?;
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

use std::io::BufReader;

use anyhow::Context;
use vrtraffic::dist::{fit_burr, fit_loglogistic, FitError, FitOptions, ModelFile};
use vrtraffic::frames::{read_frames_jsonl, FrameLine};

use crate::args::{DistArg, FieldArg, FitArgs, Labels};
use crate::config::FileConfig;
use crate::error::{Classify, CliError, Kind, Result};
use crate::io::{check_inputs, emit};

fn frames_from_trace(args: &FitArgs, file: &FileConfig) -> Result<Vec<FrameLine>> {
    let cfg = super::analyzer_config(&args.analyzer, &file.analyzer)?;
    let labels = Labels { game: None, mode: None, limit: None };
    let a = super::analyze::run_one(&args.input, args.analyzer.input_format, &labels, &cfg)?;
    Ok(a.frames.frames.iter().map(FrameLine::from).collect())
}

/// Values of the chosen field: sizes in bytes, inter-arrival times in ms.
pub fn field_values(frames: &[FrameLine], field: FieldArg) -> Vec<f64> {
    match field {
        FieldArg::Size => frames.iter().map(|f| f.size as f64).collect(),
        FieldArg::Iat => frames
            .windows(2)
            .map(|w| (w[1].first_tx_us as f64 - w[0].first_tx_us as f64) / 1000.0)
            .collect(),
    }
}

pub fn run(args: &FitArgs, file: &FileConfig) -> Result<()> {
    check_inputs(std::slice::from_ref(&args.input))?;
    let frames = if args.trace {
        frames_from_trace(args, file)?
    } else {
        let f = std::fs::File::open(&args.input)
            .with_context(|| format!("opening {}", args.input.display()))
            .input()?;
        read_frames_jsonl(BufReader::new(f))
            .with_context(|| format!("reading frames from {}", args.input.display()))
            .input()?
    };
    let xs = field_values(&frames, args.field);
    log::info!("fitting {:?} to {} values", args.dist, xs.len());
    let opts = FitOptions { bins: args.bins, ..FitOptions::default() };
    let fit = match args.dist {
        DistArg::Loglogistic => fit_loglogistic(&xs, &opts),
        DistArg::Burr => fit_burr(&xs, &opts),
    }
    .map_err(|e| {
        let kind = match e {
            FitError::Dist(vrtraffic::dist::DistError::TooFewBins { .. }) => Kind::Input,
            _ => Kind::Domain,
        };
        CliError { kind, source: e.into() }
    })?;
    log::info!("R^2 = {:.4}, log-likelihood = {:.2}", fit.r_squared, fit.log_likelihood);
    let json = ModelFile::from(&fit).to_json();
    emit(args.out.as_deref(), format!("{json}\n").as_bytes())
}

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use vrtraffic::dist::{reference, Burr, LogLogistic, Model, ModelFile};
use vrtraffic::gen::{generate_trace, BurstMode, TrafficModel, DEFAULT_BURST_GAP_US};
use vrtraffic::trace::{encode_trace, TraceFormat};

use crate::args::{BurstArg, GenerateArgs, TraceFormatArg};
use crate::config::FileConfig;
use crate::error::{input_error, Classify, Result};
use crate::io::{emit, read_input};

fn load_model(path: &Path) -> Result<Model> {
    let bytes = read_input(path)?;
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display())).input()?;
    let file = ModelFile::from_json(&text).with_context(|| format!("reading model {}", path.display())).input()?;
    Ok(file.model)
}

fn models(args: &GenerateArgs) -> Result<(LogLogistic, Burr)> {
    if let Some(key) = &args.preset {
        let m = reference::find(key)
            .ok_or_else(|| input_error(format!("unknown preset {key:?}; see --list-presets")))?;
        return Ok((m.size, m.iat));
    }
    let (Some(size), Some(iat)) = (&args.size_model, &args.iat_model) else {
        return Err(input_error("need --preset, or both --size-model and --iat-model"));
    };
    let Model::LogLogistic(size_model) = load_model(size)? else {
        return Err(input_error(format!("{}: size model must be loglogistic", size.display())));
    };
    let Model::Burr(iat_model) = load_model(iat)? else {
        return Err(input_error(format!("{}: inter-arrival model must be burr", iat.display())));
    };
    Ok((size_model, iat_model))
}

fn list_presets() -> String {
    let mut s = String::new();
    for m in &reference::REFERENCE_MODELS {
        let _ = writeln!(
            s,
            "{:<28} size loglogistic(mu={}, sigma={})  iat burr(alpha={}, c={}, k={})",
            m.key(),
            m.size.mu,
            m.size.sigma,
            m.iat.alpha,
            m.iat.c,
            m.iat.k
        );
    }
    s
}

pub fn traffic_model(args: &GenerateArgs, file: &FileConfig) -> Result<TrafficModel> {
    let (size, iat) = models(args)?;
    let g = &file.generate;
    let burst = match (args.burst_mode, g.burst_mode.as_deref()) {
        (Some(b), _) => b,
        (None, Some("single")) | (None, None) => BurstArg::Single,
        (None, Some("two")) => BurstArg::Two,
        (None, Some(other)) => return Err(input_error(format!("config burst_mode must be single or two, got {other:?}"))),
    };
    let gap_us = args.burst_gap_us.or(g.burst_gap_us).unwrap_or(DEFAULT_BURST_GAP_US);
    let model = TrafficModel {
        size,
        iat,
        duration: args.duration.or(g.duration).unwrap_or(10.0),
        seed: args.seed.or(g.seed).unwrap_or(0),
        burst_mode: match burst {
            BurstArg::Single => BurstMode::SingleBurst,
            BurstArg::Two => BurstMode::TwoBurst { gap_us },
        },
        mtu: args.mtu.or(g.mtu).unwrap_or(1514),
    };
    model.validate().input()?;
    Ok(model)
}

pub fn run(args: &GenerateArgs, file: &FileConfig) -> Result<()> {
    if args.list_presets {
        return emit(None, list_presets().as_bytes());
    }
    let model = traffic_model(args, file)?;
    let trace = generate_trace(&model).input()?;
    log::info!("generated {} packets over {} s", trace.len(), model.duration);
    let format = match args.format {
        TraceFormatArg::Csv => TraceFormat::Csv,
        TraceFormatArg::Jsonl => TraceFormat::Jsonl,
    };
    emit(args.out.as_deref(), &encode_trace(&trace, format))
}

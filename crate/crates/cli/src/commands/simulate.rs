use std::path::{Path, PathBuf};

use vrtraffic::frames::AnalyzerConfig;
use vrtraffic::linksim::{simulate_link, write_sweep_csv, LinkConfig, SweepPoint, DEFAULT_SWEEP, SWEEP_ACK_GRACE_US};
use vrtraffic::metrics::analyze;
use vrtraffic::trace::{encode_trace, Direction, PacketTrace, TraceFormat};

use crate::args::{OutputFormat, SimulateArgs, ViewArg};
use crate::config::FileConfig;
use crate::error::{input_error, Classify, Result};
use crate::io::{check_inputs, emit, ensure_dir, par_map, read_trace, stem, write_atomic};

struct Plan {
    capacities: Vec<f64>,
    link: LinkConfig,
    analyzer: AnalyzerConfig,
}

fn plan(args: &SimulateArgs, file: &FileConfig) -> Result<Plan> {
    let l = &file.link;
    let capacities = if !args.capacity_mbps.is_empty() {
        args.capacity_mbps.clone()
    } else {
        l.capacity_mbps.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec())
    };
    if capacities.is_empty() {
        return Err(input_error("no capacities to simulate"));
    }
    let d = LinkConfig::default();
    let link = LinkConfig {
        capacity_mbps: capacities[0],
        queue_limit: args.queue_kib.or(l.queue_kib).map_or(d.queue_limit, |k| k * 1024),
        base_owd: args.owd_us.or(l.owd_us).unwrap_or(d.base_owd),
        ack_turnaround: args.ack_turnaround_us.or(l.ack_turnaround_us).unwrap_or(d.ack_turnaround),
    };
    for &c in &capacities {
        LinkConfig { capacity_mbps: c, ..link }.validate().input()?;
    }
    let mut analyzer = super::analyzer_config(&args.analyzer, &file.analyzer)?;
    if args.analyzer.ack_grace_ms.is_none() && file.analyzer.ack_grace_ms.is_none() {
        analyzer.ack_grace = SWEEP_ACK_GRACE_US;
    }
    Ok(Plan { capacities, link, analyzer })
}

fn run_one(path: &Path, args: &SimulateArgs, plan: &Plan) -> Result<Vec<SweepPoint>> {
    let trace = read_trace(path, args.analyzer.input_format)?;
    let total = trace.len();
    let down = PacketTrace::new(trace.packets.into_iter().filter(|p| p.direction == Direction::Downlink).collect());
    if down.len() < total {
        log::info!("{}: ignoring {} uplink packets", path.display(), total - down.len());
    }
    let mut points = Vec::new();
    for &capacity in &plan.capacities {
        let cfg = LinkConfig { capacity_mbps: capacity, ..plan.link };
        let sim = simulate_link(&down, &cfg).input()?;
        if let Some(dir) = &args.emit_traces {
            let view = match args.view {
                ViewArg::Capture => &sim.capture,
                ViewArg::Delivered => &sim.delivered,
            };
            let name = format!("{}.{capacity}mbps.csv", stem(path));
            write_atomic(&dir.join(name), &encode_trace(view, TraceFormat::Csv))?;
        }
        let report = analyze(&sim.capture, &plan.analyzer).domain()?.report;
        log::info!(
            "{} @ {capacity} Mbps: {} of {} packets dropped, frame loss {:.4}",
            path.display(),
            sim.dropped_packets,
            down.len(),
            report.frame_loss_rate
        );
        points.push(SweepPoint {
            capacity,
            loss_rate: report.frame_loss_rate,
            avg_latency_ms: report.avg_frame_latency,
            dropped_packets: sim.dropped_packets,
            report,
        });
    }
    Ok(points)
}

fn render(points: &[SweepPoint], format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string(points).expect("sweep serializes");
            s.push('\n');
            s.into_bytes()
        }
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(points, &mut buf).expect("writing to memory");
            buf
        }
    }
}

pub fn run(args: &SimulateArgs, file: &FileConfig) -> Result<()> {
    check_inputs(&args.inputs)?;
    if args.inputs.len() > 1 && args.out_dir.is_none() {
        return Err(input_error("several inputs need --out-dir"));
    }
    let plan = plan(args, file)?;
    for dir in [&args.out_dir, &args.emit_traces].into_iter().flatten() {
        ensure_dir(dir)?;
    }
    let ext = match args.format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let results = par_map(&args.inputs, args.jobs, |path: &PathBuf| -> Result<Vec<SweepPoint>> {
        let points = run_one(path, args, &plan)?;
        if let Some(dir) = &args.out_dir {
            write_atomic(&dir.join(format!("{}.sweep.{ext}", stem(path))), &render(&points, args.format))?;
        }
        Ok(points)
    });
    let mut first_err = None;
    for (path, r) in args.inputs.iter().zip(results) {
        match r {
            Ok(points) if args.out_dir.is_none() => emit(args.out.as_deref(), &render(&points, args.format))?,
            Ok(_) => {}
            Err(e) => {
                log::error!("{}: {e}", path.display());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

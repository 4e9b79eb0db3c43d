use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::CONFIG_ENV;

/// Analyze, model, synthesize and throttle VR video streaming traffic.
///
/// Exit codes: 0 success, 1 internal error, 2 invalid input or usage,
/// 3 analysis error (no video flow, degenerate data, fit failure).
#[derive(Debug, Parser)]
#[command(name = "vrtraffic", version)]
pub struct Cli {
    /// TOML config file with defaults for analyzer, link and generator flags.
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frame-level metrics of the video flow in packet traces.
    Analyze(AnalyzeArgs),
    /// Fit a frame size or inter-arrival distribution to a frame list.
    Fit(FitArgs),
    /// Generate a synthetic video packet trace from size and IAT models.
    Generate(GenerateArgs),
    /// Replay traces through a throttled bottleneck link.
    Simulate(SimulateArgs),
    /// Combine metric reports into a comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzerArgs {
    /// Interval threshold separating frames, in ms [default: 3].
    #[arg(long, value_name = "MS")]
    pub delta_t_thr_ms: Option<f64>,
    /// On-wire length of full video packets [default: 1514].
    #[arg(long, value_name = "BYTES")]
    pub mtu: Option<u32>,
    /// Largest uplink packet counted as an ACK [default: 60].
    #[arg(long, value_name = "BYTES")]
    pub ack_max_len: Option<u32>,
    /// How long past the next frame's start an ACK may still belong to
    /// the previous frame, in ms [default: 0].
    #[arg(long, value_name = "MS")]
    pub ack_grace_ms: Option<f64>,
    /// Input trace format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub input_format: Option<TraceFormatArg>,
}

#[derive(Debug, Clone, Args)]
pub struct Labels {
    /// Game label copied into the report.
    #[arg(long)]
    pub game: Option<String>,
    /// Mode label copied into the report (e.g. local, cloud).
    #[arg(long)]
    pub mode: Option<String>,
    /// Rate limit label copied into the report (e.g. normal, 54).
    #[arg(long)]
    pub limit: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Packet traces (CSV or JSONL).
    #[arg(required = true, value_name = "TRACE")]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub analyzer: AnalyzerArgs,
    #[command(flatten)]
    pub labels: Labels,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Write the report here instead of stdout (single input only).
    #[arg(long, value_name = "PATH", conflicts_with = "out_dir")]
    pub out: Option<PathBuf>,
    /// Write `<name>.report.json|csv` per input into this directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Also write the frame list as JSONL: to PATH for a single input, or
    /// as `<name>.frames.jsonl` next to the reports with --out-dir.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    pub frames: Option<Option<PathBuf>>,
    /// Worker threads for multiple inputs [default: available cores].
    #[arg(long, short = 'j')]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Loglogistic,
    Burr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    /// Frame size in bytes.
    Size,
    /// Frame inter-arrival time in ms.
    Iat,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Frame list as written by `analyze --frames`, or a packet trace
    /// with --trace.
    #[arg(value_name = "FRAMES")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long, value_enum, default_value = "size")]
    pub field: FieldArg,
    /// Histogram bins for the reported R^2.
    #[arg(long, default_value_t = vrtraffic::dist::DEFAULT_BINS)]
    pub bins: usize,
    /// Treat the input as a packet trace and identify frames first.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub analyzer: AnalyzerArgs,
    /// Write the model here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BurstArg {
    /// Whole frame at one instant.
    Single,
    /// Two half-frame bursts separated by --burst-gap-us.
    Two,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Frame size model (JSON, as written by `fit`), bytes.
    #[arg(long, value_name = "PATH", requires = "iat_model", conflicts_with = "preset")]
    pub size_model: Option<PathBuf>,
    /// Inter-arrival model (JSON, as written by `fit`), ms.
    #[arg(long, value_name = "PATH", requires = "size_model")]
    pub iat_model: Option<PathBuf>,
    /// Built-in parameter set, e.g. `beat-saber/normal/cloud`
    /// (game/limit/setting; see --list-presets).
    #[arg(long, value_name = "KEY")]
    pub preset: Option<String>,
    /// Print the built-in parameter sets and exit.
    #[arg(long)]
    pub list_presets: bool,
    /// Seconds of traffic [default: 10].
    #[arg(long)]
    pub duration: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Packet timing within a frame [default: single].
    #[arg(long, value_enum)]
    pub burst_mode: Option<BurstArg>,
    /// Gap between the two bursts, in µs [default: 1500].
    #[arg(long, value_name = "US")]
    pub burst_gap_us: Option<u64>,
    /// Full packet length [default: 1514].
    #[arg(long, value_name = "BYTES")]
    pub mtu: Option<u32>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TraceFormatArg,
    /// Write the trace here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    /// Server-side capture: sent packets plus returning ACKs.
    Capture,
    /// Headset side: arrival-stamped packets plus sent ACKs.
    Delivered,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Downlink packet traces (CSV or JSONL); uplink packets are ignored.
    #[arg(required = true, value_name = "TRACE")]
    pub inputs: Vec<PathBuf>,
    /// Bottleneck capacity; repeat for a sweep [default: 54, 40.5, 27].
    #[arg(long, value_name = "MBPS")]
    pub capacity_mbps: Vec<f64>,
    /// Tail-drop queue size [default: 256].
    #[arg(long, value_name = "KIB")]
    pub queue_kib: Option<u64>,
    /// One-way propagation delay each direction [default: 2000].
    #[arg(long, value_name = "US")]
    pub owd_us: Option<u64>,
    /// Receiver processing before each ACK [default: 0].
    #[arg(long, value_name = "US")]
    pub ack_turnaround_us: Option<u64>,
    /// Analyzer flags for the simulated captures; --ack-grace-ms defaults
    /// to 1000 here since queueing delay can span many frames.
    #[command(flatten)]
    pub analyzer: AnalyzerArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Write the sweep here instead of stdout (single input only).
    #[arg(long, value_name = "PATH", conflicts_with = "out_dir")]
    pub out: Option<PathBuf>,
    /// Write `<name>.sweep.json|csv` per input into this directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Write each simulated trace as `<name>.<capacity>mbps.csv` here.
    #[arg(long, value_name = "DIR")]
    pub emit_traces: Option<PathBuf>,
    /// Which side of the link --emit-traces records.
    #[arg(long, value_enum, default_value = "capture")]
    pub view: ViewArg,
    /// Worker threads for multiple inputs [default: available cores].
    #[arg(long, short = 'j')]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files written by `analyze`.
    #[arg(required = true, value_name = "REPORT")]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

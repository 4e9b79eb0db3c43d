//! Measurement, modeling and synthesis of VR video streaming traffic.
//!
//! The pipeline runs from a captured packet trace to frame-level QoS
//! metrics ([`metrics::analyze`]), fits parametric frame size and
//! inter-arrival models ([`dist`]), generates synthetic streams from such
//! models ([`gen`]) and replays traces through a throttled link
//! ([`linksim`]).

pub mod dist;
pub mod flows;
pub mod frames;
pub mod gen;
pub mod linksim;
pub mod metrics;
pub mod trace;

pub use flows::{classify_flows, FlowLabel, FlowMap, FlowSignatures};
pub use frames::{identify_frames, AnalyzerConfig, FrameRecord, FrameSequence};
pub use gen::{generate_frames, packetize, BurstMode, TrafficModel};
pub use linksim::{simulate_link, LinkConfig, SimResult};
pub use metrics::{analyze, summarize, MetricsReport};
pub use trace::{parse_trace, write_trace, Direction, PacketRecord, PacketTrace, PortPair, TraceFormat};

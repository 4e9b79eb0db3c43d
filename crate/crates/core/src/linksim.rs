//! Deterministic bottleneck link: a rate-limited FIFO with a tail-drop byte
//! limit, plus an ideal uplink that returns one ACK per completely
//! delivered group of same-timestamp packets. A group missing any packet is
//! not acknowledged, so a frame that lost packets shows up as unacked.
//!
//! Time is kept in integer nanoseconds internally; every timestamp written
//! out is rounded to the nearest microsecond.

use std::collections::VecDeque;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::AnalyzerConfig;
use crate::metrics::{analyze, MetricsError, MetricsReport};
use crate::trace::{Direction, PacketRecord, PacketTrace};

pub const ACK_LEN: u32 = 60;
pub const DEFAULT_QUEUE_LIMIT: u64 = 256 * 1024;
pub const DEFAULT_BASE_OWD_US: u64 = 2000;
pub const DEFAULT_ACK_TURNAROUND_US: u64 = 0;
/// ACK grace for analyzing simulated captures, in µs. Queueing delay on a
/// throttled link spans many frame intervals, so zero grace would hand most
/// ACKs to later frames.
pub const SWEEP_ACK_GRACE_US: u64 = 1_000_000;
/// Downlink limits of the throttling experiments, in Mbps.
pub const DEFAULT_SWEEP: [f64; 3] = [54.0, 40.5, 27.0];
const MIN_QUEUE_LIMIT: u64 = 1514;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub capacity_mbps: f64,
    /// Tail-drop threshold in bytes, counting the packet in service.
    pub queue_limit: u64,
    /// One-way propagation delay, each direction, in µs.
    pub base_owd: u64,
    /// Receiver processing before an ACK leaves, in µs.
    pub ack_turnaround: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            capacity_mbps: 54.0,
            queue_limit: DEFAULT_QUEUE_LIMIT,
            base_owd: DEFAULT_BASE_OWD_US,
            ack_turnaround: DEFAULT_ACK_TURNAROUND_US,
        }
    }
}

impl LinkConfig {
    pub fn with_capacity(capacity_mbps: f64) -> Self {
        Self { capacity_mbps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.capacity_mbps.is_finite() && self.capacity_mbps > 0.0) {
            return Err(SimError::InvalidCapacity(self.capacity_mbps));
        }
        if self.queue_limit <= MIN_QUEUE_LIMIT {
            return Err(SimError::QueueTooSmall(self.queue_limit));
        }
        Ok(())
    }

    /// Serialization time of `len` bytes in ns, rounded to the nearest ns.
    pub fn serialization_ns(&self, len: u32) -> u64 {
        (f64::from(len) * 8.0 * 1000.0 / self.capacity_mbps).round() as u64
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("capacity must be positive and finite, got {0} Mbps")]
    InvalidCapacity(f64),
    #[error("queue limit {0} B must exceed one MTU packet")]
    QueueTooSmall(u64),
    #[error("input is not sorted by timestamp at packet {0}")]
    Unsorted(usize),
    #[error("input packet {0} is uplink; only downlink traffic is simulated")]
    UplinkInput(usize),
}

/// Fate of one input packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketFate {
    /// Index into the input trace.
    pub index: usize,
    /// Arrival at the receiver in ns, `None` when dropped.
    pub arrival_ns: Option<u64>,
    /// One-way delay in µs for delivered packets.
    pub delay_us: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Receiver view: delivered downlink packets stamped with their arrival
    /// time, merged with the ACKs stamped with their send time.
    pub delivered: PacketTrace,
    /// Sender view: every input packet at its send time merged with the ACKs
    /// at their arrival back at the sender. This is what a capture at the
    /// server records and what the analyzer expects.
    pub capture: PacketTrace,
    /// The ACKs as seen at the sender.
    pub acks: Vec<PacketRecord>,
    pub dropped_packets: usize,
    pub fates: Vec<PacketFate>,
}

impl SimResult {
    pub fn delivered_count(&self) -> usize {
        self.fates.len() - self.dropped_packets
    }

    /// Mean one-way delay of delivered packets in µs.
    pub fn mean_delay_us(&self) -> Option<f64> {
        let delays: Vec<f64> = self.fates.iter().filter_map(|f| f.delay_us).collect();
        (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64)
    }
}

fn ns_to_us(ns: u64) -> u64 {
    (ns + 500) / 1000
}

pub fn simulate_link(input: &PacketTrace, cfg: &LinkConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let packets = &input.packets;
    if let Some(i) = packets.windows(2).position(|w| w[1].ts < w[0].ts) {
        return Err(SimError::Unsorted(i + 1));
    }
    if let Some(i) = packets.iter().position(|p| p.direction == Direction::Uplink) {
        return Err(SimError::UplinkInput(i));
    }
    let owd_ns = cfg.base_owd * 1000;
    let turnaround_ns = cfg.ack_turnaround * 1000;

    // (completion time, length) of every packet still in the system
    let mut in_system: VecDeque<(u64, u64)> = VecDeque::new();
    let mut backlog: u64 = 0;
    let mut busy_until: u64 = 0;
    let mut fates = Vec::with_capacity(packets.len());
    for (index, p) in packets.iter().enumerate() {
        let t = p.ts * 1000;
        while let Some(&(done, len)) = in_system.front() {
            if done > t {
                break;
            }
            backlog -= len;
            in_system.pop_front();
        }
        let len = u64::from(p.length);
        if backlog + len > cfg.queue_limit {
            fates.push(PacketFate { index, arrival_ns: None, delay_us: None });
            continue;
        }
        let done = busy_until.max(t) + cfg.serialization_ns(p.length);
        busy_until = done;
        backlog += len;
        in_system.push_back((done, len));
        let arrival = done + owd_ns;
        fates.push(PacketFate { index, arrival_ns: Some(arrival), delay_us: Some((arrival - t) as f64 / 1000.0) });
    }

    let mut received = Vec::new();
    let mut sent_acks = Vec::new();
    let mut acks = Vec::new();
    let mut start = 0;
    while start < packets.len() {
        let head = &packets[start];
        let mut end = start + 1;
        while end < packets.len() && packets[end].ts == head.ts && packets[end].port_pair() == head.port_pair() {
            end += 1;
        }
        for f in &fates[start..end] {
            if let Some(a) = f.arrival_ns {
                let p = &packets[f.index];
                received.push(PacketRecord { ts: ns_to_us(a), ..*p });
            }
        }
        let last = &packets[end - 1];
        let complete = fates[start..end].iter().all(|f| f.arrival_ns.is_some());
        if let (true, Some(a)) = (complete, fates[end - 1].arrival_ns) {
            let leave = a + turnaround_ns;
            sent_acks.push(PacketRecord::uplink(ns_to_us(leave), last.dst_port, last.src_port, ACK_LEN));
            acks.push(PacketRecord::uplink(ns_to_us(leave + owd_ns), last.dst_port, last.src_port, ACK_LEN));
        }
        start = end;
    }

    let dropped_packets = fates.iter().filter(|f| f.arrival_ns.is_none()).count();
    received.extend(sent_acks);
    let delivered = PacketTrace::new(received);
    let mut sender = packets.clone();
    sender.extend(acks.iter().copied());
    let capture = PacketTrace::new(sender);
    Ok(SimResult { delivered, capture, acks, dropped_packets, fates })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub capacity: f64,
    pub loss_rate: f64,
    pub avg_latency_ms: Option<f64>,
    pub dropped_packets: usize,
    pub report: MetricsReport,
}

/// Runs the same input through each capacity and analyzes the sender view.
pub fn sweep(
    input: &PacketTrace,
    base: &LinkConfig,
    capacities: &[f64],
    analyzer: &AnalyzerConfig,
) -> Result<Vec<SweepPoint>, SweepError> {
    capacities
        .iter()
        .map(|&capacity| {
            let cfg = LinkConfig { capacity_mbps: capacity, ..*base };
            let sim = simulate_link(input, &cfg)?;
            let report = analyze(&sim.capture, analyzer)?.report;
            Ok(SweepPoint {
                capacity,
                loss_rate: report.frame_loss_rate,
                avg_latency_ms: report.avg_frame_latency,
                dropped_packets: sim.dropped_packets,
                report,
            })
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub const SWEEP_CSV_HEADER: &str = "capacity,loss_rate,avg_latency_ms";

/// Writes the sweep as CSV; a missing latency is an empty field.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for p in points {
        let latency = p.avg_latency_ms.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", p.capacity, p.loss_rate, latency)?;
    }
    Ok(())
}

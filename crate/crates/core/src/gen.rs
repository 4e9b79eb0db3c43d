//! Synthetic VR video streams drawn from fitted size and inter-arrival
//! models, packetized the way the streaming server sends them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{seeded_rng, Burr, DistError, LogLogistic, Model};
use crate::frames::{AnalyzerConfig, FrameRecord, FrameSequence};
use crate::trace::{PacketRecord, PacketTrace};

pub const SERVER_PORT: u16 = 9000;
pub const HEADSET_PORT: u16 = 54321;
pub const DEFAULT_BURST_GAP_US: u64 = 1500;

/// How a frame's packets are spread over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurstMode {
    /// All packets at the frame's start time.
    SingleBurst,
    /// The frame's bytes split in two halves (one per eye), the second half
    /// sent `gap_us` after the first.
    TwoBurst { gap_us: u64 },
}

impl BurstMode {
    pub fn two_burst() -> Self {
        BurstMode::TwoBurst { gap_us: DEFAULT_BURST_GAP_US }
    }

    pub fn gap_us(&self) -> u64 {
        match self {
            BurstMode::SingleBurst => 0,
            BurstMode::TwoBurst { gap_us } => *gap_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficModel {
    /// Frame size in bytes.
    pub size: LogLogistic,
    /// Frame inter-arrival time in milliseconds.
    pub iat: Burr,
    /// Seconds of traffic to generate.
    pub duration: f64,
    pub seed: u64,
    pub burst_mode: BurstMode,
    pub mtu: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("mtu must be positive")]
    InvalidMtu,
    #[error(transparent)]
    Dist(#[from] DistError),
}

impl TrafficModel {
    pub fn new(size: LogLogistic, iat: Burr, duration: f64, seed: u64) -> Self {
        Self { size, iat, duration, seed, burst_mode: BurstMode::SingleBurst, mtu: 1514 }
    }

    pub fn with_burst_mode(mut self, mode: BurstMode) -> Self {
        self.burst_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(GenError::InvalidDuration(self.duration));
        }
        if self.mtu == 0 {
            return Err(GenError::InvalidMtu);
        }
        self.size.validate()?;
        self.iat.validate()?;
        Ok(())
    }
}

/// Packet lengths of one burst: full MTU packets then the remainder.
fn burst_lengths(bytes: u64, mtu: u32) -> impl Iterator<Item = u32> {
    let full = bytes / u64::from(mtu);
    let rem = (bytes % u64::from(mtu)) as u32;
    std::iter::repeat_n(mtu, full as usize).chain((rem > 0).then_some(rem))
}

/// `(offset from frame start in µs, length)` of every packet of a frame.
fn frame_layout(size: u64, mtu: u32, mode: BurstMode) -> Vec<(u64, u32)> {
    match mode {
        BurstMode::SingleBurst => burst_lengths(size, mtu).map(|l| (0, l)).collect(),
        BurstMode::TwoBurst { gap_us } => {
            let second = size / 2;
            let first = size - second;
            burst_lengths(first, mtu)
                .map(|l| (0, l))
                .chain(burst_lengths(second, mtu).map(|l| (gap_us, l)))
                .collect()
        }
    }
}

/// Draws frames until the next start time would reach the duration.
///
/// Sizes are rounded to whole bytes with a floor of one MTU packet;
/// inter-arrival times are rounded to whole microseconds with a floor of
/// 1 µs. Sizes and inter-arrival times use separate sub-streams of the seed,
/// so the size sequence equals `dist::sample(size, n, seed)` rounded.
/// Packet ranges and burst counts describe the frames as
/// [`packetize`] lays them out with the model's MTU and burst mode.
pub fn generate_frames(model: &TrafficModel) -> Result<FrameSequence, GenError> {
    model.validate()?;
    let size_model = Model::LogLogistic(model.size);
    let iat_model = Model::Burr(model.iat);
    let mut size_rng = seeded_rng(model.seed, 0);
    let mut iat_rng = seeded_rng(model.seed, 1);
    let end_us = model.duration * 1e6;

    let mut frames = Vec::new();
    let mut t: u64 = 0;
    let mut next_packet = 0;
    while (t as f64) < end_us {
        let size = (size_model.draw(&mut size_rng).round() as u64).max(u64::from(model.mtu));
        let layout = frame_layout(size, model.mtu, model.burst_mode);
        let last_offset = layout.last().map_or(0, |p| p.0);
        frames.push(FrameRecord {
            index: frames.len(),
            packets: next_packet..next_packet + layout.len(),
            bursts: if last_offset > 0 { 2 } else { 1 },
            size,
            first_tx: t,
            last_tx: t + last_offset,
            ack_times: Vec::new(),
            latency: None,
        });
        next_packet += layout.len();
        let iat_us = (iat_model.draw(&mut iat_rng) * 1000.0).round().max(1.0) as u64;
        t += iat_us;
    }
    let config = AnalyzerConfig { mtu_len: model.mtu, ..AnalyzerConfig::default() };
    Ok(FrameSequence { frames, config })
}

/// Turns frames into a downlink packet trace on the synthetic port pair.
pub fn packetize(fs: &FrameSequence, mtu: u32, mode: BurstMode) -> PacketTrace {
    let mut packets = Vec::new();
    for f in &fs.frames {
        for (offset, len) in frame_layout(f.size.max(1), mtu, mode) {
            packets.push(PacketRecord::downlink(f.first_tx + offset, SERVER_PORT, HEADSET_PORT, len));
        }
    }
    PacketTrace::new(packets)
}

/// Convenience: generate and packetize in one step.
pub fn generate_trace(model: &TrafficModel) -> Result<PacketTrace, GenError> {
    let fs = generate_frames(model)?;
    Ok(packetize(&fs, model.mtu, model.burst_mode))
}

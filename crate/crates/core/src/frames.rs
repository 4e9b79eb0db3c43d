//! Video frame identification by inter-packet gap.
//!
//! Packets of one frame leave the server back to back (same timestamp or a
//! short gap between the per-eye packet groups), while consecutive frames are
//! separated by a clearly longer idle period. Every gap shorter than the
//! interval threshold keeps a packet in the current frame; a gap at or above
//! the threshold starts a new one.

use std::io::{BufRead, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::FlowSignatures;
use crate::trace::PacketRecord;

/// Parameters of frame identification and ACK matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzerConfig {
    /// Interval threshold in microseconds.
    pub delta_t_thr: u64,
    /// On-wire length of a full video packet.
    pub mtu_len: u32,
    /// Uplink packets at or below this length are ACKs.
    pub ack_max_len: u32,
    /// Extension of each frame's ACK window past the next frame's start, in
    /// microseconds. Zero gives disjoint windows.
    pub ack_grace: u64,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self { delta_t_thr: 3000, mtu_len: 1514, ack_max_len: 60, ack_grace: 0 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("no video packets")]
    NoPackets,
    #[error("video packets are not sorted by timestamp (index {0})")]
    Unsorted(usize),
    #[error("insufficient frames: need at least 2, found {0}")]
    InsufficientFrames(usize),
    #[error("invalid analyzer config: {0}")]
    InvalidConfig(&'static str),
}

impl AnalyzerConfig {
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.delta_t_thr == 0 {
            return Err(FrameError::InvalidConfig("delta_t_thr must be positive"));
        }
        if self.mtu_len <= self.ack_max_len {
            return Err(FrameError::InvalidConfig("mtu_len must exceed ack_max_len"));
        }
        Ok(())
    }

    /// Flow signatures with this config's MTU and ACK limits.
    pub fn flow_signatures(&self) -> FlowSignatures {
        FlowSignatures {
            video_downlink: self.mtu_len,
            ack_max_len: self.ack_max_len,
            ..FlowSignatures::default()
        }
    }
}

/// One identified video frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub index: usize,
    /// Member packets as a range into the video downlink packet list.
    pub packets: Range<usize>,
    /// Number of distinct send timestamps among the member packets.
    pub bursts: u32,
    /// Sum of member on-wire lengths.
    pub size: u64,
    pub first_tx: u64,
    pub last_tx: u64,
    /// Receive times of the ACKs assigned to this frame, ascending.
    pub ack_times: Vec<u64>,
    /// Last ACK minus `first_tx`, once ACKs are matched.
    pub latency: Option<u64>,
}

impl FrameRecord {
    pub fn is_acked(&self) -> bool {
        !self.ack_times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    pub frames: Vec<FrameRecord>,
    pub config: AnalyzerConfig,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.frames.iter().map(|f| f.size).sum()
    }
}

/// Splits sorted downlink video packets into frames.
pub fn identify_frames(packets: &[PacketRecord], cfg: &AnalyzerConfig) -> Result<FrameSequence, FrameError> {
    cfg.validate()?;
    if packets.is_empty() {
        return Err(FrameError::NoPackets);
    }
    if let Some(i) = packets.windows(2).position(|w| w[1].ts < w[0].ts) {
        return Err(FrameError::Unsorted(i + 1));
    }

    let mut frames = Vec::new();
    let mut start = 0;
    for i in 1..=packets.len() {
        let boundary = i == packets.len() || packets[i].ts - packets[i - 1].ts >= cfg.delta_t_thr;
        if boundary {
            frames.push(frame_from_run(frames.len(), start..i, packets));
            start = i;
        }
    }
    Ok(FrameSequence { frames, config: *cfg })
}

fn frame_from_run(index: usize, range: Range<usize>, packets: &[PacketRecord]) -> FrameRecord {
    let members = &packets[range.clone()];
    let bursts = 1 + members.windows(2).filter(|w| w[1].ts != w[0].ts).count() as u32;
    FrameRecord {
        index,
        packets: range,
        bursts,
        size: members.iter().map(|p| u64::from(p.length)).sum(),
        first_tx: members[0].ts,
        last_tx: members[members.len() - 1].ts,
        ack_times: Vec::new(),
        latency: None,
    }
}

pub fn frame_sizes(fs: &FrameSequence) -> Vec<u64> {
    fs.frames.iter().map(|f| f.size).collect()
}

/// First-packet to first-packet spacing of successive frames, in
/// microseconds.
pub fn inter_arrival_times(fs: &FrameSequence) -> Result<Vec<u64>, FrameError> {
    if fs.frames.len() < 2 {
        return Err(FrameError::InsufficientFrames(fs.frames.len()));
    }
    Ok(fs.frames.windows(2).map(|w| w[1].first_tx - w[0].first_tx).collect())
}

/// One line of the frame JSONL export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLine {
    pub i: usize,
    pub size: u64,
    pub first_tx_us: u64,
    pub latency_us: Option<u64>,
    pub acked: bool,
}

impl From<&FrameRecord> for FrameLine {
    fn from(f: &FrameRecord) -> Self {
        FrameLine { i: f.index, size: f.size, first_tx_us: f.first_tx, latency_us: f.latency, acked: f.is_acked() }
    }
}

pub fn write_frames_jsonl<W: Write>(fs: &FrameSequence, mut out: W) -> std::io::Result<()> {
    for f in &fs.frames {
        serde_json::to_writer(&mut out, &FrameLine::from(f))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum FrameFileError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_frames_jsonl<R: BufRead>(input: R) -> Result<Vec<FrameLine>, FrameFileError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame = serde_json::from_str(&line).map_err(|source| FrameFileError::Json { line: i + 1, source })?;
        out.push(frame);
    }
    Ok(out)
}

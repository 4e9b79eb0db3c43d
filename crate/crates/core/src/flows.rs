//! Signature-based labeling of the streaming session's port pairs.
//!
//! The streaming client uses three port pairs: a video flow dominated by
//! MTU-sized downlink packets, a control flow (fixed-size uplink reports,
//! 54 B downlink ACKs) and an audio flow (fixed-size packets both ways).
//! Classification looks only at packet lengths and byte volume.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Direction, PacketTrace, PortPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowLabel {
    Video,
    Audio,
    Control,
    Unknown,
}

/// Exact on-wire lengths that identify each flow. A flow matches when the
/// relevant modal length equals the signature value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSignatures {
    pub video_downlink: u32,
    pub control_uplink: u32,
    pub control_downlink: u32,
    pub audio_downlink: u32,
    pub audio_uplink: u32,
    /// Packets at or below this length are ACKs and are ignored when
    /// computing the modal *data* length.
    pub ack_max_len: u32,
}

impl Default for FlowSignatures {
    fn default() -> Self {
        Self {
            video_downlink: 1514,
            control_uplink: 358,
            control_downlink: 54,
            audio_downlink: 1222,
            audio_uplink: 390,
            ack_max_len: 60,
        }
    }
}

/// Per-flow summary the labels are derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEvidence {
    pub ports: PortPair,
    pub label: FlowLabel,
    pub downlink_bytes: u64,
    pub downlink_packets: u64,
    pub uplink_bytes: u64,
    pub uplink_packets: u64,
    pub modal_downlink_len: Option<u32>,
    pub modal_uplink_len: Option<u32>,
    /// Modal length among packets longer than the ACK threshold.
    pub modal_downlink_data_len: Option<u32>,
    pub modal_uplink_data_len: Option<u32>,
}

/// Labels for every port pair seen in a trace, ordered by port pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowMap {
    pub flows: Vec<FlowEvidence>,
}

impl FlowMap {
    pub fn label(&self, ports: PortPair) -> FlowLabel {
        self.flows
            .iter()
            .find(|f| f.ports == ports)
            .map_or(FlowLabel::Unknown, |f| f.label)
    }

    pub fn video(&self) -> Option<&FlowEvidence> {
        self.flows.iter().find(|f| f.label == FlowLabel::Video)
    }

    pub fn with_label(&self, label: FlowLabel) -> impl Iterator<Item = &FlowEvidence> {
        self.flows.iter().filter(move |f| f.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("flow map serializes")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("empty trace")]
    EmptyTrace,
    #[error("no video flow found")]
    NoVideoFlow,
}

#[derive(Default)]
struct LengthHistogram {
    counts: HashMap<u32, u64>,
}

impl LengthHistogram {
    fn add(&mut self, len: u32) {
        *self.counts.entry(len).or_default() += 1;
    }

    /// Most frequent length; ties go to the shorter length.
    fn mode(&self, mut keep: impl FnMut(u32) -> bool) -> Option<u32> {
        self.counts
            .iter()
            .filter(|(len, _)| keep(**len))
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(len, _)| *len)
    }
}

#[derive(Default)]
struct FlowAccumulator {
    down_packets: u64,
    down_bytes: u64,
    up_packets: u64,
    up_bytes: u64,
    down_lengths: LengthHistogram,
    up_lengths: LengthHistogram,
}

/// Labels the port pairs of `trace`.
///
/// Video is the highest-volume pair whose modal downlink length is the MTU
/// signature (volume ties go to the lower port pair). Control and Audio are
/// matched on their modal lengths among the remaining pairs; any other pair
/// is Unknown. Fails if no pair carries the video signature.
pub fn classify_flows(trace: &PacketTrace, sig: &FlowSignatures) -> Result<FlowMap, ClassifyError> {
    if trace.is_empty() {
        return Err(ClassifyError::EmptyTrace);
    }
    let mut acc: BTreeMap<PortPair, FlowAccumulator> = BTreeMap::new();
    for p in &trace.packets {
        let flow = acc.entry(p.port_pair()).or_default();
        match p.direction {
            Direction::Downlink => {
                flow.down_packets += 1;
                flow.down_bytes += u64::from(p.length);
                flow.down_lengths.add(p.length);
            }
            Direction::Uplink => {
                flow.up_packets += 1;
                flow.up_bytes += u64::from(p.length);
                flow.up_lengths.add(p.length);
            }
        }
    }

    let is_data = |len: u32| len > sig.ack_max_len;
    let mut flows: Vec<FlowEvidence> = acc
        .into_iter()
        .map(|(ports, a)| FlowEvidence {
            ports,
            label: FlowLabel::Unknown,
            downlink_bytes: a.down_bytes,
            downlink_packets: a.down_packets,
            uplink_bytes: a.up_bytes,
            uplink_packets: a.up_packets,
            modal_downlink_len: a.down_lengths.mode(|_| true),
            modal_uplink_len: a.up_lengths.mode(|_| true),
            modal_downlink_data_len: a.down_lengths.mode(is_data),
            modal_uplink_data_len: a.up_lengths.mode(is_data),
        })
        .collect();

    // `flows` is in port-pair order, so the first maximum wins ties.
    let video = flows
        .iter()
        .enumerate()
        .filter(|(_, f)| f.modal_downlink_len == Some(sig.video_downlink))
        .fold(None::<(usize, u64)>, |best, (i, f)| match best {
            Some((_, bytes)) if bytes >= f.downlink_bytes => best,
            _ => Some((i, f.downlink_bytes)),
        })
        .map(|(i, _)| i)
        .ok_or(ClassifyError::NoVideoFlow)?;

    for (i, f) in flows.iter_mut().enumerate() {
        f.label = if i == video {
            FlowLabel::Video
        } else if f.modal_uplink_len == Some(sig.control_uplink)
            && f.modal_downlink_len == Some(sig.control_downlink)
        {
            FlowLabel::Control
        } else if f.modal_downlink_data_len == Some(sig.audio_downlink)
            && f.modal_uplink_data_len == Some(sig.audio_uplink)
        {
            FlowLabel::Audio
        } else {
            FlowLabel::Unknown
        };
    }
    Ok(FlowMap { flows })
}

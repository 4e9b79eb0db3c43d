//! Frame-level QoS metrics from a server-side capture.
//!
//! The server sees its own video transmissions and the small uplink ACKs the
//! headset returns. A frame without any ACK counts as lost, and frame
//! latency runs from the first data packet's transmission to the reception
//! of the frame's last ACK.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{classify_flows, ClassifyError};
use crate::frames::{identify_frames, inter_arrival_times, AnalyzerConfig, FrameError, FrameSequence};
use crate::trace::{Direction, PacketRecord, PacketTrace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no frames")]
    NoFrames,
    #[error("no latency samples")]
    NoLatencySamples,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Frames(#[from] FrameError),
}

/// Assigns uplink ACKs to frames.
///
/// An ACK received at `t` may belong to any frame `f` with
/// `first_tx(f) <= t` whose window is still open, that is `f` is the last
/// frame or `t < first_tx(f+1) + grace`. With `grace == 0` that leaves only
/// the latest frame sent at or before `t`.
///
/// A larger grace lets ACKs delayed by queueing stay with their frame. The
/// path is FIFO, so the assignment never moves backwards in frame order,
/// and among all such assignments the one with the smallest total change in
/// latency between consecutive ACKs is chosen. A lost frame then leaves a
/// gap rather than taking the next frame's ACK.
///
/// On a strictly periodic stream with constant delay, losing the last
/// frames looks exactly like every ACK being one frame later; ties are
/// therefore broken towards earlier frames, since the start of a capture
/// is normally uncongested.
///
/// ACKs received before the first frame are ignored.
pub fn match_acks(mut fs: FrameSequence, video_uplink: &[PacketRecord], cfg: &AnalyzerConfig) -> FrameSequence {
    for f in &mut fs.frames {
        f.ack_times.clear();
        f.latency = None;
    }
    let Some(first) = fs.frames.first().map(|f| f.first_tx) else {
        return fs;
    };

    let mut acks: Vec<u64> = video_uplink
        .iter()
        .filter(|p| p.length <= cfg.ack_max_len && p.ts >= first)
        .map(|p| p.ts)
        .collect();
    acks.sort_unstable();

    for (t, f) in acks.iter().zip(align(&fs, &acks, cfg.ack_grace)) {
        fs.frames[f].ack_times.push(*t);
    }
    for f in &mut fs.frames {
        f.latency = f.ack_times.last().map(|&last| last - f.first_tx);
    }
    fs
}

/// Frame index per ACK; `acks` sorted and none before the first frame.
fn align(fs: &FrameSequence, acks: &[u64], grace: u64) -> Vec<usize> {
    let starts: Vec<u64> = fs.frames.iter().map(|f| f.first_tx).collect();
    // candidate frames lo..=hi for each ACK
    let ranges: Vec<(usize, usize)> = acks
        .iter()
        .map(|&t| {
            let hi = starts.partition_point(|&s| s <= t) - 1;
            let closed = starts[1..].partition_point(|&s| s.saturating_add(grace) <= t);
            (closed.min(hi), hi)
        })
        .collect();
    if grace == 0 {
        return ranges.iter().map(|r| r.1).collect();
    }

    // cost = (total absolute latency change, minus the sum of latencies)
    let mut cost: Vec<(u64, i64)> = Vec::new();
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(acks.len());
    let mut prev_range = (0, 0);
    for (k, (&t, &(lo, hi))) in acks.iter().zip(&ranges).enumerate() {
        let mut next = Vec::with_capacity(hi - lo + 1);
        let mut from = Vec::with_capacity(hi - lo + 1);
        for f in lo..=hi {
            let lat = t - starts[f];
            if k == 0 {
                next.push((0, -(lat as i64)));
                from.push(0);
                continue;
            }
            let (plo, phi) = prev_range;
            let prev_t = acks[k - 1];
            let mut best = (u64::MAX, i64::MAX);
            let mut arg = plo;
            for p in plo..=phi.min(f) {
                let (tv, sum) = cost[p - plo];
                let step = lat.abs_diff(prev_t - starts[p]);
                let c = (tv + step, sum - lat as i64);
                if c < best {
                    best = c;
                    arg = p;
                }
            }
            next.push(best);
            from.push(arg as u32);
        }
        cost = next;
        back.push(from);
        prev_range = (lo, hi);
    }

    let mut out = vec![0; acks.len()];
    let Some(&(lo, _)) = ranges.last() else {
        return out;
    };
    let mut f = lo + (0..cost.len()).min_by_key(|&i| cost[i]).expect("non-empty range");
    for k in (0..acks.len()).rev() {
        out[k] = f;
        f = back[k][f - ranges[k].0] as usize;
    }
    out
}

pub fn frame_loss_rate(fs: &FrameSequence) -> Result<f64, MetricsError> {
    if fs.frames.is_empty() {
        return Err(MetricsError::NoFrames);
    }
    let lost = fs.frames.iter().filter(|f| !f.is_acked()).count();
    Ok(lost as f64 / fs.frames.len() as f64)
}

/// Latency of every acked frame, in microseconds, in frame order.
pub fn frame_latency(fs: &FrameSequence) -> Result<Vec<u64>, MetricsError> {
    let lat: Vec<u64> = fs
        .frames
        .iter()
        .filter_map(|f| f.ack_times.last().map(|&last| last - f.first_tx))
        .collect();
    if lat.is_empty() {
        return Err(MetricsError::NoLatencySamples);
    }
    Ok(lat)
}

/// Labels echoed from the trace metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportLabels {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<String>,
}

impl ReportLabels {
    pub fn from_metadata(meta: &BTreeMap<String, String>) -> Self {
        Self {
            game: meta.get("game").cloned(),
            mode: meta.get("mode").cloned(),
            limit: meta.get("limit").cloned(),
        }
    }
}

/// Per-trace summary of the video flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Bytes.
    pub avg_frame_size: f64,
    /// Mbps (10^6 bit/s) over the video downlink span.
    pub data_rate: f64,
    /// Milliseconds.
    pub avg_inter_arrival: f64,
    /// Fraction in [0, 1].
    pub frame_loss_rate: f64,
    /// Milliseconds; `None` when no frame was acknowledged.
    pub avg_frame_latency: Option<f64>,
    pub frame_count: usize,
    /// Seconds between the first and last video downlink packet.
    pub duration: f64,
    pub labels: ReportLabels,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Everything `summarize` derives, for callers that need more than the report.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: MetricsReport,
    pub frames: FrameSequence,
}

/// Full pipeline: classify flows, identify frames, match ACKs, compute
/// metrics.
pub fn summarize(trace: &PacketTrace, cfg: &AnalyzerConfig) -> Result<MetricsReport, MetricsError> {
    analyze(trace, cfg).map(|a| a.report)
}

pub fn analyze(trace: &PacketTrace, cfg: &AnalyzerConfig) -> Result<Analysis, MetricsError> {
    cfg.validate()?;
    let flows = classify_flows(trace, &cfg.flow_signatures())?;
    let video = flows.video().ok_or(ClassifyError::NoVideoFlow)?.ports;
    let down = trace.flow_packets(video, Direction::Downlink);
    let up = trace.flow_packets(video, Direction::Uplink);

    let frames = identify_frames(&down, cfg)?;
    let iat = inter_arrival_times(&frames)?;
    let frames = match_acks(frames, &up, cfg);

    let total_bytes = frames.total_bytes();
    let frame_count = frames.len();
    let duration_us = down[down.len() - 1].ts - down[0].ts;
    let duration = duration_us as f64 / 1e6;
    let latencies = frame_latency(&frames).ok();

    let report = MetricsReport {
        avg_frame_size: total_bytes as f64 / frame_count as f64,
        data_rate: total_bytes as f64 * 8.0 / duration_us as f64,
        avg_inter_arrival: iat.iter().sum::<u64>() as f64 / iat.len() as f64 / 1000.0,
        frame_loss_rate: frame_loss_rate(&frames)?,
        avg_frame_latency: latencies.map(|l| l.iter().sum::<u64>() as f64 / l.len() as f64 / 1000.0),
        frame_count,
        duration,
        labels: ReportLabels::from_metadata(&trace.metadata),
    };
    Ok(Analysis { report, frames })
}

pub const REPORT_CSV_HEADER: &str =
    "game,mode,limit,frame_count,duration,avg_frame_size,data_rate,avg_inter_arrival,frame_loss_rate,avg_frame_latency";

/// One CSV row per report, for side-by-side comparison of traces.
pub fn write_reports_csv<W: Write>(reports: &[MetricsReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        let l = &r.labels;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            l.game.as_deref().unwrap_or(""),
            l.mode.as_deref().unwrap_or(""),
            l.limit.as_deref().unwrap_or(""),
            r.frame_count,
            r.duration,
            r.avg_frame_size,
            r.data_rate,
            r.avg_inter_arrival,
            r.frame_loss_rate,
            r.avg_frame_latency.map(|v| v.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

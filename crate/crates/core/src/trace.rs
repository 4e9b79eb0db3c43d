//! Canonical packet-trace model and its two text encodings.
//!
//! CSV (header `ts_us,dir,src_port,dst_port,len`, `\n` line endings, no
//! quoting) and JSONL (one object per line with the same keys). Both are
//! produced from a capture by an external export step; nothing here reads
//! pcap.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const CSV_HEADER: &str = "ts_us,dir,src_port,dst_port,len";

/// Packet direction relative to the streaming server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Server to headset.
    #[serde(rename = "D")]
    Downlink,
    /// Headset to server.
    #[serde(rename = "U")]
    Uplink,
}

impl Direction {
    pub fn code(self) -> &'static str {
        match self {
            Direction::Downlink => "D",
            Direction::Uplink => "U",
        }
    }
}

impl FromStr for Direction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "D" => Ok(Direction::Downlink),
            "U" => Ok(Direction::Uplink),
            _ => Err(()),
        }
    }
}

/// One captured packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketRecord {
    /// Microseconds since the trace epoch.
    pub ts: u64,
    pub direction: Direction,
    pub src_port: u16,
    pub dst_port: u16,
    /// On-wire (Ethernet frame) length in bytes, always >= 1.
    pub length: u32,
}

impl PacketRecord {
    pub fn downlink(ts: u64, src_port: u16, dst_port: u16, length: u32) -> Self {
        Self { ts, direction: Direction::Downlink, src_port, dst_port, length }
    }

    pub fn uplink(ts: u64, src_port: u16, dst_port: u16, length: u32) -> Self {
        Self { ts, direction: Direction::Uplink, src_port, dst_port, length }
    }

    /// Unordered port pair identifying the flow this packet belongs to.
    pub fn port_pair(&self) -> PortPair {
        PortPair::new(self.src_port, self.dst_port)
    }
}

/// Unordered pair of ports, stored with the lower port first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u16; 2]", into = "[u16; 2]")]
pub struct PortPair {
    low: u16,
    high: u16,
}

impl PortPair {
    pub fn new(a: u16, b: u16) -> Self {
        Self { low: a.min(b), high: a.max(b) }
    }

    pub fn low(&self) -> u16 {
        self.low
    }

    pub fn high(&self) -> u16 {
        self.high
    }

    pub fn contains(&self, packet: &PacketRecord) -> bool {
        packet.port_pair() == *self
    }
}

impl From<[u16; 2]> for PortPair {
    fn from(p: [u16; 2]) -> Self {
        PortPair::new(p[0], p[1])
    }
}

impl From<PortPair> for [u16; 2] {
    fn from(p: PortPair) -> Self {
        [p.low, p.high]
    }
}

impl fmt::Display for PortPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<->{}", self.low, self.high)
    }
}

/// An ordered packet capture.
///
/// `packets` is kept sorted by timestamp; packets sharing a timestamp keep
/// the order they had in the source file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PacketTrace {
    pub packets: Vec<PacketRecord>,
    /// Wall-clock origin of `ts = 0`, informational only.
    pub epoch: Option<String>,
    /// Free-form labels (game, mode, limit, ...).
    pub metadata: BTreeMap<String, String>,
}

impl PacketTrace {
    /// Builds a trace, stably sorting the packets by timestamp.
    pub fn new(mut packets: Vec<PacketRecord>) -> Self {
        packets.sort_by_key(|p| p.ts);
        Self { packets, epoch: None, metadata: BTreeMap::new() }
    }

    pub fn with_label(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.packets.windows(2).all(|w| w[0].ts <= w[1].ts)
    }

    /// Packets of one flow in one direction, in trace order.
    pub fn flow_packets(&self, pair: PortPair, direction: Direction) -> Vec<PacketRecord> {
        self.packets
            .iter()
            .filter(|p| p.direction == direction && pair.contains(p))
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// Guesses the format from a file extension; anything but `.jsonl` or
    /// `.json` is treated as CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Ts,
    Dir,
    SrcPort,
    DstPort,
    Len,
    /// The row as a whole (wrong column count, not a JSON object, ...).
    Row,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Ts => "ts_us",
            Field::Dir => "dir",
            Field::SrcPort => "src_port",
            Field::DstPort => "dst_port",
            Field::Len => "len",
            Field::Row => "row",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("empty trace")]
    Empty,
    #[error("line {line}: invalid {field}: {reason}")]
    Malformed { line: usize, field: Field, reason: String },
    #[error("trace is not valid UTF-8")]
    Encoding,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn malformed(line: usize, field: Field, reason: impl Into<String>) -> TraceError {
    TraceError::Malformed { line, field, reason: reason.into() }
}

/// Parses a CSV or JSONL trace.
///
/// The CSV header is optional on input. Blank lines are skipped and line
/// numbers in errors are 1-based physical lines. Input with no content at
/// all is rejected; a header-only file yields an empty trace.
pub fn parse_trace(input: &[u8], format: TraceFormat) -> Result<PacketTrace, TraceError> {
    let text = std::str::from_utf8(input).map_err(|_| TraceError::Encoding)?;
    if text.trim().is_empty() {
        return Err(TraceError::Empty);
    }
    let mut packets = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let record = match format {
            TraceFormat::Csv => {
                if line == CSV_HEADER {
                    continue;
                }
                parse_csv_row(line, line_no)?
            }
            TraceFormat::Jsonl => parse_json_row(line, line_no)?,
        };
        packets.push(record);
    }
    Ok(PacketTrace::new(packets))
}

fn parse_csv_row(line: &str, line_no: usize) -> Result<PacketRecord, TraceError> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 5 {
        return Err(malformed(line_no, Field::Row, format!("expected 5 columns, found {}", cols.len())));
    }
    let ts = parse_int::<u64>(cols[0], line_no, Field::Ts)?;
    let direction = cols[1]
        .parse::<Direction>()
        .map_err(|_| malformed(line_no, Field::Dir, format!("expected D or U, found {:?}", cols[1])))?;
    let src_port = parse_int::<u16>(cols[2], line_no, Field::SrcPort)?;
    let dst_port = parse_int::<u16>(cols[3], line_no, Field::DstPort)?;
    let length = parse_len(parse_int::<u32>(cols[4], line_no, Field::Len)?, line_no)?;
    Ok(PacketRecord { ts, direction, src_port, dst_port, length })
}

fn parse_int<T: FromStr>(s: &str, line_no: usize, field: Field) -> Result<T, TraceError> {
    // `str::parse` accepts a leading '+', the format does not.
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(line_no, field, format!("expected a non-negative integer, found {s:?}")));
    }
    s.parse::<T>().map_err(|_| malformed(line_no, field, format!("{s} is out of range")))
}

fn parse_len(len: u32, line_no: usize) -> Result<u32, TraceError> {
    if len == 0 {
        return Err(malformed(line_no, Field::Len, "length must be at least 1"));
    }
    Ok(len)
}

fn parse_json_row(line: &str, line_no: usize) -> Result<PacketRecord, TraceError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| malformed(line_no, Field::Row, e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(line_no, Field::Row, "expected a JSON object"))?;
    let uint = |field: Field, max: u64| -> Result<u64, TraceError> {
        let v = obj
            .get(field.name())
            .ok_or_else(|| malformed(line_no, field, "missing"))?;
        let n = v
            .as_u64()
            .ok_or_else(|| malformed(line_no, field, format!("expected a non-negative integer, found {v}")))?;
        if n > max {
            return Err(malformed(line_no, field, format!("{n} is out of range")));
        }
        Ok(n)
    };
    let ts = uint(Field::Ts, u64::MAX)?;
    let direction = match obj.get("dir").and_then(Value::as_str) {
        Some(s) => s
            .parse::<Direction>()
            .map_err(|_| malformed(line_no, Field::Dir, format!("expected D or U, found {s:?}")))?,
        None => return Err(malformed(line_no, Field::Dir, "missing or not a string")),
    };
    let src_port = uint(Field::SrcPort, u16::MAX as u64)? as u16;
    let dst_port = uint(Field::DstPort, u16::MAX as u64)? as u16;
    let length = parse_len(uint(Field::Len, u32::MAX as u64)? as u32, line_no)?;
    Ok(PacketRecord { ts, direction, src_port, dst_port, length })
}

/// Serializes a trace. CSV output always starts with the header line; JSONL
/// output has no header. Epoch and metadata are not part of either format.
pub fn write_trace<W: Write>(trace: &PacketTrace, format: TraceFormat, mut out: W) -> std::io::Result<()> {
    match format {
        TraceFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for p in &trace.packets {
                writeln!(out, "{},{},{},{},{}", p.ts, p.direction.code(), p.src_port, p.dst_port, p.length)?;
            }
        }
        TraceFormat::Jsonl => {
            for p in &trace.packets {
                writeln!(
                    out,
                    r#"{{"ts_us":{},"dir":"{}","src_port":{},"dst_port":{},"len":{}}}"#,
                    p.ts,
                    p.direction.code(),
                    p.src_port,
                    p.dst_port,
                    p.length
                )?;
            }
        }
    }
    Ok(())
}

/// Convenience wrapper around [`write_trace`] returning the encoded bytes.
pub fn encode_trace(trace: &PacketTrace, format: TraceFormat) -> Vec<u8> {
    let mut buf = Vec::with_capacity(trace.packets.len() * 32 + CSV_HEADER.len() + 1);
    write_trace(trace, format, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

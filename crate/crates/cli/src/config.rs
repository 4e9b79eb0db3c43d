//! Optional TOML config file. Keys mirror the command-line flags; a flag
//! given on the command line always wins over the file, and the file wins
//! over built-in defaults.
//!
//! ```toml
//! [analyzer]
//! delta_t_thr_ms = 3.0
//! ack_grace_ms = 0.0
//!
//! [link]
//! capacity_mbps = [54.0, 40.5, 27.0]
//! queue_kib = 256
//! owd_us = 2000
//!
//! [generate]
//! duration = 10.0
//! seed = 0
//! burst_mode = "two"
//! ```

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use crate::error::{Classify, Result};

pub const CONFIG_ENV: &str = "VRTRAFFIC_CONFIG";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub analyzer: AnalyzerSection,
    pub link: LinkSection,
    pub generate: GenerateSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerSection {
    pub delta_t_thr_ms: Option<f64>,
    pub mtu: Option<u32>,
    pub ack_max_len: Option<u32>,
    pub ack_grace_ms: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub capacity_mbps: Option<Vec<f64>>,
    pub queue_kib: Option<u64>,
    pub owd_us: Option<u64>,
    pub ack_turnaround_us: Option<u64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub duration: Option<f64>,
    pub seed: Option<u64>,
    pub burst_mode: Option<String>,
    pub burst_gap_us: Option<u64>,
    pub mtu: Option<u32>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .input()?;
        let cfg = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .input()?;
        log::debug!("loaded config from {}", path.display());
        Ok(cfg)
    }
}

pub mod analyze;
pub mod fit;
pub mod generate;
pub mod report;
pub mod simulate;

use vrtraffic::frames::AnalyzerConfig;

use crate::args::AnalyzerArgs;
use crate::config::AnalyzerSection;
use crate::error::{input_error, Classify, Result};

fn ms_to_us(name: &str, ms: f64) -> Result<u64> {
    if !(ms.is_finite() && ms >= 0.0) {
        return Err(input_error(format!("{name} must be a non-negative number of ms, got {ms}")));
    }
    Ok((ms * 1000.0).round() as u64)
}

/// Analyzer settings from flags, then the config file, then defaults.
pub fn analyzer_config(args: &AnalyzerArgs, file: &AnalyzerSection) -> Result<AnalyzerConfig> {
    let d = AnalyzerConfig::default();
    let cfg = AnalyzerConfig {
        delta_t_thr: match args.delta_t_thr_ms.or(file.delta_t_thr_ms) {
            Some(ms) => ms_to_us("delta-t-thr-ms", ms)?,
            None => d.delta_t_thr,
        },
        mtu_len: args.mtu.or(file.mtu).unwrap_or(d.mtu_len),
        ack_max_len: args.ack_max_len.or(file.ack_max_len).unwrap_or(d.ack_max_len),
        ack_grace: match args.ack_grace_ms.or(file.ack_grace_ms) {
            Some(ms) => ms_to_us("ack-grace-ms", ms)?,
            None => d.ack_grace,
        },
    };
    cfg.validate().input()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(thr: Option<f64>) -> AnalyzerArgs {
        AnalyzerArgs { delta_t_thr_ms: thr, mtu: None, ack_max_len: None, ack_grace_ms: None, input_format: None }
    }

    #[test]
    fn precedence() {
        let file = AnalyzerSection { delta_t_thr_ms: Some(4.0), ack_grace_ms: Some(1.5), ..Default::default() };
        assert_eq!(analyzer_config(&flags(None), &AnalyzerSection::default()).unwrap(), AnalyzerConfig::default());
        let from_file = analyzer_config(&flags(None), &file).unwrap();
        assert_eq!((from_file.delta_t_thr, from_file.ack_grace), (4000, 1500));
        assert_eq!(analyzer_config(&flags(Some(5.0)), &file).unwrap().delta_t_thr, 5000);
        assert!(analyzer_config(&flags(Some(0.0)), &file).is_err());
        assert!(analyzer_config(&flags(Some(-1.0)), &file).is_err());
    }
}

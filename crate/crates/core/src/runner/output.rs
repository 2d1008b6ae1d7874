use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::config::ScenarioConfig;
use crate::error::Result;
use crate::flow::{series, Calibration, FlowTrajectory, Truncation};
use crate::loja::{CheckReport, Verdict};

/// The quantity behind each recorded series, written out.
pub fn series_anchor(name: &str) -> &'static str {
    match name {
        "t" => "time of the sample (t for the rescaled flow, s for the unrescaled one)",
        series::F => "F(Sigma) = int_Sigma (4 pi)^{-n/2} e^{-|x|^2/4}",
        series::PHI_SQ => "int_Sigma |phi|^2 rho, phi = H + x^perp/2",
        series::PHI_SQ_BALL => "int_{Sigma cap B_{3 e^{t/2} r0}} |phi|^2 rho",
        series::MU_COMPACT => "mu(t) = exp(K^2 e^{-t})",
        series::F_TILDE_COMPACT => "F~(t) = exp(K^2 e^{-t}) F(Sigma_t)",
        series::F_HAT => "F^(t) = int_{Sigma_t} psi_t^2 rho",
        series::MU_LOCALIZED => "mu(t) = exp(K1 e^{-t})",
        series::F_TILDE_LOCALIZED => "F~(t) = exp(K1 e^{-t}) F^(t) + K3 e^{-nt/2}",
        series::F_PSI => "F^psi_{0,-s}(M_s) = int_{M_s} psi rho_{0,-s}",
        series::MAX_A => "max |A| over the slice",
        series::GRAPH_C0 => "sup |U| of the normal graph over the model",
        series::GRAPH_C2ALPHA => "C^{2,1/2} norm of the normal graph U",
        series::GRAPH_L2 => "||U||_{L^2} with Gaussian weight",
        _ => "",
    }
}

/// Shortest round-trip float text, so tables are byte-stable.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

/// One row per recorded sample; `#` lines above the header name the
/// quantity in each column.
pub fn series_csv(traj: &FlowTrajectory) -> String {
    let names: Vec<&String> = traj.series.keys().collect();
    let mut out = String::new();
    let _ = writeln!(out, "# t: {}", series_anchor("t"));
    for n in &names {
        let _ = writeln!(out, "# {n}: {}", series_anchor(n));
    }
    out.push('t');
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        out.push_str(&fmt_f64(*t));
        for n in &names {
            out.push(',');
            out.push_str(&fmt_f64(traj.series[*n][k]));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub anchor: String,
    pub verdict: Option<Verdict>,
    pub min_slack: Option<f64>,
    pub file: Option<String>,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryInfo {
    pub samples: usize,
    pub t_first: f64,
    pub t_last: f64,
    pub truncation: Option<Truncation>,
}

/// Everything needed to reproduce and audit a run. `timestamp` is the only
/// field that changes between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub version: String,
    pub seed: u64,
    pub g_rescaling: String,
    pub k1_exponent: String,
    pub exit_code: i32,
    pub config: ScenarioConfig,
    pub calibration: Option<Calibration>,
    pub constants: BTreeMap<String, f64>,
    pub trajectory: Option<TrajectoryInfo>,
    pub checks: Vec<CheckSummary>,
    pub anchors: BTreeMap<String, String>,
    pub timestamp: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SERIES_FILE: &str = "series.csv";
pub const REPORT_DIR: &str = "reports";

pub fn write_report(dir: &Path, key: &str, report: &CheckReport) -> Result<String> {
    let rel = format!("{REPORT_DIR}/{key}.json");
    std::fs::create_dir_all(dir.join(REPORT_DIR))?;
    std::fs::write(dir.join(&rel), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(rel)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(m)? + "\n")?;
    Ok(())
}

/// Manifest text with the timestamp removed, for byte comparisons.
pub fn manifest_without_timestamp(text: &str) -> Result<String> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("timestamp");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for v in [0.0, -1.5, 1e-300, 2.0f64.sqrt(), 6.02e23] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn every_recorded_series_is_anchored() {
        for name in [series::F, series::PHI_SQ, series::MU_COMPACT, series::F_TILDE_LOCALIZED, series::GRAPH_C0] {
            assert!(!series_anchor(name).is_empty(), "{name}");
        }
    }

    #[test]
    fn timestamp_is_dropped() {
        let a = manifest_without_timestamp(r#"{"scenario": "x", "timestamp": 1}"#).unwrap();
        let b = manifest_without_timestamp(r#"{"scenario": "x", "timestamp": 2}"#).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("timestamp"));
    }
}

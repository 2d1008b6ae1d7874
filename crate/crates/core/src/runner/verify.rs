use serde::Deserialize;
use std::path::Path;

use super::output::{Manifest, MANIFEST_FILE, REPORT_DIR};
use super::run::{exit_code, EXIT_ERROR};
use crate::error::{Error, Result};
use crate::loja::Verdict;

/// A report as stored on disk; non-finite slacks are written as `null`.
#[derive(Debug, Deserialize)]
struct StoredReport {
    name: String,
    anchor: String,
    slacks: Vec<Option<f64>>,
    tolerance: f64,
    min_slack: Option<f64>,
    verdict: Verdict,
    notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportCheck {
    pub name: String,
    pub stored: Verdict,
    /// Verdict re-derived from the slacks and tolerance.
    pub recomputed: Verdict,
    pub consistent: bool,
    pub message: Option<String>,
}

impl ReportCheck {
    pub fn exit_code(&self) -> i32 {
        if self.consistent {
            exit_code(&[self.stored])
        } else {
            EXIT_ERROR
        }
    }
}

/// Re-derives the verdict of one serialized report. A stored failure with a
/// stated reason and no violating slack is consistent (the check failed for
/// a structural reason); a vacuous report is taken as stored.
pub fn verify_report_text(text: &str) -> Result<ReportCheck> {
    let r: StoredReport = serde_json::from_str(text)?;
    if r.anchor.trim().is_empty() {
        return Err(Error::InvalidInput(format!("report {} names no inequality", r.name)));
    }
    let slacks: Vec<f64> = r.slacks.iter().map(|s| s.unwrap_or(f64::NAN)).collect();
    let violated = slacks.iter().any(|s| !(*s >= -r.tolerance));
    let recomputed = if r.verdict == Verdict::Vacuous {
        Verdict::Vacuous
    } else if violated {
        Verdict::Fail
    } else if r.verdict == Verdict::Fail && !r.notes.is_empty() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    let min = slacks.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let mut message = None;
    let mut consistent = recomputed == r.verdict;
    if !consistent {
        message = Some(format!("stored verdict {:?} but slacks give {:?}", r.verdict, recomputed));
    }
    if r.verdict != Verdict::Vacuous && !violated {
        let same = match (min, r.min_slack) {
            (None, None) => true,
            (Some(a), Some(b)) => a == b,
            _ => false,
        };
        if !same {
            consistent = false;
            message = Some(format!("stored min slack {:?} but slacks give {:?}", r.min_slack, min));
        }
    }
    Ok(ReportCheck { name: r.name, stored: r.verdict, recomputed, consistent, message })
}

/// Verifies a single report file, or an output directory (every report under
/// `reports/`, cross-checked against the manifest). Returns the per-report
/// results and the exit status.
pub fn verify_path(path: &Path) -> Result<(Vec<ReportCheck>, i32)> {
    if path.is_file() {
        let c = verify_report_text(&std::fs::read_to_string(path)?)?;
        let code = c.exit_code();
        return Ok((vec![c], code));
    }
    let dir = path.join(REPORT_DIR);
    let mut files: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InsufficientData(format!("no reports under {}", dir.display())));
    }
    let mut checks = Vec::new();
    for f in &files {
        checks.push(verify_report_text(&std::fs::read_to_string(f)?)?);
    }
    let manifest_path = path.join(MANIFEST_FILE);
    if manifest_path.is_file() {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
        for s in &m.checks {
            let Some(file) = &s.file else { continue };
            let stem = Path::new(file).file_stem().and_then(|x| x.to_str()).unwrap_or("");
            let found = files.iter().position(|f| f.file_stem().and_then(|x| x.to_str()) == Some(stem));
            match found {
                Some(i) if Some(checks[i].stored) == s.verdict => {}
                Some(i) => {
                    checks[i].consistent = false;
                    checks[i].message = Some(format!("manifest records {:?} for {}", s.verdict, s.name));
                }
                None => return Err(Error::InsufficientData(format!("manifest lists missing report {file}"))),
            }
        }
    }
    let code = if checks.iter().any(|c| !c.consistent) {
        EXIT_ERROR
    } else {
        exit_code(&checks.iter().map(|c| c.stored).collect::<Vec<_>>())
    };
    Ok((checks, code))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loja::CheckReport;
    use crate::runner::{preset, run_scenario, CheckName, EXIT_FAIL};

    fn text(r: &CheckReport) -> String {
        serde_json::to_string(r).unwrap()
    }

    #[test]
    fn stored_verdicts_are_recomputed() {
        let pass = CheckReport::new("c", "a <= b").with_slacks(vec![0.0, 1.0], vec![0.5, 0.0], 0.0);
        assert!(verify_report_text(&text(&pass)).unwrap().consistent);
        let fail = CheckReport::new("c", "a <= b").with_slacks(vec![0.0, 1.0], vec![0.5, -0.1], 0.0);
        let c = verify_report_text(&text(&fail)).unwrap();
        assert!(c.consistent);
        assert_eq!(c.exit_code(), EXIT_FAIL);
        let tampered = text(&fail).replace("\"fail\"", "\"pass\"");
        let c = verify_report_text(&tampered).unwrap();
        assert!(!c.consistent);
        assert_eq!(c.recomputed, Verdict::Fail);
        assert_eq!(c.exit_code(), EXIT_ERROR);
        let unanchored = CheckReport::new("c", " ").with_slacks(vec![0.0], vec![1.0], 0.0);
        assert!(verify_report_text(&text(&unanchored)).is_err());
    }

    #[test]
    fn output_directory_is_cross_checked() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = preset("circle-shrinker-static").unwrap();
        cfg.t_end = 0.3;
        cfg.checks = vec![CheckName::MonotonicityCompact, CheckName::L2Control];
        run_scenario(&cfg, dir.path()).unwrap();
        let (checks, code) = verify_path(dir.path()).unwrap();
        assert_eq!((checks.len(), code), (2, 0));
        let p = dir.path().join("reports/l2_control.json");
        let t = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, t.replace("\"pass\"", "\"vacuous\"")).unwrap();
        let (checks, code) = verify_path(dir.path()).unwrap();
        assert_eq!(code, EXIT_ERROR);
        assert!(checks.iter().any(|c| !c.consistent));
    }
}

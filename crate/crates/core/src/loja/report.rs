use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypothesis side of the implication failed; nothing was tested.
    Vacuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Evaluated from a closed-form rule of the underlying argument.
    Formula,
    /// Smallest value making the inequality hold on the sampled data.
    Fitted,
    /// Supplied by the scenario configuration.
    Configured,
    /// Measured from the data (e.g. a curvature bound).
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
    pub note: String,
}

/// Outcome of one inequality verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// The inequality being verified, written out.
    pub anchor: String,
    /// Sample location (time or index) of each slack.
    pub sample_times: Vec<f64>,
    /// `RHS - LHS` per sample.
    pub slacks: Vec<f64>,
    pub tolerance: f64,
    pub min_slack: Option<f64>,
    pub verdict: Verdict,
    pub constants: Vec<ConstantRecord>,
    /// Index into `sample_times` where a hypothesis failed.
    pub vacuous_at: Option<usize>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            sample_times: Vec::new(),
            slacks: Vec::new(),
            tolerance: 0.0,
            min_slack: None,
            verdict: Verdict::Pass,
            constants: Vec::new(),
            vacuous_at: None,
            notes: Vec::new(),
        }
    }

    /// Sets the slacks and derives the verdict: pass iff every slack is at
    /// least `-tolerance`.
    pub fn with_slacks(mut self, times: Vec<f64>, slacks: Vec<f64>, tolerance: f64) -> Self {
        let min = slacks.iter().copied().fold(None, |m: Option<f64>, v| {
            Some(match m {
                None => v,
                Some(m) if v.is_nan() || m.is_nan() => f64::NAN,
                Some(m) => m.min(v),
            })
        });
        self.verdict = match min {
            Some(m) if m >= -tolerance => Verdict::Pass,
            None => Verdict::Pass,
            _ => Verdict::Fail,
        };
        self.sample_times = times;
        self.slacks = slacks;
        self.tolerance = tolerance;
        self.min_slack = min;
        self
    }

    pub fn vacuous(mut self, at: Option<usize>, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::Vacuous;
        self.vacuous_at = at;
        self.notes.push(reason.into());
        self
    }

    pub fn fail(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::Fail;
        self.notes.push(reason.into());
        self
    }

    pub fn constant(mut self, name: &str, value: f64, provenance: Provenance, note: &str) -> Self {
        self.constants.push(ConstantRecord { name: name.into(), value, provenance, note: note.into() });
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn get_constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_min_slack() {
        let r = CheckReport::new("x", "a <= b").with_slacks(vec![0.0, 1.0], vec![0.5, -1e-9], 1e-8);
        assert_eq!(r.verdict, Verdict::Pass);
        let r = CheckReport::new("x", "a <= b").with_slacks(vec![0.0, 1.0], vec![0.5, -1e-7], 1e-8);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.min_slack, Some(-1e-7));
    }

    #[test]
    fn nan_slack_fails() {
        let r = CheckReport::new("x", "a <= b").with_slacks(vec![0.0, 1.0], vec![f64::NAN, 1.0], 1.0);
        assert_eq!(r.verdict, Verdict::Fail);
    }
}

use serde::{Deserialize, Serialize};

use crate::enumcore::Stage;

const MAX_COUNTEREXAMPLES: usize = 20;

/// A concrete witness against an invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub stage: Option<Stage>,
    pub actor: Option<String>,
    pub element: Option<i64>,
    pub detail: String,
}

impl Counterexample {
    pub fn at(stage: Stage, detail: impl Into<String>) -> Self {
        Counterexample {
            stage: Some(stage),
            actor: None,
            element: None,
            detail: detail.into(),
        }
    }

    pub fn actor(mut self, actor: impl ToString) -> Self {
        self.actor = Some(actor.to_string());
        self
    }

    pub fn element(mut self, x: impl TryInto<i64>) -> Self {
        self.element = x.try_into().ok();
        self
    }
}

/// Outcome of one invariant over a whole trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub invariant: String,
    /// The correctness claim this invariant instantiates.
    pub claim: String,
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl Verdict {
    pub fn new(invariant: &str, claim: &str) -> Self {
        Verdict {
            invariant: invariant.to_string(),
            claim: claim.to_string(),
            passed: true,
            checked: 0,
            violations: 0,
            counterexamples: Vec::new(),
        }
    }

    /// Counts one check; on failure records the lazily built witness.
    pub fn check(&mut self, ok: bool, witness: impl FnOnce() -> Counterexample) {
        self.checked += 1;
        if !ok {
            self.fail(witness());
        }
    }

    pub fn fail(&mut self, c: Counterexample) {
        self.passed = false;
        self.violations += 1;
        if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.counterexamples.push(c);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub construction: String,
    pub verdicts: Vec<Verdict>,
    /// Horizon-relative remarks: quantities whose limits cannot be certified.
    pub caveats: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, invariant: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.invariant == invariant)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| !v.passed)
            .map(|v| v.invariant.as_str())
            .collect()
    }

    /// One line per verdict, then the caveats.
    pub fn render(&self) -> String {
        let mut out = format!("construction: {}\n", self.construction);
        for v in &self.verdicts {
            out.push_str(&format!(
                "{} {:<28} [{}] checked={} violations={}\n",
                if v.passed { "PASS" } else { "FAIL" },
                v.invariant,
                v.claim,
                v.checked,
                v.violations
            ));
            for c in &v.counterexamples {
                out.push_str(&format!(
                    "     stage={} actor={} element={} {}\n",
                    c.stage.map_or("-".into(), |s| s.to_string()),
                    c.actor.as_deref().unwrap_or("-"),
                    c.element.map_or("-".into(), |e| e.to_string()),
                    c.detail
                ));
            }
        }
        for c in &self.caveats {
            out.push_str(&format!("note: {c}\n"));
        }
        out
    }
}

//! Outcome records shared by every check in the crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail {
        reason: String,
        counterexample: Value,
    },
    /// The theorem's hypotheses do not hold for the input; the conclusion was
    /// not tested. Not a failure.
    HypothesisViolated {
        reason: String,
        witness: Value,
    },
    Error {
        message: String,
    },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail { .. } => "fail",
            Outcome::HypothesisViolated { .. } => "hypothesis_violated",
            Outcome::Error { .. } => "error",
        }
    }
}

/// Result of a property or axiom check with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub outcome: Outcome,
    pub seed: Option<u64>,
    pub samples: usize,
    pub tolerance: f64,
    /// Named measurements (maxima attained, bounds, counts). Sorted by key.
    #[serde(default)]
    pub metrics: BTreeMap<String, Value>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, seed: Option<u64>, samples: usize, tolerance: f64) -> Self {
        CheckReport {
            check: check.into(),
            outcome: Outcome::Pass,
            seed,
            samples,
            tolerance,
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn is_fail(&self) -> bool {
        matches!(self.outcome, Outcome::Fail { .. })
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    pub fn metric_f64(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    /// Records a failure unless one is already recorded; the first
    /// counterexample wins.
    pub fn fail(&mut self, reason: impl Into<String>, counterexample: Value) {
        if matches!(self.outcome, Outcome::Pass) {
            self.outcome = Outcome::Fail {
                reason: reason.into(),
                counterexample,
            };
        }
    }

    pub fn hypothesis_violated(&mut self, reason: impl Into<String>, witness: Value) {
        self.outcome = Outcome::HypothesisViolated {
            reason: reason.into(),
            witness,
        };
    }

    pub fn error(&mut self, message: impl Into<String>) {
        self.outcome = Outcome::Error {
            message: message.into(),
        };
    }

    pub fn with_outcome(mut self, outcome: Outcome) -> Self {
        self.outcome = outcome;
        self
    }
}

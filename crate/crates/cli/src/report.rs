//! Verification records and their aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Self::Pass
    }
}

/// How `residual` is compared with `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// residual ≤ threshold
    AtMost,
    /// residual ≥ threshold
    AtLeast,
    /// residual > threshold
    Above,
    /// Status set by a structural condition; residual is informative.
    Condition,
}

/// One checked identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Acceptance criterion the check belongs to (1 to 14).
    pub criterion: u8,
    pub name: String,
    pub status: Status,
    pub residual: f64,
    pub threshold: f64,
    pub relation: Relation,
    /// Parameters of this check.
    pub config: serde_json::Value,
}

impl CheckRecord {
    fn new(criterion: u8, name: impl Into<String>, residual: f64, threshold: f64, relation: Relation, ok: bool) -> Self {
        Self {
            criterion,
            name: name.into(),
            status: Status::from_bool(ok),
            residual,
            threshold,
            relation,
            config: serde_json::Value::Null,
        }
    }

    /// Passes iff `residual ≤ threshold` (NaN fails).
    pub fn at_most(criterion: u8, name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self::new(criterion, name, residual, threshold, Relation::AtMost, residual <= threshold)
    }

    /// Passes iff `residual ≥ threshold` (NaN fails).
    pub fn at_least(criterion: u8, name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self::new(criterion, name, residual, threshold, Relation::AtLeast, residual >= threshold)
    }

    /// Passes iff `residual > threshold` (NaN fails).
    pub fn above(criterion: u8, name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self::new(criterion, name, residual, threshold, Relation::Above, residual > threshold)
    }

    pub fn condition(criterion: u8, name: impl Into<String>, ok: bool, residual: f64) -> Self {
        Self::new(criterion, name, residual, f64::NAN, Relation::Condition, ok)
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }
}

/// Outcome of one criterion over all its checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: u8,
    pub title: String,
    pub status: Status,
    pub checks: usize,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub command: String,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    /// Effective configuration, defaults expanded.
    pub config: serde_json::Value,
    /// Supporting data such as the refinement table.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attachments: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            status: Status::Pass,
            checks: Vec::new(),
            config,
            attachments: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        if !check.status.is_pass() {
            self.status = Status::Fail;
        }
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        for c in checks {
            self.push(c);
        }
    }

    /// Stable order: by criterion, then insertion order.
    pub fn finish(mut self) -> Self {
        self.checks.sort_by_key(|c| c.criterion);
        self.status = Status::from_bool(self.checks.iter().all(|c| c.status.is_pass()));
        self
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.status.is_pass())
    }

    /// One summary per criterion present in the report, ascending.
    pub fn criteria(&self) -> Vec<CriterionSummary> {
        let mut ids: Vec<u8> = self.checks.iter().map(|c| c.criterion).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
            .map(|id| {
                let checks: Vec<&CheckRecord> = self.checks.iter().filter(|c| c.criterion == id).collect();
                let failed: Vec<String> = checks
                    .iter()
                    .filter(|c| !c.status.is_pass())
                    .map(|c| c.name.clone())
                    .collect();
                CriterionSummary {
                    criterion: id,
                    title: criterion_title(id).to_string(),
                    status: Status::from_bool(failed.is_empty()),
                    checks: checks.len(),
                    failed,
                }
            })
            .collect()
    }
}

pub fn criterion_title(id: u8) -> &'static str {
    match id {
        1 => "Maxwellian annihilation",
        2 => "conservation of the collision invariants",
        3 => "entropy production sign",
        4 => "microreversibility and cross-section symmetry",
        5 => "kinematic conservation",
        6 => "collision frequency anchors",
        7 => "collision frequency bounds",
        8 => "kernel symmetry and self-adjointness",
        9 => "Monte Carlo oracle equivalence",
        10 => "null space",
        11 => "nonnegativity and coercivity",
        12 => "compactness surrogate",
        13 => "mass-ratio inequality",
        14 => "determinism",
        0 => "configuration",
        _ => "unknown",
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::opcore::index::BasisIndex;

/// Stored failures are capped; `failed` keeps the full count.
const MAX_STORED: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub index: Option<BasisIndex>,
    pub detail: String,
}

/// Outcome of one exact identity checked on a finite set of basis vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub checked: usize,
    pub failed: usize,
    pub failures: Vec<Failure>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>) -> CheckReport {
        CheckReport { check: check.into(), checked: 0, failed: 0, failures: Vec::new() }
    }

    pub fn from_outcomes(check: impl Into<String>, checked: usize, mut failures: Vec<Failure>) -> CheckReport {
        failures.sort_by(|a, b| a.index.cmp(&b.index));
        let failed = failures.len();
        failures.truncate(MAX_STORED);
        CheckReport { check: check.into(), checked, failed, failures }
    }

    pub fn record(&mut self, ok: bool, index: Option<BasisIndex>, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_STORED {
                self.failures.push(Failure { index, detail: detail() });
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn first_failure(&self) -> Option<&Failure> {
        self.failures.first()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "[{status}] {} ({} checked", self.check, self.checked)?;
        if self.failed > 0 {
            write!(f, ", {} failed", self.failed)?;
            if let Some(x) = self.first_failure() {
                match &x.index {
                    Some(i) => write!(f, "; first at {i}: {}", x.detail)?,
                    None => write!(f, "; {}", x.detail)?,
                }
            }
        }
        write!(f, ")")
    }
}

/// Several reports under one verdict.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckReport>,
}

impl Report {
    pub fn push(&mut self, r: CheckReport) {
        self.checks.push(r);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn first_failure(&self) -> Option<(&CheckReport, &Failure)> {
        self.checks.iter().find_map(|c| c.first_failure().map(|f| (c, f)))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

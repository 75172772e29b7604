//! Solution files: a schedule, its powers and the link indicators a solver
//! claimed, plus re-validation against the physical model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodel::{evaluate_with, EvalOptions, LinkOutcome, PowerAllocation, Schedule};
use crate::scenario::Scenario;

pub const SOLUTION_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub version: u32,
    /// Which solver produced the file.
    pub mode: String,
    /// Solver status, e.g. `optimal` or `gap-limit`.
    pub status: String,
    pub half_duplex: bool,
    pub schedule: Schedule,
    pub powers: PowerAllocation,
    /// `Y`, `Z` and the objective as reported by the solver.
    pub claimed: LinkOutcome,
}

impl SolutionFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sol: Self = serde_json::from_str(text)?;
        if sol.version != SOLUTION_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported solution version {}", sol.version)));
        }
        Ok(sol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub claimed_objective: usize,
    pub actual_objective: usize,
    /// Links claimed successful that physics rejects.
    pub false_claims: Vec<(usize, usize)>,
    /// Links physics accepts that the solver did not claim.
    pub unclaimed: Vec<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_consistent(&self) -> bool {
        self.false_claims.is_empty() && self.claimed_objective == self.actual_objective
    }
}

/// Re-evaluate `sol` on `s`. Fails if the powers break the power contract.
pub fn validate_solution(s: &Scenario, sol: &SolutionFile) -> Result<ValidationReport> {
    if (sol.schedule.n, sol.schedule.f, sol.schedule.t) != (s.n, s.f, s.t) {
        return Err(Error::Validation("solution shape does not match the scenario".into()));
    }
    let actual = evaluate_with(s, &sol.schedule, &sol.powers, EvalOptions { half_duplex: sol.half_duplex })?;
    let mut false_claims = Vec::new();
    let mut unclaimed = Vec::new();
    for (i, j) in s.links() {
        match (sol.claimed.z[i][j], actual.z[i][j]) {
            (true, false) => false_claims.push((i, j)),
            (false, true) => unclaimed.push((i, j)),
            _ => {}
        }
    }
    Ok(ValidationReport { claimed_objective: sol.claimed.objective, actual_objective: actual.objective, false_claims, unclaimed })
}

//! Generic mixed-Boolean linear programming: model representation, a dense
//! bounded-variable simplex with dual extraction, and best-bound
//! branch-and-bound.

mod branch;
pub mod model;
pub mod mps;
mod scaling;
mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use branch::solve_milp;
pub use model::{Constraint, MilpModel, Relation, Sense, VarKind, Variable};

use crate::error::Result;
use simplex::{LpData, LpOutcome, LpTolerances, Tableau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// A budget ran out; the solution carries the incumbent (if any) and a bound.
    GapLimit,
    /// The simplex pivot cap was hit before an answer was certain.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub dual_tol: f64,
    pub int_tol: f64,
    pub abs_gap: f64,
    /// Power-of-two row/column equilibration before the simplex.
    pub scaling: bool,
    /// Pivot cap per LP solve.
    pub max_pivots: usize,
    /// Branch-and-bound node budget.
    pub node_limit: Option<usize>,
    /// Wall-clock budget. Results under a binding time limit are not reproducible.
    pub time_limit: Option<Duration>,
    /// When every feasible objective value is a multiple of this step,
    /// nodes that cannot beat the incumbent by a full step are pruned.
    pub objective_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            dual_tol: 1e-6,
            int_tol: 1e-6,
            abs_gap: 1e-6,
            scaling: true,
            max_pivots: 200_000,
            node_limit: None,
            time_limit: None,
            objective_step: None,
        }
    }
}

impl SolverOptions {
    pub fn with_node_limit(mut self, nodes: usize) -> Self {
        self.node_limit = Some(nodes);
        self
    }

    fn lp_tolerances(&self) -> LpTolerances {
        // The simplex works on the scaled problem; keep it a notch tighter
        // than the reporting tolerances.
        LpTolerances { feas: self.feas_tol * 0.1, dual: self.dual_tol * 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Primal values per column; empty when no feasible point is known.
    pub values: Vec<f64>,
    /// Objective of `values` in the model's own sense, including the offset.
    pub objective: f64,
    /// Row duals (LP solves only). Under maximization `<=` rows have
    /// non-negative duals and `>=` rows non-positive ones; under
    /// minimization the signs flip.
    pub duals: Option<Vec<f64>>,
    /// Best proven bound on the optimal objective.
    pub bound: f64,
    pub nodes: usize,
    pub pivots: usize,
}

impl MilpSolution {
    pub fn has_solution(&self) -> bool {
        !self.values.is_empty()
    }

    fn without_point(status: SolveStatus, bound: f64, nodes: usize, pivots: usize) -> Self {
        Self { status, values: Vec::new(), objective: f64::NAN, duals: None, bound, nodes, pivots }
    }
}

/// Solve the LP relaxation (Boolean columns relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel, opts: &SolverOptions) -> Result<MilpSolution> {
    model.validate()?;
    let data = LpData::from_model(model, opts.scaling);
    let mut tab = Tableau::new(&data, &data.lower, &data.upper);
    let outcome = tab.solve(opts.lp_tolerances(), opts.max_pivots);
    let unknown = match model.sense {
        Sense::Maximize => f64::INFINITY,
        Sense::Minimize => f64::NEG_INFINITY,
    };
    let status = match outcome {
        LpOutcome::Optimal => SolveStatus::Optimal,
        LpOutcome::Infeasible => return Ok(MilpSolution::without_point(SolveStatus::Infeasible, -unknown, 0, tab.pivots)),
        LpOutcome::Unbounded => return Ok(MilpSolution::without_point(SolveStatus::Unbounded, unknown, 0, tab.pivots)),
        LpOutcome::IterationLimit => {
            return Ok(MilpSolution::without_point(SolveStatus::IterationLimit, unknown, 0, tab.pivots))
        }
    };
    let values = tab.primal(&data);
    let objective = model.objective_value(&values);
    let duals: Vec<f64> = tab.duals(&data).into_iter().map(|y| data.obj_sign * y).collect();
    Ok(MilpSolution { status, values, objective, duals: Some(duals), bound: objective, nodes: 0, pivots: tab.pivots })
}

/// Lagrangian dual bound implied by row duals (model sign convention):
/// `b'y + sum_j max(d_j l_j, d_j u_j)` for maximization with reduced costs
/// `d = c - A'y`, and the mirror image for minimization. By weak duality it
/// bounds every feasible objective.
pub fn dual_objective(model: &MilpModel, duals: &[f64]) -> f64 {
    let n = model.num_vars();
    let mut d = vec![0.0; n];
    for &(j, c) in &model.objective {
        d[j] += c;
    }
    let mut value = model.objective_offset;
    for (row, &y) in model.constraints.iter().zip(duals) {
        value += row.rhs * y;
        for &(j, a) in &row.coeffs {
            d[j] -= a * y;
        }
    }
    let pick = |dj: f64, l: f64, u: f64| -> f64 {
        if dj == 0.0 {
            return 0.0;
        }
        let (a, b) = (dj * l, dj * u);
        match model.sense {
            Sense::Maximize => nan_max(a, b),
            Sense::Minimize => nan_min(a, b),
        }
    };
    for (j, v) in model.variables.iter().enumerate() {
        value += pick(d[j], v.lower, v.upper);
    }
    value
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        b
    } else if b.is_nan() {
        a
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    -nan_max(-a, -b)
}

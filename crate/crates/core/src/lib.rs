//! Joint scheduling and power control for vehicle-to-vehicle broadcast
//! under co-channel and adjacent-channel interference.
//!
//! Modules, bottom up: `scenario` (convoy geometry and channel gains),
//! `linkmodel` (SINR evaluation, the physical ground truth), `milp` (a
//! self-contained simplex and branch-and-bound), `formulation` (problem to
//! MILP), `colgen` and `cutplane` (the two solution methods) and
//! `experiment` (Monte-Carlo sweeps).

pub mod colgen;
pub mod cutplane;
pub mod error;
pub mod experiment;
pub mod formulation;
pub mod linkmodel;
pub mod milp;
pub mod scenario;
pub mod solution;

pub use colgen::{run_colgen, ColgenBudget, ColgenResult, ColgenStop, ColumnPool, MasterState};
pub use cutplane::{run_cutting_plane, CoverCut, CoverForm, CutplaneBudget, CutplaneResult, CutplaneStatus, ToleranceBudget};
pub use error::{Error, Result};
pub use experiment::{run_fairness, run_scheme, run_sweep, ExperimentConfig, Scheme, SchemeRun};
pub use formulation::{
    apply_maxmin, build, build_joint, build_power, build_scheduling, decode, Decoded, Formulation, FormulationOptions, Mode,
    ObjectiveKind, VariableMap, VariantFlags,
};
pub use linkmodel::{evaluate, evaluate_with, EvalOptions, FixedPowers, LinkOutcome, PowerAllocation, Schedule};
pub use milp::{solve_lp, solve_milp, MilpModel, MilpSolution, SolveStatus, SolverOptions};
pub use scenario::{build_scenario, AcirProfile, RadioParams, Scenario};
pub use solution::{validate_solution, SolutionFile, ValidationReport};

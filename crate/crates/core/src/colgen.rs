//! Column generation for multi-timeslot joint scheduling and power control.
//!
//! A column is a single-timeslot power matrix together with the links it
//! makes succeed. The master LP picks a fractional combination of at most
//! `T` columns; the pricing problem is the single-timeslot joint MBLP with
//! dual-weighted links.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{build_joint, decode, FormulationOptions, Mode, ObjectiveKind, VariantFlags};
use crate::linkmodel::{evaluate_with, EvalOptions, LinkOutcome, PowerAllocation, Schedule, POWER_EPS};
use crate::milp::{solve_lp, solve_milp, MilpModel, Relation, Sense, SolveStatus, SolverOptions};
use crate::scenario::Scenario;

/// One pooled column: an `N x F` power matrix and the links it serves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    /// Row-major `power[i * F + f]`.
    pub power: Vec<f64>,
    /// `links[i][j]`, physically validated.
    pub links: Vec<Vec<bool>>,
}

impl Column {
    pub fn zero(s: &Scenario) -> Self {
        Self { power: vec![0.0; s.n * s.f], links: vec![vec![false; s.n]; s.n] }
    }

    /// Evaluate `power` on one timeslot and keep the successful intended links.
    pub fn from_power(s: &Scenario, power: Vec<f64>, eval: EvalOptions) -> Result<Self> {
        let one = s.with_timeslots(1);
        let (x, p) = column_allocation(&one, &power);
        let outcome = evaluate_with(&one, &x, &p, eval)?;
        Ok(Self { power, links: outcome.z })
    }

    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.links[i][j]
    }
}

fn column_allocation(one: &Scenario, power: &[f64]) -> (Schedule, PowerAllocation) {
    let mut p = PowerAllocation::for_scenario(one);
    let mut x = Schedule::for_scenario(one);
    for i in 0..one.n {
        for f in 0..one.f {
            let v = power[i * one.f + f];
            p.set(i, f, 0, v);
            x.set(i, f, 0, v > POWER_EPS);
        }
    }
    (x, p)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnPool {
    pub columns: Vec<Column>,
}

impl ColumnPool {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn contains(&self, c: &Column) -> bool {
        self.columns.iter().any(|k| k.power == c.power)
    }
}

/// Optimal master LP and its duals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterState {
    pub weights: Vec<f64>,
    /// Relaxed link indicators, in `Scenario::links` order.
    pub link_values: Vec<f64>,
    /// Non-negative dual of each link-coverage row, in `Scenario::links` order.
    pub link_duals: Vec<f64>,
    /// Non-negative dual of the cardinality row.
    pub card_dual: f64,
    pub objective: f64,
}

impl MasterState {
    pub fn link_dual_matrix(&self, s: &Scenario) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; s.n]; s.n];
        for (&(i, j), &v) in s.links().iter().zip(&self.link_duals) {
            m[i][j] = v;
        }
        m
    }
}

/// The relaxed master: `max sum Z'` with `sum_q Z~q w_q >= Z'` per link and `sum w <= T`.
pub fn build_master(pool: &ColumnPool, timeslots: usize, s: &Scenario) -> MilpModel {
    let mut m = MilpModel::new("master", Sense::Maximize);
    let w: Vec<usize> = (0..pool.len()).map(|q| m.add_continuous(format!("w[{q}]"), 0.0, 1.0)).collect();
    let links = s.links();
    let z: Vec<usize> = links.iter().map(|&(i, j)| m.add_continuous(format!("Zp[{i},{j}]"), 0.0, 1.0)).collect();
    for (&(i, j), &zc) in links.iter().zip(&z) {
        let mut coeffs: Vec<(usize, f64)> =
            pool.columns.iter().zip(&w).filter(|(c, _)| c.covers(i, j)).map(|(_, &wc)| (wc, 1.0)).collect();
        coeffs.push((zc, -1.0));
        m.add_constraint(format!("cover[{i},{j}]"), coeffs, Relation::Ge, 0.0);
    }
    m.add_constraint("card", w.iter().map(|&c| (c, 1.0)).collect(), Relation::Le, timeslots as f64);
    m.set_objective(Sense::Maximize, z.iter().map(|&c| (c, 1.0)).collect());
    m
}

pub fn solve_master(pool: &ColumnPool, timeslots: usize, s: &Scenario, opts: &SolverOptions) -> Result<MasterState> {
    if pool.is_empty() {
        return Err(Error::Validation("master needs at least one column".into()));
    }
    let m = build_master(pool, timeslots, s);
    let sol = solve_lp(&m, opts)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    let q = pool.len();
    let nl = s.num_links();
    let duals = sol.duals.expect("LP solves report duals");
    // Under maximization >= rows carry non-positive duals.
    let link_duals = duals[..nl].iter().map(|&y| (-y).max(0.0)).collect();
    Ok(MasterState {
        weights: sol.values[..q].to_vec(),
        link_values: sol.values[q..q + nl].to_vec(),
        link_duals,
        card_dual: duals[nl].max(0.0),
        objective: sol.objective,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricingResult {
    pub column: Column,
    /// `sum Pi Z - pi` over the physically validated links of `column`.
    pub reduced_value: f64,
    /// The same quantity as claimed by the solver.
    pub claimed_value: f64,
    pub status: SolveStatus,
}

/// Single-timeslot joint problem with objective `sum Pi[i][j] Z[i,j] - pi`.
pub fn solve_pricing(
    s: &Scenario,
    link_duals: &[Vec<f64>],
    card_dual: f64,
    flags: &VariantFlags,
    opts: &SolverOptions,
) -> Result<PricingResult> {
    let one = s.with_timeslots(1);
    let mut fl = flags.clone();
    fl.mode = Mode::Joint;
    fl.objective = ObjectiveKind::SumLinks;
    let mut form = build_joint(&one, &fl, &FormulationOptions::robust())?;
    let objective: Vec<(usize, f64)> = one
        .links()
        .into_iter()
        .filter(|&(i, j)| link_duals[i][j] > 0.0)
        .map(|(i, j)| (form.map.z(i, j).expect("z column"), link_duals[i][j]))
        .collect();
    form.model.set_objective(Sense::Maximize, objective);
    form.model.objective_offset = -card_dual;
    let sol = solve_milp(&form.model, opts)?;
    if !sol.has_solution() {
        return Err(Error::Solver(sol.status));
    }
    let dec = decode(&form, &one, &sol.values)?;
    let mut power = vec![0.0; one.n * one.f];
    for i in 0..one.n {
        for f in 0..one.f {
            power[i * one.f + f] = dec.powers.get(i, f, 0);
        }
    }
    let column = Column::from_power(s, power, EvalOptions { half_duplex: flags.half_duplex })?;
    let value = |z: &Vec<Vec<bool>>| -> f64 {
        one.links().iter().filter(|&&(i, j)| z[i][j]).map(|&(i, j)| link_duals[i][j]).sum::<f64>() - card_dual
    };
    Ok(PricingResult {
        reduced_value: value(&column.links),
        claimed_value: value(&dec.claimed.z),
        column,
        status: sol.status,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColgenStop {
    /// Pricing found no column with positive reduced value.
    NonPositiveReducedValue,
    IterationCap,
    /// Pricing returned a column already in the pool.
    DuplicateColumn,
    /// The master produced the same duals twice in a row.
    StalledDuals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColgenBudget {
    pub max_iterations: usize,
    /// Options for each pricing MBLP.
    pub pricing: SolverOptions,
    /// Reduced values at or below this count as non-positive.
    pub reduced_tol: f64,
}

impl Default for ColgenBudget {
    fn default() -> Self {
        Self { max_iterations: 50, pricing: SolverOptions::default().with_node_limit(20_000), reduced_tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColgenTraceRow {
    pub iteration: usize,
    pub columns: usize,
    pub master_objective: f64,
    pub reduced_value: f64,
}

#[derive(Clone, Debug)]
pub struct ColgenResult {
    pub schedule: Schedule,
    pub powers: PowerAllocation,
    pub outcome: LinkOutcome,
    pub pool: ColumnPool,
    pub master: MasterState,
    /// Column index assigned to each timeslot.
    pub chosen: Vec<usize>,
    pub stop: ColgenStop,
    pub trace: Vec<ColgenTraceRow>,
    /// Whether any pricing solve stopped on a budget.
    pub pricing_truncated: bool,
}

/// Master/pricing loop followed by picking the `T` heaviest columns.
pub fn run_colgen(s: &Scenario, flags: &VariantFlags, budget: &ColgenBudget) -> Result<ColgenResult> {
    if s.t < 1 {
        return Err(Error::InvalidParams("need at least one timeslot".into()));
    }
    let eval = EvalOptions { half_duplex: flags.half_duplex };
    let lp_opts = SolverOptions::default();
    let mut pool = ColumnPool { columns: vec![Column::zero(s)] };
    let mut trace = Vec::new();
    let mut previous_duals: Option<(Vec<f64>, f64)> = None;
    let mut truncated = false;
    let mut iteration = 0;
    let (master, stop) = loop {
        iteration += 1;
        let master = solve_master(&pool, s.t, s, &lp_opts)?;
        let duals = (master.link_duals.clone(), master.card_dual);
        if previous_duals.as_ref() == Some(&duals) {
            trace.push(row(iteration, &pool, &master, f64::NAN));
            break (master, ColgenStop::StalledDuals);
        }
        previous_duals = Some(duals);
        let priced = solve_pricing(s, &master.link_dual_matrix(s), master.card_dual, flags, &budget.pricing)?;
        truncated |= priced.status != SolveStatus::Optimal;
        trace.push(row(iteration, &pool, &master, priced.reduced_value));
        if priced.reduced_value <= budget.reduced_tol {
            break (master, ColgenStop::NonPositiveReducedValue);
        }
        if pool.contains(&priced.column) {
            break (master, ColgenStop::DuplicateColumn);
        }
        pool.columns.push(priced.column);
        if iteration >= budget.max_iterations {
            let master = solve_master(&pool, s.t, s, &lp_opts)?;
            break (master, ColgenStop::IterationCap);
        }
    };

    let mut w = master.weights.clone();
    w.resize(pool.len(), 0.0);
    let mut chosen = Vec::with_capacity(s.t);
    for _ in 0..s.t {
        let mut best = 0;
        for q in 1..w.len() {
            if w[q] > w[best] {
                best = q;
            }
        }
        chosen.push(best);
        w[best] = 0.0;
    }
    let mut powers = PowerAllocation::for_scenario(s);
    let mut schedule = Schedule::for_scenario(s);
    for (t, &q) in chosen.iter().enumerate() {
        let col = &pool.columns[q];
        for i in 0..s.n {
            for f in 0..s.f {
                let v = col.power[i * s.f + f];
                powers.set(i, f, t, v);
                schedule.set(i, f, t, v > POWER_EPS);
            }
        }
    }
    let outcome = evaluate_with(s, &schedule, &powers, eval)?;
    Ok(ColgenResult { schedule, powers, outcome, pool, master, chosen, stop, trace, pricing_truncated: truncated })
}

fn row(iteration: usize, pool: &ColumnPool, master: &MasterState, reduced: f64) -> ColgenTraceRow {
    ColgenTraceRow { iteration, columns: pool.len(), master_objective: master.objective, reduced_value: reduced }
}

pub fn write_trace_csv<W: Write>(trace: &[ColgenTraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_scenario, AcirProfile, RadioParams};

    fn small() -> Scenario {
        build_scenario(3, 2, 2, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 11).unwrap()
    }

    fn full_column(s: &Scenario) -> Column {
        let mut c = Column::zero(s);
        for (i, j) in s.links() {
            c.links[i][j] = true;
        }
        c
    }

    #[test]
    fn zero_column_master() {
        let s = small();
        let pool = ColumnPool { columns: vec![Column::zero(&s)] };
        let m = solve_master(&pool, 2, &s, &SolverOptions::default()).unwrap();
        assert!(m.objective.abs() < 1e-12);
        assert!(m.link_duals.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn full_column_master() {
        let s = small();
        let pool = ColumnPool { columns: vec![full_column(&s)] };
        let m = solve_master(&pool, 1, &s, &SolverOptions::default()).unwrap();
        assert!((m.objective - s.num_links() as f64).abs() < 1e-9);
    }

    #[test]
    fn complementary_columns() {
        let s = build_scenario(4, 2, 2, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 5).unwrap();
        let links = s.links();
        assert_eq!(links.len() % 2, 0);
        let (mut a, mut b) = (Column::zero(&s), Column::zero(&s));
        for (k, &(i, j)) in links.iter().enumerate() {
            if k % 2 == 0 {
                a.links[i][j] = true;
            } else {
                b.links[i][j] = true;
            }
        }
        let pool = ColumnPool { columns: vec![a, b] };
        let total = links.len() as f64;
        let two = solve_master(&pool, 2, &s, &SolverOptions::default()).unwrap();
        assert!((two.objective - total).abs() < 1e-9);
        let one = solve_master(&pool, 1, &s, &SolverOptions::default()).unwrap();
        assert!((one.objective - total / 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_duals_stop_pricing() {
        let s = small();
        let zero = vec![vec![0.0; s.n]; s.n];
        let r = solve_pricing(&s, &zero, 0.5, &VariantFlags::joint(), &SolverOptions::default()).unwrap();
        assert!((r.reduced_value + 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_link_pricing() {
        let s = small();
        let (i, j) = s.links()[0];
        let mut duals = vec![vec![0.0; s.n]; s.n];
        duals[i][j] = 2.0;
        if s.params.p_max * s.gain(i, j) >= s.params.gamma_t * s.params.sigma2 * (1.0 + 1e-6) {
            let r = solve_pricing(&s, &duals, 0.25, &VariantFlags::joint(), &SolverOptions::default()).unwrap();
            assert!((r.reduced_value - 1.75).abs() < 1e-12);
            assert!(r.column.covers(i, j));
        }
    }

    #[test]
    fn colgen_reports_physical_outcome() {
        let s = small();
        let r = run_colgen(&s, &VariantFlags::joint(), &ColgenBudget::default()).unwrap();
        let again = evaluate_with(&s, &r.schedule, &r.powers, EvalOptions::default()).unwrap();
        assert_eq!(again.objective, r.outcome.objective);
        assert_eq!(r.chosen.len(), s.t);
        for w in r.trace.windows(2) {
            assert!(w[1].master_objective >= w[0].master_objective - 1e-9);
        }
        let mut buf = Vec::new();
        write_trace_csv(&r.trace, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iteration,columns,master_objective,reduced_value"));
    }
}

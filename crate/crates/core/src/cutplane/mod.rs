//! Cutting-plane scheduling with fixed powers: solve the scheduling model
//! without SINR rows, find links the solver claims but physics rejects, and
//! forbid each offending interference pattern with a lifted cover
//! inequality over proximity indicators.

pub mod proximity;

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{build_scheduling, decode, Formulation, FormulationOptions, SinrRows, VariantFlags};
use crate::linkmodel::{evaluate_with, EvalOptions, FixedPowers, LinkOutcome, PowerAllocation, Schedule};
use crate::milp::{solve_milp, Relation, SolveStatus, SolverOptions};
use crate::scenario::Scenario;

pub use proximity::{emit_proximity_constraints, gap_big_m, proximity_direct, ProximityVars};

/// Largest interference each link tolerates, per timeslot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceBudget {
    n: usize,
    /// `values[(t * n + i) * n + j]`
    values: Vec<f64>,
}

impl ToleranceBudget {
    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        self.values[(t * self.n + i) * self.n + j]
    }

    /// Negative budget: the link fails on noise alone.
    pub fn noise_infeasible(&self, i: usize, j: usize, t: usize) -> bool {
        self.get(i, j, t) < 0.0
    }
}

/// `(P̄ H - gamma sigma^2) / gamma` for every ordered pair and timeslot.
pub fn compute_ibar(s: &Scenario, p: &FixedPowers) -> ToleranceBudget {
    let g = s.params.gamma_t;
    let sigma2 = s.params.sigma2;
    let mut values = vec![0.0; s.t * s.n * s.n];
    for t in 0..s.t {
        for i in 0..s.n {
            for j in 0..s.n {
                if i != j {
                    values[(t * s.n + i) * s.n + j] = (p.get(i, t) * s.gain(i, j) - g * sigma2) / g;
                }
            }
        }
    }
    ToleranceBudget { n: s.n, values }
}

/// Interference at `j` from `k` transmitting `r` slots away in timeslot `t`.
pub fn interference_term(s: &Scenario, p: &FixedPowers, k: usize, r: usize, j: usize, t: usize) -> f64 {
    s.lambda(r) * p.get(k, t) * s.gain(k, j)
}

/// A falsely claimed link on one RB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Claim {
    pub i: usize,
    pub j: usize,
    pub f: usize,
    pub t: usize,
}

/// Interferers seen by a claimed link and the cover built from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceScenario {
    pub claim: Claim,
    /// Every other active VUE with its slot gap to the claim.
    pub s: Vec<(usize, usize)>,
    pub s_prime: Vec<(usize, usize)>,
    pub q: Vec<(usize, usize)>,
}

/// Active interferers of `claim` under schedule `x` (the transmitter and
/// the receiver itself excluded).
pub fn interference_set(x: &Schedule, claim: Claim) -> Vec<(usize, usize)> {
    (0..x.n)
        .filter(|&k| k != claim.i && k != claim.j)
        .filter_map(|k| x.slot_of(k, claim.t).map(|f| (k, f.abs_diff(claim.f))))
        .collect()
}

/// Smallest greedy subset of `set` whose interference exceeds `budget`,
/// with gaps then widened as far as the excess allows. Returns `None` when
/// the whole set does not exceed the budget.
pub fn minimal_cover(
    s: &Scenario,
    p: &FixedPowers,
    set: &[(usize, usize)],
    j: usize,
    t: usize,
    budget: f64,
) -> Option<Vec<(usize, usize)>> {
    let term = |k: usize, r: usize| interference_term(s, p, k, r, j, t);
    let mut pool: Vec<(usize, usize)> = set.to_vec();
    pool.sort_by(|a, b| term(b.0, b.1).total_cmp(&term(a.0, a.1)).then(a.0.cmp(&b.0)));
    let mut cover: Vec<(usize, usize)> = Vec::new();
    let mut total = 0.0;
    for &(k, r) in &pool {
        if total > budget {
            break;
        }
        cover.push((k, r));
        total += term(k, r);
    }
    if total <= budget {
        return None;
    }

    let sum = |c: &[(usize, usize)]| c.iter().map(|&(k, r)| term(k, r)).sum::<f64>();
    let mut last: Option<usize> = None;
    loop {
        if sum(&cover) <= budget {
            if let Some(m) = last {
                cover[m].1 -= 1;
            }
            break;
        }
        // Members already at the widest gap of the band stay put.
        let pick = (0..cover.len()).filter(|&m| cover[m].1 + 1 < s.f).min_by(|&a, &b| {
            let cost = |m: usize| {
                let (k, r) = cover[m];
                term(k, r) - term(k, r + 1)
            };
            cost(a).total_cmp(&cost(b)).then(a.cmp(&b))
        });
        let Some(m) = pick else { break };
        cover[m].1 += 1;
        last = Some(m);
    }
    Some(cover)
}

/// Tuples stronger than every member of `set`, one (the widest gap) per
/// VUE; VUEs of the cover, the transmitter and the receiver are skipped.
pub fn lifting_set(
    s: &Scenario,
    p: &FixedPowers,
    set: &[(usize, usize)],
    cover: &[(usize, usize)],
    i: usize,
    j: usize,
    t: usize,
) -> Vec<(usize, usize)> {
    let strongest = set.iter().map(|&(k, r)| interference_term(s, p, k, r, j, t)).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for k in 0..s.n {
        if k == i || k == j || cover.iter().any(|&(c, _)| c == k) {
            continue;
        }
        if let Some(r) = (0..s.f).rev().find(|&r| interference_term(s, p, k, r, j, t) > strongest) {
            out.push((k, r));
        }
    }
    out
}

/// `(|Q|+1) Y[i,j,f,t] <= |S'| + |Q| - sum_{(k,r) in S' u Q} V[i,k,r,t]` for every `f`
/// and every timeslot in `timeslots`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoverCut {
    pub i: usize,
    pub j: usize,
    pub timeslots: Vec<usize>,
    /// Cover members followed by lifting members.
    pub members: Vec<(usize, usize)>,
    pub cover_len: usize,
}

impl CoverCut {
    pub fn lifting_len(&self) -> usize {
        self.members.len() - self.cover_len
    }

    /// Whether the cut holds at an integral point, with proximity taken from its definition.
    pub fn holds(&self, x: &Schedule, y: bool, t: usize) -> bool {
        if !self.timeslots.contains(&t) {
            return true;
        }
        let q = self.lifting_len() as i64;
        let close = self.members.iter().filter(|&&(k, r)| proximity_direct(x, self.i, k, r, t)).count() as i64;
        (q + 1) * i64::from(y) <= self.cover_len as i64 + q - close
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverForm {
    /// Plain cover over every interferer at its current gap.
    Basic,
    /// Greedy minimal cover with widened gaps, lifted by strong interferers.
    #[default]
    Lifted,
}

/// Build the cut that forbids `claim`'s interference pattern under `x`.
pub fn build_cover(
    s: &Scenario,
    p: &FixedPowers,
    ibar: &ToleranceBudget,
    x: &Schedule,
    claim: Claim,
    form: CoverForm,
) -> (InterferenceScenario, CoverCut) {
    let set = interference_set(x, claim);
    let budget = ibar.get(claim.i, claim.j, claim.t);
    let (s_prime, q) = match form {
        CoverForm::Basic => (set.clone(), Vec::new()),
        CoverForm::Lifted => match minimal_cover(s, p, &set, claim.j, claim.t, budget) {
            Some(cover) => {
                let q = lifting_set(s, p, &set, &cover, claim.i, claim.j, claim.t);
                (cover, q)
            }
            // Rounding at the threshold: physics rejected the link but the
            // summed terms do not exceed the budget. Fall back to the plain cover.
            None => (set.clone(), Vec::new()),
        },
    };
    let timeslots = if p.is_timeslot_uniform() { (0..s.t).collect() } else { vec![claim.t] };
    let mut members = s_prime.clone();
    members.extend(q.iter().copied());
    let cut = CoverCut { i: claim.i, j: claim.j, timeslots, members, cover_len: s_prime.len() };
    (InterferenceScenario { claim, s: set, s_prime, q }, cut)
}

/// Add the rows of `cut` to the model. Returns the number of rows added.
pub fn emit_cover(form: &mut Formulation, prox: &mut ProximityVars, cut: &CoverCut) -> usize {
    let q = cut.lifting_len() as f64;
    let mut added = 0;
    for &t in &cut.timeslots {
        let vs: Vec<usize> = cut.members.iter().map(|&(k, r)| prox.v_column(form, cut.i, k, r, t)).collect();
        for f in 0..form.map.f {
            let Some(y) = form.map.y(cut.i, cut.j, f, t) else { continue };
            let mut coeffs = vec![(y, q + 1.0)];
            coeffs.extend(vs.iter().map(|&v| (v, 1.0)));
            let name = format!("cover[{},{},{f},{t}]#{}", cut.i, cut.j, form.model.num_rows());
            form.model.add_constraint(name, coeffs, Relation::Le, cut.cover_len as f64 + q);
            added += 1;
        }
    }
    added
}

/// Links the solver marks successful that physical evaluation rejects.
pub fn find_false_claims(s: &Scenario, x: &Schedule, claimed: &LinkOutcome, p: &FixedPowers, eval: EvalOptions) -> Result<Vec<Claim>> {
    let actual = evaluate_with(s, x, &PowerAllocation::from_schedule(x, p), eval)?;
    let mut out = Vec::new();
    for (i, j) in s.links() {
        for f in 0..s.f {
            for t in 0..s.t {
                if claimed.y(i, j, f, t) && !actual.y(i, j, f, t) {
                    out.push(Claim { i, j, f, t });
                }
            }
        }
    }
    Ok(out)
}

/// The scheduling model with SINR rows removed, max-one-RB enforced and
/// noise-infeasible links fixed to failure.
pub fn build_relaxed_scheduling(s: &Scenario, p: &FixedPowers, flags: &VariantFlags) -> Result<Formulation> {
    if !s.acir.is_non_increasing(s.f) {
        return Err(Error::ContractViolation("cover inequalities need a non-increasing ACIR mask".into()));
    }
    let mut fl = flags.clone();
    fl.mode = crate::formulation::Mode::SchedulingOnly;
    fl.max_one_rb = true;
    fl.fixed_powers = Some(p.clone());
    let opts = FormulationOptions { sinr_rows: SinrRows::Omit, link_y_to_x: true, ..FormulationOptions::default() };
    let mut form = build_scheduling(s, &fl, &opts)?;
    let ibar = compute_ibar(s, p);
    for ((i, j, _f, t), c) in form.map.y_columns().collect::<Vec<_>>() {
        if ibar.noise_infeasible(i, j, t) {
            form.model.variables[c].upper = 0.0;
        }
    }
    Ok(form)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutplaneBudget {
    pub max_iterations: usize,
    pub solver: SolverOptions,
    pub form: CoverForm,
}

impl Default for CutplaneBudget {
    fn default() -> Self {
        Self { max_iterations: 500, solver: SolverOptions::default().with_node_limit(50_000), form: CoverForm::Lifted }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutplaneStatus {
    /// No false claims remain and every solve was proven optimal.
    Converged,
    /// Iteration or node budget ran out; the best validated schedule is returned.
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutTraceRow {
    pub iteration: usize,
    pub false_claims: usize,
    pub cuts_added: usize,
    pub solver_objective: f64,
    pub physical_objective: usize,
}

#[derive(Clone, Debug)]
pub struct CutplaneResult {
    pub schedule: Schedule,
    pub outcome: LinkOutcome,
    pub status: CutplaneStatus,
    /// Distinct cover cuts added.
    pub cuts: Vec<CoverCut>,
    pub rows_added: usize,
    pub iterations: usize,
    pub trace: Vec<CutTraceRow>,
}

/// Iterate relaxed solve, false-claim detection and cover cuts until the
/// solver's claims match physics.
pub fn run_cutting_plane(s: &Scenario, p: &FixedPowers, flags: &VariantFlags, budget: &CutplaneBudget) -> Result<CutplaneResult> {
    p.validate(s)?;
    let eval = EvalOptions { half_duplex: flags.half_duplex };
    let ibar = compute_ibar(s, p);
    let mut form = build_relaxed_scheduling(s, p, flags)?;
    let mut prox = ProximityVars::attach(&form)?;
    let opts = SolverOptions { objective_step: form.objective_step(), ..budget.solver.clone() };

    let mut seen: BTreeSet<CoverCut> = BTreeSet::new();
    let mut cuts = Vec::new();
    let mut rows_added = 0;
    let mut trace = Vec::new();
    let mut best: Option<(Schedule, LinkOutcome)> = None;
    let mut exact = true;

    for iteration in 1..=budget.max_iterations {
        let sol = solve_milp(&form.model, &opts)?;
        if !sol.has_solution() {
            return Err(Error::Solver(sol.status));
        }
        exact &= sol.status == SolveStatus::Optimal;
        let dec = decode(&form, s, &sol.values)?;
        let x = dec.schedule;
        let actual = evaluate_with(s, &x, &PowerAllocation::from_schedule(&x, p), eval)?;
        let claims = find_false_claims(s, &x, &dec.claimed, p, eval)?;
        let mut added = 0;
        for &claim in &claims {
            let (_, cut) = build_cover(s, p, &ibar, &x, claim, budget.form);
            if seen.insert(cut.clone()) {
                rows_added += emit_cover(&mut form, &mut prox, &cut);
                cuts.push(cut);
                added += 1;
            }
        }
        trace.push(CutTraceRow {
            iteration,
            false_claims: claims.len(),
            cuts_added: added,
            solver_objective: sol.objective,
            physical_objective: actual.objective,
        });
        if best.as_ref().is_none_or(|(_, o)| actual.objective > o.objective) {
            best = Some((x.clone(), actual.clone()));
        }
        if claims.is_empty() {
            if exact {
                return Ok(CutplaneResult {
                    schedule: x,
                    outcome: actual,
                    status: CutplaneStatus::Converged,
                    cuts,
                    rows_added,
                    iterations: iteration,
                    trace,
                });
            }
            // A truncated solve without false claims proves nothing; keep
            // the best schedule seen so far.
            break;
        }
        if added == 0 {
            // Every cut for this point already exists, so the solve did not
            // honour them; nothing further can be learned.
            break;
        }
    }
    let (schedule, outcome) = best.expect("at least one iteration ran");
    let iterations = trace.len();
    Ok(CutplaneResult { schedule, outcome, status: CutplaneStatus::BudgetExhausted, cuts, rows_added, iterations, trace })
}

pub fn write_trace_csv<W: Write>(trace: &[CutTraceRow], out: W) -> Result<()> {
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

    fn scenario(n: usize, f: usize, t: usize, seed: u64) -> Scenario {
        build_scenario(n, f, t, &RadioParams::table_ii(), &AcirProfile::three_gpp(), seed).unwrap()
    }

    #[test]
    fn ibar_roots() {
        let s = scenario(2, 2, 1, 1);
        let g = s.params.gamma_t * s.params.sigma2;
        let at = |pbar: f64| {
            let p = FixedPowers::uniform(2, 1, pbar);
            compute_ibar(&s, &p).get(0, 1, 0)
        };
        let h = s.gain(0, 1);
        assert!(at(g / h).abs() < 1e-12 * s.params.sigma2);
        assert!((at(2.0 * g / h) - s.params.sigma2).abs() < 1e-9 * s.params.sigma2);
    }

    fn flat(n: usize, f: usize) -> Scenario {
        // Every gain equal: terms differ only through the ACIR.
        let gains = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1e-7 }).collect()).collect();
        let receivers = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Scenario::from_parts(f, 1, (0..n).map(|i| i as f64 * 20.0).collect(), gains, AcirProfile::three_gpp(), receivers, RadioParams::table_ii())
            .unwrap()
    }

    #[test]
    fn single_dominant_interferer() {
        let s = flat(3, 4);
        let p = FixedPowers::uniform(3, 1, s.params.p_max);
        let budget = 0.5 * interference_term(&s, &p, 2, 0, 1, 0);
        let cover = minimal_cover(&s, &p, &[(2, 0)], 1, 0, budget).unwrap();
        assert_eq!(cover, vec![(2, 0)]);
    }

    #[test]
    fn two_equal_interferers_needed() {
        let s = flat(4, 4);
        let p = FixedPowers::uniform(4, 1, s.params.p_max);
        let term = interference_term(&s, &p, 2, 0, 1, 0);
        let cover = minimal_cover(&s, &p, &[(2, 0), (3, 0)], 1, 0, term / 0.6).unwrap();
        assert_eq!(cover.len(), 2);
        assert!(minimal_cover(&s, &p, &[(2, 0), (3, 0)], 1, 0, 3.0 * term).is_none());
    }

    #[test]
    fn widened_cover_is_maximal() {
        let s = scenario(6, 5, 1, 9);
        let p = FixedPowers::max_power(&s);
        let set = vec![(2, 1), (3, 0), (4, 2), (5, 3)];
        let j = 1;
        let total: f64 = set.iter().map(|&(k, r)| interference_term(&s, &p, k, r, j, 0)).sum();
        let budget = total * 0.3;
        let cover = minimal_cover(&s, &p, &set, j, 0, budget).unwrap();
        let sum = |c: &[(usize, usize)]| c.iter().map(|&(k, r)| interference_term(&s, &p, k, r, j, 0)).sum::<f64>();
        assert!(sum(&cover) > budget);
        for m in 0..cover.len() {
            if cover[m].1 + 1 < s.f {
                let mut c = cover.clone();
                c[m].1 += 1;
                assert!(sum(&c) <= budget);
            }
        }
    }

    #[test]
    fn lifting_matches_filter() {
        let s = scenario(5, 3, 1, 4);
        let p = FixedPowers::max_power(&s);
        let set = vec![(3, 1), (4, 2)];
        let (i, j) = (0, 1);
        let q = lifting_set(&s, &p, &set, &[(3, 1)], i, j, 0);
        let strongest = set.iter().map(|&(k, r)| interference_term(&s, &p, k, r, j, 0)).fold(0.0, f64::max);
        for k in [2usize, 4] {
            let expect = (0..s.f).rev().find(|&r| interference_term(&s, &p, k, r, j, 0) > strongest);
            assert_eq!(q.iter().find(|m| m.0 == k).map(|m| m.1), expect);
        }
        assert!(q.iter().all(|&(k, _)| k != i && k != j && k != 3));
    }

    #[test]
    fn cover_vues_stay_out_of_the_lifting_set() {
        // A graded mask: a cover VUE one slot closer is a stronger
        // interferer but still tolerable on its own.
        use crate::linkmodel::{evaluate, PowerAllocation, Schedule};
        let params = RadioParams::table_ii();
        let (pmax, g) = (params.p_max, params.gamma_t);
        let ibar = 1e-8;
        let mut gains = vec![vec![1e-20; 4]; 4];
        for (k, row) in gains.iter_mut().enumerate() {
            row[k] = 0.0;
        }
        gains[0][1] = g * (params.sigma2 + ibar) / pmax;
        gains[2][1] = ibar / pmax;
        gains[3][1] = ibar / pmax;
        let acir = AcirProfile::new(vec![1.0, 0.8, 0.6, 0.2, 0.01], 0.0).unwrap();
        let receivers = vec![vec![1], vec![0], vec![1], vec![1]];
        let s = Scenario::from_parts(5, 1, vec![0.0, 20.0, 40.0, 60.0], gains, acir, receivers, params).unwrap();
        let p = FixedPowers::max_power(&s);
        let budget = compute_ibar(&s, &p);

        let place = |slots: [Option<usize>; 4]| {
            let mut x = Schedule::for_scenario(&s);
            for (k, f) in slots.iter().enumerate() {
                if let Some(f) = f {
                    x.set(k, *f, 0, true);
                }
            }
            x
        };
        let offending = place([Some(0), None, Some(2), Some(2)]);
        let fine = place([Some(0), None, Some(1), Some(4)]);
        let link_ok = |x: &Schedule| evaluate(&s, x, &PowerAllocation::from_schedule(x, &p)).unwrap().y(0, 1, 0, 0);
        assert!(!link_ok(&offending));
        assert!(link_ok(&fine));

        let (sc, cut) = build_cover(&s, &p, &budget, &offending, Claim { i: 0, j: 1, f: 0, t: 0 }, CoverForm::Lifted);
        assert_eq!(sc.s_prime.len(), 2);
        assert!(sc.q.is_empty());
        assert!(!cut.holds(&offending, true, 0));
        assert!(cut.holds(&fine, true, 0));

        // Admitting (2, 1) and (2, 0) as lifting members counts VUE 2 twice
        // and cuts off the successful point.
        let mut members = cut.members.clone();
        members.extend([(2, 1), (2, 0)]);
        let double = CoverCut { members, ..cut };
        assert!(!double.holds(&fine, true, 0));
    }

    #[test]
    fn relaxed_model_requires_monotone_mask() {
        let mut s = scenario(3, 3, 1, 2);
        s.acir = AcirProfile::new(vec![1.0, 1e-4, 1e-2], 0.0).unwrap();
        let p = FixedPowers::max_power(&s);
        assert!(build_relaxed_scheduling(&s, &p, &VariantFlags::default()).is_err());
    }

    #[test]
    fn converges_with_physical_outcome() {
        let s = scenario(4, 3, 1, 17);
        let p = FixedPowers::max_power(&s);
        let r = run_cutting_plane(&s, &p, &VariantFlags::default(), &CutplaneBudget::default()).unwrap();
        assert_eq!(r.status, CutplaneStatus::Converged);
        let last = r.trace.last().unwrap();
        assert_eq!(last.false_claims, 0);
        assert_eq!(last.solver_objective.round() as usize, r.outcome.objective);
    }

    #[test]
    fn uniform_powers_cut_every_timeslot() {
        let s = scenario(4, 2, 2, 3);
        let p = FixedPowers::max_power(&s);
        let r = run_cutting_plane(&s, &p, &VariantFlags::default(), &CutplaneBudget::default()).unwrap();
        for c in &r.cuts {
            assert_eq!(c.timeslots, vec![0, 1]);
        }
        let per_cut = s.f * s.t;
        assert_eq!(r.rows_added, r.cuts.len() * per_cut);
    }
}

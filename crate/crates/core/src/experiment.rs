//! Monte-Carlo experiment harness: scheme runners, the greedy and naive
//! baselines, parameter sweeps and fairness tables.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colgen::{run_colgen, ColgenBudget};
use crate::cutplane::{run_cutting_plane, CutplaneBudget, CutplaneStatus};
use crate::error::{Error, Result};
use crate::formulation::{build_joint, build_scheduling, decode, FormulationOptions, VariantFlags};
use crate::linkmodel::{evaluate_with, metrics, EvalOptions, FixedPowers, LinkOutcome, PowerAllocation, Schedule};
use crate::milp::{solve_milp, SolveStatus, SolverOptions};
use crate::scenario::{build_scenario, AcirProfile, RadioParams, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Greedy placement at fixed power (stand-in heuristic baseline).
    Greedy,
    /// VUE `i` on RB `i`, maximum power.
    Naive,
    /// Cutting-plane scheduling at fixed power.
    SchedOpt,
    /// Direct scheduling BLP under a node budget.
    SchedNearOpt,
    /// Direct joint MBLP under a node budget.
    JointNearOpt,
    JointColgen,
}

impl Scheme {
    pub const ALL: [Scheme; 6] =
        [Scheme::Greedy, Scheme::Naive, Scheme::SchedOpt, Scheme::SchedNearOpt, Scheme::JointNearOpt, Scheme::JointColgen];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Greedy => "greedy",
            Scheme::Naive => "naive",
            Scheme::SchedOpt => "sched-opt",
            Scheme::SchedNearOpt => "sched-near-opt",
            Scheme::JointNearOpt => "joint-near-opt",
            Scheme::JointColgen => "joint-colgen",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| Error::Parse(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    N,
    F,
    T,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::N => "N",
            SweepVariable::F => "F",
            SweepVariable::T => "T",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Branch-and-bound nodes per MILP solve.
    pub node_limit: usize,
    pub colgen_iterations: usize,
    pub cutplane_iterations: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { node_limit: 20_000, colgen_iterations: 50, cutplane_iterations: 500 }
    }
}

impl Budgets {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions::default().with_node_limit(self.node_limit)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Variants {
    pub non_overlap: bool,
    pub half_duplex: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub n: usize,
    pub f: usize,
    pub t: usize,
    pub sweep: Option<Sweep>,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub variants: Variants,
    #[serde(default)]
    pub params: RadioParams,
    #[serde(default = "AcirProfile::three_gpp")]
    pub acir: AcirProfile,
}

fn default_trials() -> usize {
    100
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be at least 1".into()));
        }
        if self.n == 0 || self.f == 0 || self.t == 0 {
            return Err(Error::InvalidParams("n, f and t must be positive".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() || sw.values.contains(&0) {
                return Err(Error::InvalidParams("sweep values must be a nonempty list of positive counts".into()));
            }
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParams("no schemes selected".into()));
        }
        self.params.validate()?;
        self.acir.validate()
    }

    fn flags(&self) -> VariantFlags {
        VariantFlags { non_overlap: self.variants.non_overlap, half_duplex: self.variants.half_duplex, ..VariantFlags::default() }
    }

    fn dims(&self, value: Option<usize>) -> (usize, usize, usize) {
        let (mut n, mut f, mut t) = (self.n, self.f, self.t);
        if let (Some(sw), Some(v)) = (&self.sweep, value) {
            match sw.variable {
                SweepVariable::N => n = v,
                SweepVariable::F => f = v,
                SweepVariable::T => t = v,
            }
        }
        (n, f, t)
    }
}

/// Seed of trial `trial` at sweep point `point`: word `trial` of ChaCha
/// stream `point` keyed by the master seed, so every cell is reproducible
/// on its own.
pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(point as u64);
    rng.set_word_pos(2 * trial as u128);
    rng.next_u64()
}

/// VUEs ordered by total gain to their receivers take, one at a time, the
/// RB that adds the most physically successful links. A VUE that cannot
/// add any link stays idle.
pub fn greedy_baseline(s: &Scenario, p: &FixedPowers, flags: &VariantFlags) -> Result<Schedule> {
    p.validate(s)?;
    let eval = EvalOptions { half_duplex: flags.half_duplex };
    let mut order: Vec<usize> = (0..s.n).collect();
    let strength = |i: usize| s.receivers[i].iter().map(|&j| s.gain(i, j)).sum::<f64>();
    order.sort_by(|&a, &b| strength(b).total_cmp(&strength(a)).then(a.cmp(&b)));
    let mut x = Schedule::for_scenario(s);
    let mut current = 0;
    for i in order {
        let mut best: Option<(usize, usize, usize)> = None;
        for t in 0..s.t {
            if p.get(i, t) <= 0.0 {
                continue;
            }
            for f in 0..s.f {
                if flags.non_overlap && (0..s.n).any(|k| x.get(k, f, t)) {
                    continue;
                }
                x.set(i, f, t, true);
                let total = evaluate_with(s, &x, &PowerAllocation::from_schedule(&x, p), eval)?.objective;
                x.set(i, f, t, false);
                if total > best.map_or(current, |b| b.2) {
                    best = Some((f, t, total));
                }
            }
        }
        if let Some((f, t, total)) = best {
            x.set(i, f, t, true);
            current = total;
        }
    }
    Ok(x)
}

/// VUE `i` on frequency slot `i mod F` of timeslot `i / F`; VUEs beyond
/// `F T` stay idle. Non-overlapping by construction.
pub fn naive_schedule(s: &Scenario) -> Schedule {
    let mut x = Schedule::for_scenario(s);
    for i in 0..s.n.min(s.f * s.t) {
        x.set(i, i % s.f, i / s.f, true);
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub schedule: Schedule,
    pub powers: PowerAllocation,
    pub outcome: LinkOutcome,
    /// Whether the scheme finished within its budgets with a proven result.
    pub exact: bool,
}

impl SchemeRun {
    /// Mean number of successful links per VUE.
    pub fn mean_links(&self) -> f64 {
        self.outcome.objective as f64 / self.outcome.n as f64
    }
}

/// Run one scheme and evaluate its schedule physically.
pub fn run_scheme(s: &Scenario, scheme: Scheme, flags: &VariantFlags, budgets: &Budgets) -> Result<SchemeRun> {
    let eval = EvalOptions { half_duplex: flags.half_duplex };
    let fixed = FixedPowers::max_power(s);
    let finish = |schedule: Schedule, powers: PowerAllocation, exact: bool| -> Result<SchemeRun> {
        let outcome = evaluate_with(s, &schedule, &powers, eval)?;
        Ok(SchemeRun { scheme, schedule, powers, outcome, exact })
    };
    match scheme {
        Scheme::Greedy => {
            let x = greedy_baseline(s, &fixed, flags)?;
            let p = PowerAllocation::from_schedule(&x, &fixed);
            finish(x, p, true)
        }
        Scheme::Naive => {
            let x = naive_schedule(s);
            let p = PowerAllocation::from_schedule(&x, &fixed);
            finish(x, p, true)
        }
        Scheme::SchedOpt => {
            let budget = CutplaneBudget {
                max_iterations: budgets.cutplane_iterations,
                solver: budgets.solver(),
                ..CutplaneBudget::default()
            };
            let r = run_cutting_plane(s, &fixed, flags, &budget)?;
            let p = PowerAllocation::from_schedule(&r.schedule, &fixed);
            finish(r.schedule, p, r.status == CutplaneStatus::Converged)
        }
        Scheme::SchedNearOpt => {
            let fl = VariantFlags { fixed_powers: Some(fixed.clone()), mode: crate::formulation::Mode::SchedulingOnly, ..flags.clone() };
            let form = build_scheduling(s, &fl, &FormulationOptions::robust_exact_threshold())?;
            let opts = SolverOptions { objective_step: form.objective_step(), ..budgets.solver() };
            let sol = solve_milp(&form.model, &opts)?;
            if !sol.has_solution() {
                return Err(Error::Solver(sol.status));
            }
            let dec = decode(&form, s, &sol.values)?;
            finish(dec.schedule, dec.powers, sol.status == SolveStatus::Optimal)
        }
        Scheme::JointNearOpt => {
            let fl = VariantFlags { mode: crate::formulation::Mode::Joint, ..flags.clone() };
            let form = build_joint(s, &fl, &FormulationOptions::robust())?;
            let opts = SolverOptions { objective_step: form.objective_step(), ..budgets.solver() };
            let sol = solve_milp(&form.model, &opts)?;
            if !sol.has_solution() {
                return Err(Error::Solver(sol.status));
            }
            let dec = decode(&form, s, &sol.values)?;
            finish(dec.schedule, dec.powers, sol.status == SolveStatus::Optimal)
        }
        Scheme::JointColgen => {
            let budget = ColgenBudget {
                max_iterations: budgets.colgen_iterations,
                pricing: budgets.solver(),
                ..ColgenBudget::default()
            };
            let r = run_colgen(s, flags, &budget)?;
            finish(r.schedule, r.powers, !r.pricing_truncated)
        }
    }
}

/// Result of one scheme on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub x_value: usize,
    pub trial: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub run: std::result::Result<SchemeRun, String>,
}

fn run_trials(cfg: &ExperimentConfig, points: &[Option<usize>]) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let flags = cfg.flags();
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let per_job: Vec<Result<Vec<TrialRecord>>> = jobs
        .par_iter()
        .map(|&(point, trial)| {
            let (n, f, t) = cfg.dims(points[point]);
            let seed = trial_seed(cfg.seed, point, trial);
            let s = build_scenario(n, f, t, &cfg.params, &cfg.acir, seed)?;
            Ok(cfg
                .schemes
                .iter()
                .map(|&scheme| TrialRecord {
                    point,
                    x_value: points[point].unwrap_or(0),
                    trial,
                    seed,
                    scheme,
                    run: run_scheme(&s, scheme, &flags, &cfg.budgets).map_err(|e| e.to_string()),
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_job {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    /// One row per sweep value: the value then the mean links per VUE of each scheme.
    pub summary_csv: String,
    /// One row per (value, trial, scheme).
    pub trials_csv: String,
    pub records: Vec<TrialRecord>,
}

fn fmt_mean(values: &[f64]) -> String {
    if values.is_empty() {
        String::new()
    } else {
        format!("{}", values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn trials_table(records: &[TrialRecord], x_label: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([x_label, "trial", "seed", "scheme", "mean_links", "links", "exact", "error"])?;
    for r in records {
        let (mean, links, exact, err) = match &r.run {
            Ok(run) => (run.mean_links().to_string(), run.outcome.objective.to_string(), run.exact.to_string(), String::new()),
            Err(e) => (String::new(), String::new(), String::new(), e.clone()),
        };
        w.write_record([r.x_value.to_string(), r.trial.to_string(), r.seed.to_string(), r.scheme.label().into(), mean, links, exact, err])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).map_err(|e| Error::Parse(e.to_string()))
}

/// Average successful links per VUE for every sweep value and scheme.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::InvalidParams("config has no sweep section".into()))?;
    let points: Vec<Option<usize>> = sweep.values.iter().map(|&v| Some(v)).collect();
    let records = run_trials(cfg, &points)?;
    let x_label = sweep.variable.label();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![x_label.to_string()];
    header.extend(cfg.schemes.iter().map(|s| s.label().to_string()));
    w.write_record(&header)?;
    for (point, &value) in sweep.values.iter().enumerate() {
        let mut row = vec![value.to_string()];
        for &scheme in &cfg.schemes {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.point == point && r.scheme == scheme)
                .filter_map(|r| r.run.as_ref().ok().map(SchemeRun::mean_links))
                .collect();
            row.push(fmt_mean(&vals));
        }
        w.write_record(&row)?;
    }
    let summary_csv =
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).map_err(|e| Error::Parse(e.to_string()))?;
    let trials_csv = trials_table(&records, x_label)?;
    Ok(SweepOutput { summary_csv, trials_csv, records })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairnessOutput {
    /// `value` then, per scheme, the fraction of (trial, VUE) samples with at most `value` successes.
    pub cdf_csv: String,
    /// `vue` then, per scheme, the mean successes of that VUE index.
    pub per_vue_csv: String,
    pub records: Vec<TrialRecord>,
}

/// Distribution of per-VUE successes at the configured `(N, F, T)`.
pub fn run_fairness(cfg: &ExperimentConfig) -> Result<FairnessOutput> {
    let records = run_trials(cfg, &[None])?;
    let (n, f, t) = cfg.dims(None);
    let max_value = crate::scenario::receiver_count(n, f, t);
    let mut tables = Vec::new();
    for &scheme in &cfg.schemes {
        let outcomes: Vec<LinkOutcome> = records
            .iter()
            .filter(|r| r.scheme == scheme)
            .filter_map(|r| r.run.as_ref().ok().map(|run| run.outcome.clone()))
            .collect();
        tables.push(if outcomes.is_empty() { None } else { Some(metrics(&outcomes, n)?) });
    }
    let mut cdf = String::from("value");
    let mut per_vue = String::from("vue");
    for scheme in &cfg.schemes {
        write!(cdf, ",{}", scheme.label()).unwrap();
        write!(per_vue, ",{}", scheme.label()).unwrap();
    }
    cdf.push('\n');
    per_vue.push('\n');
    let cdfs: Vec<Option<Vec<(usize, f64)>>> = tables.iter().map(|m| m.as_ref().map(|m| m.cdf(max_value))).collect();
    for v in 0..=max_value {
        write!(cdf, "{v}").unwrap();
        for c in &cdfs {
            match c {
                Some(c) => write!(cdf, ",{}", c[v].1).unwrap(),
                None => cdf.push(','),
            }
        }
        cdf.push('\n');
    }
    for i in 0..n {
        write!(per_vue, "{i}").unwrap();
        for m in &tables {
            match m {
                Some(m) => write!(per_vue, ",{}", m.mean_per_vue[i]).unwrap(),
                None => per_vue.push(','),
            }
        }
        per_vue.push('\n');
    }
    Ok(FairnessOutput { cdf_csv: cdf, per_vue_csv: per_vue, records })
}

//! Physical evaluation of schedules and power allocations: SINR, per-RB and
//! per-link success, and the per-VUE success metrics.
//!
//! Nothing here depends on an optimization model. Solver outputs are always
//! re-scored through [`evaluate`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Powers at or below this level (mW) count as "not transmitting".
pub const POWER_EPS: f64 = 1e-9;

/// Relative slack on the power contract checks of [`evaluate`].
const POWER_CONTRACT_RTOL: f64 = 1e-9;

/// Boolean scheduling tensor `x[i][f][t]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub n: usize,
    pub f: usize,
    pub t: usize,
    x: Vec<bool>,
}

impl Schedule {
    pub fn empty(n: usize, f: usize, t: usize) -> Self {
        Self { n, f, t, x: vec![false; n * f * t] }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::empty(s.n, s.f, s.t)
    }

    #[inline]
    fn idx(&self, i: usize, f: usize, t: usize) -> usize {
        debug_assert!(i < self.n && f < self.f && t < self.t);
        (i * self.f + f) * self.t + t
    }

    #[inline]
    pub fn get(&self, i: usize, f: usize, t: usize) -> bool {
        self.x[self.idx(i, f, t)]
    }

    pub fn set(&mut self, i: usize, f: usize, t: usize, on: bool) {
        let k = self.idx(i, f, t);
        self.x[k] = on;
    }

    /// Frequency slot used by VUE `i` in timeslot `t`, if exactly one.
    pub fn slot_of(&self, i: usize, t: usize) -> Option<usize> {
        let mut found = None;
        for f in 0..self.f {
            if self.get(i, f, t) {
                if found.is_some() {
                    return None;
                }
                found = Some(f);
            }
        }
        found
    }

    pub fn transmits_in(&self, i: usize, t: usize) -> bool {
        (0..self.f).any(|f| self.get(i, f, t))
    }

    pub fn count(&self) -> usize {
        self.x.iter().filter(|&&b| b).count()
    }

    /// At most one VUE per RB.
    pub fn is_non_overlapping(&self) -> bool {
        (0..self.f).all(|f| (0..self.t).all(|t| (0..self.n).filter(|&i| self.get(i, f, t)).count() <= 1))
    }

    /// At most one frequency slot per VUE and timeslot.
    pub fn is_max_one_rb(&self) -> bool {
        (0..self.n).all(|i| (0..self.t).all(|t| (0..self.f).filter(|&f| self.get(i, f, t)).count() <= 1))
    }

    pub fn check_variants(&self, non_overlap: bool, max_one_rb: bool) -> Result<()> {
        if non_overlap && !self.is_non_overlapping() {
            return Err(Error::Validation("schedule puts two VUEs in one RB".into()));
        }
        if max_one_rb && !self.is_max_one_rb() {
            return Err(Error::Validation("schedule gives a VUE two RBs in one timeslot".into()));
        }
        Ok(())
    }

    /// `X = 1{P > POWER_EPS}`.
    pub fn from_powers(p: &PowerAllocation) -> Self {
        let mut s = Self::empty(p.n, p.f, p.t);
        for (k, &v) in p.p.iter().enumerate() {
            s.x[k] = v > POWER_EPS;
        }
        s
    }
}

/// Transmit power tensor `p[i][f][t]` in mW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub n: usize,
    pub f: usize,
    pub t: usize,
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(n: usize, f: usize, t: usize) -> Self {
        Self { n, f, t, p: vec![0.0; n * f * t] }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::zeros(s.n, s.f, s.t)
    }

    #[inline]
    fn idx(&self, i: usize, f: usize, t: usize) -> usize {
        debug_assert!(i < self.n && f < self.f && t < self.t);
        (i * self.f + f) * self.t + t
    }

    #[inline]
    pub fn get(&self, i: usize, f: usize, t: usize) -> f64 {
        self.p[self.idx(i, f, t)]
    }

    pub fn set(&mut self, i: usize, f: usize, t: usize, v: f64) {
        let k = self.idx(i, f, t);
        self.p[k] = v;
    }

    /// Fixed per-(VUE, timeslot) powers applied to every scheduled RB.
    pub fn from_schedule(schedule: &Schedule, fixed: &FixedPowers) -> Self {
        let mut p = Self::zeros(schedule.n, schedule.f, schedule.t);
        for i in 0..schedule.n {
            for f in 0..schedule.f {
                for t in 0..schedule.t {
                    if schedule.get(i, f, t) {
                        p.set(i, f, t, fixed.get(i, t));
                    }
                }
            }
        }
        p
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { p: self.p.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }
}

/// Known transmit power `P̄[i][t]` for scheduling-only problems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPowers {
    pub n: usize,
    pub t: usize,
    p: Vec<f64>,
}

impl FixedPowers {
    pub fn uniform(n: usize, t: usize, value: f64) -> Self {
        Self { n, t, p: vec![value; n * t] }
    }

    /// Every VUE at maximum power in every timeslot.
    pub fn max_power(s: &Scenario) -> Self {
        Self::uniform(s.n, s.t, s.params.p_max)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::Validation("ragged fixed-power matrix".into()));
        }
        Ok(Self { n, t, p: rows.into_iter().flatten().collect() })
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.p[i * self.t + t]
    }

    pub fn set(&mut self, i: usize, t: usize, v: f64) {
        self.p[i * self.t + t] = v;
    }

    /// True when every VUE uses the same power in every timeslot.
    pub fn is_timeslot_uniform(&self) -> bool {
        (0..self.n).all(|i| (1..self.t).all(|t| self.get(i, t) == self.get(i, 0)))
    }

    pub fn validate(&self, s: &Scenario) -> Result<()> {
        if self.n != s.n || self.t != s.t {
            return Err(Error::Validation("fixed-power matrix has wrong shape".into()));
        }
        if self.p.iter().any(|&v| !(v.is_finite() && (0.0..=s.params.p_max).contains(&v))) {
            return Err(Error::Validation("fixed powers must lie in [0, p_max]".into()));
        }
        Ok(())
    }
}

/// Physical success of every RB and link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub n: usize,
    pub f: usize,
    pub t: usize,
    /// `y[((i*n + j)*f + fs)*t + ts]`.
    y: Vec<bool>,
    /// `z[i][j]`, false outside the intended-link set.
    pub z: Vec<Vec<bool>>,
    pub objective: usize,
}

impl LinkOutcome {
    pub fn empty(n: usize, f: usize, t: usize) -> Self {
        Self {
            n,
            f,
            t,
            y: vec![false; n * n * f * t],
            z: vec![vec![false; n]; n],
            objective: 0,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, f: usize, t: usize) -> usize {
        ((i * self.n + j) * self.f + f) * self.t + t
    }

    #[inline]
    pub fn y(&self, i: usize, j: usize, f: usize, t: usize) -> bool {
        self.y[self.idx(i, j, f, t)]
    }

    pub fn set_y(&mut self, i: usize, j: usize, f: usize, t: usize, v: bool) {
        let k = self.idx(i, j, f, t);
        self.y[k] = v;
    }

    /// Successful intended receivers of VUE `i`.
    pub fn successes_of(&self, i: usize) -> usize {
        self.z[i].iter().filter(|&&b| b).count()
    }

    /// Recompute `z` and the objective from `y` over the scenario's links.
    pub fn finalize(&mut self, s: &Scenario) {
        let mut total = 0;
        for (i, j) in s.links() {
            let ok = (0..self.f).any(|f| (0..self.t).any(|t| self.y(i, j, f, t)));
            self.z[i][j] = ok;
            total += ok as usize;
        }
        self.objective = total;
    }
}

/// Evaluation switches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// A VUE transmitting anywhere in a timeslot cannot receive in it.
    pub half_duplex: bool,
}

/// Interference power at receiver `j` for a signal of `i` on RB `(f, t)`.
/// The transmitter itself and the receiver's own transmissions are excluded.
pub fn interference(s: &Scenario, p: &PowerAllocation, i: usize, j: usize, f: usize, t: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..s.n {
        if k == i || k == j {
            continue;
        }
        let h = s.gain(k, j);
        for fp in 0..s.f {
            let pk = p.get(k, fp, t);
            if pk != 0.0 {
                total += s.lambda(fp.abs_diff(f)) * pk * h;
            }
        }
    }
    total
}

/// SINR of link `(i, j)` on RB `(f, t)`.
pub fn sinr(s: &Scenario, p: &PowerAllocation, i: usize, j: usize, f: usize, t: usize) -> f64 {
    p.get(i, f, t) * s.gain(i, j) / (s.params.sigma2 + interference(s, p, i, j, f, t))
}

fn check_contract(s: &Scenario, x: &Schedule, p: &PowerAllocation) -> Result<()> {
    if (x.n, x.f, x.t) != (s.n, s.f, s.t) || (p.n, p.f, p.t) != (s.n, s.f, s.t) {
        return Err(Error::ContractViolation("schedule or power tensor shape differs from scenario".into()));
    }
    let p_max = s.params.p_max;
    let cap = p_max * (1.0 + POWER_CONTRACT_RTOL);
    for i in 0..s.n {
        for t in 0..s.t {
            let mut sum = 0.0;
            for f in 0..s.f {
                let v = p.get(i, f, t);
                if !(v.is_finite() && v >= 0.0) || v > cap {
                    return Err(Error::ContractViolation(format!("power {v} at ({i},{f},{t}) outside [0, p_max]")));
                }
                if v > 0.0 && !x.get(i, f, t) {
                    return Err(Error::ContractViolation(format!("power on unscheduled RB ({i},{f},{t})")));
                }
                sum += v;
            }
            if sum > cap {
                return Err(Error::ContractViolation(format!("VUE {i} exceeds p_max in timeslot {t}")));
            }
        }
    }
    Ok(())
}

/// Physical link outcome for a schedule/power pair.
pub fn evaluate(s: &Scenario, x: &Schedule, p: &PowerAllocation) -> Result<LinkOutcome> {
    evaluate_with(s, x, p, EvalOptions::default())
}

pub fn evaluate_with(s: &Scenario, x: &Schedule, p: &PowerAllocation, opts: EvalOptions) -> Result<LinkOutcome> {
    check_contract(s, x, p)?;
    let gamma = s.params.gamma_t;
    let mut out = LinkOutcome::empty(s.n, s.f, s.t);
    for (i, j) in s.links() {
        for t in 0..s.t {
            if opts.half_duplex && x.transmits_in(j, t) {
                continue;
            }
            for f in 0..s.f {
                if x.get(i, f, t) && sinr(s, p, i, j, f, t) >= gamma {
                    out.set_y(i, j, f, t, true);
                }
            }
        }
    }
    out.finalize(s);
    Ok(out)
}

/// Per-VUE success statistics over a set of realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    /// `per_realization[r][i]` is the number of successful receivers of VUE `i`.
    pub per_realization: Vec<Vec<usize>>,
    /// Mean over realizations, per VUE index.
    pub mean_per_vue: Vec<f64>,
    /// Mean over VUEs of `mean_per_vue`.
    pub overall: f64,
}

impl MetricTable {
    /// Empirical CDF of the per-VUE success counts on the support `0..=max_value`.
    pub fn cdf(&self, max_value: usize) -> Vec<(usize, f64)> {
        let samples: Vec<usize> = self.per_realization.iter().flatten().copied().collect();
        empirical_cdf(&samples, max_value)
    }
}

pub fn empirical_cdf(samples: &[usize], max_value: usize) -> Vec<(usize, f64)> {
    let total = samples.len().max(1) as f64;
    (0..=max_value)
        .map(|v| (v, samples.iter().filter(|&&x| x <= v).count() as f64 / total))
        .collect()
}

pub fn metrics(outcomes: &[LinkOutcome], n: usize) -> Result<MetricTable> {
    if outcomes.is_empty() {
        return Err(Error::Validation("no outcomes to aggregate".into()));
    }
    if outcomes.iter().any(|o| o.n != n) {
        return Err(Error::Validation("outcomes disagree on the number of VUEs".into()));
    }
    let per_realization: Vec<Vec<usize>> =
        outcomes.iter().map(|o| (0..n).map(|i| o.successes_of(i)).collect()).collect();
    let r = outcomes.len() as f64;
    let mean_per_vue: Vec<f64> =
        (0..n).map(|i| per_realization.iter().map(|z| z[i] as f64).sum::<f64>() / r).collect();
    let overall = mean_per_vue.iter().sum::<f64>() / n as f64;
    Ok(MetricTable { per_realization, mean_per_vue, overall })
}

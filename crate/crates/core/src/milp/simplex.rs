//! Dense bounded-variable simplex.
//!
//! Rows are turned into equalities with one slack each (`a x + s = b`, slack
//! bounds encode the relation) and artificial columns are added only for
//! rows whose slack cannot absorb the starting residual. Phase 1 minimizes
//! the artificial sum, phase 2 the true objective. Pricing is Dantzig with a
//! switch to Bland's rule after a run of degenerate pivots. The dual simplex
//! (Harris ratio test, no anti-cycling rule) re-optimizes a tableau after
//! bound changes; callers cap its pivots and start cold when it stalls.

use super::model::{MilpModel, Relation, Sense};
use super::scaling::equilibrate;

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const STALL_LIMIT: usize = 50;
const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LpTolerances {
    pub feas: f64,
    pub dual: f64,
}

/// Dense minimization form of a model, optionally equilibrated.
#[derive(Debug)]
pub(crate) struct LpData {
    pub m: usize,
    pub n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    relation: Vec<Relation>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    /// +1 when the model minimizes, -1 when it maximizes.
    pub obj_sign: f64,
}

impl LpData {
    pub fn from_model(model: &MilpModel, scaling: bool) -> Self {
        let m = model.num_rows();
        let n = model.num_vars();
        let mut a = vec![0.0; m * n];
        let mut b = Vec::with_capacity(m);
        let mut relation = Vec::with_capacity(m);
        for (i, row) in model.constraints.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                a[i * n + j] += v;
            }
            b.push(row.rhs);
            relation.push(row.relation);
        }
        let obj_sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; n];
        for &(j, v) in &model.objective {
            c[j] += obj_sign * v;
        }
        let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();

        let (row_scale, col_scale) = if scaling { equilibrate(m, n, &a) } else { (vec![1.0; m], vec![1.0; n]) };
        let mut data = Self { m, n, a, b, c, lower, upper, relation, row_scale, col_scale, obj_sign };
        data.apply_scaling();
        data
    }

    fn apply_scaling(&mut self) {
        let n = self.n;
        for i in 0..self.m {
            let r = self.row_scale[i];
            for j in 0..n {
                self.a[i * n + j] *= r * self.col_scale[j];
            }
            self.b[i] *= r;
        }
        for j in 0..n {
            let s = self.col_scale[j];
            self.c[j] *= s;
            self.lower[j] /= s;
            self.upper[j] /= s;
        }
    }

    /// Scaled bounds of a structural column given bounds in model units.
    pub fn scaled_bounds(&self, j: usize, lo: f64, hi: f64) -> (f64, f64) {
        (lo / self.col_scale[j], hi / self.col_scale[j])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column sitting at zero.
    Free,
}

/// Simplex tableau `B^-1 [A | I | art]` with explicit column values.
#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    first_art: usize,
    pub pivots: usize,
}

fn nonbasic_start(lo: f64, hi: f64) -> (State, f64) {
    if lo.is_finite() {
        (State::AtLower, lo)
    } else if hi.is_finite() {
        (State::AtUpper, hi)
    } else {
        (State::Free, 0.0)
    }
}

impl Tableau {
    /// Slack basis with artificials for rows the slack cannot cover.
    pub fn new(data: &LpData, lower: &[f64], upper: &[f64]) -> Self {
        let (m, n) = (data.m, data.n);
        let mut x = vec![0.0; n + m];
        let mut state = vec![State::AtLower; n + m];
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        for j in 0..n {
            let (s, v) = nonbasic_start(lower[j], upper[j]);
            state[j] = s;
            x[j] = v;
            lo.push(lower[j]);
            hi.push(upper[j]);
        }
        for i in 0..m {
            let (l, u) = match data.relation[i] {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(u);
        }

        // Residuals decide which rows need an artificial column.
        let mut arts = Vec::new();
        let mut slack_value = vec![0.0; m];
        for i in 0..m {
            let row = &data.a[i * n..(i + 1) * n];
            let r = data.b[i] - row.iter().zip(&x[..n]).map(|(a, v)| a * v).sum::<f64>();
            let clamped = r.clamp(lo[n + i], hi[n + i]);
            slack_value[i] = clamped;
            if clamped != r {
                arts.push((i, if r > clamped { 1.0 } else { -1.0 }, (r - clamped).abs()));
            }
        }

        let first_art = n + m;
        let ncols = n + m + arts.len();
        let mut t = vec![0.0; m * ncols];
        let mut beta = data.b.clone();
        let mut basis: Vec<usize> = (n..n + m).collect();
        let mut sign = vec![1.0; m];
        for (k, &(i, s, _)) in arts.iter().enumerate() {
            sign[i] = s;
            basis[i] = first_art + k;
        }
        for i in 0..m {
            let s = sign[i];
            let row = &mut t[i * ncols..(i + 1) * ncols];
            for j in 0..n {
                row[j] = s * data.a[i * n + j];
            }
            row[n + i] = s;
            beta[i] *= s;
        }
        for (k, &(i, _, _)) in arts.iter().enumerate() {
            t[i * ncols + first_art + k] = 1.0;
        }

        x.resize(ncols, 0.0);
        state.resize(ncols, State::Basic);
        for i in 0..m {
            let slack = n + i;
            if basis[i] == slack {
                state[slack] = State::Basic;
                x[slack] = slack_value[i];
            } else {
                x[slack] = slack_value[i];
                state[slack] = if slack_value[i] == lo[slack] { State::AtLower } else { State::AtUpper };
            }
        }
        for (k, &(_, _, v)) in arts.iter().enumerate() {
            x[first_art + k] = v;
            lo.push(0.0);
            hi.push(f64::INFINITY);
        }

        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&data.c);

        Self {
            m,
            n,
            ncols,
            t,
            beta,
            basis,
            state,
            x,
            lower: lo,
            upper: hi,
            cost,
            d: vec![0.0; ncols],
            first_art,
            pivots: 0,
        }
    }

    fn has_artificials(&self) -> bool {
        self.first_art < self.ncols
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Recompute basic values from `beta` and the nonbasic values.
    fn recompute_basics(&mut self) {
        for i in 0..self.m {
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            let mut v = self.beta[i];
            for j in 0..self.ncols {
                if self.state[j] != State::Basic && self.x[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        let inv = 1.0 / piv;
        let mut prow: Vec<f64> = self.t[r * nc..(r + 1) * nc].iter().map(|v| v * inv).collect();
        prow[q] = 1.0;
        let mut nz = Vec::with_capacity(nc);
        for (j, v) in prow.iter_mut().enumerate() {
            if v.abs() < DROP_TOL {
                *v = 0.0;
            } else {
                nz.push(j);
            }
        }
        let beta_r = self.beta[r] * inv;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &j in &nz {
                row[j] -= f * prow[j];
            }
            row[q] = 0.0;
            self.beta[i] -= f * beta_r;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * prow[j];
            }
            self.d[q] = 0.0;
        }
        self.t[r * nc..(r + 1) * nc].copy_from_slice(&prow);
        self.beta[r] = beta_r;
        self.basis[r] = q;
        self.pivots += 1;
    }

    fn column(&self, q: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.t[i * self.ncols + q]).collect()
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn choose_entering(&self, tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic => continue,
                State::AtLower if dj < -tol => 1.0,
                State::AtUpper if dj > tol => -1.0,
                State::Free if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| dj.abs() > s) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Primal simplex with the current cost vector.
    fn run_primal(&mut self, tol: LpTolerances, max_pivots: usize) -> LpOutcome {
        let mut bland = false;
        let mut stall = 0usize;
        loop {
            if self.pivots >= max_pivots {
                return LpOutcome::IterationLimit;
            }
            let Some((q, dir)) = self.choose_entering(tol.dual, bland) else {
                return LpOutcome::Optimal;
            };
            let alpha = self.column(q);

            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_key = (0.0f64, usize::MAX);
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let bi = self.basis[i];
                let rate = -dir * a;
                let (limit, to_upper) = if rate < 0.0 {
                    if !self.lower[bi].is_finite() {
                        continue;
                    }
                    (((self.x[bi] - self.lower[bi]) / -rate).max(0.0), false)
                } else {
                    if !self.upper[bi].is_finite() {
                        continue;
                    }
                    (((self.upper[bi] - self.x[bi]) / rate).max(0.0), true)
                };
                let key = if bland { (0.0, bi) } else { (-a.abs(), bi) };
                let better = match leave {
                    _ if limit < theta - 1e-12 * theta.abs().max(1.0) => true,
                    Some(_) if limit <= theta + 1e-12 * theta.abs().max(1.0) => key < leave_key,
                    None if limit <= theta => true,
                    _ => false,
                };
                if better {
                    theta = limit.min(theta);
                    leave = Some((i, to_upper));
                    leave_key = key;
                }
            }
            if !theta.is_finite() {
                return LpOutcome::Unbounded;
            }

            if theta <= DEGENERATE_STEP {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            } else {
                stall = 0;
            }

            let step = dir * theta;
            self.x[q] += step;
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * step;
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                    self.pivots += 1;
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.pivot(r, q);
                    self.state[q] = State::Basic;
                    if to_upper {
                        self.state[out] = State::AtUpper;
                        self.x[out] = self.upper[out];
                    } else {
                        self.state[out] = State::AtLower;
                        self.x[out] = self.lower[out];
                    }
                }
            }
        }
    }

    /// Dual simplex: restores primal feasibility while keeping reduced costs
    /// dual feasible.
    fn run_dual(&mut self, tol: LpTolerances, max_pivots: usize) -> LpOutcome {
        loop {
            if self.pivots >= max_pivots {
                return LpOutcome::IterationLimit;
            }
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut worst = tol.feas;
            for i in 0..self.m {
                let bi = self.basis[i];
                let v = self.x[bi];
                let (gap, target, up) = if self.lower[bi] - v > tol.feas {
                    (self.lower[bi] - v, self.lower[bi], false)
                } else if v - self.upper[bi] > tol.feas {
                    (v - self.upper[bi], self.upper[bi], true)
                } else {
                    continue;
                };
                if gap > worst {
                    worst = gap;
                    leave = Some((i, target, up));
                }
            }
            let Some((r, target, to_upper)) = leave else {
                return LpOutcome::Optimal;
            };
            let increase = !to_upper;
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];

            // Harris two-pass ratio test: bound the step with the dual
            // tolerance, then take the largest pivot under that bound.
            let mut eligible = Vec::new();
            let mut bound = f64::INFINITY;
            for j in 0..self.ncols {
                if self.state[j] == State::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = row[j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                // x_Br moves by -a per unit increase of x_j.
                let ok = match self.state[j] {
                    State::AtLower => (a < 0.0) == increase,
                    State::AtUpper => (a > 0.0) == increase,
                    State::Free => true,
                    State::Basic => false,
                };
                if ok {
                    let ratio = self.d[j].abs() / a.abs();
                    bound = bound.min((self.d[j].abs() + tol.dual) / a.abs());
                    eligible.push((j, ratio, a.abs()));
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for &(j, ratio, a) in &eligible {
                if ratio <= bound && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            let Some((q, _)) = best else {
                // Certify over the full box before declaring infeasibility;
                // tiny pivots skipped above can still close the gap.
                if self.row_reaches(r, target, increase, tol.feas) {
                    return LpOutcome::IterationLimit;
                }
                return LpOutcome::Infeasible;
            };

            let alpha = self.column(q);
            let out = self.basis[r];
            let delta = (self.x[out] - target) / alpha[r];
            self.x[q] += delta;
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * delta;
                }
            }
            self.pivot(r, q);
            self.state[q] = State::Basic;
            self.state[out] = if to_upper { State::AtUpper } else { State::AtLower };
            self.x[out] = target;
        }
    }

    /// Whether basic row `r` can move to `target` with every nonbasic column
    /// free to take any value in its bounds.
    fn row_reaches(&self, r: usize, target: f64, increase: bool, tol: f64) -> bool {
        let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
        let mut best = self.beta[r];
        for j in 0..self.ncols {
            let a = row[j];
            if self.state[j] == State::Basic || a == 0.0 {
                continue;
            }
            let v = if (a > 0.0) == increase { self.lower[j] } else { self.upper[j] };
            if !v.is_finite() {
                return true;
            }
            best -= a * v;
        }
        if increase {
            best >= target - tol
        } else {
            best <= target + tol
        }
    }

    /// Phase 1 and phase 2 from the starting basis.
    pub fn solve(&mut self, tol: LpTolerances, max_pivots: usize) -> LpOutcome {
        if self.has_artificials() {
            let mut phase1 = vec![0.0; self.ncols];
            for c in &mut phase1[self.first_art..] {
                *c = 1.0;
            }
            self.compute_reduced_costs(&phase1);
            match self.run_primal(tol, max_pivots) {
                LpOutcome::Optimal => {}
                LpOutcome::Unbounded => return LpOutcome::Infeasible,
                other => return other,
            }
            self.recompute_basics();
            let infeasibility: f64 = (self.first_art..self.ncols).map(|j| self.x[j].abs()).sum();
            if infeasibility > tol.feas {
                return LpOutcome::Infeasible;
            }
            self.retire_artificials();
        }
        self.phase2(tol, max_pivots)
    }

    /// Fix artificials at zero and pivot basic ones out where possible.
    fn retire_artificials(&mut self) {
        for j in self.first_art..self.ncols {
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            if self.state[j] != State::Basic {
                self.state[j] = State::AtLower;
                self.x[j] = 0.0;
            }
        }
        for r in 0..self.m {
            let out = self.basis[r];
            if out < self.first_art {
                continue;
            }
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_art {
                if self.state[j] != State::Basic && row[j].abs() > 1e-7 && best.is_none_or(|(_, v)| row[j].abs() > v) {
                    best = Some((j, row[j].abs()));
                }
            }
            if let Some((q, _)) = best {
                self.pivot(r, q);
                self.state[q] = State::Basic;
                self.state[out] = State::AtLower;
                self.x[out] = 0.0;
            }
        }
        self.recompute_basics();
    }

    fn phase2(&mut self, tol: LpTolerances, max_pivots: usize) -> LpOutcome {
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        let out = self.run_primal(tol, max_pivots);
        if out == LpOutcome::Optimal {
            self.recompute_basics();
        }
        out
    }

    /// Change the bounds of structural column `j` (scaled units).
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        if self.state[j] == State::Basic {
            return;
        }
        let old = self.x[j];
        let (state, new) = match self.state[j] {
            State::AtUpper if hi.is_finite() => (State::AtUpper, hi),
            _ => nonbasic_start(lo, hi),
        };
        self.state[j] = state;
        self.x[j] = new;
        let delta = new - old;
        if delta != 0.0 {
            for i in 0..self.m {
                let a = self.t[i * self.ncols + j];
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * delta;
                }
            }
        }
    }

    /// Re-optimize after bound changes: dual simplex, then primal cleanup.
    pub fn reoptimize(&mut self, tol: LpTolerances, max_pivots: usize) -> LpOutcome {
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        // Nonbasic columns whose reduced cost sign no longer matches their
        // bound are moved to the other bound when it is finite.
        for j in 0..self.ncols {
            if self.state[j] == State::Basic || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let target = match self.state[j] {
                State::AtLower if dj < -tol.dual && self.upper[j].is_finite() => Some((State::AtUpper, self.upper[j])),
                State::AtUpper if dj > tol.dual && self.lower[j].is_finite() => Some((State::AtLower, self.lower[j])),
                _ => None,
            };
            if let Some((s, v)) = target {
                self.state[j] = s;
                self.x[j] = v;
            }
        }
        self.recompute_basics();
        // Break dual degeneracy: nudge zero reduced costs to the correct
        // side by distinct amounts. The primal pass below restores the true
        // costs.
        for j in 0..self.ncols {
            if self.state[j] == State::Basic || self.is_fixed(j) || self.d[j].abs() > tol.dual {
                continue;
            }
            let eps = tol.dual * (1.0 + ((j as f64) * 0.618_033_988_749_895).fract());
            match self.state[j] {
                State::AtLower => self.d[j] = self.d[j].max(0.0) + eps,
                State::AtUpper => self.d[j] = self.d[j].min(0.0) - eps,
                _ => {}
            }
        }
        match self.run_dual(tol, max_pivots) {
            LpOutcome::Optimal => {}
            other => return other,
        }
        self.recompute_basics();
        let out = self.run_primal(tol, max_pivots);
        if out == LpOutcome::Optimal {
            self.recompute_basics();
            if self.max_basic_infeasibility() > tol.feas * 10.0 {
                return LpOutcome::IterationLimit;
            }
        }
        out
    }

    fn max_basic_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| (self.lower[b] - self.x[b]).max(self.x[b] - self.upper[b]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Minimization-form objective (scaled space equals model space).
    pub fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x[..self.n]).map(|(c, x)| c * x).sum()
    }

    /// Structural values in model units.
    pub fn primal(&self, data: &LpData) -> Vec<f64> {
        (0..self.n).map(|j| self.x[j] * data.col_scale[j]).collect()
    }

    /// Row duals in model units for the minimization form.
    pub fn duals(&self, data: &LpData) -> Vec<f64> {
        (0..self.m).map(|i| -self.d[self.n + i] * data.row_scale[i]).collect()
    }
}

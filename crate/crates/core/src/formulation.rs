//! Scenario to MILP translation: the joint scheduling/power-control model,
//! its scheduling-only and power-only specializations, the optional
//! variant rows, and the max-min objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodel::{FixedPowers, LinkOutcome, PowerAllocation, Schedule, POWER_EPS};
use crate::milp::{MilpModel, Relation, Sense};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Joint,
    SchedulingOnly,
    PowerOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    #[default]
    SumLinks,
    MaxMin,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VariantFlags {
    /// At most one VUE per RB.
    pub non_overlap: bool,
    /// At most one frequency slot per VUE and timeslot.
    pub max_one_rb: bool,
    /// A VUE cannot receive in a timeslot in which it transmits.
    pub half_duplex: bool,
    pub mode: Mode,
    pub objective: ObjectiveKind,
    pub fixed_powers: Option<FixedPowers>,
    pub fixed_schedule: Option<Schedule>,
}

impl VariantFlags {
    pub fn joint() -> Self {
        Self::default()
    }

    pub fn scheduling(powers: FixedPowers) -> Self {
        Self { mode: Mode::SchedulingOnly, fixed_powers: Some(powers), ..Self::default() }
    }

    pub fn power(schedule: Schedule) -> Self {
        Self { mode: Mode::PowerOnly, fixed_schedule: Some(schedule), ..Self::default() }
    }
}

/// How the deactivating constant of the SINR rows is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BigM {
    /// One constant `gamma (N p_max + sigma^2)` for every row.
    #[default]
    Uniform,
    /// The smallest constant that deactivates each individual row.
    PerRow,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SinrRows {
    #[default]
    BigM,
    /// No SINR rows at all (the cutting-plane master).
    Omit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulationOptions {
    pub big_m: BigM,
    /// Add `Y[i,j,f,t] <= X[i,f,t]` rows.
    pub link_y_to_x: bool,
    /// Divide every SINR row by `gamma sigma^2` so its right-hand side is O(1).
    pub scale_sinr_rows: bool,
    pub sinr_rows: SinrRows,
    /// SINR rows use `gamma (1 + margin)` so continuous powers do not sit
    /// exactly on the threshold.
    pub threshold_margin: f64,
    /// Joint mode only: drop `X` and keep `0 <= P <= p_max` (overlapping
    /// power control).
    pub drop_x: bool,
}

impl Default for FormulationOptions {
    fn default() -> Self {
        Self {
            big_m: BigM::Uniform,
            link_y_to_x: false,
            scale_sinr_rows: false,
            sinr_rows: SinrRows::BigM,
            threshold_margin: 0.0,
            drop_x: false,
        }
    }
}

impl FormulationOptions {
    /// Per-row constants, normalized rows, `Y <= X` links and a 1e-6
    /// threshold margin: the numerically robust setting.
    pub fn robust() -> Self {
        Self {
            big_m: BigM::PerRow,
            link_y_to_x: true,
            scale_sinr_rows: true,
            sinr_rows: SinrRows::BigM,
            threshold_margin: 1e-6,
            drop_x: false,
        }
    }

    /// Robust setting without a threshold margin, for fixed-power schedules
    /// where the SINR of an integral point is exact.
    pub fn robust_exact_threshold() -> Self {
        Self { threshold_margin: 0.0, ..Self::robust() }
    }
}

/// Column indices of every model symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableMap {
    pub n: usize,
    pub f: usize,
    pub t: usize,
    pub mode: Mode,
    p: Vec<Option<usize>>,
    x: Vec<Option<usize>>,
    y: Vec<Option<usize>>,
    z: Vec<Option<usize>>,
    pub l: Option<usize>,
    /// Fixed powers used by the scheduling-only model.
    pub fixed_powers: Option<FixedPowers>,
    /// Schedule used by the power-only model.
    pub fixed_schedule: Option<Schedule>,
}

impl VariableMap {
    fn new(n: usize, f: usize, t: usize, mode: Mode) -> Self {
        Self {
            n,
            f,
            t,
            mode,
            p: vec![None; n * f * t],
            x: vec![None; n * f * t],
            y: vec![None; n * n * f * t],
            z: vec![None; n * n],
            l: None,
            fixed_powers: None,
            fixed_schedule: None,
        }
    }

    #[inline]
    fn ift(&self, i: usize, f: usize, t: usize) -> usize {
        (i * self.f + f) * self.t + t
    }

    #[inline]
    fn ijft(&self, i: usize, j: usize, f: usize, t: usize) -> usize {
        ((i * self.n + j) * self.f + f) * self.t + t
    }

    pub fn p(&self, i: usize, f: usize, t: usize) -> Option<usize> {
        self.p[self.ift(i, f, t)]
    }

    pub fn x(&self, i: usize, f: usize, t: usize) -> Option<usize> {
        self.x[self.ift(i, f, t)]
    }

    pub fn y(&self, i: usize, j: usize, f: usize, t: usize) -> Option<usize> {
        self.y[self.ijft(i, j, f, t)]
    }

    pub fn z(&self, i: usize, j: usize) -> Option<usize> {
        self.z[i * self.n + j]
    }

    pub fn y_columns(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), usize)> + '_ {
        let (n, f, t) = (self.n, self.f, self.t);
        self.y.iter().enumerate().filter_map(move |(k, c)| {
            c.map(|c| {
                let tt = k % t;
                let ff = (k / t) % f;
                let j = (k / (t * f)) % n;
                let i = k / (t * f * n);
                ((i, j, ff, tt), c)
            })
        })
    }

    pub fn count_p(&self) -> usize {
        self.p.iter().flatten().count()
    }

    pub fn count_x(&self) -> usize {
        self.x.iter().flatten().count()
    }

    pub fn count_y(&self) -> usize {
        self.y.iter().flatten().count()
    }

    pub fn count_z(&self) -> usize {
        self.z.iter().flatten().count()
    }
}

#[derive(Clone, Debug)]
pub struct Formulation {
    pub model: MilpModel,
    pub map: VariableMap,
}

impl Formulation {
    /// Every feasible objective is an integer (link counts).
    pub fn objective_step(&self) -> Option<f64> {
        Some(1.0)
    }

    pub fn count_rows(&self, prefix: &str) -> usize {
        self.model.constraints.iter().filter(|c| c.name.starts_with(prefix) && c.name[prefix.len()..].starts_with('[')).count()
    }
}

/// The uniform deactivating constant `gamma (N p_max + sigma^2)`.
pub fn uniform_big_m(s: &Scenario, gamma: f64) -> Result<f64> {
    let eta = gamma * (s.n as f64 * s.params.p_max + s.params.sigma2);
    if !eta.is_finite() {
        return Err(Error::InvalidParams("big-M constant overflows".into()));
    }
    Ok(eta)
}

/// Transmit power of VUE `k` on `(f, t)` as `multiplier * column`.
type PowerTerm<'a> = dyn Fn(usize, usize, usize) -> Option<(usize, f64)> + 'a;

/// Emits one SINR row per intended link and RB for which `wanted` holds.
fn emit_sinr_rows(
    model: &mut MilpModel,
    map: &VariableMap,
    s: &Scenario,
    opts: &FormulationOptions,
    term: &PowerTerm<'_>,
    max_power: &dyn Fn(usize, usize, usize) -> f64,
    wanted: &dyn Fn(usize, usize, usize) -> bool,
) -> Result<()> {
    let gamma = s.params.gamma_t * (1.0 + opts.threshold_margin);
    let sigma2 = s.params.sigma2;
    let uniform = uniform_big_m(s, gamma)?;
    for (i, j) in s.links() {
        for f in 0..s.f {
            for t in 0..s.t {
                if !wanted(i, f, t) {
                    continue;
                }
                let Some(y) = map.y(i, j, f, t) else { continue };
                let mut coeffs = Vec::new();
                if let Some((c, mult)) = term(i, f, t) {
                    coeffs.push((c, s.gain(i, j) * mult));
                }
                let mut worst = 0.0;
                for k in 0..s.n {
                    if k == i || k == j {
                        continue;
                    }
                    let h = s.gain(k, j);
                    worst += h * max_power(k, f, t);
                    for fp in 0..s.f {
                        if let Some((c, mult)) = term(k, fp, t) {
                            let coef = -gamma * s.lambda(fp.abs_diff(f)) * h * mult;
                            if coef != 0.0 {
                                coeffs.push((c, coef));
                            }
                        }
                    }
                }
                let eta = match opts.big_m {
                    BigM::Uniform => uniform,
                    BigM::PerRow => gamma * (sigma2 + worst),
                };
                coeffs.push((y, -eta));
                let mut rhs = gamma * sigma2 - eta;
                if opts.scale_sinr_rows {
                    let k = 1.0 / (gamma * sigma2);
                    for (_, a) in &mut coeffs {
                        *a *= k;
                    }
                    rhs *= k;
                }
                model.add_constraint(format!("sinr[{i},{j},{f},{t}]"), coeffs, Relation::Ge, rhs);
            }
        }
    }
    Ok(())
}

fn add_link_columns(model: &mut MilpModel, map: &mut VariableMap, s: &Scenario, y_wanted: &dyn Fn(usize, usize, usize, usize) -> bool) {
    for (i, j) in s.links() {
        for f in 0..s.f {
            for t in 0..s.t {
                if y_wanted(i, j, f, t) {
                    let c = model.add_bool(format!("Y[{i},{j},{f},{t}]"));
                    let k = map.ijft(i, j, f, t);
                    map.y[k] = Some(c);
                }
            }
        }
    }
    for (i, j) in s.links() {
        let c = model.add_continuous(format!("Z[{i},{j}]"), 0.0, 1.0);
        map.z[i * s.n + j] = Some(c);
    }
}

/// `Z <= sum Y` rows and the link-count objective.
fn add_link_rows_and_objective(model: &mut MilpModel, map: &VariableMap, s: &Scenario) {
    let mut objective = Vec::new();
    for (i, j) in s.links() {
        let z = map.z(i, j).expect("z column");
        let mut coeffs = vec![(z, 1.0)];
        for f in 0..s.f {
            for t in 0..s.t {
                if let Some(y) = map.y(i, j, f, t) {
                    coeffs.push((y, -1.0));
                }
            }
        }
        model.add_constraint(format!("zlink[{i},{j}]"), coeffs, Relation::Le, 0.0);
        objective.push((z, 1.0));
    }
    model.set_objective(Sense::Maximize, objective);
}

fn add_schedule_variant_rows(model: &mut MilpModel, map: &VariableMap, s: &Scenario, flags: &VariantFlags, opts: &FormulationOptions) {
    if opts.link_y_to_x || opts.sinr_rows == SinrRows::Omit {
        for ((i, j, f, t), y) in map.y_columns().collect::<Vec<_>>() {
            if let Some(x) = map.x(i, f, t) {
                model.add_constraint(format!("ylink[{i},{j},{f},{t}]"), vec![(y, 1.0), (x, -1.0)], Relation::Le, 0.0);
            }
        }
    }
    if flags.non_overlap {
        for f in 0..s.f {
            for t in 0..s.t {
                let coeffs: Vec<_> = (0..s.n).filter_map(|i| map.x(i, f, t).map(|c| (c, 1.0))).collect();
                model.add_constraint(format!("nonoverlap[{f},{t}]"), coeffs, Relation::Le, 1.0);
            }
        }
    }
    if flags.max_one_rb {
        for i in 0..s.n {
            for t in 0..s.t {
                let coeffs: Vec<_> = (0..s.f).filter_map(|f| map.x(i, f, t).map(|c| (c, 1.0))).collect();
                model.add_constraint(format!("onerb[{i},{t}]"), coeffs, Relation::Le, 1.0);
            }
        }
    }
    if flags.half_duplex {
        for ((i, j, f, t), y) in map.y_columns().collect::<Vec<_>>() {
            for fp in 0..s.f {
                if let Some(x) = map.x(j, fp, t) {
                    model.add_constraint(format!("hd[{i},{j},{f},{fp},{t}]"), vec![(y, 1.0), (x, 1.0)], Relation::Le, 1.0);
                }
            }
        }
    }
}

fn check_mode(flags: &VariantFlags, mode: Mode) -> Result<()> {
    if flags.mode != mode {
        return Err(Error::Validation(format!("builder for {mode:?} called with mode {:?}", flags.mode)));
    }
    Ok(())
}

/// Joint scheduling and power control.
pub fn build_joint(s: &Scenario, flags: &VariantFlags, opts: &FormulationOptions) -> Result<Formulation> {
    check_mode(flags, Mode::Joint)?;
    if opts.drop_x && (flags.non_overlap || flags.max_one_rb || flags.half_duplex) {
        return Err(Error::Validation("variant rows need the scheduling variables".into()));
    }
    let (n, nf, nt) = (s.n, s.f, s.t);
    let p_max = s.params.p_max;
    let mut model = MilpModel::new("joint", Sense::Maximize);
    let mut map = VariableMap::new(n, nf, nt, Mode::Joint);

    for i in 0..n {
        for f in 0..nf {
            for t in 0..nt {
                let c = model.add_continuous(format!("P[{i},{f},{t}]"), 0.0, p_max);
                let k = map.ift(i, f, t);
                map.p[k] = Some(c);
            }
        }
    }
    if !opts.drop_x {
        for i in 0..n {
            for f in 0..nf {
                for t in 0..nt {
                    let c = model.add_bool(format!("X[{i},{f},{t}]"));
                    let k = map.ift(i, f, t);
                    map.x[k] = Some(c);
                }
            }
        }
    }
    add_link_columns(&mut model, &mut map, s, &|_, _, _, _| true);

    if opts.sinr_rows == SinrRows::BigM {
        let pmap = map.clone();
        let term = move |k: usize, f: usize, t: usize| pmap.p(k, f, t).map(|c| (c, 1.0));
        emit_sinr_rows(&mut model, &map, s, opts, &term, &|_, _, _| p_max, &|_, _, _| true)?;
    }
    for i in 0..n {
        for t in 0..nt {
            let coeffs = (0..nf).map(|f| (map.p(i, f, t).unwrap(), 1.0)).collect();
            model.add_constraint(format!("psum[{i},{t}]"), coeffs, Relation::Le, p_max);
        }
    }
    if !opts.drop_x {
        for i in 0..n {
            for f in 0..nf {
                for t in 0..nt {
                    let (p, x) = (map.p(i, f, t).unwrap(), map.x(i, f, t).unwrap());
                    model.add_constraint(format!("pcap[{i},{f},{t}]"), vec![(p, 1.0), (x, -p_max)], Relation::Le, 0.0);
                }
            }
        }
    }
    add_link_rows_and_objective(&mut model, &map, s);
    add_schedule_variant_rows(&mut model, &map, s, flags, opts);
    let mut out = Formulation { model, map };
    if flags.objective == ObjectiveKind::MaxMin {
        apply_maxmin(&mut out, s);
    }
    Ok(out)
}

/// Scheduling with known powers `P = P̄ X`: a pure Boolean program.
pub fn build_scheduling(s: &Scenario, flags: &VariantFlags, opts: &FormulationOptions) -> Result<Formulation> {
    check_mode(flags, Mode::SchedulingOnly)?;
    let powers = flags
        .fixed_powers
        .as_ref()
        .ok_or_else(|| Error::Validation("scheduling mode needs fixed powers".into()))?;
    powers.validate(s)?;
    let (n, nf, nt) = (s.n, s.f, s.t);
    let p_max = s.params.p_max;
    let mut model = MilpModel::new("scheduling", Sense::Maximize);
    let mut map = VariableMap::new(n, nf, nt, Mode::SchedulingOnly);
    map.fixed_powers = Some(powers.clone());

    for i in 0..n {
        for f in 0..nf {
            for t in 0..nt {
                // A VUE without power in a timeslot cannot be scheduled in it.
                let upper = if powers.get(i, t) > 0.0 { 1.0 } else { 0.0 };
                let c = model.add_var(format!("X[{i},{f},{t}]"), crate::milp::VarKind::Boolean, 0.0, upper);
                let k = map.ift(i, f, t);
                map.x[k] = Some(c);
            }
        }
    }
    add_link_columns(&mut model, &mut map, s, &|_, _, _, _| true);

    if opts.sinr_rows == SinrRows::BigM {
        let xmap = map.clone();
        let pw = powers.clone();
        let term = move |k: usize, f: usize, t: usize| {
            let pk = pw.get(k, t);
            if pk > 0.0 {
                xmap.x(k, f, t).map(|c| (c, pk))
            } else {
                None
            }
        };
        let lam_sum: Vec<f64> = (0..nf).map(|f| (0..nf).map(|fp| s.lambda(fp.abs_diff(f))).sum()).collect();
        let pw2 = powers.clone();
        let worst = move |k: usize, f: usize, t: usize| pw2.get(k, t) * lam_sum[f];
        emit_sinr_rows(&mut model, &map, s, opts, &term, &worst, &|_, _, _| true)?;
    }
    for i in 0..n {
        for t in 0..nt {
            let pbar = powers.get(i, t);
            if pbar > 0.0 {
                let coeffs = (0..nf).map(|f| (map.x(i, f, t).unwrap(), pbar)).collect();
                model.add_constraint(format!("psum[{i},{t}]"), coeffs, Relation::Le, p_max);
            }
        }
    }
    add_link_rows_and_objective(&mut model, &map, s);
    add_schedule_variant_rows(&mut model, &map, s, flags, opts);
    let mut out = Formulation { model, map };
    if flags.objective == ObjectiveKind::MaxMin {
        apply_maxmin(&mut out, s);
    }
    Ok(out)
}

/// Power control over a fixed schedule.
pub fn build_power(s: &Scenario, flags: &VariantFlags, opts: &FormulationOptions) -> Result<Formulation> {
    check_mode(flags, Mode::PowerOnly)?;
    let sched = flags
        .fixed_schedule
        .as_ref()
        .ok_or_else(|| Error::Validation("power mode needs a fixed schedule".into()))?;
    if (sched.n, sched.f, sched.t) != (s.n, s.f, s.t) {
        return Err(Error::Validation("fixed schedule has wrong shape".into()));
    }
    sched.check_variants(flags.non_overlap, flags.max_one_rb)?;
    let (n, nf, nt) = (s.n, s.f, s.t);
    let p_max = s.params.p_max;
    let mut model = MilpModel::new("power", Sense::Maximize);
    let mut map = VariableMap::new(n, nf, nt, Mode::PowerOnly);
    map.fixed_schedule = Some(sched.clone());

    for i in 0..n {
        for f in 0..nf {
            for t in 0..nt {
                if sched.get(i, f, t) {
                    let c = model.add_continuous(format!("P[{i},{f},{t}]"), 0.0, p_max);
                    let k = map.ift(i, f, t);
                    map.p[k] = Some(c);
                }
            }
        }
    }
    let half_duplex = flags.half_duplex;
    add_link_columns(&mut model, &mut map, s, &|i, j, f, t| {
        sched.get(i, f, t) && !(half_duplex && sched.transmits_in(j, t))
    });

    if opts.sinr_rows == SinrRows::BigM {
        let pmap = map.clone();
        let term = move |k: usize, f: usize, t: usize| pmap.p(k, f, t).map(|c| (c, 1.0));
        let sched2 = sched.clone();
        let worst = move |k: usize, _f: usize, t: usize| if sched2.transmits_in(k, t) { p_max } else { 0.0 };
        emit_sinr_rows(&mut model, &map, s, opts, &term, &worst, &|i, f, t| sched.get(i, f, t))?;
    }
    for i in 0..n {
        for t in 0..nt {
            let coeffs: Vec<_> = (0..nf).filter_map(|f| map.p(i, f, t).map(|c| (c, 1.0))).collect();
            if coeffs.len() > 1 {
                model.add_constraint(format!("psum[{i},{t}]"), coeffs, Relation::Le, p_max);
            }
        }
    }
    add_link_rows_and_objective(&mut model, &map, s);
    let mut out = Formulation { model, map };
    if flags.objective == ObjectiveKind::MaxMin {
        apply_maxmin(&mut out, s);
    }
    Ok(out)
}

/// Dispatch on `flags.mode`.
pub fn build(s: &Scenario, flags: &VariantFlags, opts: &FormulationOptions) -> Result<Formulation> {
    match flags.mode {
        Mode::Joint => build_joint(s, flags, opts),
        Mode::SchedulingOnly => build_scheduling(s, flags, opts),
        Mode::PowerOnly => build_power(s, flags, opts),
    }
}

/// Replace the objective by `max L` with `sum_{j in R_i} Z[i,j] >= L` for every VUE.
pub fn apply_maxmin(form: &mut Formulation, s: &Scenario) {
    if form.map.l.is_some() {
        return;
    }
    let cap = s.receivers.iter().map(Vec::len).max().unwrap_or(0) as f64;
    let l = form.model.add_continuous("L", 0.0, cap);
    for i in 0..s.n {
        let mut coeffs: Vec<(usize, f64)> = s.receivers[i].iter().filter_map(|&j| form.map.z(i, j).map(|z| (z, 1.0))).collect();
        coeffs.push((l, -1.0));
        form.model.add_constraint(format!("maxmin[{i}]"), coeffs, Relation::Ge, 0.0);
    }
    form.model.set_objective(Sense::Maximize, vec![(l, 1.0)]);
    form.map.l = Some(l);
}

/// A solver point translated back to physical quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub schedule: Schedule,
    pub powers: PowerAllocation,
    /// Link indicators as claimed by the solver.
    pub claimed: LinkOutcome,
}

pub fn decode(form: &Formulation, s: &Scenario, values: &[f64]) -> Result<Decoded> {
    let map = &form.map;
    if values.len() != form.model.num_vars() {
        return Err(Error::Validation("solution length does not match the model".into()));
    }
    let on = |c: usize| values[c] > 0.5;
    let p_max = s.params.p_max;
    let mut schedule = Schedule::for_scenario(s);
    let mut powers = PowerAllocation::for_scenario(s);
    match map.mode {
        Mode::SchedulingOnly => {
            let fixed = map.fixed_powers.as_ref().expect("scheduling map keeps its powers");
            for i in 0..s.n {
                for f in 0..s.f {
                    for t in 0..s.t {
                        if map.x(i, f, t).is_some_and(on) {
                            schedule.set(i, f, t, true);
                        }
                    }
                }
            }
            powers = PowerAllocation::from_schedule(&schedule, fixed);
        }
        Mode::Joint | Mode::PowerOnly => {
            for i in 0..s.n {
                for t in 0..s.t {
                    let mut sum = 0.0;
                    for f in 0..s.f {
                        if let Some(c) = map.p(i, f, t) {
                            let v = values[c].clamp(0.0, p_max);
                            let v = if v > POWER_EPS { v } else { 0.0 };
                            powers.set(i, f, t, v);
                            sum += v;
                        }
                    }
                    if sum > p_max {
                        for f in 0..s.f {
                            let v = powers.get(i, f, t);
                            powers.set(i, f, t, v * (p_max / sum));
                        }
                    }
                    for f in 0..s.f {
                        let scheduled = match map.x(i, f, t) {
                            Some(c) => on(c) || powers.get(i, f, t) > 0.0,
                            None => powers.get(i, f, t) > 0.0,
                        };
                        schedule.set(i, f, t, scheduled);
                    }
                }
            }
        }
    }

    let mut claimed = LinkOutcome::empty(s.n, s.f, s.t);
    for ((i, j, f, t), c) in map.y_columns() {
        if on(c) {
            claimed.set_y(i, j, f, t, true);
        }
    }
    claimed.finalize(s);
    Ok(Decoded { schedule, powers, claimed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkmodel::evaluate;
    use crate::milp::{solve_milp, SolveStatus, SolverOptions};
    use crate::scenario::{build_scenario, AcirProfile, RadioParams};

    fn two_vue() -> Scenario {
        build_scenario(2, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 4).unwrap()
    }

    #[test]
    fn joint_column_and_row_counts() {
        let s = two_vue();
        let form = build_joint(&s, &VariantFlags::joint(), &FormulationOptions::default()).unwrap();
        assert_eq!(form.map.count_p(), 4);
        assert_eq!(form.map.count_x(), 4);
        assert_eq!(form.map.count_y(), 4);
        assert_eq!(form.map.count_z(), 2);
        assert_eq!(form.count_rows("sinr"), 4);
        let eta = uniform_big_m(&s, s.params.gamma_t).unwrap();
        let expected = s.params.gamma_t * (2.0 * s.params.p_max + s.params.sigma2);
        assert_eq!(eta, expected);
        let row = &form.model.constraints[0];
        let y = form.map.y(0, 1, 0, 0).unwrap();
        assert!(row.coeffs.contains(&(y, -expected)));
    }

    #[test]
    fn variant_row_counts() {
        let s = build_scenario(3, 3, 2, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 2).unwrap();
        let flags = VariantFlags { non_overlap: true, max_one_rb: true, half_duplex: true, ..VariantFlags::joint() };
        let form = build_joint(&s, &flags, &FormulationOptions::default()).unwrap();
        let links = s.num_links();
        assert_eq!(form.count_rows("nonoverlap"), 3 * 2);
        assert_eq!(form.count_rows("onerb"), 3 * 2);
        assert_eq!(form.count_rows("hd"), links * 3 * 3 * 2);
        assert_eq!(form.count_rows("sinr"), links * 3 * 2);
        assert_eq!(form.count_rows("psum"), 3 * 2);
        assert_eq!(form.count_rows("pcap"), 3 * 3 * 2);
        assert_eq!(form.count_rows("zlink"), links);
    }

    #[test]
    fn drop_x_removes_scheduling_columns() {
        let s = two_vue();
        let opts = FormulationOptions { drop_x: true, ..FormulationOptions::default() };
        let form = build_joint(&s, &VariantFlags::joint(), &opts).unwrap();
        assert_eq!(form.map.count_x(), 0);
        assert_eq!(form.count_rows("pcap"), 0);
        let flags = VariantFlags { non_overlap: true, ..VariantFlags::joint() };
        assert!(build_joint(&s, &flags, &opts).is_err());
    }

    #[test]
    fn power_mode_rows_follow_schedule() {
        let s = build_scenario(4, 3, 2, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 8).unwrap();
        let mut x = Schedule::for_scenario(&s);
        x.set(0, 0, 0, true);
        x.set(1, 2, 0, true);
        x.set(3, 1, 1, true);
        let form = build_power(&s, &VariantFlags::power(x.clone()), &FormulationOptions::default()).unwrap();
        let expected: usize = [0usize, 1, 3].iter().map(|&i| s.receivers[i].len()).sum();
        assert_eq!(form.count_rows("sinr"), expected);

        let empty = build_power(&s, &VariantFlags::power(Schedule::for_scenario(&s)), &FormulationOptions::default()).unwrap();
        let sol = solve_milp(&empty.model, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn power_mode_checks_variants() {
        let s = build_scenario(3, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 8).unwrap();
        let mut x = Schedule::for_scenario(&s);
        x.set(0, 0, 0, true);
        x.set(1, 0, 0, true);
        let flags = VariantFlags { non_overlap: true, ..VariantFlags::power(x) };
        assert!(build_power(&s, &flags, &FormulationOptions::default()).is_err());
    }

    #[test]
    fn scheduling_requires_valid_powers() {
        let s = two_vue();
        let mut flags = VariantFlags::scheduling(FixedPowers::uniform(2, 1, s.params.p_max * 2.0));
        assert!(build_scheduling(&s, &flags, &FormulationOptions::default()).is_err());
        flags.fixed_powers = None;
        assert!(build_scheduling(&s, &flags, &FormulationOptions::default()).is_err());
    }

    #[test]
    fn zero_powers_give_zero_objective() {
        let s = build_scenario(3, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 3).unwrap();
        let flags = VariantFlags::scheduling(FixedPowers::uniform(3, 1, 0.0));
        let form = build_scheduling(&s, &flags, &FormulationOptions::robust_exact_threshold()).unwrap();
        let sol = solve_milp(&form.model, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.objective.abs() < 1e-9);
    }

    #[test]
    fn y_forced_to_zero_is_feasible() {
        let s = build_scenario(3, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 3).unwrap();
        let mut form = build_joint(&s, &VariantFlags::joint(), &FormulationOptions::default()).unwrap();
        for (_, c) in form.map.y_columns().collect::<Vec<_>>() {
            form.model.variables[c].upper = 0.0;
        }
        let sol = solve_milp(&form.model, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn maxmin_replaces_objective() {
        let s = build_scenario(3, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 3).unwrap();
        let flags = VariantFlags { objective: ObjectiveKind::MaxMin, ..VariantFlags::scheduling(FixedPowers::max_power(&s)) };
        let form = build_scheduling(&s, &flags, &FormulationOptions::robust_exact_threshold()).unwrap();
        let l = form.map.l.unwrap();
        assert_eq!(form.model.objective, vec![(l, 1.0)]);
        assert_eq!(form.count_rows("maxmin"), 3);
    }

    #[test]
    fn joint_solution_never_undercounts() {
        let s = build_scenario(3, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 21).unwrap();
        let form = build_joint(&s, &VariantFlags::joint(), &FormulationOptions::robust()).unwrap();
        let opts = SolverOptions { objective_step: form.objective_step(), ..SolverOptions::default() };
        let sol = solve_milp(&form.model, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let dec = decode(&form, &s, &sol.values).unwrap();
        let real = evaluate(&s, &dec.schedule, &dec.powers).unwrap();
        for (i, j) in s.links() {
            assert!(real.z[i][j] || !dec.claimed.z[i][j]);
        }
        assert_eq!(real.objective as f64, sol.objective.round());
    }
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use v2vsched_core::milp::{MilpModel, Relation, Sense};
use v2vsched_core::scenario::{nearest_receivers, receiver_count};
use v2vsched_core::{evaluate_with, AcirProfile, EvalOptions, FixedPowers, PowerAllocation, RadioParams, Scenario, Schedule};

/// Visit every schedule with at most one frequency slot per VUE and timeslot.
pub fn for_each_schedule(n: usize, f: usize, t: usize, mut visit: impl FnMut(&Schedule)) {
    let cells = n * t;
    let mut digits = vec![0usize; cells];
    let mut x = Schedule::empty(n, f, t);
    loop {
        visit(&x);
        let mut c = 0;
        loop {
            if c == cells {
                return;
            }
            let (i, tt) = (c / t, c % t);
            if digits[c] > 0 {
                x.set(i, digits[c] - 1, tt, false);
            }
            digits[c] += 1;
            if digits[c] <= f {
                x.set(i, digits[c] - 1, tt, true);
                break;
            }
            digits[c] = 0;
            c += 1;
        }
    }
}

/// Best physical objective over all one-RB-per-timeslot schedules at fixed powers.
pub fn brute_force_schedule(s: &Scenario, p: &FixedPowers, eval: EvalOptions) -> usize {
    let mut best = 0;
    for_each_schedule(s.n, s.f, s.t, |x| {
        let o = evaluate_with(s, x, &PowerAllocation::from_schedule(x, p), eval).unwrap();
        best = best.max(o.objective);
    });
    best
}

/// Convoy-free instance with log-uniform gains spanning `lo..hi` (exponents of ten).
pub fn wide_range_scenario(rng: &mut ChaCha8Rng, n: usize, f: usize, t: usize, lo: f64, hi: f64) -> Scenario {
    loop {
        let mut positions: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..500.0)).collect();
        positions.sort_by(f64::total_cmp);
        let gains: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 10f64.powf(rng.random_range(lo..hi)) }).collect())
            .collect();
        let off: Vec<f64> = gains.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, &g)| g)).collect();
        let ratio = off.iter().cloned().fold(0.0, f64::max) / off.iter().cloned().fold(f64::INFINITY, f64::min);
        if ratio < 1e8 {
            continue;
        }
        let rx = nearest_receivers(&positions, receiver_count(n, f, t));
        return Scenario::from_parts(f, t, positions, gains, AcirProfile::three_gpp(), rx, RadioParams::table_ii()).unwrap();
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let k = a[r][c] / a[c][c];
                if k != 0.0 {
                    for j in c..n {
                        a[r][j] -= k * a[c][j];
                    }
                    b[r] -= k * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Optimum of a box-bounded LP by enumerating every vertex; `None` when infeasible.
pub fn vertex_enumeration(m: &MilpModel) -> Option<f64> {
    let n = m.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &m.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.coeffs {
            a[j] = v;
        }
        planes.push((a, c.rhs));
    }
    for (j, v) in m.variables.iter().enumerate() {
        assert!(v.lower.is_finite() && v.upper.is_finite(), "oracle needs a bounded box");
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), v.lower));
        planes.push((e, v.upper));
    }
    let feasible = |x: &[f64]| -> bool {
        m.variables.iter().zip(x).all(|(v, &xj)| xj >= v.lower - 1e-9 && xj <= v.upper + 1e-9)
            && m.constraints.iter().all(|c| {
                let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
                let tol = 1e-9 * (1.0 + c.rhs.abs());
                match c.relation {
                    Relation::Le => lhs <= c.rhs + tol,
                    Relation::Ge => lhs >= c.rhs - tol,
                    Relation::Eq => (lhs - c.rhs).abs() <= tol,
                }
            })
    };
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn rec(
        start: usize,
        depth: usize,
        pick: &mut Vec<usize>,
        planes: &[(Vec<f64>, f64)],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == pick.len() {
            visit(pick);
            return;
        }
        for p in start..planes.len() {
            pick[depth] = p;
            rec(p + 1, depth + 1, pick, planes, visit);
        }
    }
    let mut visit = |idx: &[usize]| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&p| planes[p].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&p| planes[p].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let v = m.objective_value(&x);
                best = Some(match (best, m.sense) {
                    (None, _) => v,
                    (Some(b), Sense::Maximize) => b.max(v),
                    (Some(b), Sense::Minimize) => b.min(v),
                });
            }
        }
    };
    rec(0, 0, &mut pick, &planes, &mut visit);
    best
}

/// Random box-bounded LP with up to `max_dim` columns and rows.
pub fn random_lp(rng: &mut ChaCha8Rng, max_dim: usize) -> MilpModel {
    let sense = if rng.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut m = MilpModel::new("random", sense);
    let n = rng.random_range(1..=max_dim);
    let rows = rng.random_range(1..=max_dim);
    let half = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| rng.random_range(lo..=hi) as f64 * 0.5;
    let cols: Vec<usize> = (0..n)
        .map(|j| {
            let lo = half(rng, -6, 2);
            let hi = lo + half(rng, 0, 10);
            m.add_continuous(format!("x{j}"), lo, hi)
        })
        .collect();
    for r in 0..rows {
        let mut coeffs = Vec::new();
        for &j in &cols {
            if rng.random_bool(0.7) {
                coeffs.push((j, half(rng, -8, 8)));
            }
        }
        let rel = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        let rhs = half(rng, -10, 10);
        m.add_constraint(format!("r{r}"), coeffs, rel, rhs);
    }
    let obj = cols.iter().map(|&j| (j, half(rng, -6, 6))).collect();
    m.set_objective(sense, obj);
    m
}

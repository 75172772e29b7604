//! LP-based branch-and-bound over Boolean columns.
//!
//! Node selection is depth first, zero branch first, until the first
//! incumbent, then best bound (ties: deeper first, then creation order).
//! Branching picks the most fractional Boolean (ties: lowest index). Each
//! child re-optimizes a copy of its parent's final tableau with the dual
//! simplex when that tableau is still cached, and starts cold otherwise.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::rc::Rc;
use std::time::Instant;

use super::model::MilpModel;
use super::simplex::{LpData, LpOutcome, Tableau};
use super::{MilpSolution, SolveStatus, SolverOptions};
use crate::error::Result;

/// Memory devoted to cached parent tableaux.
const CACHE_BYTES: usize = 256 << 20;

struct Node {
    /// Lower bound in minimization form (parent LP value).
    bound: f64,
    depth: usize,
    seq: u64,
    parent: Option<u64>,
    /// Boolean fixings from the root, last one applied at this node.
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Max-heap order: smaller bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    values: Vec<f64>,
    /// Minimization-form objective.
    value: f64,
}

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a SolverOptions,
    data: LpData,
    booleans: Vec<usize>,
    incumbent: Option<Incumbent>,
    cache: VecDeque<(u64, Rc<Tableau>)>,
    cache_cap: usize,
    pivots: usize,
    /// Most pivots any cold solve needed; bounds the warm-start effort.
    cold_pivots: usize,
}

impl Search<'_> {
    fn prunable(&self, bound: f64) -> bool {
        let Some(inc) = &self.incumbent else { return false };
        let slack = self.opts.abs_gap.max(1e-9 * inc.value.abs());
        match self.opts.objective_step {
            Some(step) if step > 0.0 => bound > inc.value - step + slack,
            _ => bound >= inc.value - slack,
        }
    }

    fn cached(&self, id: u64) -> Option<Rc<Tableau>> {
        self.cache.iter().find(|(k, _)| *k == id).map(|(_, t)| Rc::clone(t))
    }

    fn remember(&mut self, id: u64, tab: Tableau) {
        if self.cache.len() >= self.cache_cap {
            self.cache.pop_front();
        }
        self.cache.push_back((id, Rc::new(tab)));
    }

    fn cold(&mut self, fixings: &[(usize, f64)]) -> (Tableau, LpOutcome) {
        let mut lower = self.data.lower.clone();
        let mut upper = self.data.upper.clone();
        for &(j, v) in fixings {
            let (lo, hi) = self.data.scaled_bounds(j, v, v);
            lower[j] = lo;
            upper[j] = hi;
        }
        let mut tab = Tableau::new(&self.data, &lower, &upper);
        let out = tab.solve(self.opts.lp_tolerances(), self.opts.max_pivots);
        self.cold_pivots = self.cold_pivots.max(tab.pivots);
        (tab, out)
    }

    fn solve_node(&mut self, node: &Node) -> (Tableau, LpOutcome) {
        let warm = node.parent.and_then(|p| self.cached(p));
        let (tab, out) = match (warm, node.fixings.last()) {
            (Some(parent), Some(&(j, v))) => {
                let mut tab = (*parent).clone();
                tab.pivots = 0;
                let (lo, hi) = self.data.scaled_bounds(j, v, v);
                tab.set_bounds(j, lo, hi);
                let out = tab.reoptimize(self.opts.lp_tolerances(), self.warm_limit());
                if out == LpOutcome::IterationLimit {
                    self.pivots += tab.pivots;
                    self.cold(&node.fixings)
                } else {
                    (tab, out)
                }
            }
            _ => self.cold(&node.fixings),
        };
        self.pivots += tab.pivots;
        (tab, out)
    }

    /// Past about twice the cost of a cold solve a stalled dual simplex is
    /// not worth continuing.
    fn warm_limit(&self) -> usize {
        (2 * self.cold_pivots).max(100).min(self.opts.max_pivots)
    }

    /// Most fractional free Boolean above `threshold`, lowest index on ties.
    /// Columns fixed at the node are skipped: after scaling they can sit a
    /// hair off their bound.
    fn branching_column(&self, x: &[f64], fixings: &[(usize, f64)], threshold: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.booleans {
            if fixings.iter().any(|&(k, _)| k == j) {
                continue;
            }
            let frac = (x[j] - x[j].round()).abs();
            if frac > threshold && best.is_none_or(|(_, f)| frac > f) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Row check in model units, relative to the magnitude of the row's terms.
    fn certified(&self, x: &[f64]) -> bool {
        let tol = self.opts.feas_tol;
        let rows_ok = self.model.constraints.iter().all(|row| {
            let scale = row.coeffs.iter().map(|&(j, a)| (a * x[j]).abs()).fold(row.rhs.abs(), f64::max).max(1.0);
            row.violation(x) <= tol * scale
        });
        let bounds_ok = self
            .model
            .variables
            .iter()
            .zip(x)
            .all(|(v, &xv)| xv >= v.lower - tol * v.lower.abs().max(1.0) && xv <= v.upper + tol * v.upper.abs().max(1.0));
        rows_ok && bounds_ok
    }

    /// Snap the Booleans of an integral LP point, re-solve the continuous
    /// part and certify it. Returns false when the point does not hold up.
    fn try_incumbent(&mut self, tab: &Tableau, x: &[f64]) -> bool {
        let mut fixed = tab.clone();
        fixed.pivots = 0;
        for &j in &self.booleans {
            let v = x[j].round().clamp(0.0, 1.0);
            let (lo, hi) = self.data.scaled_bounds(j, v, v);
            fixed.set_bounds(j, lo, hi);
        }
        let mut out = fixed.reoptimize(self.opts.lp_tolerances(), self.warm_limit());
        self.pivots += fixed.pivots;
        if out == LpOutcome::IterationLimit {
            let fixings: Vec<(usize, f64)> = self.booleans.iter().map(|&j| (j, x[j].round().clamp(0.0, 1.0))).collect();
            let (cold, cold_out) = self.cold(&fixings);
            self.pivots += cold.pivots;
            fixed = cold;
            out = cold_out;
        }
        if out != LpOutcome::Optimal {
            return false;
        }
        let mut values = fixed.primal(&self.data);
        for &j in &self.booleans {
            values[j] = x[j].round().clamp(0.0, 1.0);
        }
        for (j, v) in self.model.variables.iter().enumerate() {
            values[j] = values[j].clamp(v.lower, v.upper);
        }
        if !self.certified(&values) {
            return false;
        }
        let value = self.data.obj_sign * self.model.objective_value(&values);
        if self.incumbent.as_ref().is_none_or(|inc| value < inc.value) {
            self.incumbent = Some(Incumbent { values, value });
        }
        true
    }
}

/// Branch-and-bound. Budget exhaustion yields [`SolveStatus::GapLimit`]
/// with the incumbent (if any) and the best open bound.
pub fn solve_milp(model: &MilpModel, opts: &SolverOptions) -> Result<MilpSolution> {
    model.validate()?;
    let start = Instant::now();
    let data = LpData::from_model(model, opts.scaling);
    let booleans: Vec<usize> = model.boolean_columns().collect();
    let tableau_bytes = 8 * data.m.max(1) * (data.n + 2 * data.m).max(1);
    let cache_cap = (CACHE_BYTES / tableau_bytes).clamp(2, 64);
    let mut search = Search {
        model,
        opts,
        data,
        booleans,
        incumbent: None,
        cache: VecDeque::new(),
        cache_cap,
        pivots: 0,
        cold_pivots: 0,
    };

    let sign = search.data.obj_sign;
    let mut heap = BinaryHeap::new();
    // Dive stack, used while there is no incumbent.
    let mut dive = vec![Node { bound: f64::NEG_INFINITY, depth: 0, seq: 0, parent: None, fixings: Vec::new() }];
    let mut seq = 1u64;
    let mut nodes = 0usize;
    // Bounds of subtrees abandoned because an LP hit the pivot cap.
    let mut lost_bound = f64::INFINITY;
    let mut exhausted = false;

    loop {
        if search.incumbent.is_some() && !dive.is_empty() {
            heap.extend(dive.drain(..));
        }
        let Some(node) = dive.pop().or_else(|| heap.pop()) else { break };
        if search.prunable(node.bound) {
            continue;
        }
        let over_nodes = opts.node_limit.is_some_and(|limit| nodes >= limit);
        let over_time = opts.time_limit.is_some_and(|limit| start.elapsed() >= limit);
        if over_nodes || over_time {
            heap.push(node);
            heap.extend(dive.drain(..));
            exhausted = true;
            break;
        }
        nodes += 1;

        let (tab, outcome) = search.solve_node(&node);
        match outcome {
            LpOutcome::Optimal => {}
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                if node.depth == 0 {
                    return Ok(MilpSolution::without_point(SolveStatus::Unbounded, sign * f64::NEG_INFINITY, nodes, search.pivots));
                }
                lost_bound = f64::NEG_INFINITY;
                continue;
            }
            LpOutcome::IterationLimit => {
                if node.depth == 0 {
                    let bound = -sign * f64::INFINITY;
                    return Ok(MilpSolution::without_point(SolveStatus::IterationLimit, bound, nodes, search.pivots));
                }
                lost_bound = lost_bound.min(node.bound);
                continue;
            }
        }
        let obj = tab.objective();
        if search.prunable(obj) {
            continue;
        }
        let x = tab.primal(&search.data);

        let branch_on = match search.branching_column(&x, &node.fixings, opts.int_tol) {
            Some(j) => Some(j),
            None => {
                if search.try_incumbent(&tab, &x) {
                    None
                } else {
                    // The snapped point did not certify; split on any free
                    // Boolean so the subtree is still searched.
                    search.branching_column(&x, &node.fixings, -1.0)
                }
            }
        };
        let Some(j) = branch_on else { continue };

        let id = node.seq;
        search.remember(id, tab);
        // Dives take the zero branch first; rounding direction afterwards.
        let up_first = search.incumbent.is_some() && x[j] >= 0.5;
        let mut children = Vec::with_capacity(2);
        for v in if up_first { [1.0, 0.0] } else { [0.0, 1.0] } {
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            children.push(Node { bound: obj, depth: node.depth + 1, seq, parent: Some(id), fixings });
            seq += 1;
        }
        if search.incumbent.is_some() {
            heap.extend(children);
        } else {
            // Preferred child on top of the stack.
            dive.extend(children.into_iter().rev());
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(lost_bound, f64::min);
    let pivots = search.pivots;
    match search.incumbent {
        Some(inc) => {
            let proven = !exhausted && lost_bound == f64::INFINITY;
            let bound_min = if proven { inc.value } else { open_bound.min(inc.value) };
            let objective = model.objective_value(&inc.values);
            Ok(MilpSolution {
                status: if proven { SolveStatus::Optimal } else { SolveStatus::GapLimit },
                values: inc.values,
                objective,
                duals: None,
                bound: sign * bound_min + model.objective_offset,
                nodes,
                pivots,
            })
        }
        None => {
            if !exhausted && lost_bound == f64::INFINITY {
                Ok(MilpSolution::without_point(SolveStatus::Infeasible, f64::NAN, nodes, pivots))
            } else {
                let status = if exhausted { SolveStatus::GapLimit } else { SolveStatus::IterationLimit };
                Ok(MilpSolution::without_point(status, sign * open_bound + model.objective_offset, nodes, pivots))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{Relation, Sense};

    #[test]
    fn knapsack_picks_the_heavier_item() {
        let mut m = MilpModel::new("k", Sense::Maximize);
        let a = m.add_bool("a");
        let b = m.add_bool("b");
        m.set_objective(Sense::Maximize, vec![(a, 3.0), (b, 2.0)]);
        m.add_constraint("one", vec![(a, 1.0), (b, 1.0)], Relation::Le, 1.0);
        let s = solve_milp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert_eq!(s.values[a], 1.0);
        assert_eq!(s.values[b], 0.0);
    }

    #[test]
    fn fractional_relaxation_needs_branching() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 3.5 -> a = c = 1 (8).
        let mut m = MilpModel::new("k", Sense::Maximize);
        let v: Vec<usize> = (0..3).map(|k| m.add_bool(format!("v{k}"))).collect();
        m.set_objective(Sense::Maximize, vec![(v[0], 5.0), (v[1], 4.0), (v[2], 3.0)]);
        m.add_constraint("w", vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Relation::Le, 3.5);
        let s = solve_milp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 8.0).abs() < 1e-9);
        assert!(s.nodes > 1);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut m = MilpModel::new("k", Sense::Maximize);
        let a = m.add_bool("a");
        m.add_constraint("mid", vec![(a, 2.0)], Relation::Eq, 1.0);
        let s = solve_milp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(!s.has_solution());
    }

    #[test]
    fn node_budget_reports_gap_limit() {
        let mut m = MilpModel::new("k", Sense::Maximize);
        let v: Vec<usize> = (0..12).map(|k| m.add_bool(format!("v{k}"))).collect();
        m.set_objective(Sense::Maximize, v.iter().enumerate().map(|(k, &j)| (j, 1.0 + k as f64 * 0.1)).collect());
        m.add_constraint("w", v.iter().map(|&j| (j, 2.0)).collect(), Relation::Le, 11.0);
        let s = solve_milp(&m, &SolverOptions::default().with_node_limit(2)).unwrap();
        assert_eq!(s.status, SolveStatus::GapLimit);
        assert!(s.bound >= s.objective || s.objective.is_nan());
    }

    #[test]
    fn mixed_continuous_part_is_optimized() {
        // max y s.t. y <= 2.5 a + 1, a boolean, y <= 3.
        let mut m = MilpModel::new("k", Sense::Maximize);
        let a = m.add_bool("a");
        let y = m.add_continuous("y", 0.0, 3.0);
        m.set_objective(Sense::Maximize, vec![(y, 1.0), (a, -0.1)]);
        m.add_constraint("lift", vec![(y, 1.0), (a, -2.5)], Relation::Le, 1.0);
        let s = solve_milp(&m, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 2.9).abs() < 1e-9);
    }
}

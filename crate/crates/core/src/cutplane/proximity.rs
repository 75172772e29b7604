//! Linear model of "VUE i and VUE k sit at most r frequency slots apart in
//! timeslot t" on top of max-one-RB scheduling variables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::Formulation;
use crate::linkmodel::Schedule;
use crate::milp::{MilpModel, Relation};

/// Columns behind one proximity indicator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProximityCols {
    pub v: usize,
    /// `U_i - U_k <= r`
    pub below: usize,
    /// `U_k - U_i <= r`
    pub above: usize,
}

/// Slot-index column `U` (0 when idle, else slot + 1) and its idle flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCols {
    pub u: usize,
    pub active: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProximityVars {
    pub slots: BTreeMap<(usize, usize), SlotCols>,
    pub vars: BTreeMap<(usize, usize, usize, usize), ProximityCols>,
}

/// Big-M of the gap rows; `2F` covers every slot difference.
pub fn gap_big_m(f: usize) -> f64 {
    2.0 * f as f64
}

/// Direct definition: both scheduled in `t` and their slots differ by at most `r`.
pub fn proximity_direct(x: &Schedule, i: usize, k: usize, r: usize, t: usize) -> bool {
    match (x.slot_of(i, t), x.slot_of(k, t)) {
        (Some(a), Some(b)) => a.abs_diff(b) <= r,
        _ => false,
    }
}

impl ProximityVars {
    /// Checks that the scheduling model carries one-RB-per-timeslot rows.
    pub fn attach(form: &Formulation) -> Result<Self> {
        let map = &form.map;
        if form.count_rows("onerb") != map.n * map.t || map.count_x() == 0 {
            return Err(Error::ContractViolation("proximity variables need max-one-RB scheduling rows".into()));
        }
        Ok(Self::default())
    }

    pub fn v(&self, i: usize, k: usize, r: usize, t: usize) -> Option<usize> {
        self.vars.get(&(i, k, r, t)).map(|c| c.v)
    }

    /// `U = sum_f (f+1) X` and `F * active >= U`.
    pub fn slot_cols(&mut self, form: &mut Formulation, i: usize, t: usize) -> SlotCols {
        if let Some(&c) = self.slots.get(&(i, t)) {
            return c;
        }
        let nf = form.map.f;
        let model = &mut form.model;
        let u = model.add_continuous(format!("U[{i},{t}]"), 0.0, nf as f64);
        let active = model.add_bool(format!("Ubar[{i},{t}]"));
        let mut coeffs = vec![(u, 1.0)];
        for f in 0..nf {
            coeffs.push((form.map.x(i, f, t).expect("x column"), -((f + 1) as f64)));
        }
        model.add_constraint(format!("uslot[{i},{t}]"), coeffs, Relation::Eq, 0.0);
        model.add_constraint(format!("uact[{i},{t}]"), vec![(active, nf as f64), (u, -1.0)], Relation::Ge, 0.0);
        let c = SlotCols { u, active };
        self.slots.insert((i, t), c);
        c
    }

    /// The proximity column for `(i, k, r, t)`, created with its rows on first use.
    pub fn v_column(&mut self, form: &mut Formulation, i: usize, k: usize, r: usize, t: usize) -> usize {
        if let Some(c) = self.vars.get(&(i, k, r, t)) {
            return c.v;
        }
        let si = self.slot_cols(form, i, t);
        let sk = self.slot_cols(form, k, t);
        let eta = gap_big_m(form.map.f);
        let rf = r as f64;
        let m: &mut MilpModel = &mut form.model;
        let v = m.add_bool(format!("V[{i},{k},{r},{t}]"));
        let below = m.add_bool(format!("Vlo[{i},{k},{r},{t}]"));
        let above = m.add_bool(format!("Vhi[{i},{k},{r},{t}]"));
        let tag = format!("{i},{k},{r},{t}");
        m.add_constraint(format!("vact_i[{tag}]"), vec![(v, 1.0), (si.active, -1.0)], Relation::Le, 0.0);
        m.add_constraint(format!("vact_k[{tag}]"), vec![(v, 1.0), (sk.active, -1.0)], Relation::Le, 0.0);
        m.add_constraint(format!("vlo_on[{tag}]"), vec![(si.u, 1.0), (sk.u, -1.0), (below, eta)], Relation::Le, rf + eta);
        m.add_constraint(format!("vlo_off[{tag}]"), vec![(si.u, 1.0), (sk.u, -1.0), (below, eta)], Relation::Ge, rf + 1.0);
        m.add_constraint(format!("vhi_on[{tag}]"), vec![(sk.u, 1.0), (si.u, -1.0), (above, eta)], Relation::Le, rf + eta);
        m.add_constraint(format!("vhi_off[{tag}]"), vec![(sk.u, 1.0), (si.u, -1.0), (above, eta)], Relation::Ge, rf + 1.0);
        // The AND also requires both VUEs to be active: with U = 0 for an idle
        // VUE the two gap indicators alone would report "close".
        m.add_constraint(
            format!("vand[{tag}]"),
            vec![(v, 1.0), (below, -1.0), (above, -1.0), (si.active, -1.0), (sk.active, -1.0)],
            Relation::Ge,
            -3.0,
        );
        self.vars.insert((i, k, r, t), ProximityCols { v, below, above });
        v
    }
}

/// Emit proximity columns for every listed `(i, k, r, t)`.
pub fn emit_proximity_constraints(
    form: &mut Formulation,
    triples: &[(usize, usize, usize, usize)],
) -> Result<ProximityVars> {
    let mut prox = ProximityVars::attach(form)?;
    for &(i, k, r, t) in triples {
        if i == k || r >= form.map.f {
            return Err(Error::Validation(format!("bad proximity index ({i},{k},{r},{t})")));
        }
        prox.v_column(form, i, k, r, t);
    }
    Ok(prox)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_definition() {
        let mut x = Schedule::empty(3, 5, 1);
        x.set(0, 2, 0, true);
        x.set(1, 2, 0, true);
        x.set(2, 4, 0, true);
        assert!(proximity_direct(&x, 0, 1, 0, 0));
        assert!(!proximity_direct(&x, 0, 2, 1, 0));
        assert!(proximity_direct(&x, 0, 2, 2, 0));
        let idle = Schedule::empty(3, 5, 1);
        assert!(!proximity_direct(&idle, 0, 1, 4, 0));
    }

    #[test]
    fn big_m_value() {
        assert_eq!(gap_big_m(6), 12.0);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Boolean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A mixed-Boolean linear program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
    pub sense: Sense,
    /// Constant added to the objective.
    pub objective_offset: f64,
}

impl MilpModel {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense,
            objective_offset: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable { name: name.into(), kind, lower, upper });
        self.variables.len() - 1
    }

    pub fn add_bool(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Boolean, 0.0, 1.0)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    /// Adds a row; coefficients on the same column are merged and zeros dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs: merge_terms(coeffs), relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, sense: Sense, coeffs: Vec<(usize, f64)>) {
        self.sense = sense;
        self.objective = merge_terms(coeffs);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xv)| (v.lower - xv).max(xv - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Same model with every Boolean column relaxed to a continuous `[0, 1]`.
    pub fn relaxed(&self) -> Self {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.kind = VarKind::Continuous;
        }
        m
    }

    pub fn boolean_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Boolean).map(|(j, _)| j)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::MalformedModel(format!("variable {} ({j}) has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::MalformedModel(format!("variable {} has an unattainable bound", v.name)));
            }
            if v.kind == VarKind::Boolean && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::MalformedModel(format!("boolean variable {} has bounds outside [0, 1]", v.name)));
            }
        }
        let check_terms = |what: &str, terms: &[(usize, f64)]| -> Result<()> {
            for &(j, a) in terms {
                if j >= n {
                    return Err(Error::MalformedModel(format!("{what} references unknown column {j}")));
                }
                if !a.is_finite() {
                    return Err(Error::MalformedModel(format!("{what} has a non-finite coefficient")));
                }
            }
            Ok(())
        };
        check_terms("objective", &self.objective)?;
        if !self.objective_offset.is_finite() {
            return Err(Error::MalformedModel("objective offset is not finite".into()));
        }
        for c in &self.constraints {
            check_terms(&format!("row {}", c.name), &c.coeffs)?;
            if !c.rhs.is_finite() {
                return Err(Error::MalformedModel(format!("row {} has a non-finite right-hand side", c.name)));
            }
        }
        Ok(())
    }
}

pub(crate) fn merge_terms(mut terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicate_terms() {
        let mut m = MilpModel::new("t", Sense::Maximize);
        let a = m.add_continuous("a", 0.0, 1.0);
        let b = m.add_bool("b");
        m.add_constraint("r", vec![(b, 1.0), (a, 2.0), (b, 2.0), (a, -2.0)], Relation::Le, 1.0);
        assert_eq!(m.constraints[0].coeffs, vec![(b, 3.0)]);
    }

    #[test]
    fn validation_catches_bad_models() {
        let mut m = MilpModel::new("t", Sense::Maximize);
        m.add_var("b", VarKind::Boolean, 0.0, 2.0);
        assert!(m.validate().is_err());

        let mut m = MilpModel::new("t", Sense::Maximize);
        let a = m.add_continuous("a", 0.0, 1.0);
        m.add_constraint("r", vec![(a, f64::NAN)], Relation::Le, 1.0);
        assert!(m.validate().is_err());

        let mut m = MilpModel::new("t", Sense::Maximize);
        m.add_continuous("a", 0.0, 1.0);
        m.constraints.push(Constraint { name: "r".into(), coeffs: vec![(5, 1.0)], relation: Relation::Le, rhs: 0.0 });
        assert!(m.validate().is_err());
    }

    #[test]
    fn violation_measures() {
        let c = Constraint { name: "r".into(), coeffs: vec![(0, 1.0), (1, 1.0)], relation: Relation::Ge, rhs: 2.0 };
        assert_eq!(c.violation(&[0.5, 0.5]), 1.0);
        assert_eq!(c.violation(&[1.5, 0.5]), 0.0);
    }
}

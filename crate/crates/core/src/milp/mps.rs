//! Free-format MPS import/export.
//!
//! Boolean columns are written between `INTORG`/`INTEND` markers with `BV`
//! bounds. The objective constant is stored as the negated RHS of the
//! objective row, the usual convention of external solvers.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::model::{merge_terms, MilpModel, Relation, Sense, VarKind};
use crate::error::{Error, Result};

const OBJ_ROW: &str = "OBJ";

fn unique_names<'a>(names: impl Iterator<Item = &'a str>, prefix: char, taken: &mut HashSet<String>) -> Vec<String> {
    names
        .enumerate()
        .map(|(k, raw)| {
            let clean: String = raw.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
            let mut name = if clean.is_empty() { format!("{prefix}{k}") } else { clean };
            if name.starts_with('$') || taken.contains(&name) || name == OBJ_ROW {
                name = format!("{prefix}{k}_{name}");
            }
            while taken.contains(&name) {
                name.push('_');
            }
            taken.insert(name.clone());
            name
        })
        .collect()
}

pub fn write_mps(model: &MilpModel) -> String {
    let mut taken = HashSet::from([OBJ_ROW.to_string()]);
    let rows = unique_names(model.constraints.iter().map(|c| c.name.as_str()), 'R', &mut taken);
    let mut taken_cols = HashSet::new();
    let cols = unique_names(model.variables.iter().map(|v| v.name.as_str()), 'C', &mut taken_cols);

    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", if model.name.is_empty() { "model".into() } else { model.name.replace(char::is_whitespace, "_") });
    let _ = writeln!(out, "OBJSENSE\n    {}", if model.sense == Sense::Maximize { "MAX" } else { "MIN" });
    let _ = writeln!(out, "ROWS\n N  {OBJ_ROW}");
    for (c, name) in model.constraints.iter().zip(&rows) {
        let tag = match c.relation {
            Relation::Le => 'L',
            Relation::Ge => 'G',
            Relation::Eq => 'E',
        };
        let _ = writeln!(out, " {tag}  {name}");
    }

    let mut by_col: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(j, a) in &model.objective {
        by_col[j].push((OBJ_ROW, a));
    }
    for (c, name) in model.constraints.iter().zip(&rows) {
        for &(j, a) in &c.coeffs {
            by_col[j].push((name, a));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    for (j, v) in model.variables.iter().enumerate() {
        let is_int = v.kind == VarKind::Boolean;
        if is_int != in_int {
            let _ = writeln!(out, "    MARKER 'MARKER' '{}'", if is_int { "INTORG" } else { "INTEND" });
            in_int = is_int;
        }
        if by_col[j].is_empty() {
            // Keep the column declared even without coefficients.
            let _ = writeln!(out, "    {} {OBJ_ROW} 0", cols[j]);
        }
        for (row, a) in &by_col[j] {
            let _ = writeln!(out, "    {} {} {:?}", cols[j], row, a);
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER 'MARKER' 'INTEND'");
    }

    let _ = writeln!(out, "RHS");
    if model.objective_offset != 0.0 {
        let _ = writeln!(out, "    RHS {OBJ_ROW} {:?}", -model.objective_offset);
    }
    for (c, name) in model.constraints.iter().zip(&rows) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {name} {:?}", c.rhs);
        }
    }

    let _ = writeln!(out, "BOUNDS");
    for (v, name) in model.variables.iter().zip(&cols) {
        if v.kind == VarKind::Boolean && v.lower == 0.0 && v.upper == 1.0 {
            let _ = writeln!(out, " BV BND {name}");
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " FX BND {name} {:?}", v.lower);
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND {name}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND {name}");
                let _ = writeln!(out, " UP BND {name} {:?}", v.upper);
            }
            (true, up) => {
                if v.lower != 0.0 {
                    let _ = writeln!(out, " LO BND {name} {:?}", v.lower);
                }
                if up {
                    let _ = writeln!(out, " UP BND {name} {:?}", v.upper);
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: bad number '{tok}'")))
}

pub fn read_mps(text: &str) -> Result<MilpModel> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let mut model = MilpModel::new("model", Sense::Minimize);
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut row_terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut obj_terms: Vec<(usize, f64)> = Vec::new();
    let mut in_int = false;
    let mut explicit_bounds: HashSet<usize> = HashSet::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            match toks[0] {
                "NAME" => model.name = toks.get(1).copied().unwrap_or("model").to_string(),
                "OBJSENSE" => {
                    section = Section::ObjSense;
                    if let Some(s) = toks.get(1) {
                        model.sense = if s.starts_with("MAX") { Sense::Maximize } else { Sense::Minimize };
                        section = Section::None;
                    }
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "BOUNDS" => section = Section::Bounds,
                "RANGES" => return Err(Error::Parse("RANGES section is not supported".into())),
                "ENDATA" => break,
                other => return Err(Error::Parse(format!("line {line}: unknown section '{other}'"))),
            }
            continue;
        }
        match section {
            Section::ObjSense => {
                model.sense = if toks[0].starts_with("MAX") { Sense::Maximize } else { Sense::Minimize };
            }
            Section::Rows => {
                let (tag, name) = match toks.as_slice() {
                    [t, n] => (*t, *n),
                    _ => return Err(Error::Parse(format!("line {line}: malformed row"))),
                };
                let rel = match tag {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    _ => return Err(Error::Parse(format!("line {line}: unknown row type '{tag}'"))),
                };
                row_index.insert(name.to_string(), model.constraints.len());
                model.add_constraint(name, Vec::new(), rel, 0.0);
                row_terms.push(Vec::new());
            }
            Section::Columns => {
                if toks.get(1) == Some(&"'MARKER'") {
                    in_int = match toks.get(2) {
                        Some(&"'INTORG'") => true,
                        Some(&"'INTEND'") => false,
                        _ => return Err(Error::Parse(format!("line {line}: bad marker"))),
                    };
                    continue;
                }
                let name = toks[0];
                let j = match col_index.get(name) {
                    Some(&j) => j,
                    None => {
                        let kind = if in_int { VarKind::Boolean } else { VarKind::Continuous };
                        let upper = if in_int { 1.0 } else { f64::INFINITY };
                        let j = model.add_var(name, kind, 0.0, upper);
                        col_index.insert(name.to_string(), j);
                        j
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let [row, val] = pair else {
                        return Err(Error::Parse(format!("line {line}: dangling column entry")));
                    };
                    let a = parse_num(val, line)?;
                    if Some(*row) == obj_row.as_deref() {
                        obj_terms.push((j, a));
                    } else if let Some(&i) = row_index.get(*row) {
                        row_terms[i].push((j, a));
                    } else {
                        return Err(Error::Parse(format!("line {line}: unknown row '{row}'")));
                    }
                }
            }
            Section::Rhs => {
                let body = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                for pair in body.chunks(2) {
                    let [row, val] = pair else {
                        return Err(Error::Parse(format!("line {line}: dangling RHS entry")));
                    };
                    let v = parse_num(val, line)?;
                    if Some(*row) == obj_row.as_deref() {
                        model.objective_offset = -v;
                    } else if let Some(&i) = row_index.get(*row) {
                        model.constraints[i].rhs = v;
                    } else {
                        return Err(Error::Parse(format!("line {line}: unknown row '{row}'")));
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(Error::Parse(format!("line {line}: malformed bound")));
                }
                let j = *col_index
                    .get(toks[2])
                    .ok_or_else(|| Error::Parse(format!("line {line}: unknown column '{}'", toks[2])))?;
                let value = toks.get(3).map(|t| parse_num(t, line)).transpose()?;
                let need = |v: Option<f64>| v.ok_or_else(|| Error::Parse(format!("line {line}: bound needs a value")));
                if explicit_bounds.insert(j) && model.variables[j].kind == VarKind::Boolean {
                    // Integer columns default to [0, 1] only until bounds say otherwise.
                    model.variables[j].upper = f64::INFINITY;
                }
                let var = &mut model.variables[j];
                match toks[0] {
                    "UP" => var.upper = need(value)?,
                    "LO" => var.lower = need(value)?,
                    "FX" => {
                        let v = need(value)?;
                        var.lower = v;
                        var.upper = v;
                    }
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    "BV" => {
                        var.kind = VarKind::Boolean;
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                    other => return Err(Error::Parse(format!("line {line}: unsupported bound type '{other}'"))),
                }
            }
            Section::None => return Err(Error::Parse(format!("line {line}: data outside a section"))),
        }
    }

    for (c, terms) in model.constraints.iter_mut().zip(row_terms) {
        c.coeffs = merge_terms(terms);
    }
    let sense = model.sense;
    model.set_objective(sense, obj_terms);
    for v in &model.variables {
        if v.kind == VarKind::Boolean && (v.lower < 0.0 || v.upper > 1.0) {
            return Err(Error::Parse(format!("integer column {} is not Boolean", v.name)));
        }
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MilpModel {
        let mut m = MilpModel::new("sample", Sense::Maximize);
        let a = m.add_bool("a");
        let x = m.add_continuous("x", -1.5, 4.0);
        let f = m.add_continuous("free", f64::NEG_INFINITY, f64::INFINITY);
        let z = m.add_continuous("z", 0.1, f64::INFINITY);
        m.set_objective(Sense::Maximize, vec![(a, 3.0), (x, 0.1 + 0.2), (z, -1.0)]);
        m.objective_offset = -2.25;
        m.add_constraint("r one", vec![(a, 1.0), (x, 1e-12)], Relation::Le, 1.0);
        m.add_constraint("r2", vec![(x, 2.0), (f, -1.0)], Relation::Eq, 0.0);
        m.add_constraint("r3", vec![(z, 1.0), (f, 1.0)], Relation::Ge, -7.5);
        m
    }

    #[test]
    fn round_trip_preserves_values() {
        let m = sample();
        let back = read_mps(&write_mps(&m)).unwrap();
        assert_eq!(back.sense, m.sense);
        assert_eq!(back.objective, m.objective);
        assert_eq!(back.objective_offset, m.objective_offset);
        assert_eq!(back.num_rows(), 3);
        for (a, b) in back.constraints.iter().zip(&m.constraints) {
            assert_eq!(a.coeffs, b.coeffs);
            assert_eq!(a.relation, b.relation);
            assert_eq!(a.rhs, b.rhs);
        }
        for (a, b) in back.variables.iter().zip(&m.variables) {
            assert_eq!((a.kind, a.lower, a.upper), (b.kind, b.lower, b.upper));
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_mps("ROWS\n Q  r\n").is_err());
        assert!(read_mps("COLUMNS\n    x missing 1\n").is_err());
    }
}

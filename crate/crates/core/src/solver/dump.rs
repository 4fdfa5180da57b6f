//! Plain-text sparse dump of a [`ConicProgram`], for cross-checking with
//! external solvers.
//!
//! ```text
//! vars <n>
//! c <var> <value>
//! eq <row> <var> <value>
//! rhs <row> <value>
//! block <k> <size>
//! f <k> <var> <i> <j> <value>
//! ```
//!
//! `var` in `f` lines is 0 for the constant term and `j + 1` for `x_j`; only
//! entries with `i <= j` are written. Blank lines and lines starting with `#`
//! are ignored. Values are written as the nearest `f64`.

use std::fmt::Write as _;

use super::{ConicProgram, DdMat};
use crate::dd::Dd;

pub fn write_program(p: &ConicProgram) -> String {
    let mut s = String::new();
    s.push_str("# minimize c'x  s.t.  A x = rhs,  F_k0 + sum_j x_j F_kj >= 0\n");
    writeln!(s, "vars {}", p.num_vars()).unwrap();
    for (j, c) in p.objective().iter().enumerate() {
        if *c != Dd::ZERO {
            writeln!(s, "c {} {}", j, c.to_f64()).unwrap();
        }
    }
    for (r, (row, rhs)) in p.equalities().enumerate() {
        for (j, v) in row {
            writeln!(s, "eq {} {} {}", r, j, v.to_f64()).unwrap();
        }
        writeln!(s, "rhs {} {}", r, rhs.to_f64()).unwrap();
    }
    for (k, b) in p.blocks().iter().enumerate() {
        writeln!(s, "block {} {}", k, b.size).unwrap();
        let mats = std::iter::once((0, &b.constant)).chain(b.terms.iter().map(|(j, m)| (j + 1, m)));
        for (var, m) in mats {
            for i in 0..b.size {
                for j in i..b.size {
                    let v = m[(i, j)];
                    if v != Dd::ZERO {
                        writeln!(s, "f {} {} {} {} {}", k, var, i, j, v.to_f64()).unwrap();
                    }
                }
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

pub fn read_program(text: &str) -> Result<ConicProgram, ParseError> {
    let mut program: Option<ConicProgram> = None;
    let mut eq_rows: Vec<Vec<(usize, Dd)>> = Vec::new();
    let mut eq_rhs: Vec<f64> = Vec::new();
    let mut blocks: Vec<(DdMat, std::collections::BTreeMap<usize, DdMat>)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| ParseError {
            line: ln + 1,
            msg: msg.to_string(),
        };
        let tok: Vec<&str> = line.split_whitespace().collect();
        let uint = |i: usize| -> Result<usize, ParseError> {
            tok.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| err("expected an integer"))
        };
        let real = |i: usize| -> Result<f64, ParseError> {
            tok.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| err("expected a number"))
        };
        match tok[0] {
            "vars" => program = Some(ConicProgram::new(uint(1)?)),
            "c" => {
                let p = program.as_mut().ok_or_else(|| err("`vars` must come first"))?;
                let j = uint(1)?;
                if j >= p.num_vars() {
                    return Err(err("variable out of range"));
                }
                p.set_objective(j, real(2)?);
            }
            "eq" | "rhs" => {
                let r = uint(1)?;
                if eq_rows.len() <= r {
                    eq_rows.resize(r + 1, Vec::new());
                    eq_rhs.resize(r + 1, 0.0);
                }
                if tok[0] == "eq" {
                    eq_rows[r].push((uint(2)?, Dd::new(real(3)?)));
                } else {
                    eq_rhs[r] = real(2)?;
                }
            }
            "block" => {
                let k = uint(1)?;
                if k != blocks.len() {
                    return Err(err("blocks must be numbered consecutively"));
                }
                let n = uint(2)?;
                blocks.push((DdMat::zeros(n, n), Default::default()));
            }
            "f" => {
                let k = uint(1)?;
                let var = uint(2)?;
                let (i, j) = (uint(3)?, uint(4)?);
                let v = Dd::new(real(5)?);
                let (c, terms) = blocks.get_mut(k).ok_or_else(|| err("unknown block"))?;
                let n = c.nrows();
                if i >= n || j >= n {
                    return Err(err("entry outside block"));
                }
                let m = if var == 0 {
                    c
                } else {
                    terms.entry(var - 1).or_insert_with(|| DdMat::zeros(n, n))
                };
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            other => return Err(err(&format!("unknown record `{other}`"))),
        }
    }
    let mut p = program.ok_or(ParseError {
        line: 0,
        msg: "missing `vars` record".into(),
    })?;
    for (row, rhs) in eq_rows.into_iter().zip(eq_rhs) {
        p.add_equality(row, rhs);
    }
    for (c, terms) in blocks {
        let k = p.add_block(c);
        for (var, m) in terms {
            p.add_block_term(k, var, m);
        }
    }
    p.validate().map_err(|e| ParseError { line: 0, msg: e.0 })?;
    Ok(p)
}

//! Dense solver for linear programs with linear matrix inequalities:
//!
//! ```text
//!   minimize   c'x
//!   subject to A x = b
//!              F_k(x) = F_k0 + Σ_j x_j F_kj ⪰ 0   for every block k
//! ```
//!
//! Equalities are removed by a null-space parametrisation `x = x0 + N z`
//! computed from a pivoted QR of `A'`; the remaining cone-only program is solved
//! by a primal-dual interior point method in double-double arithmetic.

pub mod dense;
pub mod dump;
mod ipm;

use std::fmt;

use nalgebra::DMatrix;

use crate::dd::Dd;
pub use dense::DdMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    NumericalFailure,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::NumericalFailure => "numerical-failure",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// One LMI block `F0 + Σ_j x_j F_j ⪰ 0`; `terms` lists only the variables present.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub size: usize,
    pub constant: DdMat,
    pub terms: Vec<(usize, DdMat)>,
}

#[derive(Clone, Debug)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<Dd>,
    eq_rows: Vec<Vec<(usize, Dd)>>,
    eq_rhs: Vec<Dd>,
    blocks: Vec<LmiBlock>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("malformed conic program: {0}")]
pub struct MalformedProgram(pub String);

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        ConicProgram {
            num_vars,
            objective: vec![Dd::ZERO; num_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_equalities(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    pub fn objective(&self) -> &[Dd] {
        &self.objective
    }

    pub fn equalities(&self) -> impl Iterator<Item = (&[(usize, Dd)], Dd)> {
        self.eq_rows.iter().map(|r| r.as_slice()).zip(self.eq_rhs.iter().copied())
    }

    pub fn set_objective(&mut self, var: usize, c: impl Into<Dd>) {
        self.objective[var] = c.into();
    }

    pub fn add_equality(&mut self, row: Vec<(usize, Dd)>, rhs: impl Into<Dd>) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs.into());
    }

    /// Add a block with constant term `constant`; returns its index.
    pub fn add_block(&mut self, constant: impl Into<DdMat>) -> usize {
        let constant = constant.into();
        self.blocks.push(LmiBlock {
            size: constant.nrows(),
            constant,
            terms: Vec::new(),
        });
        self.blocks.len() - 1
    }

    pub fn add_block_term(&mut self, block: usize, var: usize, coef: impl Into<DdMat>) {
        self.blocks[block].terms.push((var, coef.into()));
    }

    pub fn validate(&self) -> Result<(), MalformedProgram> {
        let bad = |s: String| Err(MalformedProgram(s));
        for (r, row) in self.eq_rows.iter().enumerate() {
            if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= self.num_vars) {
                return bad(format!("equality {r} references variable {j}"));
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            if b.size == 0 {
                return bad(format!("block {k} is empty"));
            }
            let mats = std::iter::once(&b.constant).chain(b.terms.iter().map(|(_, m)| m));
            for m in mats {
                if m.nrows() != b.size || m.ncols() != b.size {
                    return bad(format!("block {k} has a coefficient of the wrong size"));
                }
                if m.sub(&m.transpose()).max_abs() > 0.0 {
                    return bad(format!("block {k} has a non-symmetric coefficient"));
                }
                if !m.is_finite() {
                    return bad(format!("block {k} has a non-finite coefficient"));
                }
            }
            if let Some(&(j, _)) = b.terms.iter().find(|(j, _)| *j >= self.num_vars) {
                return bad(format!("block {k} references variable {j}"));
            }
        }
        Ok(())
    }

    /// Evaluate block `k` at `x`.
    pub fn block_value(&self, k: usize, x: &[f64]) -> DMatrix<f64> {
        let b = &self.blocks[k];
        let mut m = b.constant.clone();
        for (j, f) in &b.terms {
            m.axpy(Dd::new(x[*j]), f);
        }
        m.to_f64()
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// One multiplier per LMI block.
    pub block_duals: Vec<DMatrix<f64>>,
    /// Multipliers of `A x = b`.
    pub eq_duals: Vec<f64>,
    /// Relative LMI infeasibility.
    pub primal_residual: f64,
    /// Relative stationarity residual.
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

struct Reduction {
    x0: Vec<Dd>,
    /// Columns span `ker A`.
    null: DdMat,
    qr: Option<(dense::PivotedQr, usize)>,
}

fn reduce(p: &ConicProgram) -> Option<Reduction> {
    let n = p.num_vars;
    let m = p.eq_rows.len();
    if m == 0 {
        return Some(Reduction {
            x0: vec![Dd::ZERO; n],
            null: DdMat::identity(n),
            qr: None,
        });
    }
    let mut at = DdMat::zeros(n, m);
    for (r, row) in p.eq_rows.iter().enumerate() {
        for &(j, v) in row {
            at[(j, r)] += v;
        }
    }
    let qr = at.qr_pivoted();
    let rank = qr.rank(1e-24);
    // R11' w = b[perm[..rank]]
    let mut w = vec![Dd::ZERO; rank];
    for i in 0..rank {
        let mut s = p.eq_rhs[qr.perm[i]];
        for k in 0..i {
            s -= qr.r[(k, i)] * w[k];
        }
        w[i] = s / qr.r[(i, i)];
    }
    let x0: Vec<Dd> = (0..n).map(|i| (0..rank).map(|k| qr.q[(i, k)] * w[k]).sum()).collect();
    let resid: f64 = p
        .eq_rows
        .iter()
        .zip(&p.eq_rhs)
        .map(|(row, &b)| {
            let ax: Dd = row.iter().map(|&(j, v)| v * x0[j]).sum();
            (ax - b).abs().to_f64()
        })
        .fold(0.0, f64::max);
    let scale = 1.0 + p.eq_rhs.iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max);
    if resid > 1e-20 * scale {
        return None;
    }
    let null = DdMat::from_fn(n, n - rank, |i, j| qr.q[(i, rank + j)]);
    Some(Reduction {
        x0,
        null,
        qr: Some((qr, rank)),
    })
}

fn infeasible(p: &ConicProgram) -> SolveResult {
    SolveResult {
        status: SolveStatus::Infeasible,
        x: vec![f64::NAN; p.num_vars],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        block_duals: p.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect(),
        eq_duals: vec![f64::NAN; p.eq_rows.len()],
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
    }
}

/// Solve `program`. Malformed programs panic in debug builds; call
/// [`ConicProgram::validate`] first for untrusted input.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> SolveResult {
    debug_assert!(program.validate().is_ok(), "{:?}", program.validate());
    let Some(red) = reduce(program) else {
        return infeasible(program);
    };
    let nz = red.null.ncols();

    // Reduced blocks: constant F0 + Σ x0_i F_i, coefficients Σ_i N_ij F_i.
    let mut c_blocks = Vec::with_capacity(program.blocks.len());
    let mut a_blocks: Vec<Vec<DdMat>> = (0..nz).map(|_| Vec::new()).collect();
    for b in &program.blocks {
        let mut f0 = b.constant.clone();
        let mut fj: Vec<DdMat> = (0..nz).map(|_| DdMat::zeros(b.size, b.size)).collect();
        for (i, f) in &b.terms {
            if red.x0[*i] != Dd::ZERO {
                f0.axpy(red.x0[*i], f);
            }
            for (j, acc) in fj.iter_mut().enumerate() {
                let nij = red.null[(*i, j)];
                if nij != Dd::ZERO {
                    acc.axpy(-nij, f);
                }
            }
        }
        c_blocks.push(f0);
        for (j, m) in fj.into_iter().enumerate() {
            a_blocks[j].push(m);
        }
    }
    let c_red = red.null.tr_mul_vec(&program.objective);
    let sf = ipm::StandardForm {
        c: c_blocks,
        a: a_blocks,
        b: c_red.iter().map(|&v| -v).collect(),
    };
    let out = ipm::solve(&sf, settings.tol, settings.max_iter);

    let x: Vec<Dd> = {
        let nz_part = red.null.mul_vec(&out.y);
        red.x0.iter().zip(&nz_part).map(|(&a, &b)| a + b).collect()
    };
    let c_x0: Dd = red.x0.iter().zip(&program.objective).map(|(&a, &b)| a * b).sum();
    let objective: Dd = x.iter().zip(&program.objective).map(|(&a, &b)| a * b).sum();
    let dual_objective = c_x0 - out.pobj;

    // Equality multipliers from stationarity: A'y = c - g(Z).
    let eq_duals = match &red.qr {
        None => Vec::new(),
        Some((qr, rank)) => {
            let mut g = program.objective.clone();
            for (b, z) in program.blocks.iter().zip(&out.x) {
                for (i, f) in &b.terms {
                    g[*i] -= f.dot(z);
                }
            }
            let qtg: Vec<Dd> = (0..*rank)
                .map(|k| (0..program.num_vars).map(|i| qr.q[(i, k)] * g[i]).sum())
                .collect();
            let mut u = vec![Dd::ZERO; *rank];
            for i in (0..*rank).rev() {
                let mut s = qtg[i];
                for k in i + 1..*rank {
                    s -= qr.r[(i, k)] * u[k];
                }
                u[i] = s / qr.r[(i, i)];
            }
            let mut y = vec![0.0; program.eq_rows.len()];
            for (k, v) in u.into_iter().enumerate() {
                y[qr.perm[k]] = v.to_f64();
            }
            y
        }
    };

    SolveResult {
        status: out.status,
        x: x.into_iter().map(Dd::to_f64).collect(),
        objective: objective.to_f64(),
        dual_objective: dual_objective.to_f64(),
        block_duals: out.x.iter().map(DdMat::to_f64).collect(),
        eq_duals,
        primal_residual: out.dinf,
        dual_residual: out.pinf,
        gap: out.gap,
        iterations: out.iterations,
    }
}

//! Level-n semidefinite relaxation of the total variation problem
//!
//! ```text
//!   ρ_n = min  φ_0 + ψ_0
//!         s.t. φ_α − ψ_α = μ_α − ν_α           |α| ≤ 2n
//!              0 ⪯ M_n(φ) ⪯ M_n(μ),  0 ⪯ M_n(ψ) ⪯ M_n(ν)
//! ```
//!
//! Pseudo-moments are carried in a conditioning basis (see [`crate::basis`]);
//! the optimal value does not depend on that choice.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::basis::{AffineFrame, BasisKind, MomentSource, PolyBasis};
use crate::certificate::{best_certificate, DualCertificate};
use crate::dd::Dd;
use crate::error::{Result, TvError};
use crate::moments::{basis_len, MomentSequence, MultiIndex};
use crate::solver::{self, ConicProgram, DdMat, SolveResult, SolveStatus, SolverSettings};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationSettings {
    pub solver: SolverSettings,
    /// Affine window plus Chebyshev basis; off means raw monomials.
    pub scale: bool,
}

impl Default for RelaxationSettings {
    fn default() -> Self {
        RelaxationSettings {
            solver: SolverSettings::default(),
            scale: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Phi,
    Psi,
}

#[derive(Clone, Debug)]
pub struct RelaxationProblem {
    pub level: usize,
    pub dim: usize,
    /// Basis of polynomials of degree `2n`.
    pub basis: PolyBasis,
    pub mu_values: Vec<Dd>,
    pub nu_values: Vec<Dd>,
    pub program: ConicProgram,
    /// Variable `k` is the coordinate of `decode[k].0` on basis element `decode[k].1`.
    pub decode: Vec<(Measure, MultiIndex)>,
}

impl RelaxationProblem {
    pub fn num_vars(&self) -> usize {
        self.program.num_vars()
    }

    /// `s(2n)`: pseudo-moments per measure.
    pub fn moment_len(&self) -> usize {
        self.basis.len()
    }

    /// Moment matrix of order `n` in the problem basis from basis values.
    pub fn moment_matrix(&self, values: &[f64]) -> nalgebra::DMatrix<f64> {
        self.basis.moment_matrix(values, self.level)
    }
}

fn conditioning_basis(mu: &dyn MomentSource, nu: &dyn MomentSource, degree: usize, scale: bool) -> Result<PolyBasis> {
    if mu.dimension() != nu.dimension() {
        return Err(TvError::DimensionMismatch(mu.dimension(), nu.dimension()));
    }
    for src in [mu, nu] {
        if let Some(avail) = src.available_degree() {
            if avail < degree {
                return Err(TvError::DegreeTooLow {
                    needed: degree,
                    available: avail,
                });
            }
        }
    }
    Ok(if scale {
        PolyBasis::new(AffineFrame::covering(&[mu, nu])?, BasisKind::Chebyshev, degree)
    } else {
        PolyBasis::new(AffineFrame::identity(mu.dimension()), BasisKind::Monomial, degree)
    })
}

/// Assemble the level-`n` program for two moment sequences (with conditioning).
pub fn assemble(mu: &MomentSequence, nu: &MomentSequence, n: usize) -> Result<RelaxationProblem> {
    assemble_with(mu, nu, n, true)
}

pub fn assemble_with(mu: &dyn MomentSource, nu: &dyn MomentSource, n: usize, scale: bool) -> Result<RelaxationProblem> {
    if n == 0 {
        return Err(TvError::Unsupported("relaxation level must be at least 1".into()));
    }
    let basis = conditioning_basis(mu, nu, 2 * n, scale)?;
    let mu_values = basis.values_of(mu)?;
    let nu_values = basis.values_of(nu)?;
    let s = basis.len();
    let k = basis_len(basis.dim(), n);

    // B_γ with (B_γ)_ij = coefficient of b_γ in b_i b_j.
    let mut b_mats: Vec<DdMat> = (0..s).map(|_| DdMat::zeros(k, k)).collect();
    for (i, row) in basis.product_table(n).into_iter().enumerate() {
        for (j, lin) in row.into_iter().enumerate() {
            for (g, w) in lin {
                b_mats[g][(i, j)] += Dd::new(w);
            }
        }
    }
    let matrix_of = |vals: &[Dd]| {
        let mut m = DdMat::zeros(k, k);
        for (b, &v) in b_mats.iter().zip(vals) {
            m.axpy(v, b);
        }
        m
    };

    let mut program = ConicProgram::new(2 * s);
    program.set_objective(0, 1.0);
    program.set_objective(s, 1.0);
    for g in 0..s {
        program.add_equality(vec![(g, Dd::ONE), (s + g, -Dd::ONE)], mu_values[g] - nu_values[g]);
    }
    let blocks = [
        (DdMat::zeros(k, k), 0, 1.0),
        (matrix_of(&mu_values), 0, -1.0),
        (DdMat::zeros(k, k), s, 1.0),
        (matrix_of(&nu_values), s, -1.0),
    ];
    for (constant, offset, sign) in blocks {
        let blk = program.add_block(constant);
        for (g, b) in b_mats.iter().enumerate() {
            program.add_block_term(blk, offset + g, b.scale(Dd::new(sign)));
        }
    }

    let decode = [Measure::Phi, Measure::Psi]
        .into_iter()
        .flat_map(|m| basis.indices().indices().iter().map(move |a| (m, a.clone())))
        .collect();
    Ok(RelaxationProblem {
        level: n,
        dim: basis.dim(),
        basis,
        mu_values,
        nu_values,
        program,
        decode,
    })
}

#[derive(Clone, Debug)]
pub struct HierarchyResult {
    pub level: usize,
    pub rho_n: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Pseudo-moments in original coordinates, degree `2n`.
    pub phi: MomentSequence,
    pub psi: MomentSequence,
    /// The same pseudo-moments as values on `basis`.
    pub phi_basis: Vec<f64>,
    pub psi_basis: Vec<f64>,
    pub mu_basis: Vec<f64>,
    pub nu_basis: Vec<f64>,
    pub basis: PolyBasis,
    pub certificate: Option<DualCertificate>,
}

/// Solve an assembled problem. Non-optimal solves are errors carrying the status.
pub fn solve_problem(problem: &RelaxationProblem, settings: &SolverSettings) -> Result<(HierarchyResult, SolveResult)> {
    let sol = solver::solve(&problem.program, settings);
    if sol.status != SolveStatus::Optimal {
        return Err(TvError::SolverFailure {
            level: problem.level,
            status: sol.status,
            last_objective: sol.objective.is_finite().then_some(sol.objective),
        });
    }
    let s = problem.moment_len();
    let phi_basis = sol.x[..s].to_vec();
    let psi_basis = sol.x[s..].to_vec();
    let certificate = best_certificate(problem, &sol, settings).ok();
    let to_f64 = |v: &[Dd]| v.iter().map(|x| x.to_f64()).collect::<Vec<_>>();
    let result = HierarchyResult {
        level: problem.level,
        rho_n: sol.objective,
        dual_value: sol.dual_objective,
        gap: sol.gap,
        status: sol.status,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        iterations: sol.iterations,
        phi: problem.basis.to_moment_sequence(&phi_basis),
        psi: problem.basis.to_moment_sequence(&psi_basis),
        phi_basis,
        psi_basis,
        mu_basis: to_f64(&problem.mu_values),
        nu_basis: to_f64(&problem.nu_values),
        basis: problem.basis.clone(),
        certificate,
    };
    Ok((result, sol))
}

/// `ρ_n` for two moment sequences or measure specs.
pub fn solve_level(
    mu: &dyn MomentSource,
    nu: &dyn MomentSource,
    n: usize,
    settings: &RelaxationSettings,
) -> Result<HierarchyResult> {
    let problem = assemble_with(mu, nu, n, settings.scale)?;
    solve_problem(&problem, &settings.solver).map(|(r, _)| r)
}

#[derive(Debug)]
pub struct HierarchySweep {
    /// One entry per requested level, in order.
    pub levels: Vec<(usize, Result<HierarchyResult>)>,
    /// `ρ_{n+1} ≥ ρ_n − 2·tol` across consecutive successful levels.
    pub monotone: bool,
}

impl HierarchySweep {
    pub fn all_ok(&self) -> bool {
        self.levels.iter().all(|(_, r)| r.is_ok())
    }

    pub fn rhos(&self) -> Vec<Option<f64>> {
        self.levels.iter().map(|(_, r)| r.as_ref().ok().map(|h| h.rho_n)).collect()
    }
}

/// Solve every level in `levels`; levels run in parallel, results keep order.
pub fn solve_hierarchy(
    mu: &dyn MomentSource,
    nu: &dyn MomentSource,
    levels: RangeInclusive<usize>,
    settings: &RelaxationSettings,
) -> Result<HierarchySweep> {
    if levels.is_empty() {
        return Err(TvError::Unsupported("empty level range".into()));
    }
    let max = *levels.end();
    conditioning_basis(mu, nu, 2 * max, settings.scale)?;
    let results: Vec<(usize, Result<HierarchyResult>)> = levels
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| (n, solve_level(mu, nu, n, settings)))
        .collect();
    let ok: Vec<f64> = results
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().map(|h| h.rho_n))
        .collect();
    let slack = 2.0 * settings.solver.tol;
    let monotone = ok.windows(2).all(|w| w[1] >= w[0] - slack);
    Ok(HierarchySweep {
        levels: results,
        monotone,
    })
}

//! Dual sum-of-squares certificates and closed-form comparison bounds.
//!
//! A certificate at level n is `(p, σ0, σ1, ψ0, ψ1)` with
//! `1 − p = σ0 − σ1`, `1 + p = ψ0 − ψ1` and all four SOS. Its value
//! `∫p d(μ−ν) − ∫σ1 dμ − ∫ψ1 dν` is a lower bound on the TV distance.

use nalgebra::DMatrix;

use crate::basis::{MomentSource, PolyBasis};
use crate::dd::Dd;
use crate::error::{Result, TvError};
use crate::measures::MeasureSpec;
use crate::moments::{basis_len, Polynomial};
use crate::relaxation::RelaxationProblem;
use crate::solver::{self, ConicProgram, DdMat, SolveResult, SolveStatus, SolverSettings};

pub const IDENTITY_TOL: f64 = 1e-6;
pub const PSD_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub level: usize,
    /// Basis of degree `2n`; `p` and the Gram matrices are expressed in it.
    pub basis: PolyBasis,
    pub p: Vec<f64>,
    pub gram_sigma0: DMatrix<f64>,
    pub gram_sigma1: DMatrix<f64>,
    pub gram_psi0: DMatrix<f64>,
    pub gram_psi1: DMatrix<f64>,
    pub dual_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResiduals {
    /// max |(1 − p) − (σ0 − σ1)| over coefficients
    pub sigma: f64,
    /// max |(1 + p) − (ψ0 − ψ1)| over coefficients
    pub psi: f64,
}

impl DualCertificate {
    /// `p = 0`, `σ0 = ψ0 = 1`, `σ1 = ψ1 = 0`: valid with value 0.
    pub fn zero(basis: PolyBasis, level: usize) -> Self {
        let k = basis_len(basis.dim(), level);
        let mut e = DMatrix::zeros(k, k);
        e[(0, 0)] = 1.0;
        DualCertificate {
            level,
            p: vec![0.0; basis.len()],
            basis,
            gram_sigma0: e.clone(),
            gram_sigma1: DMatrix::zeros(k, k),
            gram_psi0: e,
            gram_psi1: DMatrix::zeros(k, k),
            dual_value: 0.0,
        }
    }

    pub fn grams(&self) -> [(&'static str, &DMatrix<f64>); 4] {
        [
            ("sigma0", &self.gram_sigma0),
            ("sigma1", &self.gram_sigma1),
            ("psi0", &self.gram_psi0),
            ("psi1", &self.gram_psi1),
        ]
    }

    /// Smallest eigenvalue of each Gram matrix.
    pub fn min_eigenvalues(&self) -> [f64; 4] {
        self.grams().map(|(_, g)| {
            g.clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub fn identity_residuals(&self) -> IdentityResiduals {
        let s0 = self.basis.gram_polynomial(&self.gram_sigma0);
        let s1 = self.basis.gram_polynomial(&self.gram_sigma1);
        let t0 = self.basis.gram_polynomial(&self.gram_psi0);
        let t1 = self.basis.gram_polynomial(&self.gram_psi1);
        let mut sigma: f64 = 0.0;
        let mut psi: f64 = 0.0;
        for g in 0..self.p.len() {
            let one = if g == 0 { 1.0 } else { 0.0 };
            sigma = sigma.max(((one - self.p[g]) - (s0[g] - s1[g])).abs());
            psi = psi.max(((one + self.p[g]) - (t0[g] - t1[g])).abs());
        }
        IdentityResiduals { sigma, psi }
    }

    /// `p` as a polynomial in the original coordinates.
    pub fn p_polynomial(&self) -> Polynomial {
        self.basis.to_monomial_polynomial(&self.p)
    }

    pub fn eval_p(&self, x: &[f64]) -> f64 {
        self.basis.eval_poly(&self.p, x)
    }

    /// `b(x)' G b(x)` for one of the Gram matrices.
    pub fn eval_sos(&self, gram: &DMatrix<f64>, x: &[f64]) -> f64 {
        let k = gram.nrows();
        let v = nalgebra::DVector::from_fn(k, |i, _| self.basis.eval(i, x));
        (v.transpose() * gram * &v)[(0, 0)]
    }
}

/// Read the certificate off the multipliers of an optimal solve.
///
/// Block multipliers map to Gram matrices in block order
/// (`M(φ)` → σ0, `M(μ) − M(φ)` → σ1, `M(ψ)` → ψ0, `M(ν) − M(ψ)` → ψ1) and the
/// multipliers of `φ − ψ = μ − ν` are the coefficients of `p`.
pub fn recover_certificate(problem: &RelaxationProblem, sol: &SolveResult) -> Result<DualCertificate> {
    if sol.status != SolveStatus::Optimal {
        return Err(TvError::CertificateMismatch(format!("solver status {}", sol.status)));
    }
    let s = problem.moment_len();
    if sol.block_duals.len() != 4 || sol.eq_duals.len() != s {
        return Err(TvError::CertificateMismatch("dual multipliers have the wrong shape".into()));
    }
    let mut cert = DualCertificate {
        level: problem.level,
        basis: problem.basis.clone(),
        p: sol.eq_duals.clone(),
        gram_sigma0: sol.block_duals[0].clone(),
        gram_sigma1: sol.block_duals[1].clone(),
        gram_psi0: sol.block_duals[2].clone(),
        gram_psi1: sol.block_duals[3].clone(),
        dual_value: 0.0,
    };
    cert.dual_value = certificate_value(&cert, &problem.mu_values, &problem.nu_values);
    let r = cert.identity_residuals();
    if r.sigma > IDENTITY_TOL || r.psi > IDENTITY_TOL {
        return Err(TvError::CertificateMismatch(format!(
            "identity residuals sigma {:e}, psi {:e}",
            r.sigma, r.psi
        )));
    }
    let lmin = cert.min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    if lmin < -PSD_TOL {
        return Err(TvError::CertificateMismatch(format!("Gram eigenvalue {lmin:e}")));
    }
    Ok(cert)
}

/// Trace bounds tried by [`elastic_certificate`], largest first.
pub const ELASTIC_BOUNDS: [f64; 3] = [1e6, 1e4, 1e2];

/// Certificate from the relaxation with every block loosened by `t·I`, `t ≥ 0`,
/// at cost `bound·t`.
///
/// When `M_n(μ)` or `M_n(ν)` is singular the dual supremum need not be
/// attained and the Gram matrices of the plain solve grow without limit. The
/// loosened problem has a bounded dual (`Σ tr Z_k ≤ bound`) whose value is
/// still a lower bound on `ρ_n`, slightly below it.
pub fn elastic_certificate(problem: &RelaxationProblem, settings: &SolverSettings, bound: f64) -> Result<DualCertificate> {
    let base = &problem.program;
    let t = base.num_vars();
    let mut prog = ConicProgram::new(t + 1);
    for (j, &c) in base.objective().iter().enumerate() {
        prog.set_objective(j, c);
    }
    prog.set_objective(t, bound);
    for (row, rhs) in base.equalities() {
        prog.add_equality(row.to_vec(), rhs);
    }
    for block in base.blocks() {
        let k = prog.add_block(block.constant.clone());
        for (var, mat) in &block.terms {
            prog.add_block_term(k, *var, mat.clone());
        }
        prog.add_block_term(k, t, DdMat::identity(block.size));
    }
    let k = prog.add_block(DdMat::zeros(1, 1));
    prog.add_block_term(k, t, DdMat::identity(1));

    let mut sol = solver::solve(&prog, settings);
    if sol.status != SolveStatus::Optimal {
        return Err(TvError::CertificateMismatch(format!("solver status {}", sol.status)));
    }
    sol.block_duals.truncate(4);
    recover_certificate(problem, &sol)
}

/// The plain certificate when it is valid, else the first elastic one that is.
pub fn best_certificate(problem: &RelaxationProblem, sol: &SolveResult, settings: &SolverSettings) -> Result<DualCertificate> {
    recover_certificate(problem, sol).or_else(|first| {
        ELASTIC_BOUNDS
            .iter()
            .find_map(|&b| elastic_certificate(problem, settings, b).ok())
            .ok_or(first)
    })
}

fn certificate_value(cert: &DualCertificate, mu: &[Dd], nu: &[Dd]) -> f64 {
    let s1 = cert.basis.gram_polynomial(&cert.gram_sigma1);
    let t1 = cert.basis.gram_polynomial(&cert.gram_psi1);
    let mut v = Dd::ZERO;
    for g in 0..cert.p.len() {
        v += Dd::new(cert.p[g]) * (mu[g] - nu[g]);
        v -= Dd::new(s1[g]) * mu[g];
        v -= Dd::new(t1[g]) * nu[g];
    }
    v.to_f64()
}

/// Recompute the value of `cert` from scratch against `mu` and `nu`, after
/// checking that it is a valid certificate.
pub fn verify_certificate(cert: &DualCertificate, mu: &dyn MomentSource, nu: &dyn MomentSource) -> Result<f64> {
    let names = ["sigma0", "sigma1", "psi0", "psi1"];
    for (name, g) in names.iter().zip(cert.grams().map(|(_, g)| g)) {
        if g.nrows() != basis_len(cert.basis.dim(), cert.level) || g.nrows() != g.ncols() {
            return Err(TvError::CertificateMismatch(format!("{name} Gram matrix has the wrong size")));
        }
        if (g - g.transpose()).amax() > 1e-12 * g.amax().max(1.0) {
            return Err(TvError::CertificateMismatch(format!("{name} Gram matrix is not symmetric")));
        }
    }
    for (name, lmin) in names.iter().zip(cert.min_eigenvalues()) {
        if lmin < -PSD_TOL {
            return Err(TvError::CertificateMismatch(format!(
                "{name} Gram matrix has eigenvalue {lmin:e}"
            )));
        }
    }
    let r = cert.identity_residuals();
    if r.sigma > IDENTITY_TOL {
        return Err(TvError::CertificateMismatch(format!(
            "1 - p = sigma0 - sigma1 violated by {:e}",
            r.sigma
        )));
    }
    if r.psi > IDENTITY_TOL {
        return Err(TvError::CertificateMismatch(format!(
            "1 + p = psi0 - psi1 violated by {:e}",
            r.psi
        )));
    }
    let mu_v = cert.basis.values_of(mu)?;
    let nu_v = cert.basis.values_of(nu)?;
    Ok(certificate_value(cert, &mu_v, &nu_v))
}

/// `2 Δ² / ((σ1 + σ2)² + Δ²)`, on the [0, 2] scale.
pub fn nishiyama_bound(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let d2 = (m1 - m2).powi(2);
    2.0 * d2 / ((s1 + s2).powi(2) + d2)
}

/// Pinsker's upper bound `2·sqrt(KL/2)`, on the [0, 2] scale.
pub fn pinsker_upper(kl: f64) -> f64 {
    (2.0 * kl.max(0.0)).sqrt()
}

/// Bounds from the Hellinger distance `h = (∫(√f − √g)²)^{1/2} ∈ [0, √2]`,
/// on the [0, 2] scale: `h² ≤ TV ≤ 2h·sqrt(1 − h²/4)`.
pub fn hellinger_bounds(h: f64) -> (f64, f64) {
    let h = h.max(0.0);
    let upper = 2.0 * h * (1.0 - h * h / 4.0).max(0.0).sqrt();
    (h * h, upper.min(2.0))
}

pub fn gaussian_kl(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    (s2 / s1).ln() + (s1 * s1 + (m1 - m2).powi(2)) / (2.0 * s2 * s2) - 0.5
}

pub fn gaussian_hellinger(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let v = s1 * s1 + s2 * s2;
    let bc = (2.0 * s1 * s2 / v).sqrt() * (-(m1 - m2).powi(2) / (4.0 * v)).exp();
    (2.0 * (1.0 - bc)).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ComparisonBounds {
    pub nishiyama: f64,
    pub pinsker_upper: f64,
    pub hellinger_lower: f64,
    pub hellinger_upper: f64,
}

/// Closed-form bounds for a pair of univariate Gaussian specs.
pub fn gaussian_comparison(mu: &MeasureSpec, nu: &MeasureSpec) -> Option<ComparisonBounds> {
    let (MeasureSpec::Gaussian { mean: m1, stddev: s1 }, MeasureSpec::Gaussian { mean: m2, stddev: s2 }) = (mu, nu)
    else {
        return None;
    };
    // KL is asymmetric; both directions bound TV, take the tighter.
    let kl = gaussian_kl(*m1, *s1, *m2, *s2).min(gaussian_kl(*m2, *s2, *m1, *s1));
    let (hl, hu) = hellinger_bounds(gaussian_hellinger(*m1, *s1, *m2, *s2));
    Some(ComparisonBounds {
        nishiyama: nishiyama_bound(*m1, *s1, *m2, *s2),
        pinsker_upper: pinsker_upper(kl).min(2.0),
        hellinger_lower: hl,
        hellinger_upper: hu,
    })
}

//! Infeasible-start primal-dual interior point method (HKM direction,
//! Mehrotra predictor-corrector) for block-diagonal semidefinite programs
//!
//! ```text
//!   min <C, X>  s.t. <A_j, X> = b_j,  X ⪰ 0
//!   max b'y     s.t. S = C - Σ y_j A_j ⪰ 0
//! ```

use super::dense::{dot, norm, DdMat};
use super::SolveStatus;
use crate::dd::Dd;

pub(crate) struct StandardForm {
    pub c: Vec<DdMat>,
    /// `a[j][k]`: constraint `j`, block `k`.
    pub a: Vec<Vec<DdMat>>,
    pub b: Vec<Dd>,
}

#[derive(Clone)]
pub(crate) struct IpmOutput {
    pub status: SolveStatus,
    pub x: Vec<DdMat>,
    pub y: Vec<Dd>,
    pub s: Vec<DdMat>,
    pub iterations: usize,
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
    pub pobj: Dd,
    pub dobj: Dd,
}

const STEP_FRACTION: f64 = 0.95;
const DIVERGENCE: f64 = 1e14;
/// After reaching `tol`, keep going towards `tol * POLISH` for at most `POLISH_ITERS` steps.
const POLISH: f64 = 1e-3;
const POLISH_ITERS: usize = 10;

fn block_dot(a: &[DdMat], b: &[DdMat]) -> Dd {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

impl StandardForm {
    fn apply(&self, x: &[DdMat]) -> Vec<Dd> {
        self.a.iter().map(|aj| block_dot(aj, x)).collect()
    }

    fn apply_adjoint(&self, y: &[Dd]) -> Vec<DdMat> {
        let mut out: Vec<DdMat> = self.c.iter().map(|c| DdMat::zeros(c.nrows(), c.ncols())).collect();
        for (aj, &yj) in self.a.iter().zip(y) {
            if yj == Dd::ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(aj) {
                o.axpy(yj, a);
            }
        }
        out
    }
}

/// Largest `α` with `z + α dz ⪰ 0` (`∞` when unbounded).
fn max_step(z: &[DdMat], dz: &[DdMat]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (z, dz) in z.iter().zip(dz) {
        let l = z.cholesky()?;
        let li = l.lower_inverse();
        let mut e = li.mul(dz).mul(&li.transpose());
        e.symmetrize();
        let lmin = e.symmetric_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Some(alpha)
}

fn combine(z: &[DdMat], a: f64, dz: &[DdMat]) -> Vec<DdMat> {
    z.iter()
        .zip(dz)
        .map(|(z, d)| {
            let mut out = z.clone();
            out.axpy(Dd::new(a), d);
            out
        })
        .collect()
}

/// Take the step, shrinking it until every block keeps a Cholesky factor.
fn safe_step(z: &[DdMat], a: f64, dz: &[DdMat]) -> Option<(Vec<DdMat>, f64)> {
    let mut a = a;
    for _ in 0..60 {
        let next = combine(z, a, dz);
        if next.iter().all(|m| m.cholesky().is_some()) {
            return Some((next, a));
        }
        a *= 0.8;
    }
    None
}

pub(crate) fn solve(sf: &StandardForm, tol: f64, max_iter: usize) -> IpmOutput {
    let m = sf.b.len();
    let sizes: Vec<usize> = sf.c.iter().map(|c| c.nrows()).collect();
    let n_total: usize = sizes.iter().sum();
    let sqrt_n = (n_total as f64).sqrt();

    let norm_b = norm(&sf.b).to_f64();
    let norm_c = block_dot(&sf.c, &sf.c).sqrt().to_f64();
    let norm_a: Vec<f64> = sf.a.iter().map(|aj| block_dot(aj, aj).sqrt().to_f64()).collect();
    let xi_p = norm_a
        .iter()
        .zip(&sf.b)
        .map(|(&na, b)| sqrt_n * (1.0 + b.to_f64().abs()) / (1.0 + na))
        .fold(10.0f64.max(sqrt_n), f64::max);
    let xi_d = norm_a.iter().copied().fold(10.0f64.max(sqrt_n).max(norm_c), f64::max);

    let mut x: Vec<DdMat> = sizes.iter().map(|&k| DdMat::identity(k).scale(Dd::new(xi_p))).collect();
    let mut s: Vec<DdMat> = sizes.iter().map(|&k| DdMat::identity(k).scale(Dd::new(xi_d))).collect();
    let mut y = vec![Dd::ZERO; m];

    let mut out = IpmOutput {
        status: SolveStatus::MaxIter,
        x: Vec::new(),
        y: Vec::new(),
        s: Vec::new(),
        iterations: 0,
        pinf: f64::INFINITY,
        dinf: f64::INFINITY,
        gap: f64::INFINITY,
        pobj: Dd::ZERO,
        dobj: Dd::ZERO,
    };

    let mut best: Option<IpmOutput> = None;
    let mut reached: Option<usize> = None;
    for it in 0..=max_iter {
        let ax = sf.apply(&x);
        let rp: Vec<Dd> = sf.b.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
        let aty = sf.apply_adjoint(&y);
        let rd: Vec<DdMat> = (0..sizes.len()).map(|k| sf.c[k].sub(&aty[k]).sub(&s[k])).collect();
        let mu = block_dot(&x, &s) / Dd::new(n_total as f64);
        let pobj = block_dot(&sf.c, &x);
        let dobj = dot(&sf.b, &y);

        out.iterations = it;
        out.pinf = norm(&rp).to_f64() / (1.0 + norm_b);
        out.dinf = block_dot(&rd, &rd).sqrt().to_f64() / (1.0 + norm_c);
        let (p, d) = (pobj.to_f64(), dobj.to_f64());
        out.gap = (pobj - dobj).abs().to_f64() / 1.0f64.max(0.5 * (p.abs() + d.abs()));
        out.pobj = pobj;
        out.dobj = dobj;
        out.x = x.clone();
        out.y = y.clone();
        out.s = s.clone();

        if !pobj.is_finite() || !dobj.is_finite() {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        }
        if out.pinf <= tol && out.dinf <= tol && out.gap <= tol {
            out.status = SolveStatus::Optimal;
            let fine = tol * POLISH;
            let first = *reached.get_or_insert(it);
            if (out.pinf <= fine && out.dinf <= fine && out.gap <= fine) || it >= first + POLISH_ITERS {
                return out;
            }
            best = Some(out.clone());
        } else if reached.is_some_and(|first| it >= first + POLISH_ITERS) {
            return best.unwrap_or(out);
        }
        let tx = x.iter().map(|b| b.trace().to_f64()).sum::<f64>();
        let ts = s.iter().map(|b| b.trace().to_f64()).sum::<f64>();
        if tx > DIVERGENCE * xi_p || ts > DIVERGENCE * xi_d {
            out.status = SolveStatus::Infeasible;
            return best.unwrap_or(out);
        }
        if it == max_iter {
            break;
        }

        let s_inv: Option<Vec<DdMat>> = s.iter().map(|b| b.spd_inverse()).collect();
        let Some(s_inv) = s_inv else {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        };

        // Schur complement M_ij = Σ_k tr(A_i X A_j S^-1).
        let g: Vec<Vec<DdMat>> = sf
            .a
            .iter()
            .map(|aj| (0..sizes.len()).map(|k| x[k].mul(&aj[k]).mul(&s_inv[k])).collect())
            .collect();
        let mut schur = DdMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                schur[(i, j)] = block_dot(&sf.a[i], &g[j]);
            }
        }
        schur.symmetrize();

        let x_rd_sinv: Vec<DdMat> = (0..sizes.len()).map(|k| x[k].mul(&rd[k]).mul(&s_inv[k])).collect();
        let a_xrds = sf.apply(&x_rd_sinv);

        let direction = |sigma: Dd, corr: Option<&[DdMat]>| -> Option<(Vec<DdMat>, Vec<Dd>, Vec<DdMat>)> {
            let rc: Vec<DdMat> = (0..sizes.len())
                .map(|k| {
                    let mut r = s_inv[k].scale(sigma * mu);
                    r.axpy(-Dd::ONE, &x[k]);
                    if let Some(c) = corr {
                        r.axpy(-Dd::ONE, &c[k]);
                    }
                    r
                })
                .collect();
            let a_rc = sf.apply(&rc);
            let rhs: Vec<Dd> = (0..m).map(|i| rp[i] - a_rc[i] + a_xrds[i]).collect();
            let dy = schur.solve_symmetric(&rhs)?;
            let at_dy = sf.apply_adjoint(&dy);
            let ds: Vec<DdMat> = (0..sizes.len()).map(|k| rd[k].sub(&at_dy[k])).collect();
            let dx: Vec<DdMat> = (0..sizes.len())
                .map(|k| {
                    let mut d = rc[k].sub(&x[k].mul(&ds[k]).mul(&s_inv[k]));
                    d.symmetrize();
                    d
                })
                .collect();
            Some((dx, dy, ds))
        };

        let Some((dx_a, _, ds_a)) = direction(Dd::ZERO, None) else {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        };
        let (Some(ap), Some(ad)) = (max_step(&x, &dx_a), max_step(&s, &ds_a)) else {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = block_dot(&combine(&x, ap, &dx_a), &combine(&s, ad, &ds_a)) / Dd::new(n_total as f64);
        let ratio = (mu_aff / mu).to_f64().max(0.0);
        let sigma = Dd::new(ratio.powi(3).min(1.0));
        let corr: Vec<DdMat> = (0..sizes.len()).map(|k| dx_a[k].mul(&ds_a[k]).mul(&s_inv[k])).collect();

        let Some((dx, dy, ds)) = direction(sigma, Some(&corr)) else {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        };
        let (Some(ap), Some(ad)) = (max_step(&x, &dx), max_step(&s, &ds)) else {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        };
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        let (Some((xn, _)), Some((sn, ad))) = (safe_step(&x, ap, &dx), safe_step(&s, ad, &ds)) else {
            out.status = SolveStatus::NumericalFailure;
            return best.unwrap_or(out);
        };
        x = xn;
        s = sn;
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += Dd::new(ad) * *d;
        }
    }
    out.status = SolveStatus::MaxIter;
    best.unwrap_or(out)
}

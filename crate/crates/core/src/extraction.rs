//! Flatness detection and atom extraction for univariate pseudo-moments.
//!
//! Ranks are read from the singular values of `M_n` in a Chebyshev basis on a
//! window fitted to the sequence. Atoms are the eigenvalues of the
//! multiplication-by-`z` operator compressed to the column space of `M_{n-1}`.

use nalgebra::{DMatrix, DVector};

use crate::basis::{to_frame_moments, AffineFrame, BasisKind, PolyBasis};
use crate::dd::Dd;
use crate::error::{Result, TvError};
use crate::measures::AtomicMeasure;
use crate::moments::MomentSequence;
use crate::relaxation::HierarchyResult;

pub const DEFAULT_RANK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    /// Rank of `M_k` for `k = 0..=n`.
    pub ranks: Vec<usize>,
    pub flat: bool,
    pub rank: usize,
    pub rank_tol: f64,
}

fn require_univariate(d: usize) -> Result<()> {
    if d != 1 {
        return Err(TvError::UnsupportedDimension {
            what: "atom extraction",
            dim: d,
        });
    }
    Ok(())
}

fn fitted_basis(seq: &MomentSequence, n: usize) -> Result<(PolyBasis, Vec<f64>)> {
    require_univariate(seq.dimension())?;
    if seq.max_degree() < 2 * n {
        return Err(TvError::DegreeTooLow {
            needed: 2 * n,
            available: seq.max_degree(),
        });
    }
    let frame = if seq.mass() > 0.0 { support_frame(seq, n)? } else { AffineFrame::identity(1) };
    let basis = PolyBasis::new(frame, BasisKind::Chebyshev, 2 * n);
    let values = basis.values_of(seq)?.into_iter().map(Dd::to_f64).collect();
    Ok((basis, values))
}

/// Window centred at the mean with half-width `(E|x − c|^{2n})^{1/2n}`, which
/// tends to the support radius as `n` grows.
fn support_frame(seq: &MomentSequence, n: usize) -> Result<AffineFrame> {
    let cover = AffineFrame::covering(&[seq])?;
    if n == 0 || cover.half_width[0] == 1.0 {
        return Ok(cover);
    }
    let mass = seq.values()[0];
    let c = seq.values()[1] / mass;
    let sd = (seq.values()[2] / mass - c * c).max(0.0).sqrt();
    let centred = to_frame_moments(seq, &AffineFrame { center: vec![c], half_width: vec![1.0] }, 2 * n)?;
    let radius = (centred[2 * n] / centred[0]).to_f64().max(0.0).powf(0.5 / n as f64);
    Ok(AffineFrame {
        center: vec![c],
        half_width: vec![radius.max(sd)],
    })
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    // Symmetric input: singular values are |eigenvalues|.
    m.clone().symmetric_eigenvalues().iter().map(|v| v.abs()).collect()
}

/// Flatness of the pseudo-moments `values` given on `basis`.
///
/// Singular values below `rank_tol · max(σ_max(M_n), scale)` count as zero.
pub fn flatness_in_basis(values: &[f64], basis: &PolyBasis, n: usize, rank_tol: f64, scale: f64) -> FlatnessReport {
    let m = basis.moment_matrix(values, n);
    let sv = singular_values(&m);
    let top = sv.iter().copied().fold(0.0, f64::max).max(scale);
    let threshold = rank_tol * top;
    let ranks: Vec<usize> = (0..=n)
        .map(|k| {
            let size = k + 1;
            singular_values(&m.view((0, 0), (size, size)).into_owned())
                .into_iter()
                .filter(|&s| s > threshold)
                .count()
        })
        .collect();
    let rank = ranks[n];
    let flat = n >= 1 && ranks[n] == ranks[n - 1];
    FlatnessReport {
        ranks,
        flat,
        rank,
        rank_tol,
    }
}

pub fn flatness(seq: &MomentSequence, n: usize, rank_tol: f64) -> Result<FlatnessReport> {
    let (basis, values) = fitted_basis(seq, n)?;
    Ok(flatness_in_basis(&values, &basis, n, rank_tol, 0.0))
}

/// Atoms of a flat univariate sequence given on `basis`, in original coordinates.
pub fn extract_in_basis(values: &[f64], basis: &PolyBasis, n: usize, rank_tol: f64, scale: f64) -> Result<AtomicMeasure> {
    let atoms = shift_atoms(values, basis, n, rank_tol, scale)?;
    let ref_scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(scale);
    let residual = (0..values.len())
        .map(|i| {
            let rec: f64 = atoms.atoms.iter().map(|a| a.weight * basis.eval(i, &a.point)).sum();
            (rec - values[i]).abs()
        })
        .fold(0.0, f64::max)
        / ref_scale.max(f64::MIN_POSITIVE);
    if residual > RECONSTRUCTION_TOL {
        return Err(TvError::IllConditioned { residual });
    }
    Ok(atoms)
}

const RECONSTRUCTION_TOL: f64 = 1e-6;

fn shift_atoms(values: &[f64], basis: &PolyBasis, n: usize, rank_tol: f64, scale: f64) -> Result<AtomicMeasure> {
    require_univariate(basis.dim())?;
    let report = flatness_in_basis(values, basis, n, rank_tol, scale);
    if !report.flat {
        return Err(TvError::NotFlat { ranks: report.ranks });
    }
    let r = report.rank;
    if r == 0 {
        return Ok(AtomicMeasure::default());
    }
    let m = basis.moment_matrix(values, n);
    // H = M_{n-1}; H_z(i, j) = L(z b_i b_j).
    let h = m.view((0, 0), (n, n)).into_owned();
    let hz = DMatrix::from_fn(n, n, |i, j| match basis.kind() {
        BasisKind::Chebyshev => {
            let lower = if j == 0 { m[(i, 1)] } else { m[(i, j - 1)] };
            0.5 * (m[(i, j + 1)] + lower)
        }
        BasisKind::Monomial => m[(i, j + 1)],
    });
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let keep = &order[..r];
    let u = DMatrix::from_fn(n, r, |i, k| eig.eigenvectors[(i, keep[k])]);
    let lam: Vec<f64> = keep.iter().map(|&k| eig.eigenvalues[k]).collect();
    if lam.iter().any(|&l| l <= 0.0) {
        return Err(TvError::IllConditioned { residual: f64::INFINITY });
    }
    let scale_inv = DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 / lam[i].sqrt() } else { 0.0 });
    let mut t = &scale_inv * u.transpose() * &hz * &u * &scale_inv;
    t = (&t + t.transpose()) * 0.5;
    let z_atoms: Vec<f64> = t.symmetric_eigenvalues().iter().copied().collect();

    // Weights from L(b_i) = Σ_k w_k b_i(z_k), i < r.
    let frame = basis.frame();
    let x_atoms: Vec<f64> = z_atoms.iter().map(|&z| frame.from_frame(&[z])[0]).collect();
    let v = DMatrix::from_fn(r, r, |i, k| basis.eval(i, &[x_atoms[k]]));
    let rhs = DVector::from_fn(r, |i, _| values[i]);
    let w = v
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(TvError::IllConditioned { residual: f64::INFINITY })?;

    let ref_scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(scale);
    if let Some(&wk) = w.iter().find(|&&wk| wk < -10.0 * rank_tol * ref_scale) {
        return Err(TvError::IllConditioned { residual: -wk / ref_scale });
    }
    Ok(AtomicMeasure::univariate(
        &x_atoms.iter().zip(w.iter()).map(|(&x, &w)| (x, w)).collect::<Vec<_>>(),
    )
    .sorted())
}

/// Extraction uses the first order `k ≤ n` at which the ranks stabilize and
/// whose atoms reproduce every moment up to degree `2n`. Rounding in the raw
/// moments of tightly clustered atoms inflates the top ranks first.
pub fn extract_atoms(seq: &MomentSequence, n: usize, rank_tol: f64) -> Result<AtomicMeasure> {
    let mut last_err = None;
    for k in 1..=n {
        let (basis, values) = fitted_basis(seq, k)?;
        match shift_atoms(&values, &basis, k, rank_tol, 0.0).and_then(|atoms| raw_residual_check(seq, n, atoms)) {
            Ok(atoms) => return Ok(atoms),
            Err(e) => {
                last_err = Some(e);
            }
        }
    }
    match last_err {
        Some(e) => Err(e),
        None => {
            let (basis, values) = fitted_basis(seq, n)?;
            raw_residual_check(seq, n, shift_atoms(&values, &basis, n, rank_tol, 0.0)?)
        }
    }
}

// Relative error per raw moment, against Σ|w_j||x_j|^k.
fn raw_residual_check(seq: &MomentSequence, n: usize, atoms: AtomicMeasure) -> Result<AtomicMeasure> {
    let residual = (0..=2 * n)
        .map(|k| {
            let (rec, abs) = atoms.atoms.iter().fold((0.0, 0.0), |(r, a), at| {
                let t = at.weight * at.point[0].powi(k as i32);
                (r + t, a + t.abs())
            });
            (rec - seq.values()[k]).abs() / abs.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    if residual > RECONSTRUCTION_TOL {
        return Err(TvError::IllConditioned { residual });
    }
    Ok(atoms)
}

/// Atoms of the optimal pair `(φ*, ψ*)`, when both moment matrices are flat.
pub fn recover_hahn_jordan(result: &HierarchyResult, rank_tol: f64) -> Result<(AtomicMeasure, AtomicMeasure)> {
    require_univariate(result.basis.dim())?;
    let n = result.level;
    // Tiny pseudo-moments are noise relative to the data, not rank.
    let mu_m = result.basis.moment_matrix(&result.mu_basis, n);
    let nu_m = result.basis.moment_matrix(&result.nu_basis, n);
    let scale = singular_values(&mu_m)
        .into_iter()
        .chain(singular_values(&nu_m))
        .fold(0.0, f64::max);
    let phi = extract_in_basis(&result.phi_basis, &result.basis, n, rank_tol, scale)?;
    let psi = extract_in_basis(&result.psi_basis, &result.basis, n, rank_tol, scale)?;
    // φ − ψ must reproduce μ − ν.
    let mismatch = (0..result.basis.len())
        .map(|i| {
            let f: f64 = phi.atoms.iter().map(|a| a.weight * result.basis.eval(i, &a.point)).sum();
            let g: f64 = psi.atoms.iter().map(|a| a.weight * result.basis.eval(i, &a.point)).sum();
            ((f - g) - (result.mu_basis[i] - result.nu_basis[i])).abs()
        })
        .fold(0.0, f64::max);
    if mismatch > 1e-5 * scale.max(1.0) {
        return Err(TvError::IllConditioned { residual: mismatch });
    }
    Ok((phi, psi))
}

//! Polynomial bases used to condition the relaxation.
//!
//! The relaxation is invariant under an invertible affine change of variables
//! and under any change of polynomial basis (both act on moment matrices by
//! congruence). Hankel matrices in the raw monomial basis are badly conditioned
//! once the degree reaches 8 or so; mapping the data to a window around
//! `[-1, 1]` and switching to tensor Chebyshev polynomials keeps the
//! semidefinite program well scaled.

use nalgebra::DMatrix;

use crate::dd::Dd;
use crate::error::{Result, TvError};
use crate::moments::{basis_indices, basis_len, MomentSequence, MonomialBasis, MultiIndex, Polynomial};

/// `z = (x - center) / half_width`, coordinatewise.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFrame {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl AffineFrame {
    pub fn identity(d: usize) -> Self {
        AffineFrame {
            center: vec![0.0; d],
            half_width: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn to_frame(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .zip(&self.half_width)
            .map(|((x, c), h)| (x - c) / h)
            .collect()
    }

    pub fn from_frame(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.center)
            .zip(&self.half_width)
            .map(|((z, c), h)| c + h * z)
            .collect()
    }

    /// Window covering `mean ± 4·sd` of every source, per coordinate.
    pub fn covering(sources: &[&dyn MomentSource]) -> Result<Self> {
        let d = sources
            .first()
            .map(|s| s.dimension())
            .ok_or_else(|| TvError::InvalidMeasure("no moment sources".into()))?;
        let ident = AffineFrame::identity(d);
        let basis = basis_indices(d, 2);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for src in sources {
            if src.dimension() != d {
                return Err(TvError::DimensionMismatch(d, src.dimension()));
            }
            let m: Vec<f64> = src.frame_moments(&ident, 2)?.into_iter().map(Dd::to_f64).collect();
            let mass = m[0];
            if !(mass > 0.0) {
                continue;
            }
            for i in 0..d {
                let first = basis.index_of(&MultiIndex::unit(d, i, 1)).unwrap();
                let second = basis.index_of(&MultiIndex::unit(d, i, 2)).unwrap();
                let mean = m[first] / mass;
                let var = (m[second] / mass - mean * mean).max(0.0);
                let spread = 4.0 * var.sqrt();
                lo[i] = lo[i].min(mean - spread);
                hi[i] = hi[i].max(mean + spread);
            }
        }
        let mut center = vec![0.0; d];
        let mut half_width = vec![1.0; d];
        for i in 0..d {
            if !lo[i].is_finite() || !hi[i].is_finite() {
                continue;
            }
            let c = 0.5 * (lo[i] + hi[i]);
            let h = 0.5 * (hi[i] - lo[i]);
            center[i] = c;
            // Below this the spread is rounding noise from `E[x²] − E[x]²`.
            half_width[i] = if h > 1e-6 * c.abs().max(1.0) { h } else { 1.0 };
        }
        Ok(AffineFrame { center, half_width })
    }
}

/// Anything that can report its moments after an affine change of variables.
///
/// Implementations compute directly in the target frame where they can, which
/// avoids the cancellation of converting rounded moments after the fact.
pub trait MomentSource: Send + Sync {
    fn dimension(&self) -> usize;

    /// Highest degree available, `None` when unlimited.
    fn available_degree(&self) -> Option<usize>;

    /// Moments of the pushforward under `z = (x - c) / h`, in graded lex order up to `degree`.
    fn frame_moments(&self, frame: &AffineFrame, degree: usize) -> Result<Vec<Dd>>;
}

fn binomial(n: u32, k: u32) -> Dd {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    Dd::new(acc.round())
}

/// Sparse rows `α -> [(β, Π_i f(i, α_i, β_i))]` over `β ≤ α` componentwise.
fn componentwise_rows(
    basis: &MonomialBasis,
    f: impl Fn(usize, u32, u32) -> Dd,
) -> Vec<Vec<(usize, Dd)>> {
    let d = basis.dim();
    basis
        .indices()
        .iter()
        .map(|alpha| {
            let mut row = Vec::new();
            let mut beta = vec![0u32; d];
            loop {
                let mut coef = Dd::ONE;
                for i in 0..d {
                    coef *= f(i, alpha.exponents()[i], beta[i]);
                    if coef == Dd::ZERO {
                        break;
                    }
                }
                if coef != Dd::ZERO {
                    let j = basis.index_of(&MultiIndex::new(beta.clone())).unwrap();
                    row.push((j, coef));
                }
                // odometer over 0..=α_i
                let mut i = 0;
                while i < d {
                    if beta[i] < alpha.exponents()[i] {
                        beta[i] += 1;
                        break;
                    }
                    beta[i] = 0;
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
            row
        })
        .collect()
}

fn apply_rows(rows: &[Vec<(usize, Dd)>], v: &[Dd]) -> Vec<Dd> {
    rows.iter()
        .map(|row| row.iter().map(|&(j, c)| c * v[j]).sum())
        .collect()
}

/// Rows of `z^α` in terms of `x^β`.
fn frame_rows(basis: &MonomialBasis, frame: &AffineFrame) -> Vec<Vec<(usize, Dd)>> {
    let c: Vec<Dd> = frame.center.iter().map(|&v| Dd::new(v)).collect();
    let hinv: Vec<Dd> = frame.half_width.iter().map(|&v| Dd::new(v).recip()).collect();
    componentwise_rows(basis, |i, a, b| {
        binomial(a, b) * (-c[i]).powi(a - b) * hinv[i].powi(a)
    })
}

/// Rows of `x^α` in terms of `z^β`.
fn inverse_frame_rows(basis: &MonomialBasis, frame: &AffineFrame) -> Vec<Vec<(usize, Dd)>> {
    componentwise_rows(basis, |i, a, b| {
        binomial(a, b) * Dd::new(frame.center[i]).powi(a - b) * Dd::new(frame.half_width[i]).powi(b)
    })
}

/// Frame moments from original-coordinate moments `raw` (graded order, length `s(degree)`).
pub(crate) fn change_frame(raw: &[Dd], dim: usize, degree: usize, frame: &AffineFrame) -> Vec<Dd> {
    let basis = basis_indices(dim, degree);
    apply_rows(&frame_rows(&basis, frame), &raw[..basis.len()])
}

/// Moments of the pushforward of `seq` under `frame`, in double-double.
pub fn to_frame_moments(seq: &MomentSequence, frame: &AffineFrame, degree: usize) -> Result<Vec<Dd>> {
    if degree > seq.max_degree() {
        return Err(TvError::DegreeTooLow {
            needed: degree,
            available: seq.max_degree(),
        });
    }
    let len = basis_len(seq.dimension(), degree);
    let x: Vec<Dd> = seq.values()[..len].iter().map(|&v| Dd::new(v)).collect();
    Ok(change_frame(&x, seq.dimension(), degree, frame))
}

/// Inverse of [`to_frame_moments`].
pub fn from_frame_moments(z: &[Dd], dim: usize, degree: usize, frame: &AffineFrame) -> MomentSequence {
    let basis = basis_indices(dim, degree);
    let x = apply_rows(&inverse_frame_rows(&basis, frame), z);
    MomentSequence::new(dim, degree, x.into_iter().map(Dd::to_f64).collect()).expect("sizes match")
}

impl MomentSource for MomentSequence {
    fn dimension(&self) -> usize {
        MomentSequence::dimension(self)
    }

    fn available_degree(&self) -> Option<usize> {
        Some(self.max_degree())
    }

    fn frame_moments(&self, frame: &AffineFrame, degree: usize) -> Result<Vec<Dd>> {
        if frame.dim() != self.dimension() {
            return Err(TvError::DimensionMismatch(frame.dim(), self.dimension()));
        }
        to_frame_moments(self, frame, degree)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Monomial,
    Chebyshev,
}

/// Chebyshev coefficients: `T_k(z) = Σ_j table[k][j] z^j`.
fn chebyshev_table(max: usize) -> Vec<Vec<Dd>> {
    let mut t: Vec<Vec<Dd>> = vec![vec![Dd::ONE]];
    if max >= 1 {
        t.push(vec![Dd::ZERO, Dd::ONE]);
    }
    for k in 2..=max {
        let mut next = vec![Dd::ZERO; k + 1];
        for (j, &c) in t[k - 1].iter().enumerate() {
            next[j + 1] += c * 2.0;
        }
        for (j, &c) in t[k - 2].iter().enumerate() {
            next[j] -= c;
        }
        t.push(next);
    }
    t
}

/// Inverse table: `z^k = Σ_j inv[k][j] T_j(z)`.
fn chebyshev_inverse_table(t: &[Vec<Dd>]) -> Vec<Vec<Dd>> {
    let max = t.len() - 1;
    let mut inv = vec![vec![Dd::ZERO; max + 1]; max + 1];
    // Forward substitution on the lower-triangular coefficient matrix.
    for k in 0..=max {
        // z^k = (T_k - Σ_{j<k} t[k][j] z^j) / t[k][k]
        let mut row = vec![Dd::ZERO; max + 1];
        row[k] = Dd::ONE;
        for j in 0..k {
            let c = t[k][j];
            if c == Dd::ZERO {
                continue;
            }
            for l in 0..=j {
                row[l] -= c * inv[j][l];
            }
        }
        let lead = t[k][k];
        for v in row.iter_mut() {
            *v /= lead;
        }
        inv[k] = row;
    }
    inv
}

/// A polynomial basis of `ℝ[x]_degree`: frame plus kind.
///
/// Basis element `b_α(x)` is `z^α` (monomial) or `Π_i T_{α_i}(z_i)` (Chebyshev)
/// with `z = (x - c)/h`.
#[derive(Clone, Debug)]
pub struct PolyBasis {
    frame: AffineFrame,
    kind: BasisKind,
    monomials: MonomialBasis,
    /// `b_α` in terms of `z^β`.
    to_z: Vec<Vec<(usize, Dd)>>,
    /// `z^α` in terms of `b_β`.
    from_z: Vec<Vec<(usize, Dd)>>,
}

impl PolyBasis {
    pub fn new(frame: AffineFrame, kind: BasisKind, degree: usize) -> Self {
        let monomials = basis_indices(frame.dim(), degree);
        let (to_z, from_z) = match kind {
            BasisKind::Monomial => {
                let ident: Vec<Vec<(usize, Dd)>> =
                    (0..monomials.len()).map(|i| vec![(i, Dd::ONE)]).collect();
                (ident.clone(), ident)
            }
            BasisKind::Chebyshev => {
                let t = chebyshev_table(degree);
                let inv = chebyshev_inverse_table(&t);
                let to_z = componentwise_rows(&monomials, |_, a, b| t[a as usize][b as usize]);
                let from_z = componentwise_rows(&monomials, |_, a, b| inv[a as usize][b as usize]);
                (to_z, from_z)
            }
        };
        PolyBasis {
            frame,
            kind,
            monomials,
            to_z,
            from_z,
        }
    }

    pub fn frame(&self) -> &AffineFrame {
        &self.frame
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn degree(&self) -> usize {
        self.monomials.degree()
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn indices(&self) -> &MonomialBasis {
        &self.monomials
    }

    /// `L(b_α)` for every basis element, from frame moments `L(z^β)`.
    pub fn from_frame_moments(&self, z_moments: &[Dd]) -> Vec<Dd> {
        apply_rows(&self.to_z, z_moments)
    }

    /// Frame moments `L(z^α)` from basis values `L(b_β)`.
    pub fn to_frame_moments(&self, values: &[Dd]) -> Vec<Dd> {
        apply_rows(&self.from_z, values)
    }

    /// `L(b_α)` for a moment source.
    pub fn values_of(&self, source: &dyn MomentSource) -> Result<Vec<Dd>> {
        if source.dimension() != self.dim() {
            return Err(TvError::DimensionMismatch(self.dim(), source.dimension()));
        }
        if let Some(avail) = source.available_degree() {
            if avail < self.degree() {
                return Err(TvError::DegreeTooLow {
                    needed: self.degree(),
                    available: avail,
                });
            }
        }
        let z = source.frame_moments(&self.frame, self.degree())?;
        Ok(self.from_frame_moments(&z))
    }

    /// Monomial moments in original coordinates of the functional with basis values `values`.
    pub fn to_moment_sequence(&self, values: &[f64]) -> MomentSequence {
        let v: Vec<Dd> = values.iter().map(|&x| Dd::new(x)).collect();
        let z = self.to_frame_moments(&v);
        from_frame_moments(&z, self.dim(), self.degree(), &self.frame)
    }

    /// Convert coefficients in this basis to a polynomial in the original monomials.
    pub fn to_monomial_polynomial(&self, coeffs: &[f64]) -> Polynomial {
        let n = self.len();
        // z-monomial coefficients
        let mut zc = vec![Dd::ZERO; n];
        for (alpha, row) in self.to_z.iter().enumerate().take(coeffs.len()) {
            for &(beta, c) in row {
                zc[beta] += c * coeffs[alpha];
            }
        }
        // z^β = Σ_γ frame_rows[β][γ] x^γ
        let rows = frame_rows(&self.monomials, &self.frame);
        let mut xc = vec![Dd::ZERO; n];
        for (beta, row) in rows.iter().enumerate() {
            for &(gamma, c) in row {
                xc[gamma] += c * zc[beta];
            }
        }
        let mut p = Polynomial::new();
        for (i, c) in xc.into_iter().enumerate() {
            let c = c.to_f64();
            if c != 0.0 {
                p.add_term(self.monomials.get(i).clone(), c);
            }
        }
        p
    }

    /// `b_α(x)` at an original-coordinate point.
    pub fn eval(&self, alpha: usize, x: &[f64]) -> f64 {
        let z = self.frame.to_frame(x);
        let a = self.monomials.get(alpha).exponents();
        a.iter()
            .zip(&z)
            .map(|(&k, &zi)| match self.kind {
                BasisKind::Monomial => zi.powi(k as i32),
                BasisKind::Chebyshev => chebyshev_eval(k, zi),
            })
            .product()
    }

    /// Evaluate `Σ_α c_α b_α(x)`.
    pub fn eval_poly(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        coeffs.iter().enumerate().map(|(i, &c)| c * self.eval(i, x)).sum()
    }

    /// Linearization of `b_α · b_β` for `α, β` of degree `<= degree/2`.
    pub fn product(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        let a = self.monomials.get(i).exponents();
        let b = self.monomials.get(j).exponents();
        match self.kind {
            BasisKind::Monomial => {
                let s = MultiIndex::new(a.iter().zip(b).map(|(x, y)| x + y).collect());
                vec![(self.monomials.index_of(&s).expect("degree within basis"), 1.0)]
            }
            BasisKind::Chebyshev => {
                let d = a.len();
                let weight = 0.5f64.powi(d as i32);
                let mut out: Vec<(usize, f64)> = Vec::with_capacity(1 << d);
                for mask in 0..(1u32 << d) {
                    let g: Vec<u32> = (0..d)
                        .map(|k| {
                            if mask & (1 << k) == 0 {
                                a[k] + b[k]
                            } else {
                                a[k].abs_diff(b[k])
                            }
                        })
                        .collect();
                    let idx = self
                        .monomials
                        .index_of(&MultiIndex::new(g))
                        .expect("degree within basis");
                    match out.iter_mut().find(|(k, _)| *k == idx) {
                        Some(e) => e.1 += weight,
                        None => out.push((idx, weight)),
                    }
                }
                out
            }
        }
    }

    /// Linearizations of `b_i b_j` for the size-`basis_len(d, n)` prefix.
    pub fn product_table(&self, n: usize) -> Vec<Vec<Vec<(usize, f64)>>> {
        assert!(2 * n <= self.degree());
        let len = basis_len(self.dim(), n);
        (0..len)
            .map(|i| (0..len).map(|j| self.product(i, j)).collect())
            .collect()
    }

    /// Moment matrix of order `n` in this basis: entry `(i, j) = L(b_i b_j)`.
    pub fn moment_matrix(&self, values: &[f64], n: usize) -> DMatrix<f64> {
        let table = self.product_table(n);
        let len = table.len();
        DMatrix::from_fn(len, len, |i, j| table[i][j].iter().map(|&(k, w)| w * values[k]).sum())
    }

    /// Coefficients (in this basis) of the polynomial `b(x)^T G b(x)`.
    pub fn gram_polynomial(&self, gram: &DMatrix<f64>) -> Vec<f64> {
        let n = (0..=self.degree() / 2)
            .find(|&k| basis_len(self.dim(), k) == gram.nrows())
            .expect("gram size matches a basis prefix");
        let table = self.product_table(n);
        let mut out = vec![0.0; self.len()];
        for (i, row) in table.iter().enumerate() {
            for (j, lin) in row.iter().enumerate() {
                let g = gram[(i, j)];
                for &(k, w) in lin {
                    out[k] += w * g;
                }
            }
        }
        out
    }
}

/// `T_k(z)` by the three-term recurrence.
pub fn chebyshev_eval(k: u32, z: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => z,
        _ => {
            let (mut a, mut b) = (1.0, z);
            for _ in 1..k {
                let c = 2.0 * z * b - a;
                a = b;
                b = c;
            }
            b
        }
    }
}

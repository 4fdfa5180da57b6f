//! Multi-indices, monomial bases, truncated moment sequences and moment matrices.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TvError};

/// Exponent vector of a monomial `x^α`.
///
/// Ordered graded-lexicographically: by total degree first, then with
/// `x_1 > x_2 > ... > x_d` (so `(1,0)` comes before `(0,1)`).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, i: usize, power: u32) -> Self {
        let mut e = vec![0; d];
        e[i] = power;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Evaluate `x^α`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// `C(n + d, d)`, the number of monomials of degree at most `n` in `d` variables.
pub fn basis_len(d: usize, n: usize) -> usize {
    let mut acc: u128 = 1;
    for k in 1..=d as u128 {
        acc = acc * (n as u128 + k) / k;
    }
    acc as usize
}

/// All monomials of degree `<= n` in `d` variables, in graded lex order.
#[derive(Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl fmt::Debug for MonomialBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonomialBasis")
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .field("len", &self.indices.len())
            .finish()
    }
}

fn push_compositions(d: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == d {
        prefix.push(total);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        push_compositions(d, total - first, prefix, out);
        prefix.pop();
    }
}

/// Enumerate `ℕ^d_n` in graded lex order.
pub fn basis_indices(d: usize, n: usize) -> MonomialBasis {
    assert!(d >= 1, "dimension must be positive");
    let mut indices = Vec::with_capacity(basis_len(d, n));
    let mut prefix = Vec::with_capacity(d);
    for total in 0..=n as u32 {
        push_compositions(d, total, &mut prefix, &mut indices);
    }
    let lookup = indices
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    MonomialBasis {
        dim: d,
        degree: n,
        indices,
        lookup,
    }
}

impl MonomialBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        if self.dim == 1 {
            let e = alpha.0[0] as usize;
            return (e <= self.degree).then_some(e);
        }
        self.lookup.get(alpha).copied()
    }

    /// Basis positions of `α_i + α_j` for all pairs of the degree-`n` prefix.
    ///
    /// The degree-`n` basis is a prefix of this one because the order is graded.
    pub fn sum_table(&self, n: usize) -> Vec<Vec<usize>> {
        assert!(2 * n <= self.degree);
        let len = basis_len(self.dim, n);
        (0..len)
            .map(|i| {
                (0..len)
                    .map(|j| {
                        self.index_of(&self.indices[i].add(&self.indices[j]))
                            .expect("sum of degree-n indices lies in the degree-2n basis")
                    })
                    .collect()
            })
            .collect()
    }

    /// Vector of monomials `v(x)` in basis order.
    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.indices.iter().map(|a| a.eval(x)))
    }
}

/// A truncated (pseudo-)moment sequence `(φ_α)_{|α| <= max_degree}` stored densely
/// in graded lex order.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    basis: MonomialBasis,
    values: Vec<f64>,
}

impl MomentSequence {
    pub fn new(dim: usize, max_degree: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(TvError::InvalidMeasure("dimension must be positive".into()));
        }
        let basis = basis_indices(dim, max_degree);
        if values.len() != basis.len() {
            return Err(TvError::InvalidMeasure(format!(
                "expected {} moments for d={dim}, degree {max_degree}; got {}",
                basis.len(),
                values.len()
            )));
        }
        Ok(MomentSequence { basis, values })
    }

    /// Univariate sequence `(φ_0, ..., φ_k)`.
    pub fn univariate(values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        let k = values.len() - 1;
        MomentSequence::new(1, k, values).expect("length matches")
    }

    pub fn zeros(dim: usize, max_degree: usize) -> Self {
        MomentSequence::from_fn(dim, max_degree, |_| 0.0)
    }

    pub fn from_fn(dim: usize, max_degree: usize, mut f: impl FnMut(&MultiIndex) -> f64) -> Self {
        let basis = basis_indices(dim, max_degree);
        let values = basis.indices().iter().map(&mut f).collect();
        MomentSequence { basis, values }
    }

    pub fn dimension(&self) -> usize {
        self.basis.dim()
    }

    pub fn max_degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis.index_of(alpha).map(|i| self.values[i])
    }

    pub fn truncate(&self, degree: usize) -> Result<MomentSequence> {
        if degree > self.max_degree() {
            return Err(TvError::DegreeTooLow {
                needed: degree,
                available: self.max_degree(),
            });
        }
        let len = basis_len(self.dimension(), degree);
        MomentSequence::new(self.dimension(), degree, self.values[..len].to_vec())
    }

    /// Componentwise `self - other`.
    pub fn sub(&self, other: &MomentSequence) -> Result<MomentSequence> {
        if self.dimension() != other.dimension() {
            return Err(TvError::DimensionMismatch(self.dimension(), other.dimension()));
        }
        let deg = self.max_degree().min(other.max_degree());
        let len = basis_len(self.dimension(), deg);
        let values = (0..len).map(|i| self.values[i] - other.values[i]).collect();
        MomentSequence::new(self.dimension(), deg, values)
    }
}

/// `M_n(φ)`: rows and columns indexed by `ℕ^d_n`, entry `(α, β)` equal to `φ_{α+β}`.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub basis: MonomialBasis,
    pub entries: DMatrix<f64>,
}

pub fn moment_matrix(seq: &MomentSequence, n: usize) -> Result<MomentMatrix> {
    if seq.max_degree() < 2 * n {
        return Err(TvError::DegreeTooLow {
            needed: 2 * n,
            available: seq.max_degree(),
        });
    }
    let table = seq.basis().sum_table(n);
    let len = table.len();
    let entries = DMatrix::from_fn(len, len, |i, j| seq.values[table[i][j]]);
    Ok(MomentMatrix {
        basis: basis_indices(seq.dimension(), n),
        entries,
    })
}

/// Sparse polynomial in the monomial basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn new() -> Self {
        Polynomial::default()
    }

    pub fn constant(d: usize, c: f64) -> Self {
        let mut p = Polynomial::new();
        p.add_term(MultiIndex::zero(d), c);
        p
    }

    /// `Σ c_k x^k` in one variable.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let mut p = Polynomial::new();
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::new(vec![k as u32]), c);
        }
        p
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        *self.terms.entry(alpha).or_insert(0.0) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(a, _)| a.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, &c)| c * a.eval(x)).sum()
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }
}

/// Riesz functional `L_φ(p) = Σ_α p_α φ_α`.
pub fn riesz(seq: &MomentSequence, poly: &Polynomial) -> Result<f64> {
    let mut acc = 0.0;
    for (alpha, c) in poly.terms() {
        if alpha.dim() != seq.dimension() {
            return Err(TvError::DimensionMismatch(alpha.dim(), seq.dimension()));
        }
        if c == 0.0 {
            continue;
        }
        let v = seq.get(alpha).ok_or(TvError::DegreeTooLow {
            needed: alpha.degree(),
            available: seq.max_degree(),
        })?;
        acc += c * v;
    }
    Ok(acc)
}

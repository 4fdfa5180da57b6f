#![allow(dead_code)]

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

/// Nodes and weights of the `k`-point Gauss–Hermite rule for N(0, 1)
/// (Golub–Welsch on the probabilists' Hermite recurrence).
pub fn gauss_hermite(k: usize) -> Vec<(f64, f64)> {
    let j = DMatrix::from_fn(k, k, |a, b| {
        if a + 1 == b || b + 1 == a {
            (a.max(b) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = j.symmetric_eigen();
    (0..k)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect()
}

/// `E[X^j]`, `j = 0..=degree`, for X ~ N(m, s²) by quadrature.
pub fn normal_moments(m: f64, s: f64, degree: usize) -> Vec<f64> {
    let rule = gauss_hermite(degree / 2 + 2);
    (0..=degree)
        .map(|j| rule.iter().map(|&(z, w)| w * (m + s * z).powi(j as i32)).sum())
        .collect()
}

/// Equal-variance Gaussian TV on the [0, 2] scale.
pub fn equal_variance_tv(m1: f64, m2: f64, s: f64) -> f64 {
    let phi = Normal::new(0.0, 1.0).unwrap();
    2.0 * (2.0 * phi.cdf((m1 - m2).abs() / (2.0 * s)) - 1.0)
}

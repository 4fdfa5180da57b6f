#![allow(clippy::excessive_precision)]
//! Adaptive Gauss–Kronrod quadrature and the density TV oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, TvError};
use crate::measures::MeasureSpec;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    /// Absolute error target.
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            tol: 1e-9,
            max_intervals: 10_000,
        }
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Integrate `f` over `[breaks[0], breaks.last()]`, splitting the worst piece
/// until the summed error estimate is below `settings.tol`.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], settings: &QuadratureSettings) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, err) = gk15(&f, w[0], w[1]);
            heap.push(Piece { a: w[0], b: w[1], value, err });
        }
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        let total: f64 = heap.iter().map(|p| p.value).sum();
        if total_err <= settings.tol {
            return Ok(total);
        }
        if heap.len() >= settings.max_intervals {
            return Err(TvError::QuadratureNonConvergent {
                tol: settings.tol,
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(TvError::QuadratureNonConvergent {
                tol: settings.tol,
                estimate: total,
                error: total_err,
            });
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15(&f, a, b);
            heap.push(Piece { a, b, value, err });
        }
    }
}

/// `∫ |f_μ − f_ν|` on the [0, 2] scale, for univariate densities.
pub fn exact_tv_univariate_density(mu: &MeasureSpec, nu: &MeasureSpec, settings: &QuadratureSettings) -> Result<f64> {
    if !mu.has_density() || !nu.has_density() {
        return Err(TvError::Unsupported(
            "density oracle needs gaussian, exponential or mixtures of them".into(),
        ));
    }
    let (a1, b1, mut breaks) = mu.effective_support().expect("density measure");
    let (a2, b2, br2) = nu.effective_support().expect("density measure");
    let (lo, hi) = (a1.min(a2), b1.max(b2));
    breaks.extend(br2);
    breaks.push(lo);
    breaks.push(hi);
    breaks.retain(|x| *x >= lo && *x <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate(
        |x| (mu.density(x).unwrap_or(0.0) - nu.density(x).unwrap_or(0.0)).abs(),
        &breaks,
        settings,
    )
}

mod common;

use tvbound::certificate::{
    gaussian_comparison, gaussian_hellinger, gaussian_kl, hellinger_bounds, nishiyama_bound, pinsker_upper,
    recover_certificate, verify_certificate, DualCertificate,
};
use tvbound::measures::{moments, MeasureSpec};
use tvbound::quadrature::{exact_tv_univariate_density, QuadratureSettings};
use tvbound::relaxation::{assemble_with, solve_level, solve_problem, RelaxationSettings};
use tvbound::{SolverSettings, TvError};

fn cert(mu: &MeasureSpec, nu: &MeasureSpec, n: usize) -> (f64, DualCertificate) {
    let r = solve_level(mu, nu, n, &RelaxationSettings::default()).unwrap();
    (r.rho_n, r.certificate.expect("certificate"))
}

#[test]
fn identical_measures_certify_zero() {
    let g = MeasureSpec::gaussian(0.2, 0.7);
    let (rho, c) = cert(&g, &g, 2);
    let v = verify_certificate(&c, &g, &g).unwrap();
    assert!(rho.abs() < 1e-7 && v.abs() < 1e-7, "rho={rho} v={v}");
}

#[test]
fn dirac_pair_certifies_two() {
    let (a, b) = (MeasureSpec::dirac(0.0), MeasureSpec::dirac(0.1));
    let (_, c) = cert(&a, &b, 1);
    let v = verify_certificate(&c, &a, &b).unwrap();
    assert!((v - 2.0).abs() < 1e-4, "{v}");
}

#[test]
fn gaussian_level_one_meets_closed_form() {
    let (a, b) = (MeasureSpec::gaussian(0.0, 0.1), MeasureSpec::gaussian(1.0, 0.1));
    let (rho, c) = cert(&a, &b, 1);
    let v = verify_certificate(&c, &a, &b).unwrap();
    let closed = nishiyama_bound(0.0, 0.1, 1.0, 0.1);
    assert!((v - closed).abs() < 1e-3 && (rho - closed).abs() < 1e-3, "v={v} rho={rho}");
}

#[test]
fn weak_duality_of_recovered_certificates() {
    let cases = [
        (MeasureSpec::gaussian(0.0, 1.0), MeasureSpec::gaussian(0.5, 1.0)),
        (MeasureSpec::gaussian(0.5, 0.1), MeasureSpec::gaussian(1.0, 0.5)),
        (
            MeasureSpec::atomic(&[(-1.0, 0.5), (0.0, 0.5)]),
            MeasureSpec::atomic(&[(-1.0, 0.25), (1.0, 0.75)]),
        ),
    ];
    for (a, b) in &cases {
        for n in 1..=3 {
            let (rho, c) = cert(a, b, n);
            let v = verify_certificate(&c, a, b).unwrap();
            assert!(v <= rho + 1e-6, "n={n}: certified {v} above rho {rho}");
            assert!(v >= rho - 1e-4, "n={n}: certified {v} far below rho {rho}");
        }
    }
}

#[test]
fn negative_gram_eigenvalue_is_rejected() {
    let (a, b) = (MeasureSpec::gaussian(0.0, 1.0), MeasureSpec::gaussian(1.0, 1.0));
    let (_, mut c) = cert(&a, &b, 2);
    let k = c.gram_sigma1.nrows();
    let v = nalgebra::DVector::from_fn(k, |i, _| if i == k - 1 { 1.0 } else { 0.0 });
    let lmin = c.min_eigenvalues()[1];
    c.gram_sigma1 -= &v * v.transpose() * (c.gram_sigma1[(k - 1, k - 1)] - lmin + 1e-3);
    c.gram_sigma1 = (&c.gram_sigma1 + c.gram_sigma1.transpose()) * 0.5;
    assert!(c.min_eigenvalues()[1] < -1e-4);
    assert!(matches!(verify_certificate(&c, &a, &b), Err(TvError::CertificateMismatch(_))));
}

#[test]
fn zero_certificate_is_valid_with_value_zero() {
    let (a, b) = (MeasureSpec::gaussian(0.0, 1.0), MeasureSpec::dirac(3.0));
    let (_, c) = cert(&a, &b, 2);
    let z = DualCertificate::zero(c.basis.clone(), 2);
    assert_eq!(verify_certificate(&z, &a, &b).unwrap(), 0.0);
}

#[test]
fn recovery_refuses_failed_solves() {
    let (a, b) = (MeasureSpec::gaussian(0.0, 1.0), MeasureSpec::gaussian(1.0, 1.0));
    let problem = assemble_with(&a, &b, 3, true).unwrap();
    let sol = tvbound::solver::solve(&problem.program, &SolverSettings { tol: 1e-8, max_iter: 2 });
    assert!(recover_certificate(&problem, &sol).is_err());
    let (_, ok) = solve_problem(&problem, &SolverSettings::default()).unwrap();
    assert!(recover_certificate(&problem, &ok).is_ok());
}

#[test]
fn certificate_inequalities_hold_on_a_grid() {
    let (a, b) = (MeasureSpec::gaussian(0.0, 0.5), MeasureSpec::gaussian(1.0, 0.5));
    let (_, c) = cert(&a, &b, 3);
    let (center, hw) = (c.basis.frame().center[0], c.basis.frame().half_width[0]);
    for i in 0..=1000 {
        let x = [center + hw * (-1.0 + 2.0 * i as f64 / 1000.0)];
        let p = c.eval_p(&x);
        let s1 = c.eval_sos(&c.gram_sigma1, &x);
        let t1 = c.eval_sos(&c.gram_psi1, &x);
        assert!(p - 1.0 - s1 <= 1e-6, "x={x:?}: p={p} sigma1={s1}");
        assert!(-p - 1.0 - t1 <= 1e-6, "x={x:?}: p={p} psi1={t1}");
        for g in [&c.gram_sigma0, &c.gram_sigma1, &c.gram_psi0, &c.gram_psi1] {
            assert!(c.eval_sos(g, &x) >= -1e-6);
        }
    }
}

#[test]
fn closed_form_examples() {
    assert!((nishiyama_bound(0.0, 0.1, 1.0, 0.1) - 1.9231).abs() < 5e-5);
    assert_eq!(nishiyama_bound(2.0, 0.3, 2.0, 0.9), 0.0);
    assert!((nishiyama_bound(0.0, 0.5, 1.0, 0.5) - 1.0).abs() < 1e-14);
    // KL(N(0,1) || N(1,1)) = 1/2, so Pinsker gives 1.
    assert!((gaussian_kl(0.0, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
    assert!((pinsker_upper(0.5) - 1.0).abs() < 1e-15);
    // Equal means: Bhattacharyya coefficient sqrt(2 s1 s2 / (s1² + s2²)).
    let h = gaussian_hellinger(0.0, 1.0, 0.0, 2.0);
    let bc: f64 = (4.0f64 / 5.0).sqrt();
    assert!((h * h - 2.0 * (1.0 - bc)).abs() < 1e-14);
    let (lo, hi) = hellinger_bounds(1.0);
    assert_eq!(lo, 1.0);
    assert!((hi - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn comparison_bounds_sandwich_quadrature() {
    let q = QuadratureSettings::default();
    let pairs = [(0.0, 1.0, 1.0, 1.0), (0.0, 0.1, 1.0, 0.1), (0.5, 0.1, 1.0, 0.5), (0.0, 1.0, 0.0, 2.0), (-1.0, 0.3, 2.0, 1.5)];
    for (m1, s1, m2, s2) in pairs {
        let (a, b) = (MeasureSpec::gaussian(m1, s1), MeasureSpec::gaussian(m2, s2));
        let tv = exact_tv_univariate_density(&a, &b, &q).unwrap();
        let c = gaussian_comparison(&a, &b).unwrap();
        assert!(c.hellinger_lower <= tv + 1e-6, "{m1} {s1} {m2} {s2}: {c:?} tv={tv}");
        assert!(tv <= c.pinsker_upper.min(2.0) + 1e-6, "{m1} {s1} {m2} {s2}: {c:?} tv={tv}");
        assert!(tv <= c.hellinger_upper + 1e-6);
        if s1 == s2 {
            assert!((tv - common::equal_variance_tv(m1, m2, s1)).abs() < 1e-8);
        }
    }
    let seq = moments(&MeasureSpec::gaussian(0.0, 1.0), 1, 2).unwrap();
    assert_eq!(seq.values()[2], 1.0);
}

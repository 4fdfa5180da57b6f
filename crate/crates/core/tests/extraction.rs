use proptest::prelude::*;
use tvbound::basis::AffineFrame;
use tvbound::extraction::{extract_atoms, flatness, recover_hahn_jordan, DEFAULT_RANK_TOL};
use tvbound::measures::{moments, Atom, AtomicMeasure, MeasureSpec};
use tvbound::relaxation::{solve_level, RelaxationSettings};
use tvbound::{HierarchyResult, TvError};

const X: [f64; 4] = [0.0, 0.3, 0.4, 0.9];
const Y: [f64; 4] = [0.3, 0.6, 0.7, 1.2];

fn level(mu: &MeasureSpec, nu: &MeasureSpec, n: usize) -> HierarchyResult {
    solve_level(mu, nu, n, &RelaxationSettings::default()).unwrap()
}

fn points(a: &AtomicMeasure) -> Vec<f64> {
    a.sorted().atoms.iter().map(|t| t.point[0]).collect()
}

fn near(x: f64, set: &[f64], tol: f64) -> bool {
    set.iter().any(|s| (x - s).abs() <= tol)
}

#[test]
fn flatness_examples() {
    let d = moments(&MeasureSpec::dirac(0.5), 1, 6).unwrap();
    let f = flatness(&d, 3, DEFAULT_RANK_TOL).unwrap();
    assert!(f.flat && f.rank == 1);
    let pair = moments(&MeasureSpec::atomic(&[(-1.0, 0.5), (1.0, 0.5)]), 1, 6).unwrap();
    let f = flatness(&pair, 3, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(f.ranks, vec![1, 2, 2, 2]);
    let g = moments(&MeasureSpec::gaussian(0.0, 1.0), 1, 8).unwrap();
    let f = flatness(&g, 4, DEFAULT_RANK_TOL).unwrap();
    assert!(!f.flat);
    assert_eq!(f.ranks, vec![1, 2, 3, 4, 5]);
}

#[test]
fn extraction_examples() {
    let d = extract_atoms(&moments(&MeasureSpec::dirac(0.5), 1, 4).unwrap(), 2, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(d.len(), 1);
    assert!((d.atoms[0].point[0] - 0.5).abs() < 1e-12 && (d.atoms[0].weight - 1.0).abs() < 1e-12);
    let pair = MeasureSpec::atomic(&[(-1.0, 0.5), (1.0, 0.5)]);
    let a = extract_atoms(&moments(&pair, 1, 6).unwrap(), 3, DEFAULT_RANK_TOL).unwrap().sorted();
    assert_eq!(points(&a).len(), 2);
    assert!((a.atoms[0].point[0] + 1.0).abs() < 1e-10 && (a.atoms[1].point[0] - 1.0).abs() < 1e-10);
    assert!(a.atoms.iter().all(|t| (t.weight - 0.5).abs() < 1e-10));
}

#[test]
fn non_flat_and_multivariate_inputs_are_refused() {
    let g = moments(&MeasureSpec::gaussian(0.0, 1.0), 1, 8).unwrap();
    assert!(matches!(extract_atoms(&g, 4, DEFAULT_RANK_TOL), Err(TvError::NotFlat { .. })));
    let two_d = MeasureSpec::Atomic {
        atoms: vec![Atom { point: vec![0.0, 1.0], weight: 1.0 }],
    };
    let seq = moments(&two_d, 2, 4).unwrap();
    assert!(matches!(flatness(&seq, 2, DEFAULT_RANK_TOL), Err(TvError::UnsupportedDimension { .. })));
}

#[test]
fn hahn_jordan_of_dirac_pair() {
    let r = level(&MeasureSpec::dirac(0.0), &MeasureSpec::dirac(0.1), 2);
    let (phi, psi) = recover_hahn_jordan(&r, DEFAULT_RANK_TOL).unwrap();
    assert_eq!((phi.len(), psi.len()), (1, 1));
    assert!(phi.atoms[0].point[0].abs() < 1e-6 && (phi.atoms[0].weight - 1.0).abs() < 1e-6);
    assert!((psi.atoms[0].point[0] - 0.1).abs() < 1e-6 && (psi.atoms[0].weight - 1.0).abs() < 1e-6);
}

#[test]
fn hahn_jordan_with_one_common_point() {
    let (mu, nu) = (MeasureSpec::uniform_atoms(&X), MeasureSpec::uniform_atoms(&Y));
    let r = level(&mu, &nu, 4);
    let (phi, psi) = recover_hahn_jordan(&r, DEFAULT_RANK_TOL).unwrap();
    assert!(points(&phi).iter().all(|&x| near(x, &X, 1e-3)), "{:?}", points(&phi));
    assert!(points(&psi).iter().all(|&y| near(y, &Y, 1e-3)), "{:?}", points(&psi));
    // The shared point cancels, so the pair carries total mass 1.5.
    assert!((phi.mass() + psi.mass() - 1.5).abs() < 1e-3);
    assert!(points(&phi).iter().all(|&x| (x - 0.3).abs() > 1e-3));
    // Domination: each recovered weight is at most the input weight there.
    for t in phi.atoms.iter().chain(&psi.atoms) {
        assert!(t.weight <= 0.25 + 1e-5, "{t:?}");
    }
}

#[test]
fn gaussian_pair_optimum_is_consistent_when_flat() {
    // The pseudo-moments of the optimum at a finite level may be finitely atomic.
    let (mu, nu) = (MeasureSpec::gaussian(0.0, 1.0), MeasureSpec::gaussian(1.0, 1.0));
    let r = level(&mu, &nu, 3);
    match recover_hahn_jordan(&r, DEFAULT_RANK_TOL) {
        Ok((phi, psi)) => {
            assert!((phi.mass() + psi.mass() - r.rho_n).abs() < 1e-5);
            let (pm, qm) = (phi.moments(6), psi.moments(6));
            let (mm, nm) = (moments(&mu, 1, 6).unwrap(), moments(&nu, 1, 6).unwrap());
            for k in 0..=6 {
                let lhs = pm.values()[k] - qm.values()[k];
                let rhs = mm.values()[k] - nm.values()[k];
                assert!((lhs - rhs).abs() <= 1e-5 * (1.0 + rhs.abs()), "k={k}: {lhs} vs {rhs}");
            }
        }
        Err(e) => assert!(matches!(e, TvError::NotFlat { .. }), "{e}"),
    }
}

#[test]
fn ranks_survive_the_relaxation_window() {
    let cases: [&[(f64, f64)]; 3] = [
        &[(-0.4, 0.2), (0.1, 0.5), (0.7, 0.3)],
        &[(10.0, 1.0), (12.0, 2.0)],
        &[(-1.5, 0.3), (-0.2, 0.3), (0.4, 0.2), (1.9, 0.2)],
    ];
    for atoms in cases {
        let spec = MeasureSpec::atomic(atoms);
        let seq = moments(&spec, 1, 10).unwrap();
        let frame = AffineFrame::covering(&[&seq]).unwrap();
        let moved: Vec<(f64, f64)> = atoms.iter().map(|&(x, w)| (frame.to_frame(&[x])[0], w)).collect();
        let mapped = moments(&MeasureSpec::atomic(&moved), 1, 10).unwrap();
        for n in 1..=5 {
            let a = flatness(&seq, n, DEFAULT_RANK_TOL).unwrap();
            let b = flatness(&mapped, n, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(a.ranks, b.ranks, "{atoms:?} n={n}");
        }
    }
}

// Five atoms 0.05 apart near ±1.7 sit below the rounding floor of f64 raw
// moments at degree 10, so the generated gaps start at 0.15.
fn spaced_atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (1usize..=5)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.15f64..0.8, k),
                prop::collection::vec(0.1f64..1.0, k),
                -2.0f64..2.0,
            )
        })
        .prop_map(|(gaps, weights, start)| {
            let mut x = start - gaps[0];
            gaps.iter()
                .zip(&weights)
                .map(|(g, &w)| {
                    x += g;
                    (x, w)
                })
                .collect::<Vec<_>>()
        })
        .prop_filter("inside [-2, 2]", |atoms| atoms.last().is_some_and(|a| a.0 <= 2.0))
}

#[test]
fn close_pairs_extract_at_a_low_order() {
    for c in [-1.9, -0.6, 0.6, 1.9] {
        let atoms = [(c, 0.1), (c + 0.05, 0.17)];
        let seq = moments(&MeasureSpec::atomic(&atoms), 1, 10).unwrap();
        let got = extract_atoms(&seq, 5, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(got.len(), 2, "c={c}");
        for (t, &(x, w)) in got.atoms.iter().zip(&atoms) {
            assert!((t.point[0] - x).abs() < 1e-6 && (t.weight - w).abs() < 1e-6, "c={c}: {t:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn atomic_round_trip(atoms in spaced_atoms()) {
        let n = 5;
        let seq = moments(&MeasureSpec::atomic(&atoms), 1, 2 * n).unwrap();
        let got = extract_atoms(&seq, n, DEFAULT_RANK_TOL).unwrap().sorted();
        prop_assert_eq!(got.len(), atoms.len());
        for (t, &(x, w)) in got.atoms.iter().zip(&atoms) {
            prop_assert!((t.point[0] - x).abs() <= 1e-6, "{} vs {}", t.point[0], x);
            prop_assert!((t.weight - w).abs() <= 1e-6, "{} vs {}", t.weight, w);
        }
    }
}




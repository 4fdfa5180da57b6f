use nalgebra::DMatrix;
use proptest::prelude::*;
use tvbound::dd::Dd;
use tvbound::measures::{moments, MeasureSpec};
use tvbound::relaxation::assemble;
use tvbound::solver::dump::{read_program, write_program};
use tvbound::solver::{solve, ConicProgram, DdMat, SolveStatus, SolverSettings};

fn mat(rows: &[&[f64]]) -> DdMat {
    DdMat::from(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn scalar_block() {
    let mut p = ConicProgram::new(1);
    p.set_objective(0, 1.0);
    let b = p.add_block(mat(&[&[0.0]]));
    p.add_block_term(b, 0, mat(&[&[1.0]]));
    let r = solve(&p, &SolverSettings::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.x[0].abs() < 1e-8 && r.objective.abs() < 1e-8);
}

#[test]
fn am_gm_against_grid() {
    // [[x1, 1], [1, x2]] ⪰ 0  ⇔  x1, x2 ≥ 0 and x1 x2 ≥ 1; on the boundary x2 = 1/x1.
    let grid = (1..=200_000)
        .map(|i| i as f64 * 1e-4)
        .map(|x| x + 1.0 / x)
        .fold(f64::INFINITY, f64::min);
    let mut p = ConicProgram::new(2);
    p.set_objective(0, 1.0);
    p.set_objective(1, 1.0);
    let b = p.add_block(mat(&[&[0.0, 1.0], &[1.0, 0.0]]));
    p.add_block_term(b, 0, mat(&[&[1.0, 0.0], &[0.0, 0.0]]));
    p.add_block_term(b, 1, mat(&[&[0.0, 0.0], &[0.0, 1.0]]));
    let r = solve(&p, &SolverSettings::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - grid).abs() < 1e-6);
    assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4);
}

#[test]
fn dirac_program_has_value_two() {
    for eps in [0.1, 0.01] {
        let mu = moments(&MeasureSpec::dirac(0.0), 1, 2).unwrap();
        let nu = moments(&MeasureSpec::dirac(eps), 1, 2).unwrap();
        let problem = assemble(&mu, &nu, 1).unwrap();
        let r = solve(&problem.program, &SolverSettings::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-6, "eps={eps}: {}", r.objective);
    }
}

#[test]
fn empty_feasible_set_is_reported() {
    // x = 0 but x - 1 ⪰ 0.
    let mut p = ConicProgram::new(1);
    p.add_equality(vec![(0, Dd::ONE)], 0.0);
    let b = p.add_block(mat(&[&[-1.0]]));
    p.add_block_term(b, 0, mat(&[&[1.0]]));
    let r = solve(&p, &SolverSettings::default());
    assert_ne!(r.status, SolveStatus::Optimal);
}

#[test]
fn malformed_programs_are_rejected() {
    let mut p = ConicProgram::new(1);
    let b = p.add_block(mat(&[&[0.0, 1.0], &[2.0, 0.0]]));
    p.add_block_term(b, 0, mat(&[&[1.0, 0.0], &[0.0, 1.0]]));
    assert!(p.validate().is_err());
}

fn random_program(seed: u64, vars: usize) -> ConicProgram {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sym = |rng: &mut rand_chacha::ChaCha8Rng| {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    };
    let g = sym(&mut rng);
    let f0 = &g * g.transpose() + DMatrix::identity(3, 3) * 0.2;
    let h = sym(&mut rng);
    let z0 = &h * h.transpose() + DMatrix::identity(3, 3) * 0.2;
    let mut p = ConicProgram::new(vars);
    let b = p.add_block(DdMat::from(f0));
    for j in 0..vars {
        let fj = sym(&mut rng);
        // c_j = <F_j, Z0> keeps the dual feasible, so the program is bounded.
        p.set_objective(j, fj.dot(&z0));
        p.add_block_term(b, j, DdMat::from(fj));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_results_satisfy_kkt(seed in 0u64..10_000, vars in 1usize..=4) {
        let p = random_program(seed, vars);
        let tol = 1e-8;
        let r = solve(&p, &SolverSettings { tol, max_iter: 100 });
        prop_assert_eq!(r.status, SolveStatus::Optimal);
        prop_assert!(r.primal_residual <= tol && r.dual_residual <= tol && r.gap <= tol);
        prop_assert!(r.dual_objective <= r.objective + tol * r.objective.abs().max(1.0));
        prop_assert!(r.x.iter().all(|v| v.is_finite()));
        let scale = r.block_duals[0].amax().max(1.0);
        prop_assert!(min_eig(&r.block_duals[0]) >= -10.0 * tol * scale);
        let value = p.block_value(0, &r.x);
        prop_assert!(min_eig(&value) >= -10.0 * tol * value.amax().max(1.0));
    }

    #[test]
    fn dump_round_trips(seed in 0u64..10_000, vars in 1usize..=4) {
        let p = random_program(seed, vars);
        let text = write_program(&p);
        let q = read_program(&text).unwrap();
        prop_assert_eq!(&write_program(&q), &text);
        let (a, b) = (solve(&p, &SolverSettings::default()), solve(&q, &SolverSettings::default()));
        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mu = moments(&MeasureSpec::gaussian(0.5, 0.1), 1, 8).unwrap();
    let nu = moments(&MeasureSpec::gaussian(1.0, 0.5), 1, 8).unwrap();
    let problem = assemble(&mu, &nu, 4).unwrap();
    let a = solve(&problem.program, &SolverSettings::default());
    let b = solve(&problem.program, &SolverSettings::default());
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert!(a.x.iter().zip(&b.x).all(|(u, v)| u.to_bits() == v.to_bits()));
    assert!(a.eq_duals.iter().zip(&b.eq_duals).all(|(u, v)| u.to_bits() == v.to_bits()));
    for (za, zb) in a.block_duals.iter().zip(&b.block_duals) {
        assert!(za.iter().zip(zb.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}

#[test]
fn dump_format_is_documented_text() {
    let mut p = ConicProgram::new(2);
    p.set_objective(0, 1.0);
    p.add_equality(vec![(0, Dd::ONE), (1, -Dd::ONE)], 0.5);
    let b = p.add_block(mat(&[&[1.0, 0.0], &[0.0, 1.0]]));
    p.add_block_term(b, 1, mat(&[&[0.0, 2.0], &[2.0, 0.0]]));
    let text = write_program(&p);
    for line in ["vars 2", "c 0 1", "eq 0 0 1", "eq 0 1 -1", "rhs 0 0.5", "block 0 2", "f 0 0 0 0 1", "f 0 0 1 1 1", "f 0 2 0 1 2"] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }
    assert!(read_program("vars 1\nf 0 1 0 0 1\n").is_err());
}

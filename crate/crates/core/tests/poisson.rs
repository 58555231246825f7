use std::sync::Arc;

use nalgebra::DVector;
use sfem::oracle::{assemble_global_1d, dense_solve_nd, mass_apply};
use sfem::poisson::{solve_1d_load, PoissonSolver};
use sfem::spectral::materialize_eigenvector;
use sfem::{
    apply_operator, build_spectral_table, fem_load_average, solve_nd_algorithm_a, solve_nd_algorithm_b, Algorithm,
    Error, GridFunction1D, ManufacturedCase, ProblemSpec,
};

fn smooth_spec(orders: Vec<usize>, elements: Vec<usize>, lengths: Vec<f64>, alpha: f64) -> ProblemSpec {
    ProblemSpec {
        lengths,
        elements,
        orders,
        alpha,
        rhs: Arc::new(|x: &[f64]| x.iter().enumerate().map(|(a, v)| ((a + 1) as f64 * v).exp()).sum()),
        exact: None,
    }
}

#[test]
fn algorithm_a_matches_dense_assembly_in_two_dimensions() {
    for n in 1..=3 {
        for k in [2, 3, 5, 8] {
            let spec = ManufacturedCase::poisson2d().spec(n, k);
            let fast = solve_nd_algorithm_a(&spec).unwrap().solution;
            let dense = dense_solve_nd(&spec).unwrap();
            assert!(fast.max_abs_diff(&dense) <= 1e-10 * dense.max_abs(), "n={n} K={k}");
        }
    }
}

#[test]
fn anisotropic_box_matches_dense_assembly() {
    let spec = smooth_spec(vec![2, 3], vec![5, 3], vec![1.5, 0.7], -1.0);
    let fast = solve_nd_algorithm_b(&spec).unwrap().solution;
    let dense = dense_solve_nd(&spec).unwrap();
    assert!(fast.max_abs_diff(&dense) <= 1e-10 * dense.max_abs());
}

#[test]
fn three_dimensional_algorithms_agree_with_dense() {
    let spec = smooth_spec(vec![1, 2, 2], vec![3, 2, 3], vec![1.0, 2.0, 0.5], 3.0);
    let a = solve_nd_algorithm_a(&spec).unwrap().solution;
    let b = solve_nd_algorithm_b(&spec).unwrap().solution;
    let dense = dense_solve_nd(&spec).unwrap();
    assert!(a.max_abs_diff(&dense) <= 1e-10 * dense.max_abs());
    assert!(b.max_abs_diff(&dense) <= 1e-10 * dense.max_abs());
}

#[test]
fn one_dimensional_eigen_load_gives_scaled_eigenvector() {
    let (n, k, length, alpha) = (3, 8, 2.0, 0.5);
    let table = build_spectral_table(n, k).unwrap();
    let h = length / k as f64;
    for (kk, l) in [(0, 2), (2, 1), (7, 3)] {
        let s = materialize_eigenvector(&table, kk, l).unwrap();
        let load = mass_apply(&s).unwrap();
        let v = solve_1d_load(length, alpha, &load, &table).unwrap();
        let d = 4.0 / (h * h) * table.eigenvalue(kk, l) + alpha;
        let want = GridFunction1D::from_values(n, k, s.values().iter().map(|x| x / d).collect()).unwrap();
        assert!(v.max_abs_diff(&want) < 1e-12 * want.max_abs());
    }
}

#[test]
fn one_dimensional_residual_against_assembled_system() {
    let spec = ManufacturedCase::poisson1d().spec(3, 16);
    let table = build_spectral_table(3, 16).unwrap();
    let v = sfem::solve_1d(&spec, &table).unwrap().solution;
    let (a, c) = assemble_global_1d(3, 16).unwrap();
    let h: f64 = 1.0 / 16.0;
    let m = a * (4.0 / (h * h)) + c * spec.alpha;
    let x = DVector::from_iterator(47, v.data().iter().skip(1).take(47).copied());
    let load = fem_load_average(&spec).unwrap();
    let f = DVector::from_iterator(47, load.data().iter().skip(1).take(47).copied());
    let r = &m * x - &f;
    assert!(r.amax() <= 1e-10 * f.amax());
}

#[test]
fn matrix_free_operator_inverts_the_solve() {
    let spec = smooth_spec(vec![4, 2], vec![6, 9], vec![1.0, 1.0], 2.0);
    let solver = PoissonSolver::new(spec.clone()).unwrap();
    let load = solver.load().unwrap();
    for alg in [Algorithm::A, Algorithm::B] {
        let v = solver.solve_load(alg, &load).unwrap();
        let lv = apply_operator(&spec, &v).unwrap();
        assert!(lv.max_abs_diff(&load) <= 1e-11 * load.max_abs(), "{alg:?}");
    }
}

#[test]
fn invalid_problems_are_rejected() {
    let mut spec = smooth_spec(vec![2, 2], vec![4, 4], vec![1.0, 1.0], 0.0);
    spec.elements[1] = 1;
    assert!(matches!(solve_nd_algorithm_a(&spec), Err(Error::ElementCount(1))));
    let mut spec = smooth_spec(vec![2, 10], vec![4, 4], vec![1.0, 1.0], 0.0);
    assert!(matches!(solve_nd_algorithm_a(&spec), Err(Error::OrderOutOfRange { n: 10, .. })));
    spec.orders[1] = 2;
    spec.lengths[0] = -1.0;
    assert!(matches!(solve_nd_algorithm_a(&spec), Err(Error::InvalidProblem(_))));
    let spec = smooth_spec(vec![2, 2], vec![4, 4], vec![1.0, 1.0], -25.0);
    assert!(matches!(solve_nd_algorithm_a(&spec), Err(Error::InvalidProblem(_))));
}

#[test]
fn solution_csv_lists_interior_points() {
    let spec = ManufacturedCase::poisson2d().spec(2, 2);
    let v = solve_nd_algorithm_a(&spec).unwrap().solution;
    let mut out = Vec::new();
    v.write_csv(&spec.lengths, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "class,i1,i2,x1,x2,value");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[0], "HH");
    let center = rows.iter().find(|r| r.starts_with("II,")).unwrap();
    let value: f64 = center.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(value, v.data()[[2, 2]]);
}

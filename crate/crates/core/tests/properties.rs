use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crossint::analysis::{self, ScalarField};
use crossint::coeff::CoefficientField;
use crossint::experiment::unit_source;
use crossint::fdm::{self, one_sided_dx, FdmProblem, Side};
use crossint::fem::{self, FemProblem};
use crossint::sparse::{factor_solve, SolverConfig, SolverMethod};
use crossint::{DofMap, GridSpec, PointClass};

/// `(N, m)` with `N = 2^k`, `m | N`, `N / m >= 2`.
fn grid_strategy(max_k: u32) -> impl Strategy<Value = GridSpec> {
    (2..=max_k).prop_flat_map(|k| {
        let n = 1usize << k;
        (1..k).prop_map(move |e| GridSpec::new(n, 1 << e).unwrap())
    })
}

fn random_field(m: usize, seed: u64) -> CoefficientField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..m).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect())
        .collect();
    CoefficientField::from_matrix(&rows).unwrap()
}

fn max_rel_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let d = a
        .valid_entries()
        .map(|(i, j, v)| (v - b.get(i, j).unwrap()).abs())
        .fold(0.0, f64::max);
    d / a.max_abs().max(f64::MIN_POSITIVE)
}

fn solve(fdm_method: bool, grid: GridSpec, coeff: &CoefficientField, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> ScalarField {
    let cfg = SolverConfig::default();
    if fdm_method {
        fdm::solve_fdm(&FdmProblem::new(grid, coeff, f).unwrap(), &cfg).unwrap()
    } else {
        fem::solve_fem(&FemProblem::new(grid, coeff, f).unwrap(), &cfg).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn class_counts_have_closed_form(grid in grid_strategy(8)) {
        let (n, m) = (grid.n(), grid.m());
        let mut counts = [0usize; 5];
        for (i, j) in grid.nodes() {
            let slot = match grid.classify(i, j).unwrap() {
                PointClass::Boundary => 0,
                PointClass::Interior => 1,
                PointClass::InterfaceV => 2,
                PointClass::InterfaceH => 3,
                PointClass::Intersection => 4,
            };
            counts[slot] += 1;
        }
        prop_assert_eq!(counts.iter().sum::<usize>(), (n + 1) * (n + 1));
        prop_assert_eq!(counts[0], 4 * n);
        prop_assert_eq!(counts[4], (m - 1) * (m - 1));
        prop_assert_eq!(counts[2], (m - 1) * (n - 1) - (m - 1) * (m - 1));
        prop_assert_eq!(counts[3], counts[2]);
    }

    #[test]
    fn dof_map_round_trips(grid in grid_strategy(7), exclude in any::<bool>()) {
        let dofs = DofMap::new(grid, exclude);
        let (n, m) = (grid.n(), grid.m());
        let expected = (n - 1) * (n - 1) - if exclude { (m - 1) * (m - 1) } else { 0 };
        prop_assert_eq!(dofs.len(), expected);
        for (d, &(i, j)) in dofs.nodes().iter().enumerate() {
            prop_assert_eq!(dofs.dof(i, j), Some(d));
            prop_assert_eq!(dofs.node(d), (i, j));
        }
    }

    #[test]
    fn sampling_is_constant_on_open_cells(m in 2usize..9, seed in any::<u64>(), s in 0.01f64..0.99, t in 0.01f64..0.99) {
        let field = random_field(m, seed);
        let w = 1.0 / m as f64;
        for r in 0..m {
            for c in 0..m {
                let a = field.sample((c as f64 + s) * w, (r as f64 + t) * w).unwrap();
                let b = field.sample((c as f64 + 0.5) * w, (r as f64 + 0.5) * w).unwrap();
                prop_assert_eq!(a, b);
                prop_assert_eq!(a, field.value(r, c));
            }
        }
    }

    #[test]
    fn fdm_rows_sum_to_zero_and_skip_intersections(grid in grid_strategy(6), seed in any::<u64>()) {
        let coeff = random_field(grid.m(), seed);
        let problem = FdmProblem::new(grid, &coeff, &unit_source).unwrap();
        let dofs = DofMap::new(grid, true);
        for row in problem.rows(&dofs).unwrap() {
            prop_assert!(row.weight_sum().abs() <= 1e-9 * row.max_abs_weight());
            for &((i, j), _) in &row.entries {
                prop_assert_ne!(grid.classify(i, j).unwrap(), PointClass::Intersection);
            }
        }
    }

    #[test]
    fn fem_matrix_is_symmetric(grid in grid_strategy(6), seed in any::<u64>()) {
        let coeff = random_field(grid.m(), seed);
        let sys = fem::assemble_fem(&FemProblem::new(grid, &coeff, &unit_source).unwrap()).unwrap();
        prop_assert_eq!(sys.matrix.max_asymmetry(), 0.0);
        prop_assert!(sys.matrix.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn one_sided_derivative_is_exact_on_quadratics(
        c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0,
        x0 in -1.0f64..1.0, k in 2u32..8,
    ) {
        let h = 0.5f64.powi(k as i32);
        let q = |x: f64| c0 + c1 * x + c2 * x * x;
        let exact = c1 + 2.0 * c2 * x0;
        let back = one_sided_dx([q(x0), q(x0 - h), q(x0 - 2.0 * h)], h, Side::Backward);
        let fwd = one_sided_dx([q(x0), q(x0 + h), q(x0 + 2.0 * h)], h, Side::Forward);
        let tol = 1e-12 * (1.0 + c0.abs() + c1.abs() + c2.abs()) / h;
        prop_assert!((back - exact).abs() <= tol);
        prop_assert!((fwd - exact).abs() <= tol);
    }

    #[test]
    fn restriction_composes(k in 2u32..7, seed in any::<u64>()) {
        let n = 1usize << k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..(n + 1) * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = ScalarField::from_fn(n, |i, j| values[j * (n + 1) + i]);
        let twice = field.restrict().unwrap().restrict().unwrap();
        prop_assert_eq!(twice.n(), n / 4);
        for (i, j, v) in twice.valid_entries() {
            prop_assert_eq!(v, field.get(4 * i, 4 * j).unwrap());
        }
    }

    #[test]
    fn self_error_norm_axioms(k in 2u32..6, seed in any::<u64>()) {
        let n = 1usize << k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |n: usize| {
            let v: Vec<f64> = (0..(n + 1) * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ScalarField::from_fn(n, move |i, j| v[j * (n + 1) + i])
        };
        let (coarse, fine_a, fine_b) = (make(n), make(2 * n), make(2 * n));
        let e = analysis::self_error(&coarse, &fine_a).unwrap();
        prop_assert!(e.e2 >= 0.0 && e.einf >= 0.0);
        let neg = analysis::self_error(&coarse.scaled(-1.0), &fine_a.scaled(-1.0)).unwrap();
        prop_assert_eq!(e.e2, neg.e2);
        prop_assert_eq!(e.einf, neg.einf);
        let zero = analysis::self_error(&fine_a.restrict().unwrap(), &fine_a).unwrap();
        prop_assert_eq!(zero.e2, 0.0);
        // triangle inequality through the restricted second field
        let mid = fine_b.restrict().unwrap();
        let e_ab = analysis::self_error(&mid, &fine_a).unwrap();
        let e_cb = analysis::self_error(&coarse, &fine_b).unwrap();
        prop_assert!(e.e2 <= e_ab.e2 + e_cb.e2 + 1e-12);
        prop_assert!(e.einf <= e_ab.einf + e_cb.einf + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solutions_are_linear_in_the_source(
        grid in grid_strategy(5), seed in any::<u64>(), alpha in -3.0f64..3.0, fdm_method in any::<bool>(),
    ) {
        let coeff = random_field(grid.m(), seed);
        let f = |x: f64, y: f64| 1.0 + x - y * y;
        let scaled = move |x: f64, y: f64| alpha * f(x, y);
        let u = solve(fdm_method, grid, &coeff, &f);
        let v = solve(fdm_method, grid, &coeff, &scaled);
        prop_assert!(max_rel_diff(&u.scaled(alpha), &v) <= 1e-8 || alpha == 0.0);
    }

    #[test]
    fn scaling_the_coefficient_scales_the_solution(
        grid in grid_strategy(5), seed in any::<u64>(), log_c in -3.0f64..3.0, fdm_method in any::<bool>(),
    ) {
        let c = 10f64.powf(log_c);
        let coeff = random_field(grid.m(), seed);
        let u = solve(fdm_method, grid, &coeff, &unit_source);
        let v = solve(fdm_method, grid, &coeff.scaled(c).unwrap(), &unit_source);
        prop_assert!(max_rel_diff(&u, &v.scaled(c)) <= 1e-8);
    }

    #[test]
    fn transposed_problem_gives_transposed_solution(
        grid in grid_strategy(5), seed in any::<u64>(), fdm_method in any::<bool>(),
    ) {
        let coeff = random_field(grid.m(), seed);
        let f = |x: f64, y: f64| 1.0 + 2.0 * x + y * y;
        let ft = |x: f64, y: f64| f(y, x);
        let u = solve(fdm_method, grid, &coeff, &f);
        let v = solve(fdm_method, grid, &coeff.transposed(), &ft);
        let n = grid.n();
        let vt = ScalarField::from_fn(n, |i, j| v.get(j, i).unwrap_or(f64::NAN));
        prop_assert!(max_rel_diff(&u, &vt) <= 1e-10);
    }

    #[test]
    fn checkerboard_solutions_are_rotation_symmetric(
        e in 1u32..4, contrast in 0.0f64..3.0, fdm_method in any::<bool>(),
    ) {
        let m = 1usize << e;
        let a = 10f64.powf(contrast);
        let coeff = CoefficientField::checkerboard(m, a, 1.0 / a).unwrap();
        let grid = GridSpec::new(4 * m, m).unwrap();
        let n = grid.n();
        let u = solve(fdm_method, grid, &coeff, &unit_source);
        let rotated = ScalarField::from_fn(n, |i, j| u.get(n - i, n - j).unwrap_or(f64::NAN));
        prop_assert!(max_rel_diff(&u, &rotated) <= 10.0 * SolverConfig::default().rel_tol);
    }
}

#[test]
fn flux_matching_row_vanishes_on_piecewise_quadratics() {
    // a = 1e3 left of x = 1/2, 1e-3 right; u = p(x) q(y) with a- p'- = a+ p'+
    let coeff = CoefficientField::from_matrix(&[vec![1e3, 1e-3], vec![1e3, 1e-3]]).unwrap();
    let grid = GridSpec::new(16, 2).unwrap();
    let (am, ap) = (1e3, 1e-3);
    let slope_left = 0.7;
    let slope_right = am * slope_left / ap;
    let p = |x: f64| {
        let d = x - 0.5;
        if d <= 0.0 {
            2.0 + slope_left * d + 3.0 * d * d
        } else {
            2.0 + slope_right * d - 5.0 * d * d
        }
    };
    for j in [3usize, 5, 11] {
        let row = fdm::interface_v_row(&grid, &coeff, 8, j).unwrap();
        let y = grid.coord(j);
        let q = 1.0 + y * y;
        let u = |i: usize, jj: usize| {
            assert_eq!(jj, j);
            p(grid.coord(i)) * q
        };
        let value = row.apply(u);
        let magnitude: f64 = row.entries.iter().map(|&((i, jj), w)| (w * u(i, jj)).abs()).sum();
        assert!(value.abs() <= 1e-14 * magnitude, "{value} vs {magnitude}");
    }
}

#[test]
fn fdm_self_error_never_touches_intersection_values() {
    let coeff = CoefficientField::checkerboard(4, 1e3, 1e-3).unwrap();
    let coarse = solve(true, GridSpec::new(16, 4).unwrap(), &coeff, &unit_source);
    let fine = solve(true, GridSpec::new(32, 4).unwrap(), &coeff, &unit_source);
    assert_eq!(coarse.masked_count(), 9);
    let e = analysis::self_error(&coarse, &fine).unwrap();
    assert!(e.e2.is_finite() && e.einf.is_finite());
}

#[test]
fn cg_and_direct_agree_on_fem_systems() {
    let coeff = CoefficientField::checkerboard(4, 10.0, 1.0).unwrap();
    let grid = GridSpec::new(32, 4).unwrap();
    let sys = fem::assemble_fem(&FemProblem::new(grid, &coeff, &unit_source).unwrap()).unwrap();
    let direct = factor_solve(&sys.matrix, &sys.rhs, &SolverConfig::default()).unwrap();
    let cg = factor_solve(&sys.matrix, &sys.rhs, &SolverConfig::with_method(SolverMethod::Cg)).unwrap();
    let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = direct.iter().zip(&cg).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-10 * scale, "{diff:e}");
}

#[test]
fn equilibration_does_not_change_solutions() {
    let coeff = CoefficientField::checkerboard(4, 10.0, 1.0).unwrap();
    let grid = GridSpec::new(32, 4).unwrap();
    let sys = fdm::assemble_fdm(&FdmProblem::new(grid, &coeff, &unit_source).unwrap()).unwrap();
    let with = factor_solve(&sys.matrix, &sys.rhs, &SolverConfig::default()).unwrap();
    let cfg = SolverConfig {
        equilibrate: false,
        ..SolverConfig::default()
    };
    let without = factor_solve(&sys.matrix, &sys.rhs, &cfg).unwrap();
    let scale = with.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = with.iter().zip(&without).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-8 * scale);
}

#[test]
fn bicgstab_matches_direct_on_fdm_systems() {
    let coeff = CoefficientField::checkerboard(2, 10.0, 1.0).unwrap();
    let grid = GridSpec::new(32, 2).unwrap();
    let sys = fdm::assemble_fdm(&FdmProblem::new(grid, &coeff, &unit_source).unwrap()).unwrap();
    let direct = factor_solve(&sys.matrix, &sys.rhs, &SolverConfig::default()).unwrap();
    let it = factor_solve(&sys.matrix, &sys.rhs, &SolverConfig::with_method(SolverMethod::Bicgstab)).unwrap();
    let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = direct.iter().zip(&it).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-8 * scale, "{diff:e}");
}

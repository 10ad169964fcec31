mod common;

use std::sync::Arc;

use common::P;
use ncfvm::norms::{broken_h1_error, l2_error, DEFAULT_NORM_DEGREE};
use ncfvm::problem::ExactSolution;
use ncfvm::wilson::{h_matrix, symmetric_eigenvalues, Mat6};
use ncfvm::{
    assemble_wilson, build_rect_mesh, build_wilson_dual, element_stiffness, ellipticity_certificate,
    interpolate_wilson, manufactured_poisson_problem, reference_matrices, solve_wilson, AssemblyOptions, Rect,
    RectMesh64, SchemeError, SolutionField, WilsonDofMap, WilsonField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &Mat6<f64>, b: &Mat6<f64>) -> f64 {
    (0..36)
        .map(|k| (a[k / 6][k % 6] - b[k / 6][k % 6]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn reference_matrices_match_brute_force() {
    let (a1, a2) = reference_matrices::<f64>();
    assert!(max_diff(&a1, &common::wilson_brute(0.0, 0.0, 1.0, 1.0, [true, false])) <= 1e-12);
    assert!(max_diff(&a2, &common::wilson_brute(0.0, 0.0, 1.0, 1.0, [false, true])) <= 1e-12);
}

#[test]
fn stiffness_is_linear_in_r_and_inverse_r() {
    let (a1, a2) = reference_matrices::<f64>();
    let sum: Mat6<f64> = std::array::from_fn(|i| std::array::from_fn(|j| a1[i][j] + a2[i][j]));
    assert!(max_diff(&element_stiffness(1.0).unwrap(), &sum) <= 1e-15);
    let (k2, kh) = (element_stiffness(2.0).unwrap(), element_stiffness(0.5).unwrap());
    let lhs: Mat6<f64> = std::array::from_fn(|i| std::array::from_fn(|j| k2[i][j] + kh[i][j]));
    let rhs: Mat6<f64> = std::array::from_fn(|i| std::array::from_fn(|j| 2.5 * sum[i][j]));
    assert!(max_diff(&lhs, &rhs) <= 1e-14);
    assert!(matches!(element_stiffness(f64::NAN), Err(SchemeError::InvalidShape(_))));
}

#[test]
fn stiffness_matches_physical_cell() {
    let k = element_stiffness(0.5).unwrap();
    assert!(max_diff(&k, &common::wilson_brute(0.625, -0.3, 0.25, 0.125, [true, true])) <= 1e-12);
    for r in [0.137, 3.7] {
        let k = element_stiffness(r).unwrap();
        assert!(
            max_diff(&k, &common::wilson_brute(1.0, 2.0, 0.1, 0.1 * r, [true, true])) <= 1e-12,
            "r = {r}"
        );
    }
}

#[test]
fn certificate_examples() {
    let mesh = build_rect_mesh::<f64>(4, 4, Rect::unit_square()).unwrap();
    assert!((ellipticity_certificate(&mesh) - 1.0 / 12.0).abs() <= 1e-10);
    let mesh = build_rect_mesh::<f64>(2, 4, Rect::unit_square()).unwrap();
    // the bound is attained, so allow rounding
    assert!(ellipticity_certificate(&mesh) >= 1.0 / 24.0 - 1e-12);
    let (a, b) = (
        build_rect_mesh::<f64>(3, 7, Rect::unit_square()).unwrap(),
        build_rect_mesh::<f64>(7, 3, Rect::unit_square()).unwrap(),
    );
    assert!((ellipticity_certificate(&a) - ellipticity_certificate(&b)).abs() <= 1e-12);
}

/// Scatters brute-force cell matrices with the `A[trial][test]` layout transposed
/// into `G[test][trial]`.
fn brute_global(mesh: &RectMesh64) -> Vec<Vec<f64>> {
    let dofs = WilsonDofMap::new(mesh);
    let mut g = vec![vec![0.0; dofs.n]; dofs.n];
    for (k, c) in mesh.cells.iter().enumerate() {
        let a = common::wilson_brute(c.center.x, c.center.y, c.h1, c.h2, [true, true]);
        let ids = dofs.cell_dofs[k];
        for l in 0..6 {
            for m in 0..6 {
                g[ids[m]][ids[l]] += a[l][m];
            }
        }
    }
    g
}

#[test]
fn global_rows_match_brute_force_on_two_by_two() {
    let mesh = build_rect_mesh::<f64>(2, 2, Rect::new(0.0, 1.0, 0.0, 0.5)).unwrap();
    let dual = build_wilson_dual(&mesh);
    let sys = assemble_wilson(
        &manufactured_poisson_problem(),
        &mesh,
        &dual,
        &AssemblyOptions::default(),
    )
    .unwrap();
    let g = brute_global(&mesh);
    let center = mesh.vertex_id(1, 1);
    assert!(!sys.constrained[center]);
    for i in (0..sys.n).filter(|&i| !sys.constrained[i]) {
        for j in 0..sys.n {
            assert!(
                (sys.get(i, j) - g[i][j]).abs() <= 1e-12,
                "({i},{j}): {} vs {}",
                sys.get(i, j),
                g[i][j]
            );
        }
    }
    // vertex row: four cells, each with its 6 trial functions, 9 vertices + 8 moments
    assert_eq!(sys.row(center).count(), 17);
}

#[test]
fn zero_source_and_unsupported_coefficients() {
    let mesh = build_rect_mesh::<f64>(4, 3, Rect::unit_square()).unwrap();
    let dual = build_wilson_dual(&mesh);
    let opts = AssemblyOptions::default();
    let problem = manufactured_poisson_problem::<f64>().with_source(Arc::new(|_| 0.0));
    let sys = assemble_wilson(&problem, &mesh, &dual, &opts).unwrap();
    let u = solve_wilson(&sys, &mesh).unwrap();
    assert!(u.field.coefficients.iter().all(|c| *c == 0.0));
    let reaction = manufactured_poisson_problem::<f64>().with_reaction(Arc::new(|_| 1.0));
    assert!(matches!(
        assemble_wilson(&reaction, &mesh, &dual, &opts),
        Err(SchemeError::UnsupportedCoefficients(_))
    ));
}

#[test]
fn split_conforming_parts() {
    let mesh = build_rect_mesh::<f64>(3, 4, Rect::new(0.0, 1.5, -1.0, 1.0)).unwrap();
    let n = WilsonDofMap::new(&mesh).n;
    let nv = mesh.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut vertex_only = vec![0.0; n];
    vertex_only[..nv].iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
    let (_, w2) = WilsonField::new(&mesh, vertex_only).unwrap().split_conforming();
    assert!(w2.coefficients.iter().all(|c| *c == 0.0));

    let mut moment_only = vec![0.0; n];
    moment_only[nv..].iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
    let (w1, _) = WilsonField::new(&mesh, moment_only).unwrap().split_conforming();
    assert!(w1.coefficients.iter().all(|c| *c == 0.0));

    let w = WilsonField::new(&mesh, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let (w1, w2) = w.split_conforming();
    for _ in 0..50 {
        let k = rng.gen_range(0..mesh.num_cells());
        let c = &mesh.cells[k];
        let p = c.map(P::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        assert!((w.value(k, p) - w1.value(k, p) - w2.value(k, p)).abs() <= 1e-13);
    }
    // w₁ is continuous across cells: compare both sides of every interior vertex
    for (v, cells) in mesh.vertex_cells.iter().enumerate() {
        let p = mesh.vertices[v];
        let vals: Vec<f64> = cells.iter().map(|&k| w1.value(k, p)).collect();
        assert!(vals.iter().all(|x| (x - vals[0]).abs() <= 1e-13));
    }
}

fn polynomial(value: fn(P) -> f64, grad: fn(P) -> P, hess: fn(P) -> [[f64; 2]; 2]) -> ExactSolution<f64> {
    ExactSolution {
        value: Arc::new(value),
        gradient: Arc::new(grad),
        hessian: Arc::new(hess),
    }
}

#[test]
fn interpolation_reproduces_bilinear() {
    let mesh = build_rect_mesh::<f64>(3, 2, Rect::new(-1.0, 2.0, 0.0, 1.0)).unwrap();
    let v = polynomial(
        |p| 1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.y,
        |p| P::new(2.0 + 0.5 * p.y, -1.0 + 0.5 * p.x),
        |_| [[0.0, 0.5], [0.5, 0.0]],
    );
    let w = interpolate_wilson(&v, &mesh, 4);
    assert!(w.coefficients[mesh.num_vertices()..].iter().all(|c| c.abs() < 1e-14));
    assert!(broken_h1_error(|p| v.gradient_at(p), &w, 4) < 1e-13);
    assert!(l2_error(|p| v.value_at(p), &w, 4) < 1e-13);
}

#[test]
fn interpolation_reproduces_x_squared_on_reference_cell() {
    let mesh = build_rect_mesh::<f64>(1, 1, Rect::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let v = polynomial(|p| p.x * p.x, |p| P::new(2.0 * p.x, 0.0), |_| [[2.0, 0.0], [0.0, 0.0]]);
    let w = interpolate_wilson(&v, &mesh, 4);
    let dofs = WilsonDofMap::new(&mesh);
    assert!((w.coefficients[dofs.cell_dofs[0][4]] - 8.0).abs() < 1e-13);
    assert!(w.coefficients[dofs.cell_dofs[0][5]].abs() < 1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = P::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        assert!((w.value(0, p) - p.x * p.x).abs() <= 1e-13);
    }
}

#[test]
fn errors_shrink_under_refinement() {
    let problem = manufactured_poisson_problem::<f64>();
    let exact = problem.exact.clone().unwrap();
    let run = |m| {
        let mesh = build_rect_mesh::<f64>(m, m, Rect::unit_square()).unwrap();
        let dual = build_wilson_dual(&mesh);
        let sys = assemble_wilson(&problem, &mesh, &dual, &AssemblyOptions::default()).unwrap();
        let u = solve_wilson(&sys, &mesh).unwrap();
        (
            broken_h1_error(|p| exact.gradient_at(p), &u.field, DEFAULT_NORM_DEGREE),
            l2_error(|p| exact.value_at(p), &u.field, DEFAULT_NORM_DEGREE),
        )
    };
    let (h8, l8) = run(8);
    let (h16, l16) = run(16);
    assert!((1.8..2.2).contains(&(h8 / h16)), "{}", h8 / h16);
    assert!((3.5..4.5).contains(&(l8 / l16)), "{}", l8 / l16);
}

proptest! {
    #[test]
    fn certificate_bounds(r in 0.05..20.0f64) {
        let lam = symmetric_eigenvalues(&h_matrix(r))[0];
        let inv = symmetric_eigenvalues(&h_matrix(1.0 / r))[0];
        prop_assert!((lam - inv).abs() <= 1e-12 * lam.max(1.0));
        prop_assert!(lam >= r.min(1.0 / r).min(1.0) / 12.0 - 1e-12);
    }

    #[test]
    fn certificate_swap_symmetry(m in 1usize..=9, n in 1usize..=9) {
        let a = build_rect_mesh::<f64>(m, n, Rect::unit_square()).unwrap();
        let b = build_rect_mesh::<f64>(n, m, Rect::unit_square()).unwrap();
        prop_assert!((ellipticity_certificate(&a) - ellipticity_certificate(&b)).abs() <= 1e-12);
    }
}

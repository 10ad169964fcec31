mod common;

use std::sync::Arc;

use common::P;
use nalgebra::{Matrix3, Vector3};
use ncfvm::norms::{broken_h1_error, DEFAULT_NORM_DEGREE};
use ncfvm::{
    assemble_cr, build_cr_dual, build_structured_tri_mesh, cr_local_basis, interpolate_cr, local_conservation_residual,
    manufactured_poisson_problem, pi_cr, solve_cr, AssemblyOptions, CrField, EllipticProblem, Rect, SolutionField,
};
use proptest::prelude::*;

fn variable_problem() -> EllipticProblem<f64> {
    manufactured_poisson_problem::<f64>()
        .with_diffusion(Arc::new(|p: P| [[2.0 + p.x, 0.3 * p.y], [0.3 * p.y, 1.0 + p.y * p.y]]))
        .with_reaction(Arc::new(|p: P| 1.0 + p.x * p.y))
}

#[test]
fn diagonal_entry_matches_hand_flux() {
    let mesh = build_structured_tri_mesh::<f64>(1, 1, Rect::unit_square()).unwrap();
    let dual = build_cr_dual(&mesh);
    let sys = assemble_cr(
        &manufactured_poisson_problem(),
        &mesh,
        &dual,
        &AssemblyOptions::default(),
    )
    .unwrap();
    let i = (0..mesh.num_edges()).find(|&e| !mesh.edges[e].on_boundary).unwrap();

    // The diagonal runs (0,0)-(1,1). Below it φ = 1 - 2(x - y), above it φ = 1 - 2(y - x).
    let (q1, q2) = (P::new(2.0 / 3.0, 1.0 / 3.0), P::new(1.0 / 3.0, 2.0 / 3.0));
    let (s, t) = (P::new(0.0, 0.0), P::new(1.0, 1.0));
    let sides = [
        (s, q1, P::new(-2.0, 2.0)),
        (q1, t, P::new(-2.0, 2.0)),
        (t, q2, P::new(2.0, -2.0)),
        (q2, s, P::new(2.0, -2.0)),
    ];
    let outward: f64 = sides
        .iter()
        // length-weighted outward normal of a CCW side a -> b is (dy, -dx)
        .map(|&(a, b, g)| g.x * (b.y - a.y) - g.y * (b.x - a.x))
        .sum();
    assert!((outward + 8.0).abs() < 1e-14);
    assert!((sys.get(i, i) - 8.0).abs() < 1e-13, "{}", sys.get(i, i));
    assert!((sys.get(i, i) + outward).abs() < 1e-13);
}

#[test]
fn reaction_entries_are_piece_integrals() {
    let mesh = build_structured_tri_mesh::<f64>(1, 1, Rect::unit_square()).unwrap();
    let dual = build_cr_dual(&mesh);
    let problem = manufactured_poisson_problem::<f64>()
        .with_diffusion(Arc::new(|_| [[0.0; 2]; 2]))
        .with_reaction(Arc::new(|_| 1.0));
    let sys = assemble_cr(&problem, &mesh, &dual, &AssemblyOptions::default()).unwrap();
    let i = (0..mesh.num_edges()).find(|&e| !mesh.edges[e].on_boundary).unwrap();
    for j in 0..mesh.num_edges() {
        let mut expect = 0.0;
        for (t, cd) in dual.cells.iter().enumerate() {
            let Some(li) = cd.volumes.iter().position(|&v| v == i) else {
                continue;
            };
            let Some(lj) = mesh.triangles[t].edges.iter().position(|&e| e == j) else {
                continue;
            };
            let phi = cr_local_basis(&mesh, t)[lj];
            expect += common::polygon(|p| phi.eval(p), &cd.pieces[li], 4);
        }
        assert!(
            (sys.get(i, j) - expect).abs() < 1e-14,
            "({i},{j}) {} vs {expect}",
            sys.get(i, j)
        );
    }
    assert!((sys.get(i, i) - 7.0 / 27.0).abs() < 1e-14);
}

#[test]
fn zero_source_gives_zero_solution() {
    let mesh = build_structured_tri_mesh::<f64>(3, 5, Rect::unit_square()).unwrap();
    let dual = build_cr_dual(&mesh);
    let problem = variable_problem().with_source(Arc::new(|_| 0.0));
    let sys = assemble_cr(&problem, &mesh, &dual, &AssemblyOptions::default()).unwrap();
    let u = solve_cr(&sys, &mesh).unwrap();
    assert!(u.field.coefficients.iter().all(|&c| c.abs() < 1e-15));
}

#[test]
fn conservation_holds_after_solve_and_fails_before() {
    for problem in [manufactured_poisson_problem::<f64>(), variable_problem()] {
        let mesh = build_structured_tri_mesh::<f64>(4, 6, Rect::unit_square()).unwrap();
        let dual = build_cr_dual(&mesh);
        let opts = AssemblyOptions::default();
        let sys = assemble_cr(&problem, &mesh, &dual, &opts).unwrap();
        let scale = sys.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        let u = solve_cr(&sys, &mesh).unwrap();
        let res = local_conservation_residual(&u.field, &problem, &dual, &opts).unwrap();
        for (r, v) in res.iter().zip(&dual.volumes) {
            if !v.on_boundary {
                assert!(r.abs() <= 1e-10 * scale, "{r}");
            }
        }
        let exact = problem.exact.clone().unwrap();
        let w = interpolate_cr(&mesh, |p| exact.value_at(p));
        let res = local_conservation_residual(&w, &problem, &dual, &opts).unwrap();
        let worst = res
            .iter()
            .zip(&dual.volumes)
            .filter(|(_, v)| !v.on_boundary)
            .fold(0.0f64, |m, (r, _)| m.max(r.abs()));
        assert!(worst > 1e-6 * scale);
    }
}

#[test]
fn conservation_residuals_are_row_residuals() {
    let problem = variable_problem();
    let mesh = build_structured_tri_mesh::<f64>(3, 4, Rect::new(0.0, 1.0, 0.0, 1.0)).unwrap();
    let dual = build_cr_dual(&mesh);
    let opts = AssemblyOptions::default();
    let sys = assemble_cr(&problem, &mesh, &dual, &opts).unwrap();
    let exact = problem.exact.clone().unwrap();
    let w = interpolate_cr(&mesh, |p| exact.value_at(p) + 0.1 * p.x);
    let res = local_conservation_residual(&w, &problem, &dual, &opts).unwrap();
    let aw = sys.mul_vec(&w.coefficients).unwrap();
    let (mut sum_res, mut sum_row) = (0.0, 0.0);
    for i in 0..sys.n {
        if dual.volumes[i].on_boundary {
            continue;
        }
        let row = sys.rhs[i] - aw[i];
        assert!((res[i] - row).abs() < 1e-14, "volume {i}: {} vs {row}", res[i]);
        sum_res += res[i];
        sum_row += row;
    }
    assert!((sum_res - sum_row).abs() < 1e-13);
}

#[test]
fn assembled_system_residual() {
    let mesh = build_structured_tri_mesh::<f64>(2, 2, Rect::unit_square()).unwrap();
    let dual = build_cr_dual(&mesh);
    let sys = assemble_cr(
        &manufactured_poisson_problem(),
        &mesh,
        &dual,
        &AssemblyOptions::default(),
    )
    .unwrap();
    assert!(sys.check_invariants().is_ok());
    let u = solve_cr(&sys, &mesh).unwrap();
    assert!(u.residual.relative_l2 <= 1e-12);
    let r = sys.residual_vector(&u.field.coefficients).unwrap();
    assert!(r.iter().all(|x| x.abs() <= 1e-12));
}

#[test]
fn pi_maps_unit_coefficient_to_indicator() {
    let mesh = build_structured_tri_mesh::<f64>(2, 3, Rect::unit_square()).unwrap();
    let dual = build_cr_dual(&mesh);
    for e in 0..mesh.num_edges() {
        let mut c = vec![0.0; mesh.num_edges()];
        c[e] = 1.0;
        let v = pi_cr(&CrField::new(&mesh, c.clone()).unwrap());
        assert_eq!(v.values, c);
        let integral: f64 = v.values.iter().zip(&dual.volumes).map(|(x, vol)| x * vol.area).sum();
        assert!((integral - dual.volumes[e].area).abs() < 1e-15);
    }
}

/// Broken-H¹ error of the best piecewise-linear approximation of `u`,
/// `(Σ_K ∫ |∇u - mean_K ∇u|²)^½`, by independent quadrature.
fn best_affine_error(mm: usize, nn: usize) -> f64 {
    let mesh = build_structured_tri_mesh::<f64>(mm, nn, Rect::unit_square()).unwrap();
    let exact = manufactured_poisson_problem::<f64>().exact.unwrap();
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle_points(t);
        let area = mesh.triangles[t].area;
        let gx = common::triangle(|p| exact.gradient_at(p).x, a, b, c, 6) / area;
        let gy = common::triangle(|p| exact.gradient_at(p).y, a, b, c, 6) / area;
        acc += common::triangle(
            |p| {
                let g = exact.gradient_at(p);
                (g.x - gx).powi(2) + (g.y - gy).powi(2)
            },
            a,
            b,
            c,
            6,
        );
    }
    acc.sqrt()
}

#[test]
fn manufactured_errors_on_small_meshes() {
    let problem = manufactured_poisson_problem::<f64>();
    let exact = problem.exact.clone().unwrap();
    // exact broken-H¹ errors of this implementation (degree 6 and 9 agree)
    for ((mm, nn), expect) in [((2, 2), 8.4600e-2), ((4, 12), 3.4679e-2), ((8, 8), 2.3473e-2)] {
        let mesh = build_structured_tri_mesh::<f64>(mm, nn, Rect::unit_square()).unwrap();
        let dual = build_cr_dual(&mesh);
        let sys = assemble_cr(&problem, &mesh, &dual, &AssemblyOptions::default()).unwrap();
        let u = solve_cr(&sys, &mesh).unwrap();
        let e6 = broken_h1_error(|p| exact.gradient_at(p), &u.field, DEFAULT_NORM_DEGREE);
        let e9 = broken_h1_error(|p| exact.gradient_at(p), &u.field, 9);
        assert!(common::rel(e6, e9) < 1e-10);
        assert!(common::rel(e6, expect) < 1e-4, "({mm},{nn}) {e6:e}");
        assert!(e6 >= best_affine_error(mm, nn));
    }
}

proptest! {
    #[test]
    fn basis_solves_midpoint_interpolation(m in 1usize..=4, n in 1usize..=4, w in 0.2..3.0f64, h in 0.2..3.0f64) {
        let mesh = build_structured_tri_mesh(m, n, Rect::new(-0.5, -0.5 + w, 1.0, 1.0 + h)).unwrap();
        for t in 0..mesh.num_triangles() {
            let mids = mesh.triangles[t].edges.map(|e| mesh.edge_midpoints[e]);
            let a = Matrix3::from_fn(|r, c| match c { 0 => 1.0, 1 => mids[r].x, _ => mids[r].y });
            let lu = a.lu();
            let basis = cr_local_basis(&mesh, t);
            for (k, f) in basis.iter().enumerate() {
                let mut rhs = Vector3::zeros();
                rhs[k] = 1.0;
                let c = lu.solve(&rhs).unwrap();
                prop_assert!((f.constant - c[0]).abs() < 1e-10);
                prop_assert!((f.gradient.x - c[1]).abs() < 1e-10 && (f.gradient.y - c[2]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn flux_rows_sum_to_zero(m in 1usize..=5, n in 1usize..=5) {
        let problem = manufactured_poisson_problem::<f64>()
            .with_diffusion(Arc::new(|p: P| [[1.0 + p.x, 0.2], [0.2, 1.5 + p.y]]));
        let mesh = build_structured_tri_mesh(m, n, Rect::unit_square()).unwrap();
        let dual = build_cr_dual(&mesh);
        let sys = assemble_cr(&problem, &mesh, &dual, &AssemblyOptions::default()).unwrap();
        for i in 0..sys.n {
            if sys.constrained[i] {
                continue;
            }
            let (s, mag) = sys.row(i).fold((0.0, 0.0), |(s, m), (_, v)| (s + v, m + v.abs()));
            prop_assert!(s.abs() <= 1e-13 * mag.max(1.0), "row {} sums to {}", i, s);
        }
    }

    #[test]
    fn interpolant_of_affine_is_exact(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        let mesh = build_structured_tri_mesh::<f64>(3, 2, Rect::unit_square()).unwrap();
        let coefficients = mesh.edge_midpoints.iter().map(|m| a + b * m.x + c * m.y).collect();
        let w = CrField::new(&mesh, coefficients).unwrap();
        let err = broken_h1_error(|_| P::new(b, c), &w, 4);
        prop_assert!(err < 1e-13);
        for t in 0..mesh.num_triangles() {
            let q = mesh.triangles[t].barycenter;
            prop_assert!((w.value(t, q) - (a + b * q.x + c * q.y)).abs() < 1e-13);
        }
    }
}

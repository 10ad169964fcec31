//! Property suite behind `ncfvm verify`: spectral facts of the Wilson
//! reference element, the C-R reference mass matrix, and local conservation.

use std::fmt::Write as _;

use crate::cr::{assemble_cr, local_conservation_residual, solve_cr};
use crate::dual::{build_cr_dual, build_wilson_dual};
use crate::geometry::Rect;
use crate::mesh::{build_rect_mesh, build_structured_tri_mesh};
use crate::norms::format_sci;
use crate::problem::manufactured_poisson_problem;
use crate::quadrature::triangle_rule;
use crate::scheme::AssemblyOptions;
use crate::wilson::{
    assemble_wilson, e_matrix, h_matrix_with, physical_element_matrix, ref_basis, ref_basis_second, ref_functional,
    reference_matrices, solve_wilson, symmetric_eigenvalues, symmetrize, wilson_conservation_residual, Mat6, E_VECTOR,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "[{}] {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        out
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct VerifyOptions {
    /// Added to `A₁[0][0]` before the checks run (negative control).
    pub perturb_a1: Option<f64>,
}

/// Aspect ratios used for the parameterization check.
pub const SHAPE_SAMPLES: [f64; 5] = [0.5, 1.0, 2.0, 0.137, 3.7];

fn max_abs_vec(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

fn rank_and_floor(ev: &[f64; 6], tol: f64) -> (usize, f64) {
    (ev.iter().filter(|&&l| l > tol).count(), ev[0])
}

pub fn run_verification(options: &VerifyOptions) -> VerifyReport {
    let mut report = VerifyReport::default();
    let (mut a1, a2) = reference_matrices::<f64>();
    if let Some(d) = options.perturb_a1 {
        a1[0][0] += d;
    }

    let mut worst = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            let eta = ref_functional::<f64>(i, |p| ref_basis(j, p), |_| ref_basis_second(j), 2);
            worst = worst.max((eta - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    report.push(
        "duality",
        worst <= 1e-13,
        format!("max |η̂_i(φ̂_j) - δ_ij| = {}", format_sci(worst)),
    );

    let apply = |a: &Mat6<f64>, transpose: bool| {
        max_abs_vec((0..6).map(|i| {
            (0..6)
                .map(|j| if transpose { a[j][i] } else { a[i][j] } * E_VECTOR[j])
                .sum()
        }))
    };
    let ns = [apply(&a1, false), apply(&a1, true), apply(&a2, false), apply(&a2, true)];
    let ns_max = ns.iter().copied().fold(0.0, f64::max);
    report.push(
        "null space",
        ns_max <= 1e-14,
        format!("|A1 e|, |A1^T e|, |A2 e|, |A2^T e| = {}", ns.map(format_sci).join(", ")),
    );

    for (name, a) in [("A1 sym PSD rank 3", &a1), ("A2 sym PSD rank 3", &a2)] {
        let ev = symmetric_eigenvalues(&symmetrize(a));
        let (rank, floor) = rank_and_floor(&ev, 1e-10);
        report.push(
            name,
            rank == 3 && floor >= -1e-10,
            format!("rank {rank}, λ_min {}", format_sci(floor)),
        );
    }

    let lmin = symmetric_eigenvalues(&h_matrix_with(&a1, &a2, 1.0))[0];
    report.push(
        "λ_min(Ã1+Ã2+E)",
        (lmin - 1.0 / 12.0).abs() <= 1e-10,
        format!("{lmin:.10}"),
    );

    let e = e_matrix();
    let mut e2 = 0.0f64;
    let mut ee = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            let s: f64 = (0..6).map(|k| e[i][k] * e[k][j]).sum();
            e2 = e2.max((s - e[i][j]).abs());
        }
        let s: f64 = (0..6).map(|k| e[i][k] * E_VECTOR[k]).sum();
        ee = ee.max((s - E_VECTOR[i]).abs());
    }
    let (e_rank, _) = rank_and_floor(&symmetric_eigenvalues(&e), 1e-10);
    report.push(
        "E projection",
        e2 <= 1e-14 && ee <= 1e-14 && e_rank == 1,
        format!(
            "|E²-E| = {}, |Ee-e| = {}, rank {e_rank}",
            format_sci(e2),
            format_sci(ee)
        ),
    );

    let mut param = 0.0f64;
    for &r in &SHAPE_SAMPLES {
        let (h1, h2) = (0.25, 0.25 * r);
        let mesh =
            build_rect_mesh::<f64>(1, 1, Rect::new(0.3, 0.3 + 2.0 * h1, -0.1, -0.1 + 2.0 * h2)).expect("valid cell");
        let dual = build_wilson_dual(&mesh);
        let phys = physical_element_matrix(&mesh.cells[0], &dual.cells[0], 4);
        for l in 0..6 {
            for m in 0..6 {
                param = param.max((r * a1[l][m] + a2[l][m] / r - phys[l][m]).abs());
            }
        }
    }
    report.push(
        "A_K = r A1 + A2/r",
        param <= 1e-12,
        format!(
            "max deviation from physical assembly over {} shapes = {}",
            SHAPE_SAMPLES.len(),
            format_sci(param)
        ),
    );

    let rule = triangle_rule::<f64>(2);
    let tri = [
        crate::geometry::Point2::new(0.0, 0.0),
        crate::geometry::Point2::new(1.0, 0.0),
        crate::geometry::Point2::new(0.0, 1.0),
    ];
    let basis = |k: usize, p: crate::geometry::Point2<f64>| match k {
        0 => 1.0 - 2.0 * p.x,
        1 => 2.0 * p.x + 2.0 * p.y - 1.0,
        _ => 1.0 - 2.0 * p.y,
    };
    let mut mass = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            mass[i][j] = rule.integrate_fan(&tri, |p| basis(i, p) * basis(j, p));
        }
    }
    for (i, row) in mass.iter_mut().enumerate().skip(3) {
        row[i] = 1.0;
    }
    let mev = symmetric_eigenvalues(&mass);
    report.push(
        "C-R reference mass matrix",
        mev[0] > 0.0,
        format!("λ_min = {:.10}", mev[0]),
    );

    let problem = manufactured_poisson_problem::<f64>();
    let opts = AssemblyOptions::default();
    let cr_cons = (|| -> Result<f64, String> {
        let mesh = build_structured_tri_mesh(4, 4, Rect::unit_square()).map_err(|e| e.to_string())?;
        let dual = build_cr_dual(&mesh);
        let sys = assemble_cr(&problem, &mesh, &dual, &opts).map_err(|e| e.to_string())?;
        let u = solve_cr(&sys, &mesh).map_err(|e| e.to_string())?;
        let res = local_conservation_residual(&u.field, &problem, &dual, &opts).map_err(|e| e.to_string())?;
        let scale = max_abs_vec(sys.rhs.iter().copied());
        Ok(max_abs_vec(
            res.iter()
                .zip(&dual.volumes)
                .filter(|(_, v)| !v.on_boundary)
                .map(|(r, _)| *r),
        ) / scale)
    })();
    let wil_cons = (|| -> Result<f64, String> {
        let mesh = build_rect_mesh(4, 4, Rect::unit_square()).map_err(|e| e.to_string())?;
        let dual = build_wilson_dual(&mesh);
        let sys = assemble_wilson(&problem, &mesh, &dual, &opts).map_err(|e| e.to_string())?;
        let u = solve_wilson(&sys, &mesh).map_err(|e| e.to_string())?;
        let res = wilson_conservation_residual(&u.field, &problem, &dual, &opts).map_err(|e| e.to_string())?;
        let scale = max_abs_vec(sys.rhs.iter().copied());
        Ok(max_abs_vec(
            res.iter()
                .zip(&dual.volumes)
                .filter(|(_, v)| !v.on_boundary)
                .map(|(r, _)| *r),
        ) / scale)
    })();
    for (name, r) in [
        ("C-R conservation (4,4)", cr_cons),
        ("Wilson conservation (4,4)", wil_cons),
    ] {
        match r {
            Ok(v) => report.push(name, v <= 1e-10, format!("max relative residual {}", format_sci(v))),
            Err(e) => report.push(name, false, e),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let r = run_verification(&VerifyOptions::default());
        assert!(r.all_passed(), "{}", r.to_text());
        assert!(r.to_text().contains("0.0833333333"));
    }

    #[test]
    fn perturbation_is_caught() {
        let r = run_verification(&VerifyOptions { perturb_a1: Some(1e-3) });
        assert!(!r.all_passed());
    }
}

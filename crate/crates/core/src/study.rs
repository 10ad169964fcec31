//! Convergence studies on doubling mesh families.

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::cr::{assemble_cr, local_conservation_residual, solve_cr};
use crate::dual::{build_cr_dual, build_wilson_dual};
use crate::geometry::Rect;
use crate::mesh::{build_rect_mesh, build_structured_tri_mesh};
use crate::norms::{broken_h1_error, l2_error, ConvergenceReport, ConvergenceRow, NormError, DEFAULT_NORM_DEGREE};
use crate::problem::EllipticProblem;
use crate::scalar::Real;
use crate::scheme::{AssemblyOptions, SchemeError};
use crate::wilson::{assemble_wilson, ellipticity_certificate, solve_wilson, wilson_conservation_residual};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Scheme {
    Cr,
    Wilson,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Cr => "cr",
            Scheme::Wilson => "wilson",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = StudyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cr" => Ok(Scheme::Cr),
            "wilson" => Ok(Scheme::Wilson),
            other => Err(StudyError::Config(format!(
                "unknown scheme '{other}' (expected cr or wilson)"
            ))),
        }
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("mesh ({m},{n}): {source}")]
    Solver {
        m: usize,
        n: usize,
        #[source]
        source: SchemeError,
    },
    #[error("problem has no exact solution to measure errors against")]
    NoExactSolution,
    #[error(transparent)]
    Norm(#[from] NormError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshSpec {
    pub family: String,
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub scheme: Scheme,
    pub meshes: Vec<MeshSpec>,
    pub options: AssemblyOptions,
    pub norm_degree: usize,
    pub with_l2: bool,
}

/// Base sizes of the three triangulation families of the reference table.
pub const REFERENCE_FAMILIES: [(usize, usize); 3] = [(2, 2), (1, 3), (1, 20)];
pub const REFERENCE_LEVELS: usize = 7;

pub fn family_label(scheme: Scheme, base: (usize, usize)) -> String {
    format!("{scheme}-{}x{}", base.0, base.1)
}

impl StudyConfig {
    /// `levels` meshes `(2^k M, 2^k N)` for each base pair.
    pub fn families(scheme: Scheme, bases: &[(usize, usize)], levels: usize) -> Result<Self, StudyError> {
        if levels == 0 {
            return Err(StudyError::Config("levels must be at least 1".into()));
        }
        let mut meshes = Vec::new();
        for &(m, n) in bases {
            if m == 0 || n == 0 {
                return Err(StudyError::Config(format!("family ({m},{n}) has a zero size")));
            }
            let family = family_label(scheme, (m, n));
            for k in 0..levels {
                let s = 1usize
                    .checked_shl(k as u32)
                    .filter(|s| s.checked_mul(m.max(n)).is_some())
                    .ok_or_else(|| StudyError::Config("too many levels".into()))?;
                meshes.push(MeshSpec {
                    family: family.clone(),
                    m: m * s,
                    n: n * s,
                });
            }
        }
        Ok(Self::with_meshes(scheme, meshes))
    }

    /// Explicit mesh list; consecutive entries of a family must double both sizes.
    pub fn explicit(scheme: Scheme, meshes: Vec<MeshSpec>) -> Result<Self, StudyError> {
        for w in meshes.windows(2) {
            if w[0].family == w[1].family && (w[1].m != 2 * w[0].m || w[1].n != 2 * w[0].n) {
                return Err(StudyError::Config(format!(
                    "({},{}) -> ({},{}) does not double both sizes",
                    w[0].m, w[0].n, w[1].m, w[1].n
                )));
            }
        }
        if meshes.iter().any(|s| s.m == 0 || s.n == 0) {
            return Err(StudyError::Config("mesh sizes must be positive".into()));
        }
        Ok(Self::with_meshes(scheme, meshes))
    }

    fn with_meshes(scheme: Scheme, meshes: Vec<MeshSpec>) -> Self {
        Self {
            scheme,
            meshes,
            options: AssemblyOptions::default(),
            norm_degree: DEFAULT_NORM_DEGREE,
            with_l2: true,
        }
    }

    /// Reference C-R layout: three families, seven levels each.
    pub fn reference() -> Self {
        Self::families(Scheme::Cr, &REFERENCE_FAMILIES, REFERENCE_LEVELS).expect("static configuration")
    }
}

/// Per-mesh numbers that are not part of the CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct RowDiagnostics {
    pub relative_residual: f64,
    pub scaled_residual: f64,
    /// Largest interior conservation residual over the RHS scale.
    pub conservation: f64,
    /// Wilson only: `min_K λ_min(H(r_K))`.
    pub certificate: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyOutcome {
    pub report: ConvergenceReport,
    pub diagnostics: Vec<RowDiagnostics>,
}

fn max_abs<T: Real>(v: impl Iterator<Item = T>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.to_f64_lossy().abs()))
}

pub fn run_study<T: Real>(problem: &EllipticProblem<T>, config: &StudyConfig) -> Result<StudyOutcome, StudyError> {
    let exact = problem.exact.as_ref().ok_or(StudyError::NoExactSolution)?;
    let domain: Rect<T> = problem.domain;
    let mut rows = Vec::with_capacity(config.meshes.len());
    let mut diagnostics = Vec::with_capacity(config.meshes.len());
    for spec in &config.meshes {
        let (m, n) = (spec.m, spec.n);
        let fail = |source: SchemeError| StudyError::Solver { m, n, source };
        let start = Instant::now();
        let grad = |p| exact.gradient_at(p);
        let val = |p| exact.value_at(p);
        let (dofs, h, e1, e0, res, cons, cert) = match config.scheme {
            Scheme::Cr => {
                let mesh = build_structured_tri_mesh(m, n, domain).map_err(|e| fail(e.into()))?;
                let dual = build_cr_dual(&mesh);
                let sys = assemble_cr(problem, &mesh, &dual, &config.options).map_err(fail)?;
                let u = solve_cr(&sys, &mesh).map_err(fail)?;
                let r = local_conservation_residual(&u.field, problem, &dual, &config.options).map_err(fail)?;
                let cons = conservation_ratio(&r, &dual.volumes, &sys.rhs);
                let e1 = broken_h1_error(grad, &u.field, config.norm_degree);
                let e0 = config.with_l2.then(|| l2_error(val, &u.field, config.norm_degree));
                (sys.n, mesh.mesh_size(), e1, e0, u.residual, cons, None)
            }
            Scheme::Wilson => {
                let mesh = build_rect_mesh(m, n, domain).map_err(|e| fail(e.into()))?;
                let dual = build_wilson_dual(&mesh);
                let cert = ellipticity_certificate(&mesh);
                let sys = assemble_wilson(problem, &mesh, &dual, &config.options).map_err(fail)?;
                let u = solve_wilson(&sys, &mesh).map_err(fail)?;
                let r = wilson_conservation_residual(&u.field, problem, &dual, &config.options).map_err(fail)?;
                let cons = conservation_ratio(&r, &dual.volumes, &sys.rhs);
                let e1 = broken_h1_error(grad, &u.field, config.norm_degree);
                let e0 = config.with_l2.then(|| l2_error(val, &u.field, config.norm_degree));
                (sys.n, mesh.mesh_size(), e1, e0, u.residual, cons, Some(cert))
            }
        };
        rows.push(ConvergenceRow {
            family: spec.family.clone(),
            m,
            n,
            dofs,
            h: h.to_f64_lossy(),
            err_h1: e1.to_f64_lossy(),
            order_h1: None,
            err_l2: e0.map(Real::to_f64_lossy),
            order_l2: None,
        });
        diagnostics.push(RowDiagnostics {
            relative_residual: res.relative_l2,
            scaled_residual: res.scaled_inf,
            conservation: cons,
            certificate: cert,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let mut report = ConvergenceReport { rows };
    report.compute_orders()?;
    Ok(StudyOutcome { report, diagnostics })
}

fn conservation_ratio<T: Real>(res: &[T], volumes: &[crate::dual::ControlVolume<T>], rhs: &[T]) -> f64 {
    let scale = max_abs(rhs.iter().copied()).max(f64::MIN_POSITIVE);
    max_abs(res.iter().zip(volumes).filter(|(_, v)| !v.on_boundary).map(|(r, _)| *r)) / scale
}

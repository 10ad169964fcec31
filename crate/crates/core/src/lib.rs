//! Nonconforming finite volume methods for `-∇·(a∇u) + bu = f` on rectangles
//! with homogeneous Dirichlet data: a Crouzeix–Raviart scheme on
//! triangulations and a hybrid Wilson scheme on rectangle meshes.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); sparse
//! factorization and small eigenproblems run in `f64`.

pub mod cr;
pub mod dual;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod quadrature;
pub mod scalar;
pub mod scheme;
pub mod study;
pub mod svg;
pub mod verify;
pub mod wilson;

pub use cr::{
    assemble_cr, cr_local_basis, interpolate_cr, local_conservation_residual, pi_cr, solve_cr, CRDofMap, CrField,
};
pub use dual::{build_cr_dual, build_wilson_dual, ControlVolume, DualError, DualKind, DualPartition};
pub use geometry::{Point2, Rect};
pub use linalg::{direct_solve, LinalgError, SparseBuilder, SparseSystem};
pub use mesh::{build_rect_mesh, build_structured_tri_mesh, MeshError, RectMesh, TriMesh};
pub use norms::{broken_h1_error, convergence_order, l2_error, test_space_seminorm, ConvergenceReport};
pub use problem::{manufactured_poisson_problem, EllipticProblem, ExactSolution};
pub use scalar::Real;
pub use scheme::{AssemblyOptions, SchemeError, SolutionField};
pub use study::{run_study, Scheme, StudyConfig, StudyError};
pub use verify::{run_verification, VerifyOptions, VerifyReport};
pub use wilson::{
    assemble_wilson, element_stiffness, ellipticity_certificate, interpolate_wilson, reference_matrices, solve_wilson,
    WilsonDofMap, WilsonField,
};

pub type Point2f64 = Point2<f64>;
pub type Rect64 = Rect<f64>;
pub type TriMesh64 = TriMesh<f64>;
pub type RectMesh64 = RectMesh<f64>;
pub type DualPartition64 = DualPartition<f64>;
pub type EllipticProblem64 = EllipticProblem<f64>;
pub type SparseSystem64 = SparseSystem<f64>;
pub type TriMesh32 = TriMesh<f32>;
pub type RectMesh32 = RectMesh<f32>;
pub type EllipticProblem32 = EllipticProblem<f32>;

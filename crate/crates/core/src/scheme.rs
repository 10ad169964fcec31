//! Pieces shared by both discretizations: options, errors, and the field
//! abstraction the error norms work on.

use thiserror::Error;

use crate::dual::DualError;
use crate::geometry::Point2;
use crate::linalg::{LinalgError, Residual};
use crate::mesh::MeshError;
use crate::problem::ProblemError;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("unsupported coefficients: {0}")]
    UnsupportedCoefficients(String),
    #[error("shape parameter must be positive and finite, got {0}")]
    InvalidShape(f64),
    #[error("coefficient vector has length {found}, expected {expected}")]
    CoefficientLength { expected: usize, found: usize },
    #[error("quadrature degree must be at least 1")]
    ZeroDegree,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Exactness degree of area integrals.
    pub area_degree: usize,
    /// Exactness degree of flux line integrals.
    pub line_degree: usize,
    /// Worker threads for per-cell work; 1 runs on the calling thread.
    pub threads: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            area_degree: 4,
            line_degree: 3,
            threads: 1,
        }
    }
}

impl AssemblyOptions {
    pub(crate) fn check(&self) -> Result<(), SchemeError> {
        if self.area_degree == 0 || self.line_degree == 0 {
            return Err(SchemeError::ZeroDegree);
        }
        Ok(())
    }
}

/// Maps `work` over `0..n` and returns results in index order, using a
/// dedicated pool when more than one thread is requested.
pub(crate) fn map_cells<R, F>(n: usize, threads: usize, work: F) -> Result<Vec<R>, SchemeError>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if threads <= 1 {
        return Ok((0..n).map(work).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SchemeError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(work).collect()))
}

/// Piecewise-smooth discrete function living on the cells of a primal mesh.
pub trait SolutionField<T: Real>: Sync {
    fn num_cells(&self) -> usize;
    /// CCW boundary of `cell`, used to integrate over it.
    fn cell_polygon(&self, cell: usize) -> Vec<Point2<T>>;
    fn value(&self, cell: usize, p: Point2<T>) -> T;
    fn gradient(&self, cell: usize, p: Point2<T>) -> Point2<T>;
}

/// One value per control volume.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant<T> {
    pub values: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<F> {
    pub field: F,
    pub residual: Residual,
}

//! Boundary value problem data: `-div(a grad u) + b u = f` in a rectangle
//! with homogeneous Dirichlet conditions.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{Point2, Rect};
use crate::scalar::Real;

pub type ScalarFn<T> = Arc<dyn Fn(Point2<T>) -> T + Send + Sync>;
pub type VectorFn<T> = Arc<dyn Fn(Point2<T>) -> Point2<T> + Send + Sync>;
pub type MatrixFn<T> = Arc<dyn Fn(Point2<T>) -> [[T; 2]; 2] + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("domain has zero or negative extent")]
    DegenerateDomain,
    #[error("diffusion matrix is not symmetric at ({x}, {y})")]
    AsymmetricDiffusion { x: f64, y: f64 },
    #[error("diffusion matrix has eigenvalue {eigenvalue} below the ellipticity floor at ({x}, {y})")]
    NotElliptic { x: f64, y: f64, eigenvalue: f64 },
    #[error("reaction coefficient {value} is negative at ({x}, {y})")]
    NegativeReaction { x: f64, y: f64, value: f64 },
}

/// Value, gradient and Hessian callbacks of a known solution.
#[derive(Clone)]
pub struct ExactSolution<T> {
    pub value: ScalarFn<T>,
    pub gradient: VectorFn<T>,
    pub hessian: MatrixFn<T>,
}

impl<T> fmt::Debug for ExactSolution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExactSolution { .. }")
    }
}

impl<T: Real> ExactSolution<T> {
    pub fn value_at(&self, p: Point2<T>) -> T {
        (self.value)(p)
    }

    pub fn gradient_at(&self, p: Point2<T>) -> Point2<T> {
        (self.gradient)(p)
    }

    pub fn hessian_at(&self, p: Point2<T>) -> [[T; 2]; 2] {
        (self.hessian)(p)
    }
}

/// Coefficients, source and optional manufactured solution.
///
/// All callbacks must be pure; the problem is shared read-only between
/// assembly threads.
#[derive(Clone)]
pub struct EllipticProblem<T> {
    pub diffusion: MatrixFn<T>,
    pub reaction: ScalarFn<T>,
    pub source: ScalarFn<T>,
    pub domain: Rect<T>,
    pub exact: Option<ExactSolution<T>>,
    identity_diffusion: bool,
    zero_reaction: bool,
}

impl<T> fmt::Debug for EllipticProblem<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticProblem")
            .field("domain", &self.domain)
            .field("identity_diffusion", &self.identity_diffusion)
            .field("zero_reaction", &self.zero_reaction)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl<T: Real> EllipticProblem<T> {
    /// Poisson problem `-Δu = f` on `domain`.
    pub fn poisson(domain: Rect<T>, source: ScalarFn<T>) -> Result<Self, ProblemError> {
        if !domain.is_nondegenerate() {
            return Err(ProblemError::DegenerateDomain);
        }
        Ok(Self {
            diffusion: Arc::new(|_| [[T::one(), T::zero()], [T::zero(), T::one()]]),
            reaction: Arc::new(|_| T::zero()),
            source,
            domain,
            exact: None,
            identity_diffusion: true,
            zero_reaction: true,
        })
    }

    pub fn with_diffusion(mut self, diffusion: MatrixFn<T>) -> Self {
        self.diffusion = diffusion;
        self.identity_diffusion = false;
        self
    }

    pub fn with_reaction(mut self, reaction: ScalarFn<T>) -> Self {
        self.reaction = reaction;
        self.zero_reaction = false;
        self
    }

    pub fn with_source(mut self, source: ScalarFn<T>) -> Self {
        self.source = source;
        self
    }

    pub fn with_exact(mut self, exact: ExactSolution<T>) -> Self {
        self.exact = Some(exact);
        self
    }

    #[inline]
    pub fn diffusion_at(&self, p: Point2<T>) -> [[T; 2]; 2] {
        (self.diffusion)(p)
    }

    #[inline]
    pub fn reaction_at(&self, p: Point2<T>) -> T {
        (self.reaction)(p)
    }

    #[inline]
    pub fn source_at(&self, p: Point2<T>) -> T {
        (self.source)(p)
    }

    /// Applies the diffusion tensor at `p` to `g`.
    #[inline]
    pub fn flux(&self, p: Point2<T>, g: Point2<T>) -> Point2<T> {
        let a = self.diffusion_at(p);
        Point2::new(a[0][0] * g.x + a[0][1] * g.y, a[1][0] * g.x + a[1][1] * g.y)
    }

    /// Samples a `samples x samples` tensor grid of interior points and
    /// checks symmetry, ellipticity (`λ_min(a) ≥ floor`) and `b ≥ 0`.
    pub fn validate(&self, samples: usize, floor: T) -> Result<(), ProblemError> {
        if !self.domain.is_nondegenerate() {
            return Err(ProblemError::DegenerateDomain);
        }
        let tol = T::epsilon() * T::lit(16.0);
        for p in self.sample_points(samples) {
            let a = self.diffusion_at(p);
            let (x, y) = (p.x.to_f64_lossy(), p.y.to_f64_lossy());
            let scale = a[0][1].abs().max(a[1][0].abs()).max(T::one());
            if (a[0][1] - a[1][0]).abs() > tol * scale {
                return Err(ProblemError::AsymmetricDiffusion { x, y });
            }
            let lmin = symmetric_2x2_min_eigenvalue(a);
            if lmin < floor {
                return Err(ProblemError::NotElliptic {
                    x,
                    y,
                    eigenvalue: lmin.to_f64_lossy(),
                });
            }
            let b = self.reaction_at(p);
            if b < T::zero() {
                return Err(ProblemError::NegativeReaction {
                    x,
                    y,
                    value: b.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// True if sampled coefficients are `a = I`, `b = 0` to round-off.
    pub fn is_sampled_poisson(&self, samples: usize) -> bool {
        if self.identity_diffusion && self.zero_reaction {
            return true;
        }
        let tol = T::epsilon() * T::lit(16.0);
        self.sample_points(samples).into_iter().all(|p| {
            let a = self.diffusion_at(p);
            (a[0][0] - T::one()).abs() <= tol
                && (a[1][1] - T::one()).abs() <= tol
                && a[0][1].abs() <= tol
                && a[1][0].abs() <= tol
                && self.reaction_at(p).abs() <= tol
        })
    }

    fn sample_points(&self, samples: usize) -> Vec<Point2<T>> {
        let n = samples.max(1);
        let d = self.domain;
        let mut pts = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let s = (T::from_count(i) + T::lit(0.5)) / T::from_count(n);
                let t = (T::from_count(j) + T::lit(0.5)) / T::from_count(n);
                pts.push(Point2::new(d.x_min + s * d.width(), d.y_min + t * d.height()));
            }
        }
        pts
    }
}

fn symmetric_2x2_min_eigenvalue<T: Real>(a: [[T; 2]; 2]) -> T {
    let half = T::lit(0.5);
    let mean = (a[0][0] + a[1][1]) * half;
    let off = (a[0][1] + a[1][0]) * half;
    let diff = (a[0][0] - a[1][1]) * half;
    mean - diff.hypot(off)
}

/// Manufactured Poisson problem on the unit square with
/// `u = -x(x-1)y(y-1)` and `f = 2(x² + y² - x - y)`.
pub fn manufactured_poisson_problem<T: Real>() -> EllipticProblem<T> {
    let two = T::lit(2.0);
    let source: ScalarFn<T> = Arc::new(move |p: Point2<T>| two * (p.x * p.x + p.y * p.y - p.x - p.y));
    let exact = ExactSolution {
        value: Arc::new(|p: Point2<T>| -p.x * (p.x - T::one()) * p.y * (p.y - T::one())),
        gradient: Arc::new(move |p: Point2<T>| {
            let gx = -(two * p.x - T::one()) * p.y * (p.y - T::one());
            let gy = -(two * p.y - T::one()) * p.x * (p.x - T::one());
            Point2::new(gx, gy)
        }),
        hessian: Arc::new(move |p: Point2<T>| {
            let uxx = -two * p.y * (p.y - T::one());
            let uyy = -two * p.x * (p.x - T::one());
            let uxy = -(two * p.x - T::one()) * (two * p.y - T::one());
            [[uxx, uxy], [uxy, uyy]]
        }),
    };
    EllipticProblem::poisson(Rect::unit_square(), source)
        .expect("unit square is nondegenerate")
        .with_exact(exact)
}

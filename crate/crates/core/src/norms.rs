//! Error norms, the discrete test-space seminorm and convergence tables.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dual::DualPartition;
use crate::geometry::Point2;
use crate::quadrature::{segment_rule, triangle_rule};
use crate::scalar::Real;
use crate::scheme::{PiecewiseConstant, SolutionField};

/// Degree used for error integrals unless a caller asks otherwise.
pub const DEFAULT_NORM_DEGREE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("need at least two rows to compute an order, got {0}")]
    TooFewRows(usize),
    #[error("mesh sizes must strictly decrease (row {row}: {prev:e} -> {cur:e})")]
    NonMonotoneMeshSize { row: usize, prev: f64, cur: f64 },
    #[error("error and mesh-size columns differ in length ({errors} vs {sizes})")]
    LengthMismatch { errors: usize, sizes: usize },
}

fn integrate_cells<T: Real, F: SolutionField<T>>(
    field: &F,
    degree: usize,
    mut f: impl FnMut(usize, Point2<T>) -> T,
) -> T {
    let rule = triangle_rule::<T>(degree);
    (0..field.num_cells())
        .map(|c| rule.integrate_fan(&field.cell_polygon(c), |p| f(c, p)))
        .sum()
}

/// `(Σ_K ∫_K |∇u − ∇u_T|²)^{1/2}`.
pub fn broken_h1_error<T: Real, F: SolutionField<T>>(
    grad_exact: impl Fn(Point2<T>) -> Point2<T>,
    field: &F,
    degree: usize,
) -> T {
    integrate_cells(field, degree, |c, p| {
        let d = grad_exact(p) - field.gradient(c, p);
        d.dot(d)
    })
    .sqrt()
}

pub fn l2_error<T: Real, F: SolutionField<T>>(exact: impl Fn(Point2<T>) -> T, field: &F, degree: usize) -> T {
    integrate_cells(field, degree, |c, p| {
        let d = exact(p) - field.value(c, p);
        d * d
    })
    .sqrt()
}

/// `(Σ_K |w|²_{1,K})^{1/2}`.
pub fn broken_h1_seminorm<T: Real, F: SolutionField<T>>(field: &F, degree: usize) -> T {
    broken_h1_error(|_| Point2::origin(), field, degree)
}

pub fn l2_norm<T: Real, F: SolutionField<T>>(field: &F, degree: usize) -> T {
    l2_error(|_| T::zero(), field, degree)
}

/// Function that is smooth on each dual piece `K* ∩ K`.
pub trait DualPieceField<T: Real> {
    fn piece_value(&self, dual: &DualPartition<T>, cell: usize, local: usize, p: Point2<T>) -> T;
    fn piece_gradient(&self, dual: &DualPartition<T>, cell: usize, local: usize, p: Point2<T>) -> Point2<T>;
}

impl<T: Real> DualPieceField<T> for PiecewiseConstant<T> {
    fn piece_value(&self, dual: &DualPartition<T>, cell: usize, local: usize, _p: Point2<T>) -> T {
        self.values[dual.cells[cell].volumes[local]]
    }

    fn piece_gradient(&self, _: &DualPartition<T>, _: usize, _: usize, _: Point2<T>) -> Point2<T> {
        Point2::origin()
    }
}

/// `|v|_{1,V}`: piecewise gradient energy plus `|ℓ|⁻¹ ∫_ℓ [v]²` over every
/// dual segment interior to a primal cell.
pub fn test_space_seminorm<T: Real, V: DualPieceField<T>>(v: &V, dual: &DualPartition<T>, degree: usize) -> T {
    let area_rule = triangle_rule::<T>(degree);
    let line_rule = segment_rule::<T>(degree);
    let mut acc = T::zero();
    for (c, cd) in dual.cells.iter().enumerate() {
        for (k, piece) in cd.pieces.iter().enumerate() {
            acc += area_rule.integrate_fan(piece, |p| {
                let g = v.piece_gradient(dual, c, k, p);
                g.dot(g)
            });
        }
        for s in &cd.segments {
            let jump2 = line_rule.integrate_on(s.start, s.end, |p| {
                let j = v.piece_value(dual, c, s.inner, p) - v.piece_value(dual, c, s.outer, p);
                j * j
            });
            acc += jump2 / s.length;
        }
    }
    acc.sqrt()
}

/// `log(e_{k-1}/e_k) / log(h_{k-1}/h_k)` for `k ≥ 1`; the first entry is `None`.
pub fn convergence_order(sizes: &[f64], errors: &[f64]) -> Result<Vec<Option<f64>>, NormError> {
    if sizes.len() != errors.len() {
        return Err(NormError::LengthMismatch {
            errors: errors.len(),
            sizes: sizes.len(),
        });
    }
    if sizes.len() < 2 {
        return Err(NormError::TooFewRows(sizes.len()));
    }
    let mut out = vec![None];
    for k in 1..sizes.len() {
        let (prev, cur) = (sizes[k - 1], sizes[k]);
        if !(cur < prev) || cur <= 0.0 {
            return Err(NormError::NonMonotoneMeshSize { row: k, prev, cur });
        }
        out.push(Some((errors[k - 1] / errors[k]).ln() / (prev / cur).ln()));
    }
    Ok(out)
}

/// Formats like C's `%.6e` (two-digit exponent with explicit sign).
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.6e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub family: String,
    pub m: usize,
    pub n: usize,
    pub dofs: usize,
    pub h: f64,
    pub err_h1: f64,
    pub order_h1: Option<f64>,
    pub err_l2: Option<f64>,
    pub order_l2: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Fills the order columns, family by family, in row order.
    pub fn compute_orders(&mut self) -> Result<(), NormError> {
        let mut start = 0;
        while start < self.rows.len() {
            let fam = self.rows[start].family.clone();
            let end = start + self.rows[start..].iter().take_while(|r| r.family == fam).count();
            let rows = &mut self.rows[start..end];
            if rows.len() >= 2 {
                let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
                let e1: Vec<f64> = rows.iter().map(|r| r.err_h1).collect();
                for (r, o) in rows.iter_mut().zip(convergence_order(&h, &e1)?) {
                    r.order_h1 = o;
                }
                if rows.iter().all(|r| r.err_l2.is_some()) {
                    let e0: Vec<f64> = rows.iter().map(|r| r.err_l2.unwrap_or(f64::NAN)).collect();
                    for (r, o) in rows.iter_mut().zip(convergence_order(&h, &e0)?) {
                        r.order_l2 = o;
                    }
                }
            }
            start = end;
        }
        Ok(())
    }

    pub fn family(&self, name: &str) -> impl Iterator<Item = &ConvergenceRow> {
        let name = name.to_owned();
        self.rows.iter().filter(move |r| r.family == name)
    }

    pub fn to_csv(&self) -> String {
        let with_l2 = self.rows.iter().any(|r| r.err_l2.is_some());
        let mut out = String::from("family,M,N,n,h,err_h1,order_h1");
        if with_l2 {
            out.push_str(",err_l2,order_l2");
        }
        out.push('\n');
        let opt = |v: Option<f64>| v.map(format_sci).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r.family,
                r.m,
                r.n,
                r.dofs,
                format_sci(r.h),
                format_sci(r.err_h1),
                opt(r.order_h1)
            );
            if with_l2 {
                let _ = write!(out, ",{},{}", opt(r.err_l2), opt(r.order_l2));
            }
            out.push('\n');
        }
        out
    }
}

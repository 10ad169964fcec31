//! Sparse assembly and a direct solver backed by faer's sparse LU.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) is outside a {n}x{n} system")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("vector of length {found} given to a system of size {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular (first failure at row {row})")]
    Singular { row: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

/// Coordinate accumulator; duplicate entries are summed on [`SparseBuilder::build`].
#[derive(Clone, Debug)]
pub struct SparseBuilder<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
    rhs: Vec<T>,
    constrained: Vec<bool>,
}

impl<T: Real> SparseBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
            rhs: vec![T::zero(); n],
            constrained: vec![false; n],
        }
    }

    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut b = Self::new(n);
        b.entries.reserve(nnz);
        b
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn accumulate(&mut self, row: usize, col: usize, value: T) -> Result<(), LinalgError> {
        if row >= self.n || col >= self.n {
            return Err(LinalgError::IndexOutOfRange { row, col, n: self.n });
        }
        self.entries.push((row, col, value));
        Ok(())
    }

    pub fn add_rhs(&mut self, row: usize, value: T) -> Result<(), LinalgError> {
        if row >= self.n {
            return Err(LinalgError::IndexOutOfRange { row, col: 0, n: self.n });
        }
        self.rhs[row] += value;
        Ok(())
    }

    /// Marks `row` as a homogeneous Dirichlet row: identity, zero RHS.
    pub fn constrain(&mut self, row: usize) -> Result<(), LinalgError> {
        if row >= self.n {
            return Err(LinalgError::IndexOutOfRange {
                row,
                col: row,
                n: self.n,
            });
        }
        self.constrained[row] = true;
        Ok(())
    }

    /// Sorts and merges entries. Duplicates are summed in insertion order, so
    /// the result only depends on the sequence of calls.
    pub fn build(self) -> SparseSystem<T> {
        let Self {
            n,
            mut entries,
            mut rhs,
            constrained,
        } = self;
        entries.retain(|&(r, _, _)| !constrained[r]);
        for (r, &c) in constrained.iter().enumerate() {
            if c {
                entries.push((r, r, T::one()));
                rhs[r] = T::zero();
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("merged entry") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseSystem {
            n,
            row_ptr,
            col_idx,
            values,
            rhs,
            constrained,
        }
    }
}

/// Square CSR matrix with right-hand side and Dirichlet bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSystem<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
    pub rhs: Vec<T>,
    pub constrained: Vec<bool>,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Residual {
    /// `‖Ax−b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
    pub scaled_inf: f64,
    /// `‖Ax−b‖₂ / ‖b‖₂`, or the absolute norm when `b = 0`.
    pub relative_l2: f64,
}

impl<T: Real> SparseSystem<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        if x.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.n).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect())
    }

    /// `b − Ax` in `f64`.
    pub fn residual_vector(&self, x: &[T]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|r| {
                let ax: f64 = self.row(r).map(|(c, v)| v.to_f64_lossy() * x[c].to_f64_lossy()).sum();
                self.rhs[r].to_f64_lossy() - ax
            })
            .collect())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).map(|(_, v)| v.to_f64_lossy().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn residual(&self, x: &[T]) -> Result<Residual, LinalgError> {
        let r = self.residual_vector(x)?;
        let inf = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, |m, a| m.max(a.abs()));
        let r_inf = inf(&mut r.iter().copied());
        let x_inf = inf(&mut x.iter().map(|v| v.to_f64_lossy()));
        let b_inf = inf(&mut self.rhs.iter().map(|v| v.to_f64_lossy()));
        let denom = self.norm_inf() * x_inf + b_inf;
        let r2 = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        let b2 = self.rhs.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>().sqrt();
        Ok(Residual {
            scaled_inf: if denom > 0.0 { r_inf / denom } else { r_inf },
            relative_l2: if b2 > 0.0 { r2 / b2 } else { r2 },
        })
    }

    /// Checks sorted unique columns and the identity form of constrained rows.
    pub fn check_invariants(&self) -> Result<(), String> {
        for r in 0..self.n {
            let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("row {r}: columns not sorted and unique"));
            }
            if self.constrained[r] {
                let entries: Vec<_> = self.row(r).collect();
                if entries != [(r, T::one())] || self.rhs[r] != T::zero() {
                    return Err(format!("constrained row {r} is not an identity row"));
                }
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut a = vec![vec![T::zero(); self.n]; self.n];
        for (r, row) in a.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        a
    }

    /// One `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 32);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let _ = writeln!(out, "{r} {c} {:e}", v.to_f64_lossy());
            }
        }
        out
    }
}

const REFINEMENT_STEPS: usize = 4;

/// `b - Ax` with each row summed in double-double arithmetic.
fn compensated_residual(entries: &[Triplet<usize, usize, f64>], b: &[f64], x: &Col<f64>) -> Vec<f64> {
    let mut hi = b.to_vec();
    let mut lo = vec![0.0f64; b.len()];
    for t in entries {
        let p = -t.val * x[t.col];
        let p_err = (-t.val).mul_add(x[t.col], -p);
        let (s, e) = two_sum(hi[t.row], p);
        hi[t.row] = s;
        lo[t.row] += e + p_err;
    }
    hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Sparse LU with partial pivoting in `f64`, followed by iterative
/// refinement.
pub fn direct_solve<T: Real>(system: &SparseSystem<T>) -> Result<Vec<T>, LinalgError> {
    let n = system.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut triplets = Vec::with_capacity(system.nnz());
    for r in 0..n {
        for (c, v) in system.row(r) {
            triplets.push(Triplet::new(r, c, v.to_f64_lossy()));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
    let lu = a.sp_lu().map_err(|e| match e {
        LuError::SymbolicSingular { index } => LinalgError::Singular { row: index },
        other => LinalgError::Factorization(format!("{other:?}")),
    })?;
    let b: Vec<f64> = system.rhs.iter().map(|v| v.to_f64_lossy()).collect();
    let mut x = lu.solve(&Col::<f64>::from_fn(n, |i| b[i]));
    if let Some(row) = (0..n).find(|&i| !x[i].is_finite()) {
        return Err(LinalgError::Singular { row });
    }
    // Refinement against a residual accumulated in double-double, so the
    // correction is not swamped by the rounding of `Ax` itself.
    let mut last = f64::INFINITY;
    for _ in 0..REFINEMENT_STEPS {
        let r = compensated_residual(&triplets, &b, &x);
        let dx = lu.solve(&Col::<f64>::from_fn(n, |i| r[i]));
        let size = (0..n).fold(0.0f64, |m, i| m.max(dx[i].abs()));
        if !size.is_finite() || size >= last {
            break;
        }
        x += &dx;
        last = size;
    }
    Ok((0..n).map(|i| T::lit(x[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum() {
        let mut b = SparseBuilder::<f64>::new(2);
        b.accumulate(0, 0, 0.5).unwrap();
        b.accumulate(0, 0, 0.5).unwrap();
        let s = b.build();
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn out_of_range_rejected() {
        let mut b = SparseBuilder::<f64>::new(3);
        assert_eq!(
            b.accumulate(3, 0, 1.0).unwrap_err(),
            LinalgError::IndexOutOfRange { row: 3, col: 0, n: 3 }
        );
        assert!(b.accumulate(0, 7, 1.0).is_err());
        assert!(b.add_rhs(5, 1.0).is_err());
    }

    #[test]
    fn solves_small_systems() {
        let mut b = SparseBuilder::<f64>::new(2);
        for (r, c, v) in [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)] {
            b.accumulate(r, c, v).unwrap();
        }
        b.add_rhs(0, 3.0).unwrap();
        b.add_rhs(1, 3.0).unwrap();
        let s = b.build();
        let x = direct_solve(&s).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);

        let mut b = SparseBuilder::<f32>::new(3);
        for i in 0..3 {
            b.accumulate(i, i, 1.0).unwrap();
            b.add_rhs(i, i as f32 + 0.5).unwrap();
        }
        assert_eq!(direct_solve(&b.build()).unwrap(), vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn singular_reported() {
        let mut b = SparseBuilder::<f64>::new(2);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            b.accumulate(r, c, 1.0).unwrap();
        }
        b.add_rhs(0, 1.0).unwrap();
        assert!(matches!(direct_solve(&b.build()), Err(LinalgError::Singular { .. })));

        let mut b = SparseBuilder::<f64>::new(2);
        b.accumulate(0, 0, 1.0).unwrap();
        assert!(matches!(direct_solve(&b.build()), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn constrained_rows_become_identity() {
        let mut b = SparseBuilder::<f64>::new(3);
        for r in 0..3 {
            for c in 0..3 {
                b.accumulate(r, c, (1 + r + c) as f64).unwrap();
            }
            b.add_rhs(r, 1.0).unwrap();
        }
        b.constrain(1).unwrap();
        let s = b.build();
        s.check_invariants().unwrap();
        assert_eq!(s.row(1).collect::<Vec<_>>(), vec![(1, 1.0)]);
        assert_eq!(s.rhs[1], 0.0);
        assert_eq!(s.num_constrained(), 1);
    }

    #[test]
    fn coordinate_dump() {
        let mut b = SparseBuilder::<f64>::new(2);
        b.accumulate(1, 0, -0.25).unwrap();
        b.accumulate(0, 1, 2.0).unwrap();
        assert_eq!(b.build().to_coordinate_text(), "0 1 2e0\n1 0 -2.5e-1\n");
    }
}

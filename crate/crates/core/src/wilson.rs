//! Hybrid Wilson finite volume scheme on rectangle meshes (Poisson only).
//!
//! Reference square `[-1,1]²` with corners `P̂1 = (1,1)`, `P̂2 = (-1,1)`,
//! `P̂3 = (-1,-1)`, `P̂4 = (1,-1)`. Trial space: the four bilinear hats plus
//! the bubbles `(x²-1)/8`, `(y²-1)/8`. Test space: characteristic functions
//! of the quadrant holding each corner, plus the same two bubbles.
//!
//! Element matrices use the convention `A[l][m] = a(φ_l, ψ_m)` (row = trial),
//! so scattering into the global system transposes them.

use std::sync::OnceLock;

use nalgebra::{Matrix6, SymmetricEigen};

use crate::dual::{CellDual, DualKind, DualPartition, CORNER_SIGNS};
use crate::geometry::Point2;
use crate::linalg::{direct_solve, SparseBuilder, SparseSystem};
use crate::mesh::{RectCell, RectMesh};
use crate::norms::DualPieceField;
use crate::problem::{EllipticProblem, ExactSolution};
use crate::quadrature::{segment_rule, triangle_rule};
use crate::scalar::Real;
use crate::scheme::{map_cells, AssemblyOptions, SchemeError, SolutionField, SolveOutcome};

pub type Mat6<T> = [[T; 6]; 6];

/// `φ̂_k(x, y)`, `k ∈ 0..6`.
#[inline]
pub fn ref_basis<T: Real>(k: usize, p: Point2<T>) -> T {
    let q = T::lit(0.25);
    let o = T::one();
    let (x, y) = (p.x, p.y);
    match k {
        0 => q * (o + x) * (o + y),
        1 => q * (o - x) * (o + y),
        2 => q * (o - x) * (o - y),
        3 => q * (o + x) * (o - y),
        4 => (x * x - o) * T::lit(0.125),
        5 => (y * y - o) * T::lit(0.125),
        _ => panic!("Wilson basis index {k} out of range"),
    }
}

#[inline]
pub fn ref_basis_gradient<T: Real>(k: usize, p: Point2<T>) -> Point2<T> {
    let q = T::lit(0.25);
    let o = T::one();
    let (x, y) = (p.x, p.y);
    match k {
        0 => Point2::new(q * (o + y), q * (o + x)),
        1 => Point2::new(-q * (o + y), q * (o - x)),
        2 => Point2::new(-q * (o - y), -q * (o - x)),
        3 => Point2::new(q * (o - y), -q * (o + x)),
        4 => Point2::new(q * x, T::zero()),
        5 => Point2::new(T::zero(), q * y),
        _ => panic!("Wilson basis index {k} out of range"),
    }
}

/// `(∂xx φ̂_k, ∂yy φ̂_k)`; constant on the square.
#[inline]
pub fn ref_basis_second<T: Real>(k: usize) -> (T, T) {
    match k {
        4 => (T::lit(0.25), T::zero()),
        5 => (T::zero(), T::lit(0.25)),
        _ => (T::zero(), T::zero()),
    }
}

/// Reference corner `P̂_k`.
pub fn ref_corner<T: Real>(k: usize) -> Point2<T> {
    let (sx, sy) = CORNER_SIGNS[k];
    Point2::new(T::lit(sx), T::lit(sy))
}

/// Test function `ψ̂_m` evaluated at `p` as seen from quadrant `owner`.
#[inline]
pub fn ref_test<T: Real>(m: usize, owner: usize, p: Point2<T>) -> T {
    if m < 4 {
        if m == owner {
            T::one()
        } else {
            T::zero()
        }
    } else {
        ref_basis(m, p)
    }
}

#[inline]
fn ref_test_gradient<T: Real>(m: usize, p: Point2<T>) -> Point2<T> {
    if m < 4 {
        Point2::origin()
    } else {
        ref_basis_gradient(m, p)
    }
}

/// `η̂_i(v)` for values and pure second derivatives of `v` on the reference
/// square: corner values for `i < 4`, `∫ ∂_jj v` for `i = 4 + j`.
pub fn ref_functional<T: Real>(
    i: usize,
    value: impl Fn(Point2<T>) -> T,
    second: impl Fn(Point2<T>) -> (T, T),
    degree: usize,
) -> T {
    if i < 4 {
        return value(ref_corner(i));
    }
    let rule = triangle_rule::<T>(degree);
    rule.integrate_fan(&reference_square(), |p| {
        let (xx, yy) = second(p);
        if i == 4 {
            xx
        } else {
            yy
        }
    })
}

/// CCW loop of `[-1,1]²`.
pub fn reference_square<T: Real>() -> Vec<Point2<T>> {
    let o = T::one();
    vec![
        Point2::new(-o, -o),
        Point2::new(o, -o),
        Point2::new(o, o),
        Point2::new(-o, o),
    ]
}

/// CCW loop of the reference quadrant holding corner `k`.
pub fn reference_quadrant<T: Real>(k: usize) -> Vec<Point2<T>> {
    let (sx, sy) = CORNER_SIGNS[k];
    let (x, y) = (T::lit(sx), T::lit(sy));
    let z = T::zero();
    let mut poly = vec![
        Point2::new(z, z),
        Point2::new(x, z),
        Point2::new(x, y),
        Point2::new(z, y),
    ];
    if sx * sy < 0.0 {
        poly.reverse();
    }
    poly
}

/// Evaluates `a_dir(φ̂_l, ψ̂_m)`, `dir ∈ {0, 1}` for `x₁`/`x₂`.
///
/// Area terms over each quadrant; line terms over the half-segment of the
/// center line `x_dir = 0` bounding the quadrant, with the quadrant's outward
/// normal and the test value taken on that quadrant.
fn reference_form(dir: usize, l: usize, m: usize, area_degree: usize, line_degree: usize) -> f64 {
    let area_rule = triangle_rule::<f64>(area_degree);
    let line_rule = segment_rule::<f64>(line_degree);
    let comp = |g: Point2<f64>| if dir == 0 { g.x } else { g.y };
    let mut acc = 0.0;
    for (q, &(sx, sy)) in CORNER_SIGNS.iter().enumerate() {
        let quad = reference_quadrant::<f64>(q);
        acc += area_rule.integrate_fan(&quad, |p| {
            comp(ref_basis_gradient(l, p)) * comp(ref_test_gradient(m, p))
        });
        let (end, n_dir) = if dir == 0 {
            (Point2::new(0.0, sy), -sx)
        } else {
            (Point2::new(sx, 0.0), -sy)
        };
        acc -= line_rule.integrate_on(Point2::origin(), end, |p| {
            ref_test(m, q, p) * comp(ref_basis_gradient(l, p)) * n_dir
        });
    }
    acc
}

/// `(A₁, A₂)` by quadrature on the reference dual partition.
pub fn compute_reference_matrices(area_degree: usize, line_degree: usize) -> (Mat6<f64>, Mat6<f64>) {
    let mut a1 = [[0.0; 6]; 6];
    let mut a2 = [[0.0; 6]; 6];
    for l in 0..6 {
        for m in 0..6 {
            a1[l][m] = reference_form(0, l, m, area_degree, line_degree);
            a2[l][m] = reference_form(1, l, m, area_degree, line_degree);
        }
    }
    (a1, a2)
}

static REFERENCE: OnceLock<(Mat6<f64>, Mat6<f64>)> = OnceLock::new();

/// Cached `(A₁, A₂)` computed once in `f64`.
pub fn reference_matrices<T: Real>() -> (Mat6<T>, Mat6<T>) {
    let (a1, a2) = REFERENCE.get_or_init(|| compute_reference_matrices(4, 3));
    (cast6(a1), cast6(a2))
}

fn cast6<T: Real>(a: &Mat6<f64>) -> Mat6<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| T::lit(a[i][j])))
}

/// `r A₁ + A₂ / r`.
pub fn element_stiffness<T: Real>(r: T) -> Result<Mat6<T>, SchemeError> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(SchemeError::InvalidShape(r.to_f64_lossy()));
    }
    let (a1, a2) = reference_matrices::<T>();
    Ok(combine(&a1, &a2, r))
}

fn combine<T: Real>(a1: &Mat6<T>, a2: &Mat6<T>, r: T) -> Mat6<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| r * a1[i][j] + a2[i][j] / r))
}

pub fn symmetrize(a: &Mat6<f64>) -> Mat6<f64> {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (a[i][j] + a[j][i])))
}

pub const E_VECTOR: [f64; 6] = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0];

/// `E = e eᵀ / 4`.
pub fn e_matrix() -> Mat6<f64> {
    std::array::from_fn(|i| std::array::from_fn(|j| E_VECTOR[i] * E_VECTOR[j] / 4.0))
}

/// `H(r) = r Ã₁ + Ã₂ / r + E` built from the given reference pair.
pub fn h_matrix_with(a1: &Mat6<f64>, a2: &Mat6<f64>, r: f64) -> Mat6<f64> {
    let s = combine(&symmetrize(a1), &symmetrize(a2), r);
    let e = e_matrix();
    std::array::from_fn(|i| std::array::from_fn(|j| s[i][j] + e[i][j]))
}

pub fn h_matrix(r: f64) -> Mat6<f64> {
    let (a1, a2) = reference_matrices::<f64>();
    h_matrix_with(&a1, &a2, r)
}

/// Ascending eigenvalues of the symmetric part of `a`.
pub fn symmetric_eigenvalues(a: &Mat6<f64>) -> [f64; 6] {
    let m = Matrix6::from_fn(|i, j| 0.5 * (a[i][j] + a[j][i]));
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    std::array::from_fn(|i| ev[i])
}

/// `min_K λ_min(H(r_K))`.
pub fn ellipticity_certificate<T: Real>(mesh: &RectMesh<T>) -> f64 {
    let mut seen: Vec<(u64, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    for c in &mesh.cells {
        let r = c.shape().to_f64_lossy();
        let lam = match seen.iter().find(|(b, _)| *b == r.to_bits()) {
            Some(&(_, l)) => l,
            None => {
                let l = symmetric_eigenvalues(&h_matrix(r))[0];
                seen.push((r.to_bits(), l));
                l
            }
        };
        best = best.min(lam);
    }
    best
}

/// `(1/12) min{λ₁, 1/λ₂, 1}` with `λ₁ = min r_K`, `λ₂ = max r_K`.
pub fn ellipticity_lower_bound<T: Real>(mesh: &RectMesh<T>) -> f64 {
    let (lo, hi) = mesh.shape_bounds();
    let (lo, hi) = (lo.to_f64_lossy(), hi.to_f64_lossy());
    lo.min(1.0 / hi).min(1.0) / 12.0
}

/// Vertex values first, then two moment DOFs per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct WilsonDofMap {
    pub n: usize,
    pub num_vertices: usize,
    pub boundary: Vec<bool>,
    pub cell_dofs: Vec<[usize; 6]>,
}

impl WilsonDofMap {
    pub fn new<T: Real>(mesh: &RectMesh<T>) -> Self {
        let nv = mesh.num_vertices();
        let cell_dofs = mesh
            .cells
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let v = c.vertices;
                [v[0], v[1], v[2], v[3], nv + 2 * k, nv + 2 * k + 1]
            })
            .collect();
        let mut boundary = mesh.vertex_on_boundary.clone();
        boundary.resize(nv + 2 * mesh.num_cells(), false);
        Self {
            n: nv + 2 * mesh.num_cells(),
            num_vertices: nv,
            boundary,
            cell_dofs,
        }
    }

    pub fn boundary_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Discrete Wilson function with coefficients laid out as in [`WilsonDofMap`].
#[derive(Clone, Debug)]
pub struct WilsonField<'m, T> {
    pub mesh: &'m RectMesh<T>,
    pub dofs: WilsonDofMap,
    pub coefficients: Vec<T>,
}

impl<'m, T: Real> WilsonField<'m, T> {
    pub fn new(mesh: &'m RectMesh<T>, coefficients: Vec<T>) -> Result<Self, SchemeError> {
        let dofs = WilsonDofMap::new(mesh);
        if coefficients.len() != dofs.n {
            return Err(SchemeError::CoefficientLength {
                expected: dofs.n,
                found: coefficients.len(),
            });
        }
        Ok(Self {
            mesh,
            dofs,
            coefficients,
        })
    }

    pub fn zero(mesh: &'m RectMesh<T>) -> Self {
        let n = WilsonDofMap::new(mesh).n;
        Self::new(mesh, vec![T::zero(); n]).expect("length matches")
    }

    pub fn local_coefficients(&self, cell: usize) -> [T; 6] {
        let g = self.dofs.cell_dofs[cell];
        std::array::from_fn(|k| self.coefficients[g[k]])
    }

    fn eval_local(&self, cell: usize, p: Point2<T>, range: std::ops::Range<usize>) -> T {
        let c = &self.mesh.cells[cell];
        let xi = c.inverse_map(p);
        let coef = self.local_coefficients(cell);
        range.map(|k| coef[k] * ref_basis(k, xi)).sum()
    }

    fn grad_local(&self, cell: usize, p: Point2<T>, range: std::ops::Range<usize>) -> Point2<T> {
        let c = &self.mesh.cells[cell];
        let xi = c.inverse_map(p);
        let coef = self.local_coefficients(cell);
        let g = range.fold(Point2::origin(), |g, k| g + ref_basis_gradient(k, xi) * coef[k]);
        Point2::new(g.x / c.h1, g.y / c.h2)
    }

    /// `w = w₁ + w₂`: bilinear vertex part and cell-bubble part.
    pub fn split_conforming(&self) -> (Self, Self) {
        let nv = self.dofs.num_vertices;
        let mut w1 = self.clone();
        let mut w2 = self.clone();
        w1.coefficients[nv..].iter_mut().for_each(|c| *c = T::zero());
        w2.coefficients[..nv].iter_mut().for_each(|c| *c = T::zero());
        (w1, w2)
    }

    pub fn moment_value(&self, cell: usize, p: Point2<T>) -> T {
        self.eval_local(cell, p, 4..6)
    }

    pub fn moment_gradient(&self, cell: usize, p: Point2<T>) -> Point2<T> {
        self.grad_local(cell, p, 4..6)
    }
}

impl<T: Real> SolutionField<T> for WilsonField<'_, T> {
    fn num_cells(&self) -> usize {
        self.mesh.num_cells()
    }

    fn cell_polygon(&self, cell: usize) -> Vec<Point2<T>> {
        self.mesh.cells[cell].polygon().to_vec()
    }

    fn value(&self, cell: usize, p: Point2<T>) -> T {
        self.eval_local(cell, p, 0..6)
    }

    fn gradient(&self, cell: usize, p: Point2<T>) -> Point2<T> {
        self.grad_local(cell, p, 0..6)
    }
}

/// `Πw`: vertex values on their control volumes plus the cell bubbles.
impl<T: Real> DualPieceField<T> for WilsonField<'_, T> {
    fn piece_value(&self, dual: &DualPartition<T>, cell: usize, local: usize, p: Point2<T>) -> T {
        self.coefficients[dual.cells[cell].volumes[local]] + self.moment_value(cell, p)
    }

    fn piece_gradient(&self, _dual: &DualPartition<T>, cell: usize, _local: usize, p: Point2<T>) -> Point2<T> {
        self.moment_gradient(cell, p)
    }
}

/// Physical basis `φ_{k,K} = φ̂_k ∘ F_K⁻¹`.
#[inline]
pub fn cell_basis<T: Real>(cell: &RectCell<T>, k: usize, p: Point2<T>) -> T {
    ref_basis(k, cell.inverse_map(p))
}

/// `P_T v`: vertex values and `η_{4+j,K}(v) = η̂_{4+j}(v ∘ F_K)`.
pub fn interpolate_wilson<'m, T: Real>(
    exact: &ExactSolution<T>,
    mesh: &'m RectMesh<T>,
    degree: usize,
) -> WilsonField<'m, T> {
    let dofs = WilsonDofMap::new(mesh);
    let mut coefficients = vec![T::zero(); dofs.n];
    for (v, &p) in mesh.vertices.iter().enumerate() {
        coefficients[v] = exact.value_at(p);
    }
    let rule = triangle_rule::<T>(degree);
    for (k, c) in mesh.cells.iter().enumerate() {
        let poly = c.polygon();
        let ixx = rule.integrate_fan(&poly, |p| exact.hessian_at(p)[0][0]);
        let iyy = rule.integrate_fan(&poly, |p| exact.hessian_at(p)[1][1]);
        coefficients[dofs.cell_dofs[k][4]] = ixx * c.h1 / c.h2;
        coefficients[dofs.cell_dofs[k][5]] = iyy * c.h2 / c.h1;
    }
    WilsonField {
        mesh,
        dofs,
        coefficients,
    }
}

/// Direct physical-space evaluation of `a_K(φ_{l,K}, ψ_{m,K})` on the
/// pieces and segments of `dual_cell`; the oracle for `element_stiffness`.
pub fn physical_element_matrix<T: Real>(cell: &RectCell<T>, dual_cell: &CellDual<T>, degree: usize) -> Mat6<T> {
    let area_rule = triangle_rule::<T>(degree);
    let line_rule = segment_rule::<T>(degree);
    let grad = |k: usize, p: Point2<T>| {
        let g = ref_basis_gradient(k, cell.inverse_map(p));
        Point2::new(g.x / cell.h1, g.y / cell.h2)
    };
    let test = |m: usize, piece: usize, p: Point2<T>| ref_test(m, piece, cell.inverse_map(p));
    let test_grad = |m: usize, p: Point2<T>| if m < 4 { Point2::origin() } else { grad(m, p) };
    std::array::from_fn(|l| {
        std::array::from_fn(|m| {
            let mut acc = T::zero();
            for piece in &dual_cell.pieces {
                acc += area_rule.integrate_fan(piece, |p| grad(l, p).dot(test_grad(m, p)));
            }
            for s in &dual_cell.segments {
                acc -= line_rule.integrate_on(s.start, s.end, |p| {
                    (test(m, s.inner, p) - test(m, s.outer, p)) * grad(l, p).dot(s.normal)
                });
            }
            acc
        })
    })
}

struct WilsonBlock<T> {
    matrix: Mat6<T>,
    rhs: [T; 6],
}

/// Assembles the hybrid Wilson system for `-Δu = f`.
pub fn assemble_wilson<T: Real>(
    problem: &EllipticProblem<T>,
    mesh: &RectMesh<T>,
    dual: &DualPartition<T>,
    options: &AssemblyOptions,
) -> Result<SparseSystem<T>, SchemeError> {
    options.check()?;
    if !problem.is_sampled_poisson(8) {
        return Err(SchemeError::UnsupportedCoefficients(
            "the Wilson scheme needs a = I and b = 0".into(),
        ));
    }
    dual.expect_kind(DualKind::Wilson, mesh.num_cells())?;
    let dofs = WilsonDofMap::new(mesh);
    let (a1, a2) = reference_matrices::<T>();
    let rule = triangle_rule::<T>(options.area_degree);
    let blocks = map_cells(mesh.num_cells(), options.threads, |k| {
        let c = &mesh.cells[k];
        let matrix = combine(&a1, &a2, c.shape());
        let cd = &dual.cells[k];
        let poly = c.polygon();
        let rhs = std::array::from_fn(|m| {
            if m < 4 {
                rule.integrate_fan(&cd.pieces[m], |p| problem.source_at(p))
            } else {
                rule.integrate_fan(&poly, |p| problem.source_at(p) * cell_basis(c, m, p))
            }
        });
        WilsonBlock { matrix, rhs }
    })?;
    let mut builder = SparseBuilder::with_capacity(dofs.n, 36 * mesh.num_cells());
    for (k, block) in blocks.iter().enumerate() {
        let g = dofs.cell_dofs[k];
        for m in 0..6 {
            for l in 0..6 {
                builder.accumulate(g[m], g[l], block.matrix[l][m])?;
            }
            builder.add_rhs(g[m], block.rhs[m])?;
        }
    }
    for d in dofs.boundary_dofs() {
        builder.constrain(d)?;
    }
    Ok(builder.build())
}

pub fn solve_wilson<'m, T: Real>(
    system: &SparseSystem<T>,
    mesh: &'m RectMesh<T>,
) -> Result<SolveOutcome<WilsonField<'m, T>>, SchemeError> {
    let mut x = direct_solve(system)?;
    let residual = system.residual(&x)?;
    let dofs = WilsonDofMap::new(mesh);
    for d in dofs.boundary_dofs() {
        x[d] = T::zero();
    }
    Ok(SolveOutcome {
        field: WilsonField::new(mesh, x)?,
        residual,
    })
}

/// Per vertex control volume: outward flux of `∇u` plus `∫ f`.
pub fn wilson_conservation_residual<T: Real>(
    u: &WilsonField<'_, T>,
    problem: &EllipticProblem<T>,
    dual: &DualPartition<T>,
    options: &AssemblyOptions,
) -> Result<Vec<T>, SchemeError> {
    options.check()?;
    dual.expect_kind(DualKind::Wilson, u.mesh.num_cells())?;
    let area_rule = triangle_rule::<T>(options.area_degree);
    let line_rule = segment_rule::<T>(options.line_degree);
    let mut res = vec![T::zero(); dual.num_volumes()];
    for (k, cd) in dual.cells.iter().enumerate() {
        for s in &cd.segments {
            let flux = line_rule.integrate_on(s.start, s.end, |p| u.gradient(k, p).dot(s.normal));
            res[cd.volumes[s.inner]] += flux;
            res[cd.volumes[s.outer]] -= flux;
        }
        for (i, piece) in cd.pieces.iter().enumerate() {
            res[cd.volumes[i]] += area_rule.integrate_fan(piece, |p| problem.source_at(p));
        }
    }
    Ok(res)
}

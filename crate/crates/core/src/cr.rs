//! Crouzeix–Raviart finite volume scheme on triangulations.
//!
//! Trial functions are piecewise linear and continuous at interior edge
//! midpoints; test functions are characteristic functions of the
//! barycentric control volumes around those midpoints. The DOF of an edge
//! is its midpoint value, so the trial-to-test map is the identity on
//! coefficient vectors.

use crate::dual::{DualKind, DualPartition};
use crate::geometry::Point2;
use crate::linalg::{direct_solve, SparseBuilder, SparseSystem};
use crate::mesh::TriMesh;
use crate::problem::EllipticProblem;
use crate::quadrature::{segment_rule, triangle_rule};
use crate::scalar::Real;
use crate::scheme::{map_cells, AssemblyOptions, PiecewiseConstant, SchemeError, SolutionField, SolveOutcome};

/// `c + g · p`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AffineFn<T> {
    pub constant: T,
    pub gradient: Point2<T>,
}

impl<T: Real> AffineFn<T> {
    #[inline]
    pub fn eval(&self, p: Point2<T>) -> T {
        self.constant + self.gradient.dot(p)
    }
}

/// Edge DOFs: global DOF `e` is the midpoint value on edge `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct CRDofMap {
    pub n: usize,
    pub boundary: Vec<bool>,
    /// Local DOF `k` of a triangle sits on its local edge `k`.
    pub cell_dofs: Vec<[usize; 3]>,
}

impl CRDofMap {
    pub fn new<T: Real>(mesh: &TriMesh<T>) -> Self {
        Self {
            n: mesh.num_edges(),
            boundary: mesh.edges.iter().map(|e| e.on_boundary).collect(),
            cell_dofs: mesh.triangles.iter().map(|t| t.edges).collect(),
        }
    }

    pub fn boundary_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// The three affine functions on triangle `t` that are 1 at one edge
/// midpoint and 0 at the other two, ordered by local edge.
pub fn cr_local_basis<T: Real>(mesh: &TriMesh<T>, t: usize) -> [AffineFn<T>; 3] {
    let p = mesh.triangle_points(t);
    let two_area = mesh.triangles[t].area * T::lit(2.0);
    let two = T::lit(2.0);
    // Edge k is opposite vertex k+2, and the basis is 1 - 2 λ_{k+2}.
    std::array::from_fn(|k| {
        let opp = (k + 2) % 3;
        let (pj, pl) = (p[(opp + 1) % 3], p[(opp + 2) % 3]);
        let d = pl - pj;
        let grad_lambda = Point2::new(-d.y, d.x) * (T::one() / two_area);
        let lambda_const = -grad_lambda.dot(pj);
        AffineFn {
            constant: T::one() - two * lambda_const,
            gradient: grad_lambda * (-two),
        }
    })
}

/// Discrete C-R function.
#[derive(Clone, Debug)]
pub struct CrField<'m, T> {
    pub mesh: &'m TriMesh<T>,
    pub coefficients: Vec<T>,
    basis: Vec<[AffineFn<T>; 3]>,
}

impl<'m, T: Real> CrField<'m, T> {
    pub fn new(mesh: &'m TriMesh<T>, coefficients: Vec<T>) -> Result<Self, SchemeError> {
        if coefficients.len() != mesh.num_edges() {
            return Err(SchemeError::CoefficientLength {
                expected: mesh.num_edges(),
                found: coefficients.len(),
            });
        }
        let basis = (0..mesh.num_triangles()).map(|t| cr_local_basis(mesh, t)).collect();
        Ok(Self {
            mesh,
            coefficients,
            basis,
        })
    }

    pub fn zero(mesh: &'m TriMesh<T>) -> Self {
        Self::new(mesh, vec![T::zero(); mesh.num_edges()]).expect("length matches")
    }

    pub fn local_coefficients(&self, t: usize) -> [T; 3] {
        let e = self.mesh.triangles[t].edges;
        [
            self.coefficients[e[0]],
            self.coefficients[e[1]],
            self.coefficients[e[2]],
        ]
    }

    /// Constant gradient on triangle `t`.
    pub fn cell_gradient(&self, t: usize) -> Point2<T> {
        let c = self.local_coefficients(t);
        let b = &self.basis[t];
        (0..3).fold(Point2::origin(), |g, k| g + b[k].gradient * c[k])
    }
}

impl<T: Real> SolutionField<T> for CrField<'_, T> {
    fn num_cells(&self) -> usize {
        self.mesh.num_triangles()
    }

    fn cell_polygon(&self, cell: usize) -> Vec<Point2<T>> {
        self.mesh.triangle_points(cell).to_vec()
    }

    fn value(&self, cell: usize, p: Point2<T>) -> T {
        let c = self.local_coefficients(cell);
        let b = &self.basis[cell];
        (0..3).map(|k| b[k].eval(p) * c[k]).sum()
    }

    fn gradient(&self, cell: usize, _p: Point2<T>) -> Point2<T> {
        self.cell_gradient(cell)
    }
}

/// Midpoint interpolant of `v`.
pub fn interpolate_cr<'m, T: Real>(mesh: &'m TriMesh<T>, v: impl Fn(Point2<T>) -> T) -> CrField<'m, T> {
    let coefficients = mesh
        .edges
        .iter()
        .zip(&mesh.edge_midpoints)
        .map(|(e, &m)| if e.on_boundary { T::zero() } else { v(m) })
        .collect();
    CrField::new(mesh, coefficients).expect("length matches")
}

/// Test function sharing the coefficients of `w`, one value per volume.
pub fn pi_cr<T: Real>(w: &CrField<'_, T>) -> PiecewiseConstant<T> {
    PiecewiseConstant {
        values: w.coefficients.clone(),
    }
}

/// Local 3x3 block and load vector of one triangle; rows are test pieces.
struct LocalBlock<T> {
    matrix: [[T; 3]; 3],
    rhs: [T; 3],
}

fn local_cr_block<T: Real>(
    problem: &EllipticProblem<T>,
    mesh: &TriMesh<T>,
    dual: &DualPartition<T>,
    t: usize,
    options: &AssemblyOptions,
    with_reaction: bool,
) -> LocalBlock<T> {
    let area_rule = triangle_rule::<T>(options.area_degree);
    let line_rule = segment_rule::<T>(options.line_degree);
    let basis = cr_local_basis(mesh, t);
    let cd = &dual.cells[t];
    let mut matrix = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for (i, piece) in cd.pieces.iter().enumerate() {
        rhs[i] = area_rule.integrate_fan(piece, |p| problem.source_at(p));
        if with_reaction {
            for j in 0..3 {
                matrix[i][j] += area_rule.integrate_fan(piece, |p| problem.reaction_at(p) * basis[j].eval(p));
            }
        }
    }
    for s in &cd.segments {
        for j in 0..3 {
            let g = basis[j].gradient;
            let flux = line_rule.integrate_on(s.start, s.end, |p| problem.flux(p, g).dot(s.normal));
            matrix[s.inner][j] -= flux;
            matrix[s.outer][j] += flux;
        }
    }
    LocalBlock { matrix, rhs }
}

/// Assembles the Petrov–Galerkin system; boundary rows become identity rows.
pub fn assemble_cr<T: Real>(
    problem: &EllipticProblem<T>,
    mesh: &TriMesh<T>,
    dual: &DualPartition<T>,
    options: &AssemblyOptions,
) -> Result<SparseSystem<T>, SchemeError> {
    options.check()?;
    dual.expect_kind(DualKind::CrouzeixRaviart, mesh.num_triangles())?;
    if dual.num_volumes() != mesh.num_edges() {
        return Err(SchemeError::Dual(crate::dual::DualError::Invariant(format!(
            "{} volumes for {} edges",
            dual.num_volumes(),
            mesh.num_edges()
        ))));
    }
    let dofs = CRDofMap::new(mesh);
    let with_reaction = !problem.is_sampled_poisson(4);
    let blocks = map_cells(mesh.num_triangles(), options.threads, |t| {
        local_cr_block(problem, mesh, dual, t, options, with_reaction)
    })?;
    let mut builder = SparseBuilder::with_capacity(dofs.n, 9 * mesh.num_triangles());
    for (t, block) in blocks.iter().enumerate() {
        let g = dofs.cell_dofs[t];
        for i in 0..3 {
            for j in 0..3 {
                builder.accumulate(g[i], g[j], block.matrix[i][j])?;
            }
            builder.add_rhs(g[i], block.rhs[i])?;
        }
    }
    for d in dofs.boundary_dofs() {
        builder.constrain(d)?;
    }
    Ok(builder.build())
}

pub fn solve_cr<'m, T: Real>(
    system: &SparseSystem<T>,
    mesh: &'m TriMesh<T>,
) -> Result<SolveOutcome<CrField<'m, T>>, SchemeError> {
    let mut x = direct_solve(system)?;
    let residual = system.residual(&x)?;
    for (xi, e) in x.iter_mut().zip(&mesh.edges) {
        if e.on_boundary {
            *xi = T::zero();
        }
    }
    Ok(SolveOutcome {
        field: CrField::new(mesh, x)?,
        residual,
    })
}

/// Per control volume: outward flux of `a∇u` plus `∫ f − ∫ b u`. Vanishes on
/// interior volumes exactly when `u` satisfies the scheme.
pub fn local_conservation_residual<T: Real>(
    u: &CrField<'_, T>,
    problem: &EllipticProblem<T>,
    dual: &DualPartition<T>,
    options: &AssemblyOptions,
) -> Result<Vec<T>, SchemeError> {
    options.check()?;
    dual.expect_kind(DualKind::CrouzeixRaviart, u.mesh.num_triangles())?;
    let area_rule = triangle_rule::<T>(options.area_degree);
    let line_rule = segment_rule::<T>(options.line_degree);
    let with_reaction = !problem.is_sampled_poisson(4);
    let mut res = vec![T::zero(); dual.num_volumes()];
    for (t, cd) in dual.cells.iter().enumerate() {
        let g = u.cell_gradient(t);
        for s in &cd.segments {
            let flux = line_rule.integrate_on(s.start, s.end, |p| problem.flux(p, g).dot(s.normal));
            res[cd.volumes[s.inner]] += flux;
            res[cd.volumes[s.outer]] -= flux;
        }
        for (i, piece) in cd.pieces.iter().enumerate() {
            let mut r = area_rule.integrate_fan(piece, |p| problem.source_at(p));
            if with_reaction {
                r -= area_rule.integrate_fan(piece, |p| problem.reaction_at(p) * u.value(t, p));
            }
            res[cd.volumes[i]] += r;
        }
    }
    Ok(res)
}

//! Structured primal partitions of a rectangle: uniform-diagonal
//! triangulations and tensor-product rectangle meshes.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{triangle_signed_area, Point2, Rect};
use crate::norms::format_sci;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh subdivision counts must be positive, got ({m}, {n})")]
    ZeroSubdivision { m: usize, n: usize },
    #[error("domain has zero or negative extent")]
    DegenerateDomain,
    #[error("breakpoints are not strictly increasing")]
    NonIncreasingBreakpoints,
    #[error("mesh invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriEdge {
    pub vertices: [usize; 2],
    /// First incident triangle, and the second one for interior edges.
    pub triangles: (usize, Option<usize>),
    pub on_boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangle<T> {
    /// Counter-clockwise vertex indices.
    pub vertices: [usize; 3],
    /// `edges[k]` joins `vertices[k]` and `vertices[(k + 1) % 3]`.
    pub edges: [usize; 3],
    pub barycenter: Point2<T>,
    pub area: T,
    /// Diameter `h_K` (longest side).
    pub diameter: T,
    /// Diameter of the inscribed circle.
    pub inscribed_diameter: T,
    pub min_angle: T,
}

/// Conforming triangulation with edge adjacency.
#[derive(Clone, Debug)]
pub struct TriMesh<T> {
    pub domain: Rect<T>,
    pub vertices: Vec<Point2<T>>,
    pub triangles: Vec<Triangle<T>>,
    pub edges: Vec<TriEdge>,
    pub edge_midpoints: Vec<Point2<T>>,
    /// Subdivision counts `(M, N)` the mesh was generated from.
    pub grid: (usize, usize),
}

/// Splits `domain` into `m x n` equal rectangles (m along x) and cuts each
/// along its lower-left to upper-right diagonal.
pub fn build_structured_tri_mesh<T: Real>(m: usize, n: usize, domain: Rect<T>) -> Result<TriMesh<T>, MeshError> {
    if m == 0 || n == 0 {
        return Err(MeshError::ZeroSubdivision { m, n });
    }
    if !domain.is_nondegenerate() {
        return Err(MeshError::DegenerateDomain);
    }
    let xs = uniform_breakpoints(domain.x_min, domain.x_max, m);
    let ys = uniform_breakpoints(domain.y_min, domain.y_max, n);
    let mut vertices = Vec::with_capacity((m + 1) * (n + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push(Point2::new(x, y));
        }
    }
    let vid = |i: usize, j: usize| j * (m + 1) + i;
    let mut tri_vertices = Vec::with_capacity(2 * m * n);
    for j in 0..n {
        for i in 0..m {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            tri_vertices.push([a, b, c]);
            tri_vertices.push([a, c, d]);
        }
    }
    let mut mesh = TriMesh::from_triangles(domain, vertices, &tri_vertices)?;
    mesh.grid = (m, n);
    Ok(mesh)
}

fn uniform_breakpoints<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let step = (hi - lo) / T::from_count(n);
    (0..=n)
        .map(|k| if k == n { hi } else { lo + step * T::from_count(k) })
        .collect()
}

impl<T: Real> TriMesh<T> {
    /// Builds adjacency and per-triangle metrics; triangles are reoriented CCW.
    pub fn from_triangles(
        domain: Rect<T>,
        vertices: Vec<Point2<T>>,
        triangles: &[[usize; 3]],
    ) -> Result<Self, MeshError> {
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<TriEdge> = Vec::new();
        let mut tris = Vec::with_capacity(triangles.len());
        for (t, &raw) in triangles.iter().enumerate() {
            let mut v = raw;
            if v.iter().any(|&i| i >= vertices.len()) {
                return Err(MeshError::Invariant(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let (a, b, c) = (vertices[v[0]], vertices[v[1]], vertices[v[2]]);
            let mut area = triangle_signed_area(a, b, c);
            if area < T::zero() {
                v.swap(1, 2);
                area = -area;
            }
            if area <= T::zero() {
                return Err(MeshError::Invariant(format!("triangle {t} has zero area")));
            }
            let mut local_edges = [0usize; 3];
            for k in 0..3 {
                let (p, q) = (v[k], v[(k + 1) % 3]);
                let key = (p.min(q), p.max(q));
                let id = match edge_ids.get(&key) {
                    Some(&id) => {
                        let e = &mut edges[id];
                        if e.triangles.1.is_some() {
                            return Err(MeshError::Invariant(format!(
                                "edge ({}, {}) shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        e.triangles.1 = Some(t);
                        id
                    }
                    None => {
                        let id = edges.len();
                        edges.push(TriEdge {
                            vertices: [key.0, key.1],
                            triangles: (t, None),
                            on_boundary: true,
                        });
                        edge_ids.insert(key, id);
                        id
                    }
                };
                local_edges[k] = id;
            }
            let pts = [vertices[v[0]], vertices[v[1]], vertices[v[2]]];
            tris.push(Triangle {
                vertices: v,
                edges: local_edges,
                barycenter: crate::geometry::centroid_of_points(&pts),
                area,
                diameter: triangle_diameter(&pts),
                inscribed_diameter: inscribed_diameter(&pts, area),
                min_angle: triangle_min_angle(&pts),
            });
        }
        for e in &mut edges {
            e.on_boundary = e.triangles.1.is_none();
        }
        let edge_midpoints = edges
            .iter()
            .map(|e| vertices[e.vertices[0]].midpoint(vertices[e.vertices[1]]))
            .collect();
        Ok(Self {
            domain,
            vertices,
            triangles: tris,
            edges,
            edge_midpoints,
            grid: (0, 0),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2<T>; 3] {
        let v = self.triangles[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    /// `V - E + F`; equals 1 for a triangulated disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    /// Minimum interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> T {
        self.triangles.iter().map(|t| t.min_angle).fold(T::infinity(), T::min)
    }

    /// Largest triangle diameter.
    pub fn mesh_size(&self) -> T {
        self.triangles.iter().map(|t| t.diameter).fold(T::zero(), T::max)
    }

    /// Smallest `ϱ_K / h_K` over the mesh.
    pub fn regularity(&self) -> T {
        self.triangles
            .iter()
            .map(|t| t.inscribed_diameter / t.diameter)
            .fold(T::infinity(), T::min)
    }

    pub fn total_area(&self) -> T {
        self.triangles.iter().map(|t| t.area).sum()
    }

    /// Checks positivity, edge adjacency, the Euler relation and conformity.
    pub fn check_invariants(&self) -> Result<(), MeshError> {
        for k in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(k);
            if triangle_signed_area(a, b, c) <= T::zero() {
                return Err(MeshError::Invariant(format!("triangle {k} not CCW")));
            }
        }
        for (k, e) in self.edges.iter().enumerate() {
            let expected_boundary = e.triangles.1.is_none();
            if e.on_boundary != expected_boundary {
                return Err(MeshError::Invariant(format!("edge {k} boundary flag inconsistent")));
            }
            let mid = self.edge_midpoints[k];
            let lies_on_boundary = self.domain.on_boundary(mid, T::lit(1e-12));
            if e.on_boundary != lies_on_boundary {
                return Err(MeshError::Invariant(format!(
                    "edge {k}: {} incident triangle(s) but midpoint boundary test says {}",
                    if e.on_boundary { 1 } else { 2 },
                    lies_on_boundary
                )));
            }
        }
        if self.euler_characteristic() != 1 {
            return Err(MeshError::Invariant(format!(
                "Euler characteristic {} != 1",
                self.euler_characteristic()
            )));
        }
        // Hanging nodes: a vertex strictly inside some edge. Quadratic, so
        // only done on small meshes.
        if self.vertices.len() > 4096 {
            return Ok(());
        }
        let tol = T::lit(1e-12);
        for (k, e) in self.edges.iter().enumerate() {
            let (p, q) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
            let len = (q - p).norm();
            for (vi, &v) in self.vertices.iter().enumerate() {
                if vi == e.vertices[0] || vi == e.vertices[1] {
                    continue;
                }
                let along = (v - p).dot(q - p) / (len * len);
                let off = (q - p).cross(v - p).abs() / len;
                if off <= tol * len && along > tol && along < T::one() - tol {
                    return Err(MeshError::Invariant(format!("vertex {vi} hangs on edge {k}")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump: `v x y`, `t i j k`, `e i j boundary_flag`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(
                out,
                "v {} {}",
                format_sci(v.x.to_f64_lossy()),
                format_sci(v.y.to_f64_lossy())
            );
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2]);
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", e.vertices[0], e.vertices[1], u8::from(e.on_boundary));
        }
        out
    }
}

fn triangle_diameter<T: Real>(p: &[Point2<T>; 3]) -> T {
    (p[1] - p[0]).norm().max((p[2] - p[1]).norm()).max((p[0] - p[2]).norm())
}

fn inscribed_diameter<T: Real>(p: &[Point2<T>; 3], area: T) -> T {
    let perimeter = (p[1] - p[0]).norm() + (p[2] - p[1]).norm() + (p[0] - p[2]).norm();
    T::lit(4.0) * area / perimeter
}

fn triangle_min_angle<T: Real>(p: &[Point2<T>; 3]) -> T {
    (0..3)
        .map(|k| {
            let o = p[k];
            let u = p[(k + 1) % 3] - o;
            let w = p[(k + 2) % 3] - o;
            u.cross(w).abs().atan2(u.dot(w))
        })
        .fold(T::infinity(), T::min)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RectCell<T> {
    pub center: Point2<T>,
    /// Half of the x-extent.
    pub h1: T,
    /// Half of the y-extent.
    pub h2: T,
    /// Corner vertex ids ordered upper-right, upper-left, lower-left,
    /// lower-right, matching the reference square corners (1,1), (-1,1),
    /// (-1,-1), (1,-1).
    pub vertices: [usize; 4],
    /// Grid position `(i, j)`.
    pub index: (usize, usize),
}

impl<T: Real> RectCell<T> {
    /// Shape parameter `r_K = h2 / h1`.
    pub fn shape(&self) -> T {
        self.h2 / self.h1
    }

    pub fn area(&self) -> T {
        T::lit(4.0) * self.h1 * self.h2
    }

    pub fn diameter(&self) -> T {
        T::lit(2.0) * self.h1.hypot(self.h2)
    }

    /// Maps reference coordinates in `[-1, 1]²` to the cell.
    #[inline]
    pub fn map(&self, xi: Point2<T>) -> Point2<T> {
        Point2::new(self.center.x + self.h1 * xi.x, self.center.y + self.h2 * xi.y)
    }

    #[inline]
    pub fn inverse_map(&self, p: Point2<T>) -> Point2<T> {
        Point2::new((p.x - self.center.x) / self.h1, (p.y - self.center.y) / self.h2)
    }

    /// CCW corner loop starting at the lower-left corner.
    pub fn polygon(&self) -> [Point2<T>; 4] {
        let (c, a, b) = (self.center, self.h1, self.h2);
        [
            Point2::new(c.x - a, c.y - b),
            Point2::new(c.x + a, c.y - b),
            Point2::new(c.x + a, c.y + b),
            Point2::new(c.x - a, c.y + b),
        ]
    }
}

/// Tensor-product rectangle partition.
#[derive(Clone, Debug)]
pub struct RectMesh<T> {
    pub domain: Rect<T>,
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    pub vertices: Vec<Point2<T>>,
    pub vertex_on_boundary: Vec<bool>,
    pub cells: Vec<RectCell<T>>,
    /// Cells incident to each vertex.
    pub vertex_cells: Vec<Vec<usize>>,
}

pub fn build_rect_mesh<T: Real>(m: usize, n: usize, domain: Rect<T>) -> Result<RectMesh<T>, MeshError> {
    if m == 0 || n == 0 {
        return Err(MeshError::ZeroSubdivision { m, n });
    }
    if !domain.is_nondegenerate() {
        return Err(MeshError::DegenerateDomain);
    }
    RectMesh::from_breakpoints(
        uniform_breakpoints(domain.x_min, domain.x_max, m),
        uniform_breakpoints(domain.y_min, domain.y_max, n),
    )
}

impl<T: Real> RectMesh<T> {
    /// Builds the mesh from strictly increasing x and y breakpoints.
    pub fn from_breakpoints(xs: Vec<T>, ys: Vec<T>) -> Result<Self, MeshError> {
        if xs.len() < 2 || ys.len() < 2 {
            return Err(MeshError::ZeroSubdivision {
                m: xs.len().saturating_sub(1),
                n: ys.len().saturating_sub(1),
            });
        }
        let increasing = |v: &[T]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(MeshError::NonIncreasingBreakpoints);
        }
        let (m, n) = (xs.len() - 1, ys.len() - 1);
        let domain = Rect::new(xs[0], xs[m], ys[0], ys[n]);
        let vid = |i: usize, j: usize| j * (m + 1) + i;
        let mut vertices = Vec::with_capacity((m + 1) * (n + 1));
        let mut vertex_on_boundary = Vec::with_capacity((m + 1) * (n + 1));
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                vertices.push(Point2::new(x, y));
                vertex_on_boundary.push(i == 0 || j == 0 || i == m || j == n);
            }
        }
        let half = T::lit(0.5);
        let mut cells = Vec::with_capacity(m * n);
        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for j in 0..n {
            for i in 0..m {
                let k = cells.len();
                let verts = [vid(i + 1, j + 1), vid(i, j + 1), vid(i, j), vid(i + 1, j)];
                for &v in &verts {
                    vertex_cells[v].push(k);
                }
                cells.push(RectCell {
                    center: Point2::new((xs[i] + xs[i + 1]) * half, (ys[j] + ys[j + 1]) * half),
                    h1: (xs[i + 1] - xs[i]) * half,
                    h2: (ys[j + 1] - ys[j]) * half,
                    vertices: verts,
                    index: (i, j),
                });
            }
        }
        Ok(Self {
            domain,
            xs,
            ys,
            vertices,
            vertex_on_boundary,
            cells,
            vertex_cells,
        })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.xs.len() - 1, self.ys.len() - 1)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex_id(&self, i: usize, j: usize) -> usize {
        j * self.xs.len() + i
    }

    pub fn total_area(&self) -> T {
        self.cells.iter().map(RectCell::area).sum()
    }

    pub fn mesh_size(&self) -> T {
        self.cells.iter().map(RectCell::diameter).fold(T::zero(), T::max)
    }

    /// `(min r_K, max r_K)`.
    pub fn shape_bounds(&self) -> (T, T) {
        self.cells
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), c| {
                (lo.min(c.shape()), hi.max(c.shape()))
            })
    }

    /// Plain-text dump: `v x y`, `q i j k l` (CCW from lower-left), and
    /// `e i j boundary_flag` for every grid edge.
    pub fn to_text(&self) -> String {
        let (m, n) = self.grid();
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(
                out,
                "v {} {}",
                format_sci(v.x.to_f64_lossy()),
                format_sci(v.y.to_f64_lossy())
            );
        }
        for c in &self.cells {
            let [ur, ul, ll, lr] = c.vertices;
            let _ = writeln!(out, "q {ll} {lr} {ur} {ul}");
        }
        for j in 0..=n {
            for i in 0..m {
                let flag = u8::from(j == 0 || j == n);
                let _ = writeln!(out, "e {} {} {flag}", self.vertex_id(i, j), self.vertex_id(i + 1, j));
            }
        }
        for i in 0..=m {
            for j in 0..n {
                let flag = u8::from(i == 0 || i == m);
                let _ = writeln!(out, "e {} {} {flag}", self.vertex_id(i, j), self.vertex_id(i, j + 1));
            }
        }
        out
    }
}

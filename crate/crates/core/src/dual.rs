//! Control-volume partitions for both schemes.
//!
//! Every primal cell is cut into pieces, one per local DOF, by segments
//! running from the cell center (barycenter or rectangle center). Pieces
//! that share a DOF site glue together into the control volume of that
//! site. Local piece `k` of a triangle belongs to its local edge `k`; local
//! piece `k` of a rectangle is the quadrant holding reference corner `k`.

use thiserror::Error;

use crate::geometry::{signed_area, Point2};
use crate::mesh::{RectMesh, TriMesh};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("dual partition of kind {found:?} used where {expected:?} is required")]
    WrongKind { expected: DualKind, found: DualKind },
    #[error("dual has {dual} cells but the mesh has {mesh}")]
    CellCountMismatch { dual: usize, mesh: usize },
    #[error("dual invariant violated: {0}")]
    Invariant(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DualKind {
    /// Edge-midpoint volumes on a triangulation.
    CrouzeixRaviart,
    /// Vertex volumes on a rectangle mesh.
    Wilson,
}

/// Intersection of a control volume with one primal cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPiece<T> {
    pub cell: usize,
    /// Local piece index inside `cell`.
    pub local: usize,
    /// CCW convex polygon.
    pub polygon: Vec<Point2<T>>,
    pub area: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlVolume<T> {
    pub site: Point2<T>,
    /// CCW loop.
    pub polygon: Vec<Point2<T>>,
    pub area: T,
    pub pieces: Vec<DualPiece<T>>,
    pub on_boundary: bool,
}

/// Dual gridline piece inside a primal cell, separating two local pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSegment<T> {
    pub start: Point2<T>,
    pub end: Point2<T>,
    /// Unit normal pointing from the `inner` piece into the `outer` piece.
    pub normal: Point2<T>,
    pub length: T,
    pub inner: usize,
    pub outer: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellDual<T> {
    /// Control volume owning each local piece.
    pub volumes: Vec<usize>,
    /// Polygon of each local piece.
    pub pieces: Vec<Vec<Point2<T>>>,
    pub segments: Vec<DualSegment<T>>,
}

#[derive(Clone, Debug)]
pub struct DualPartition<T> {
    pub kind: DualKind,
    /// Indexed like the scheme's site DOFs: edge id (C-R) or vertex id (Wilson).
    pub volumes: Vec<ControlVolume<T>>,
    pub cells: Vec<CellDual<T>>,
}

fn segment<T: Real>(start: Point2<T>, end: Point2<T>, normal: Point2<T>, inner: usize, outer: usize) -> DualSegment<T> {
    DualSegment {
        start,
        end,
        normal,
        length: (end - start).norm(),
        inner,
        outer,
    }
}

/// Barycentric dual: piece `k` of triangle K is `(v_k, v_{k+1}, Q)`.
pub fn build_cr_dual<T: Real>(mesh: &TriMesh<T>) -> DualPartition<T> {
    let mut volumes: Vec<ControlVolume<T>> = mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| ControlVolume {
            site: mesh.edge_midpoints[e],
            polygon: Vec::new(),
            area: T::zero(),
            pieces: Vec::with_capacity(2),
            on_boundary: edge.on_boundary,
        })
        .collect();
    let mut cells = Vec::with_capacity(mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        let q = tri.barycenter;
        let mut pieces = Vec::with_capacity(3);
        let mut segments = Vec::with_capacity(3);
        for k in 0..3 {
            let poly = vec![p[k], p[(k + 1) % 3], q];
            let area = signed_area(&poly);
            volumes[tri.edges[k]].pieces.push(DualPiece {
                cell: t,
                local: k,
                polygon: poly.clone(),
                area,
            });
            pieces.push(poly);
            // Q -> v_k bounds piece k on its right; piece k-1 lies beyond.
            let d = p[k] - q;
            let n = d.perp_cw() * (T::one() / d.norm());
            segments.push(segment(q, p[k], n, k, (k + 2) % 3));
        }
        cells.push(CellDual {
            volumes: tri.edges.to_vec(),
            pieces,
            segments,
        });
    }
    for vol in &mut volumes {
        let first = &vol.pieces[0].polygon;
        vol.polygon = match vol.pieces.get(1) {
            None => first.clone(),
            Some(second) => {
                // pieces are (s, t, Q1) and (t, s, Q2)
                vec![first[0], second.polygon[2], first[1], first[2]]
            }
        };
        vol.area = vol.pieces.iter().map(|p| p.area).sum();
    }
    DualPartition {
        kind: DualKind::CrouzeixRaviart,
        volumes,
        cells,
    }
}

/// Quadrant signs of the reference corners `(1,1), (-1,1), (-1,-1), (1,-1)`.
pub const CORNER_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

/// Center-line dual: quadrant `k` of a cell goes to its corner `k`.
pub fn build_wilson_dual<T: Real>(mesh: &RectMesh<T>) -> DualPartition<T> {
    let half = T::lit(0.5);
    let (m, n) = mesh.grid();
    let lo = |b: &[T], i: usize| {
        if i == 0 {
            b[0]
        } else {
            (b[i - 1] + b[i]) * half
        }
    };
    let hi = |b: &[T], i: usize, last: usize| {
        if i == last {
            b[last]
        } else {
            (b[i] + b[i + 1]) * half
        }
    };
    let mut volumes = Vec::with_capacity(mesh.num_vertices());
    for j in 0..=n {
        for i in 0..=m {
            let (x0, x1) = (lo(&mesh.xs, i), hi(&mesh.xs, i, m));
            let (y0, y1) = (lo(&mesh.ys, j), hi(&mesh.ys, j, n));
            let polygon = vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ];
            let v = mesh.vertex_id(i, j);
            volumes.push(ControlVolume {
                site: mesh.vertices[v],
                area: signed_area(&polygon),
                polygon,
                pieces: Vec::with_capacity(4),
                on_boundary: mesh.vertex_on_boundary[v],
            });
        }
    }
    let zero = T::zero();
    let one = T::one();
    let mut cells = Vec::with_capacity(mesh.num_cells());
    for (c, cell) in mesh.cells.iter().enumerate() {
        let o = cell.center;
        let (a, b) = (cell.h1, cell.h2);
        let mut pieces = Vec::with_capacity(4);
        for (k, &(sx, sy)) in CORNER_SIGNS.iter().enumerate() {
            let (dx, dy) = (a * T::lit(sx), b * T::lit(sy));
            let mut poly = vec![
                o,
                Point2::new(o.x + dx, o.y),
                Point2::new(o.x + dx, o.y + dy),
                Point2::new(o.x, o.y + dy),
            ];
            if sx * sy < 0.0 {
                poly.reverse();
            }
            volumes[cell.vertices[k]].pieces.push(DualPiece {
                cell: c,
                local: k,
                area: signed_area(&poly),
                polygon: poly.clone(),
            });
            pieces.push(poly);
        }
        let segments = vec![
            segment(o, Point2::new(o.x + a, o.y), Point2::new(zero, -one), 0, 3),
            segment(o, Point2::new(o.x, o.y + b), Point2::new(one, zero), 1, 0),
            segment(o, Point2::new(o.x - a, o.y), Point2::new(zero, one), 2, 1),
            segment(o, Point2::new(o.x, o.y - b), Point2::new(-one, zero), 3, 2),
        ];
        cells.push(CellDual {
            volumes: cell.vertices.to_vec(),
            pieces,
            segments,
        });
    }
    DualPartition {
        kind: DualKind::Wilson,
        volumes,
        cells,
    }
}

impl<T: Real> DualPartition<T> {
    pub fn num_volumes(&self) -> usize {
        self.volumes.len()
    }

    pub fn total_area(&self) -> T {
        crate::scalar::compensated_sum(self.volumes.iter().map(|v| v.area))
    }

    pub fn expect_kind(&self, kind: DualKind, mesh_cells: usize) -> Result<(), DualError> {
        if self.kind != kind {
            return Err(DualError::WrongKind {
                expected: kind,
                found: self.kind,
            });
        }
        if self.cells.len() != mesh_cells {
            return Err(DualError::CellCountMismatch {
                dual: self.cells.len(),
                mesh: mesh_cells,
            });
        }
        Ok(())
    }

    /// Net `∮ n ds` of a volume assembled from the cell segments that bound it,
    /// oriented outward from the volume.
    pub fn interior_flux_of_unit_field(&self, volume: usize) -> Point2<T> {
        let mut acc = Point2::origin();
        for piece in &self.volumes[volume].pieces {
            for s in &self.cells[piece.cell].segments {
                if s.inner == piece.local {
                    acc = acc + s.normal * s.length;
                } else if s.outer == piece.local {
                    acc = acc - s.normal * s.length;
                }
            }
        }
        acc
    }

    /// Checks the area partition against `domain_area` and each cell's area,
    /// and the polygon/piece consistency of every volume.
    pub fn check_invariants(&self, domain_area: T, cell_areas: &[T], tol: T) -> Result<(), DualError> {
        let total = self.total_area();
        if (total - domain_area).abs() > tol * domain_area {
            return Err(DualError::Invariant(format!(
                "dual areas sum to {total}, domain has {domain_area}"
            )));
        }
        for (c, cd) in self.cells.iter().enumerate() {
            let s: T = cd.pieces.iter().map(|p| signed_area(p)).sum();
            if (s - cell_areas[c]).abs() > tol * cell_areas[c] {
                return Err(DualError::Invariant(format!(
                    "pieces of cell {c} cover {s}, cell has {}",
                    cell_areas[c]
                )));
            }
        }
        for (k, v) in self.volumes.iter().enumerate() {
            let poly_area = signed_area(&v.polygon);
            if poly_area <= T::zero() {
                return Err(DualError::Invariant(format!("volume {k} not CCW")));
            }
            if (poly_area - v.area).abs() > tol * poly_area {
                return Err(DualError::Invariant(format!(
                    "volume {k}: polygon area {poly_area} vs pieces {}",
                    v.area
                )));
            }
        }
        Ok(())
    }
}

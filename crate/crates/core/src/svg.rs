//! Deterministic SVG drawings of primal meshes with optional dual overlay.

use std::fmt::Write as _;

use crate::dual::DualPartition;
use crate::geometry::{Point2, Rect};
use crate::mesh::{RectMesh, TriMesh};
use crate::scalar::Real;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;

struct Canvas {
    x0: f64,
    y1: f64,
    scale: f64,
    out: String,
}

impl Canvas {
    fn new<T: Real>(domain: &Rect<T>) -> Self {
        let (x0, x1) = (domain.x_min.to_f64_lossy(), domain.x_max.to_f64_lossy());
        let (y0, y1) = (domain.y_min.to_f64_lossy(), domain.y_max.to_f64_lossy());
        let scale = (WIDTH - 2.0 * MARGIN) / (x1 - x0);
        let height = (y1 - y0) * scale + 2.0 * MARGIN;
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
        );
        Self { x0, y1, scale, out }
    }

    fn map<T: Real>(&self, p: Point2<T>) -> (f64, f64) {
        (
            MARGIN + (p.x.to_f64_lossy() - self.x0) * self.scale,
            MARGIN + (self.y1 - p.y.to_f64_lossy()) * self.scale,
        )
    }

    fn line<T: Real>(&mut self, a: Point2<T>, b: Point2<T>) {
        let ((x1, y1), (x2, y2)) = (self.map(a), self.map(b));
        let _ = writeln!(
            self.out,
            r#"  <line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#
        );
    }

    fn polygon<T: Real>(&mut self, poly: &[Point2<T>]) {
        let pts: Vec<String> = poly
            .iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(self.out, r#"  <polygon points="{}"/>"#, pts.join(" "));
    }

    fn dual<T: Real>(&mut self, dual: &DualPartition<T>) {
        self.out.push_str(
            "  <g id=\"dual\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1\" stroke-dasharray=\"5 3\">\n",
        );
        for v in &dual.volumes {
            self.polygon(&v.polygon);
        }
        self.out.push_str("  </g>\n");
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

pub fn tri_mesh_svg<T: Real>(mesh: &TriMesh<T>, dual: Option<&DualPartition<T>>) -> String {
    let mut c = Canvas::new(&mesh.domain);
    c.out
        .push_str("  <g id=\"primal\" stroke=\"#000000\" stroke-width=\"1.5\">\n");
    for e in &mesh.edges {
        c.line(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
    }
    c.out.push_str("  </g>\n");
    if let Some(d) = dual {
        c.dual(d);
    }
    c.finish()
}

pub fn rect_mesh_svg<T: Real>(mesh: &RectMesh<T>, dual: Option<&DualPartition<T>>) -> String {
    let mut c = Canvas::new(&mesh.domain);
    let (m, n) = mesh.grid();
    c.out
        .push_str("  <g id=\"primal\" stroke=\"#000000\" stroke-width=\"1.5\">\n");
    for j in 0..=n {
        c.line(mesh.vertices[mesh.vertex_id(0, j)], mesh.vertices[mesh.vertex_id(m, j)]);
    }
    for i in 0..=m {
        c.line(mesh.vertices[mesh.vertex_id(i, 0)], mesh.vertices[mesh.vertex_id(i, n)]);
    }
    c.out.push_str("  </g>\n");
    if let Some(d) = dual {
        c.dual(d);
    }
    c.finish()
}

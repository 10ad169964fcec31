//! Gauss-Legendre rules on segments and symmetric rules on triangles.
//!
//! Reference segment is `[-1, 1]` (measure 2), reference triangle is
//! `(0,0), (1,0), (0,1)` (measure 1/2). Polygons are integrated by fanning
//! from the first vertex.

use thiserror::Error;

use crate::geometry::{is_simple_polygon, triangle_signed_area, Point2};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("polygon with {0} vertices is not simple")]
    NonSimplePolygon(usize),
    #[error("quadrature degree must be at least 1")]
    ZeroDegree,
}

/// Nodes and weights with the polynomial degree integrated exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<P, T> {
    pub points: Vec<P>,
    pub weights: Vec<T>,
    pub exact_degree: usize,
}

pub type SegmentRule<T> = QuadratureRule<T, T>;
pub type TriangleRule<T> = QuadratureRule<Point2<T>, T>;

impl<P, T: Real> QuadratureRule<P, T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

const GL_TABLE: [&[(f64, f64)]; 5] = [
    &[(0.0, 2.0)],
    &[(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)],
    &[
        (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
        (0.0, 0.888_888_888_888_888_9),
        (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    ],
    &[
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ],
    &[
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ],
];

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Tabulated for `n ≤ 5`; larger `n` uses Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre<T: Real>(n: usize) -> SegmentRule<T> {
    let n = n.max(1);
    let pairs: Vec<(f64, f64)> = if n <= GL_TABLE.len() {
        GL_TABLE[n - 1].to_vec()
    } else {
        newton_gauss_legendre(n)
    };
    QuadratureRule {
        points: pairs.iter().map(|&(x, _)| T::lit(x)).collect(),
        weights: pairs.iter().map(|&(_, w)| T::lit(w)).collect(),
        exact_degree: 2 * n - 1,
    }
}

fn newton_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Gauss-Legendre rule exact for polynomials of `degree` on a segment.
pub fn segment_rule<T: Real>(degree: usize) -> SegmentRule<T> {
    gauss_legendre(degree / 2 + 1)
}

fn orbit3(a: f64) -> [(f64, f64); 3] {
    let b = 0.5 * (1.0 - a);
    [(a, b), (b, a), (b, b)]
}

fn orbit6(a: f64, b: f64) -> [(f64, f64); 6] {
    let c = 1.0 - a - b;
    [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)]
}

/// Symmetric rule on the reference triangle exact to `degree`.
///
/// Degrees 1-6 use the centroid, 3-point interior, 6-, 7- and 12-point
/// symmetric rules. Higher degrees use a collapsed (Duffy) Gauss product.
pub fn triangle_rule<T: Real>(degree: usize) -> TriangleRule<T> {
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let exact = match degree {
        0 | 1 => {
            pts.push((1.0 / 3.0, 1.0 / 3.0, 0.5));
            1
        }
        2 => {
            for (x, y) in orbit3(2.0 / 3.0) {
                pts.push((x, y, 1.0 / 6.0));
            }
            2
        }
        3 | 4 => {
            for (x, y) in orbit3(0.108_103_018_168_070_227_363_341_5) {
                pts.push((x, y, 0.111_690_794_839_005_732_847_503_5));
            }
            for (x, y) in orbit3(0.816_847_572_980_458_513_080_857_1) {
                pts.push((x, y, 0.054_975_871_827_660_933_819_163_16));
            }
            4
        }
        5 => {
            let s15 = 15f64.sqrt();
            pts.push((1.0 / 3.0, 1.0 / 3.0, 9.0 / 80.0));
            for (x, y) in orbit3((9.0 + 2.0 * s15) / 21.0) {
                pts.push((x, y, (155.0 - s15) / 2400.0));
            }
            for (x, y) in orbit3((9.0 - 2.0 * s15) / 21.0) {
                pts.push((x, y, (155.0 + s15) / 2400.0));
            }
            5
        }
        6 => {
            for (x, y) in orbit3(0.501_426_509_658_179_105_894_037_4) {
                pts.push((x, y, 0.058_393_137_863_189_662_082_435_52));
            }
            for (x, y) in orbit3(0.873_821_971_016_995_562_232_075_1) {
                pts.push((x, y, 0.025_422_453_185_103_402_007_753_53));
            }
            for (x, y) in orbit6(
                0.053_145_049_844_816_964_774_996_49,
                0.310_352_451_033_784_378_489_731_4,
            ) {
                pts.push((x, y, 0.041_425_537_809_186_801_288_238_81));
            }
            6
        }
        d => {
            let n = (d + 2) / 2 + 1;
            let gl = newton_or_table(n);
            for &(s, ws) in &gl {
                let u = 0.5 * (s + 1.0);
                for &(t, wt) in &gl {
                    let v = 0.5 * (t + 1.0);
                    // (u, v) in unit square -> (u, (1-u) v) with Jacobian (1-u).
                    pts.push((u, (1.0 - u) * v, 0.25 * ws * wt * (1.0 - u)));
                }
            }
            d
        }
    };
    QuadratureRule {
        points: pts.iter().map(|&(x, y, _)| Point2::new(T::lit(x), T::lit(y))).collect(),
        weights: pts.iter().map(|&(_, _, w)| T::lit(w)).collect(),
        exact_degree: exact,
    }
}

fn newton_or_table(n: usize) -> Vec<(f64, f64)> {
    if n <= GL_TABLE.len() {
        GL_TABLE[n - 1].to_vec()
    } else {
        newton_gauss_legendre(n)
    }
}

impl<T: Real> SegmentRule<T> {
    /// Integrates along the straight segment from `a` to `b` (w.r.t. arc length).
    pub fn integrate_on<F>(&self, a: Point2<T>, b: Point2<T>, mut f: F) -> T
    where
        F: FnMut(Point2<T>) -> T,
    {
        let half = T::lit(0.5);
        let mid = a.midpoint(b);
        let dir = (b - a) * half;
        let jac = (b - a).norm() * half;
        let mut acc = T::zero();
        for (&s, &w) in self.points.iter().zip(&self.weights) {
            acc += w * f(mid + dir * s);
        }
        acc * jac
    }
}

impl<T: Real> TriangleRule<T> {
    /// Integrates over the triangle `a, b, c` (either orientation, positive measure).
    pub fn integrate_on<F>(&self, a: Point2<T>, b: Point2<T>, c: Point2<T>, mut f: F) -> T
    where
        F: FnMut(Point2<T>) -> T,
    {
        let jac = (triangle_signed_area(a, b, c) * T::lit(2.0)).abs();
        let (e1, e2) = (b - a, c - a);
        let mut acc = T::zero();
        for (p, &w) in self.points.iter().zip(&self.weights) {
            acc += w * f(a + e1 * p.x + e2 * p.y);
        }
        acc * jac
    }

    /// Fan integration over a polygon; no simplicity check.
    ///
    /// Fan triangles are weighted with their signed area relative to the CCW
    /// orientation so that polygons star-shaped about the first vertex work.
    pub fn integrate_fan<F>(&self, polygon: &[Point2<T>], mut f: F) -> T
    where
        F: FnMut(Point2<T>) -> T,
    {
        let n = polygon.len();
        if n < 3 {
            return T::zero();
        }
        let orient = if crate::geometry::signed_area(polygon) < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        let a = polygon[0];
        let mut acc = T::zero();
        for i in 1..n - 1 {
            let (b, c) = (polygon[i], polygon[i + 1]);
            let signed = triangle_signed_area(a, b, c) * T::lit(2.0) * orient;
            if signed == T::zero() {
                continue;
            }
            let (e1, e2) = (b - a, c - a);
            let mut part = T::zero();
            for (p, &w) in self.points.iter().zip(&self.weights) {
                part += w * f(a + e1 * p.x + e2 * p.y);
            }
            acc += part * signed;
        }
        acc
    }
}

/// Integrates `f` along the segment `a -> b` exactly for polynomials of `degree`.
pub fn integrate_segment<T, F>(f: F, a: Point2<T>, b: Point2<T>, degree: usize) -> Result<T, QuadratureError>
where
    T: Real,
    F: FnMut(Point2<T>) -> T,
{
    if degree == 0 {
        return Err(QuadratureError::ZeroDegree);
    }
    Ok(segment_rule::<T>(degree).integrate_on(a, b, f))
}

/// Integrates `f` over a simple polygon by fan triangulation.
pub fn integrate_polygon<T, F>(f: F, polygon: &[Point2<T>], degree: usize) -> Result<T, QuadratureError>
where
    T: Real,
    F: FnMut(Point2<T>) -> T,
{
    if degree == 0 {
        return Err(QuadratureError::ZeroDegree);
    }
    if !is_simple_polygon(polygon) {
        return Err(QuadratureError::NonSimplePolygon(polygon.len()));
    }
    Ok(triangle_rule::<T>(degree).integrate_fan(polygon, f))
}

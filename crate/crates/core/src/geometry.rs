//! Planar points, axis-aligned rectangles and polygon helpers.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn midpoint(self, other: Self) -> Self {
        let half = T::lit(0.5);
        Self::new((self.x + other.x) * half, (self.y + other.y) * half)
    }

    /// Rotates by -90 degrees; for a CCW boundary edge this points outward.
    #[inline]
    pub fn perp_cw(self) -> Self {
        Self::new(self.y, -self.x)
    }

    pub fn cast<U: Real>(self) -> Point2<U> {
        Point2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Rect<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn unit_square() -> Self {
        Self::new(T::zero(), T::one(), T::zero(), T::one())
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    /// True when both side lengths are strictly positive and finite.
    pub fn is_nondegenerate(&self) -> bool {
        let (w, h) = (self.width(), self.height());
        w > T::zero() && h > T::zero() && w.is_finite() && h.is_finite()
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// True when `p` lies on the boundary, up to `tol` times the diameter.
    pub fn on_boundary(&self, p: Point2<T>, tol: T) -> bool {
        let eps = tol * self.width().hypot(self.height());
        (p.x - self.x_min).abs() <= eps
            || (p.x - self.x_max).abs() <= eps
            || (p.y - self.y_min).abs() <= eps
            || (p.y - self.y_max).abs() <= eps
    }
}

/// Signed shoelace area; positive for counter-clockwise loops.
pub fn signed_area<T: Real>(polygon: &[Point2<T>]) -> T {
    let n = polygon.len();
    if n < 3 {
        return T::zero();
    }
    // taken about the first vertex to avoid cancellation far from the origin
    let o = polygon[0];
    let mut acc = T::zero();
    for i in 1..n - 1 {
        acc += (polygon[i] - o).cross(polygon[i + 1] - o);
    }
    acc * T::lit(0.5)
}

pub fn triangle_signed_area<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).cross(c - a) * T::lit(0.5)
}

pub fn centroid_of_points<T: Real>(points: &[Point2<T>]) -> Point2<T> {
    let n = T::from_count(points.len());
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point2::new(sx / n, sy / n)
}

/// Reverses `polygon` in place if it is clockwise.
pub fn make_ccw<T: Real>(polygon: &mut [Point2<T>]) {
    if signed_area(polygon) < T::zero() {
        polygon.reverse();
    }
}

/// Checks that no two non-adjacent edges of the loop intersect.
pub fn is_simple_polygon<T: Real>(polygon: &[Point2<T>]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (polygon[j], polygon[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>, d: Point2<T>) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    let zero = T::zero();
    if ((o1 > zero && o2 < zero) || (o1 < zero && o2 > zero)) && ((o3 > zero && o4 < zero) || (o3 < zero && o4 > zero))
    {
        return true;
    }
    let on = |p: Point2<T>, q: Point2<T>, r: Point2<T>, o: T| {
        o == zero && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Convexity test for a CCW loop (collinear vertices allowed).
pub fn is_convex_ccw<T: Real>(polygon: &[Point2<T>]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let scale = polygon
        .iter()
        .fold(T::zero(), |m, p| m.max(p.x.abs()).max(p.y.abs()))
        .max(T::min_positive_value());
    let tol = T::epsilon() * T::lit(64.0) * scale * scale;
    (0..n).all(|i| {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let c = polygon[(i + 2) % n];
        (b - a).cross(c - b) >= -tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_unit_square() {
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert_eq!(signed_area(&sq), 1.0);
        assert!(is_simple_polygon(&sq));
        assert!(is_convex_ccw(&sq));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(!is_simple_polygon(&bow));
    }

    #[test]
    fn degenerate_rect_detected() {
        assert!(!Rect::new(0.0, 0.0, 0.0, 1.0).is_nondegenerate());
        assert!(Rect::<f64>::unit_square().is_nondegenerate());
    }
}

//! Brute-force quadrature shared by the integration tests. Deliberately
//! independent of `ncfvm::quadrature`: Gauss-Legendre nodes come from Newton
//! iteration on the Legendre recurrence, triangles use a collapsed tensor rule.

#![allow(dead_code)]

use ncfvm::Point2;

pub type P = Point2<f64>;

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
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

pub fn segment(f: impl Fn(P) -> f64, a: P, b: P, n: usize) -> f64 {
    let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
    gauss(n)
        .iter()
        .map(|&(t, w)| {
            let s = 0.5 * (t + 1.0);
            w * f(P::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)))
        })
        .sum::<f64>()
        * 0.5
        * len
}

/// Tensor rule on the axis-aligned box `[x0,x1] × [y0,y1]` (either order).
pub fn rect(f: impl Fn(P) -> f64, x0: f64, x1: f64, y0: f64, y1: f64, n: usize) -> f64 {
    let g = gauss(n);
    let (cx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0).abs());
    let (cy, hy) = (0.5 * (y0 + y1), 0.5 * (y1 - y0).abs());
    let mut acc = 0.0;
    for &(s, ws) in &g {
        for &(t, wt) in &g {
            acc += ws * wt * f(P::new(cx + hx * s, cy + hy * t));
        }
    }
    acc * hx * hy
}

/// Collapsed (Duffy) tensor rule on the triangle `abc`.
pub fn triangle(f: impl Fn(P) -> f64, a: P, b: P, c: P, n: usize) -> f64 {
    let g = gauss(n);
    let det = ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs();
    let mut acc = 0.0;
    for &(s, ws) in &g {
        let u = 0.5 * (s + 1.0);
        for &(t, wt) in &g {
            let v = 0.5 * (t + 1.0) * (1.0 - u);
            let p = P::new(
                a.x + u * (b.x - a.x) + v * (c.x - a.x),
                a.y + u * (b.y - a.y) + v * (c.y - a.y),
            );
            acc += 0.25 * ws * wt * (1.0 - u) * f(p);
        }
    }
    acc * det
}

/// Fan over a convex polygon.
pub fn polygon(f: impl Fn(P) -> f64, poly: &[P], n: usize) -> f64 {
    (1..poly.len() - 1)
        .map(|i| triangle(&f, poly[0], poly[i], poly[i + 1], n))
        .sum()
}

/// Shoelace formula taken about the first vertex, which avoids cancellation
/// for small polygons far from the origin.
pub fn shoelace(poly: &[P]) -> f64 {
    let o = poly[0];
    0.5 * (1..poly.len() - 1)
        .map(|i| {
            let (a, b) = (poly[i] - o, poly[i + 1] - o);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Reference corners upper-right, upper-left, lower-left, lower-right.
const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

pub fn wilson_phi(k: usize, x: f64, y: f64) -> f64 {
    match k {
        0..=3 => 0.25 * (1.0 + SIGNS[k].0 * x) * (1.0 + SIGNS[k].1 * y),
        4 => (x * x - 1.0) / 8.0,
        _ => (y * y - 1.0) / 8.0,
    }
}

pub fn wilson_dphi(k: usize, x: f64, y: f64) -> (f64, f64) {
    match k {
        0..=3 => {
            let (sx, sy) = SIGNS[k];
            (0.25 * sx * (1.0 + sy * y), 0.25 * sy * (1.0 + sx * x))
        }
        4 => (x / 4.0, 0.0),
        _ => (0.0, y / 4.0),
    }
}

/// `a_K(φ_l, ψ_m)` on the cell centered at `(cx, cy)` with half-widths
/// `(h1, h2)`, keeping the x and/or y parts. Area terms on each quadrant
/// minus `∫ ψ|_q ∂φ/∂n_q` over the quadrant's sides on the center lines.
pub fn wilson_brute(cx: f64, cy: f64, h1: f64, h2: f64, keep: [bool; 2]) -> [[f64; 6]; 6] {
    let xi = |p: P| ((p.x - cx) / h1, (p.y - cy) / h2);
    let grad = |k: usize, p: P| {
        let (x, y) = xi(p);
        let (gx, gy) = wilson_dphi(k, x, y);
        (gx / h1, gy / h2)
    };
    let (kx, ky) = (f64::from(u8::from(keep[0])), f64::from(u8::from(keep[1])));
    let mut a = [[0.0; 6]; 6];
    for l in 0..6 {
        for m in 0..6 {
            let mut acc = 0.0;
            for (q, &(sx, sy)) in SIGNS.iter().enumerate() {
                let test = |p: P| {
                    if m < 4 {
                        f64::from(u8::from(m == q))
                    } else {
                        let (x, y) = xi(p);
                        wilson_phi(m, x, y)
                    }
                };
                acc += rect(
                    |p| {
                        let gl = grad(l, p);
                        let gm = if m < 4 { (0.0, 0.0) } else { grad(m, p) };
                        kx * gl.0 * gm.0 + ky * gl.1 * gm.1
                    },
                    cx,
                    cx + sx * h1,
                    cy,
                    cy + sy * h2,
                    4,
                );
                let o = P::new(cx, cy);
                acc -= kx * segment(|p| test(p) * grad(l, p).0 * -sx, o, P::new(cx, cy + sy * h2), 64);
                acc -= ky * segment(|p| test(p) * grad(l, p).1 * -sy, o, P::new(cx + sx * h1, cy), 64);
            }
            a[l][m] = acc;
        }
    }
    a
}

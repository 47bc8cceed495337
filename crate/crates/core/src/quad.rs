//! Contour quadrature on two-sheeted covers of the u-plane.
//!
//! Every period integral in this crate reduces to integrating f(u, v) du
//! along an explicit path that keeps a positive clearance from all branch
//! points, where v is the square root of the defining polynomial continued
//! analytically along the path.  The integrand is then analytic on the path
//! and panel-wise Gauss-Legendre converges geometrically; refinement doubles
//! the panel count until two successive estimates agree to tolerance.

use std::sync::{Mutex, OnceLock};

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<Vec<(usize, &'static (Vec<f64>, Vec<f64>))>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap();
    if let Some((_, rule)) = guard.iter().find(|(m, _)| *m == n) {
        return rule;
    }
    let rule: &'static (Vec<f64>, Vec<f64>) = Box::leak(Box::new(compute_gauss_legendre(n)));
    guard.push((n, rule));
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One smooth piece of an integration path.
#[derive(Clone, Debug)]
pub enum Piece {
    Line { from: C, to: C },
    /// Circular arc, angles in radians, `sweep` signed (positive = counterclockwise).
    Arc { center: C, radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    pub fn at(&self, t: f64) -> C {
        match *self {
            Piece::Line { from, to } => from + (to - from) * t,
            Piece::Arc { center, radius, start, sweep } => {
                let ang = start + sweep * t;
                center + C::new(radius * ang.cos(), radius * ang.sin())
            }
        }
    }

    /// du/dt at parameter t.
    pub fn tangent(&self, t: f64) -> C {
        match *self {
            Piece::Line { from, to } => to - from,
            Piece::Arc { center: _, radius, start, sweep } => {
                let ang = start + sweep * t;
                C::new(-ang.sin(), ang.cos()) * (radius * sweep)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Piece::Line { from, to } => (to - from).norm(),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn start_point(&self) -> C {
        self.at(0.0)
    }

    pub fn end_point(&self) -> C {
        self.at(1.0)
    }
}

/// A directed path in the u-plane, lifted to the surface by continuing v
/// from the value supplied at the start of the path.
#[derive(Clone, Debug, Default)]
pub struct Path {
    pub pieces: Vec<Piece>,
}

impl Path {
    pub fn new(pieces: Vec<Piece>) -> Self {
        Path { pieces }
    }

    pub fn start_point(&self) -> C {
        self.pieces[0].start_point()
    }

    pub fn end_point(&self) -> C {
        self.pieces.last().unwrap().end_point()
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(|p| p.length()).sum()
    }

    /// Minimum distance from the path to a point, by sampling.
    pub fn distance_to(&self, z: C) -> f64 {
        let mut d = f64::INFINITY;
        for piece in &self.pieces {
            let steps = 64;
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                d = d.min((piece.at(t) - z).norm());
            }
        }
        d
    }
}

/// Evaluates v = sqrt(prod_j (u - b_j)) by analytic continuation: successive
/// calls must be at nearby points so the branch is chosen by continuity.
pub struct SheetTracker<'a> {
    branch: &'a [C],
    v: C,
}

impl<'a> SheetTracker<'a> {
    pub fn new(branch: &'a [C], u0: C, v0: C) -> Self {
        debug_assert!(v0.norm() > 0.0);
        let mut t = SheetTracker { branch, v: v0 };
        t.v = t.advance(u0);
        t
    }

    pub fn current(&self) -> C {
        self.v
    }

    /// v at u, branch continuous with the previous call.
    pub fn advance(&mut self, u: C) -> C {
        let mut prod = C::new(1.0, 0.0);
        for &b in self.branch {
            prod *= u - b;
        }
        let w = prod.sqrt();
        self.v = if (w - self.v).norm() <= (w + self.v).norm() { w } else { -w };
        self.v
    }
}

/// Raw value of sqrt(prod (u - b_j)) on the branch nearest `near`.
pub fn sqrt_poly_near(branch: &[C], u: C, near: C) -> C {
    let mut prod = C::new(1.0, 0.0);
    for &b in branch {
        prod *= u - b;
    }
    let w = prod.sqrt();
    if (w - near).norm() <= (w + near).norm() {
        w
    } else {
        -w
    }
}

/// Controls panel counts and the refinement loop.
#[derive(Clone, Copy, Debug)]
pub struct QuadSettings {
    pub nodes: usize,
    pub tol: f64,
    pub max_refine: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { nodes: 24, tol: 1e-11, max_refine: 9 }
    }
}

/// Splits a piece into sub-pieces whose chord length stays below a fraction
/// of the distance to the nearest singular point, so the sheet tracker never
/// takes a step large enough to hop branches.
fn subdivide(piece: &Piece, singular: &[C], extra: usize) -> Vec<(f64, f64)> {
    let mut spans = vec![(0.0f64, 1.0f64)];
    let mut out = Vec::new();
    while let Some((a, b)) = spans.pop() {
        let mid = piece.at(0.5 * (a + b));
        let mut dmin = f64::INFINITY;
        for &s in singular {
            dmin = dmin.min((mid - s).norm());
        }
        let chord = (piece.at(b) - piece.at(a)).norm() + piece.length() * (b - a) * 1e-12;
        if chord > 0.45 * dmin && chord > 1e-13 {
            let m = 0.5 * (a + b);
            spans.push((a, m));
            spans.push((m, b));
        } else {
            out.push((a, b));
        }
    }
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // Uniform extra splitting for the refinement ladder.
    if extra > 0 {
        let mut refined = Vec::with_capacity(out.len() << extra);
        for (a, b) in out {
            let parts = 1usize << extra;
            for i in 0..parts {
                let f0 = a + (b - a) * i as f64 / parts as f64;
                let f1 = a + (b - a) * (i + 1) as f64 / parts as f64;
                refined.push((f0, f1));
            }
        }
        refined
    } else {
        out
    }
}

/// Integral of f(u, v) du along the lifted path, with v continued from
/// `v_start`.  Returns the integral and the continued v at the path end.
pub fn integrate_path<F>(
    settings: &QuadSettings,
    branch: &[C],
    singular_hints: &[C],
    path: &Path,
    v_start: C,
    f: F,
) -> Result<(C, C)>
where
    F: Fn(C, C) -> C,
{
    let vec_f = |u: C, v: C| vec![f(u, v)];
    let (vals, vend) = integrate_path_vec(settings, branch, singular_hints, path, v_start, 1, vec_f)?;
    Ok((vals[0], vend))
}

/// Vector-valued version: integrates several integrands sharing the same
/// sheet continuation in one sweep.
pub fn integrate_path_vec<F>(
    settings: &QuadSettings,
    branch: &[C],
    singular_hints: &[C],
    path: &Path,
    v_start: C,
    dim: usize,
    f: F,
) -> Result<(Vec<C>, C)>
where
    F: Fn(C, C) -> Vec<C>,
{
    let mut singular: Vec<C> = branch.to_vec();
    singular.extend_from_slice(singular_hints);

    let mut prev: Option<Vec<C>> = None;
    let mut prev_vend = v_start;
    let mut last_delta = f64::INFINITY;
    for refine in 0..=settings.max_refine {
        let (vals, vend) = pass(settings, branch, &singular, path, v_start, dim, &f, refine);
        if let Some(p) = &prev {
            let mut delta = 0.0f64;
            let mut scale = 1.0f64;
            for i in 0..dim {
                delta = delta.max((vals[i] - p[i]).norm());
                scale = scale.max(vals[i].norm());
            }
            last_delta = delta;
            if delta <= settings.tol * scale.max(1.0) {
                return Ok((vals, vend));
            }
        }
        prev = Some(vals);
        prev_vend = vend;
    }
    let _ = prev_vend;
    Err(Error::QuadratureDivergence {
        tol: settings.tol,
        refinements: settings.max_refine,
        delta: last_delta,
    })
}

fn pass<F>(
    settings: &QuadSettings,
    branch: &[C],
    singular: &[C],
    path: &Path,
    v_start: C,
    dim: usize,
    f: &F,
    refine: usize,
) -> (Vec<C>, C)
where
    F: Fn(C, C) -> Vec<C>,
{
    let (nodes, weights) = gauss_legendre(settings.nodes);
    let mut tracker = SheetTracker::new(branch, path.start_point(), v_start);
    let mut acc = vec![C::new(0.0, 0.0); dim];
    for piece in &path.pieces {
        for (a, b) in subdivide(piece, singular, refine) {
            let half = 0.5 * (b - a);
            let midt = 0.5 * (a + b);
            for (x, w) in nodes.iter().zip(weights.iter()) {
                let t = midt + half * x;
                let u = piece.at(t);
                let v = tracker.advance(u);
                let du = piece.tangent(t) * half;
                let fv = f(u, v);
                for i in 0..dim {
                    acc[i] += fv[i] * du * *w;
                }
            }
            tracker.advance(piece.at(b));
        }
    }
    let vend = tracker.current();
    (acc, vend)
}

/// Continues v along the path without integrating; returns v at the end.
pub fn continue_v(branch: &[C], path: &Path, v_start: C) -> C {
    let mut tracker = SheetTracker::new(branch, path.start_point(), v_start);
    for piece in &path.pieces {
        for (a, b) in subdivide(piece, branch, 0) {
            let steps = 8;
            for i in 1..=steps {
                let t = a + (b - a) * i as f64 / steps as f64;
                tracker.advance(piece.at(t));
            }
        }
    }
    tracker.current()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (n, w) = gauss_legendre(12);
        // integral of x^8 over [-1,1] = 2/9
        let s: f64 = n.iter().zip(w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn closed_loop_period_of_elliptic_differential() {
        // v^2 = u(u-1)(u-1/2); integrate du/v around the cut [0, 1/2] and
        // compare with 2*int_0^{1/2} du/|v| computed by substitution
        // u = (1-cos t)/4, which is a complete elliptic integral.
        let branch = [C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(1.0, 0.0)];
        let r = 0.15;
        let path = Path::new(vec![
            Piece::Line { from: C::new(0.5, r), to: C::new(0.0, r) },
            Piece::Arc { center: C::new(0.0, 0.0), radius: r, start: std::f64::consts::FRAC_PI_2, sweep: std::f64::consts::PI },
            Piece::Line { from: C::new(0.0, -r), to: C::new(0.5, -r) },
            Piece::Arc { center: C::new(0.5, 0.0), radius: r, start: -std::f64::consts::FRAC_PI_2, sweep: std::f64::consts::PI },
        ]);
        let v0 = sqrt_poly_near(&branch, path.start_point(), C::new(1.0, 0.0));
        let settings = QuadSettings { nodes: 24, tol: 1e-13, max_refine: 10 };
        let (val, _) = integrate_path(&settings, &branch, &[], &path, v0, |_, v| 1.0 / v).unwrap();
        // Reference: 2 * int_0^1/2 du / sqrt(u(1-u)(1/2-u)) with the positive root,
        // by Gauss-Legendre after u = 0.25(1 - cos t).
        let (nodes, weights) = gauss_legendre(64);
        let mut reference = 0.0f64;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let t = 0.5 * std::f64::consts::PI * (x + 1.0);
            let u = 0.25 * (1.0 - t.cos());
            // du = 0.25 sin t dt; v = sqrt(u(1-u)(0.5-u)) and sqrt(u(0.5-u)) = 0.25 sin t
            let rest = (1.0 - u).sqrt();
            reference += w * 0.5 * std::f64::consts::PI * 0.25 * t.sin() / (0.25 * t.sin() * rest);
        }
        reference *= 2.0;
        assert!(
            (val.norm() - reference).abs() < 1e-10,
            "|loop| = {}, reference = {}",
            val.norm(),
            reference
        );
    }
}

//! Hyperelliptic curves v^2 = prod (u - u_j) as two-sheeted covers of the
//! u-plane, with a deterministic canonical homology basis, period matrices,
//! Abel maps and the contour integrals the rest of the crate is built on.
//!
//! Conventions (fixed once, everything downstream depends on them):
//! - branch points are sorted by (Re, Im); consecutive sorted pairs form the
//!   g finite cuts, the last point is cut to infinity along the ray Re -> +oo;
//! - a_k is a stadium contour encircling the k-th finite cut counterclockwise;
//! - b_k is a counterclockwise rectangle crossing the k-th cut and the cut to
//!   infinity, so that the intersection pairing is a_k o b_j = delta_{jk};
//! - sheet +1 is fixed by v ~ +u^{g+1/2} for large real u, and v at any point
//!   is obtained by analytic continuation from there along a routed path that
//!   approaches real segments from the upper half-plane.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{
    continue_v, integrate_path, integrate_path_vec, Path, Piece, QuadSettings, sqrt_poly_near,
};

/// Fraction of the minimal branch gap kept clear between contours and poles.
pub const POLE_CLEARANCE_FRAC: f64 = 0.1;
/// Hard floor for pole-contour separation, as a fraction of the minimal gap.
pub const POLE_FLOOR_FRAC: f64 = 1e-3;
/// Branch-point moves beyond this fraction of the minimal gap may change the
/// cut topology and are rejected by the tracking machinery.
pub const DEFORMATION_CAP_FRAC: f64 = 1e-3;

/// Branch points u_1..u_{2g+1} of v^2 = prod (u - u_j); the branch point at
/// infinity is implicit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchConfiguration {
    points: Vec<C>,
    genus: usize,
}

impl BranchConfiguration {
    pub fn new(points: Vec<C>) -> Result<Self> {
        if points.len() < 3 || points.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "need an odd number >= 3 of branch points, got {}",
                points.len()
            )));
        }
        let genus = (points.len() - 1) / 2;
        let mut min_gap = f64::INFINITY;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                min_gap = min_gap.min((points[i] - points[j]).norm());
            }
        }
        if !(min_gap > 0.0) {
            return Err(Error::DegenerateConfiguration(
                "branch points must be pairwise distinct".into(),
            ));
        }
        Ok(BranchConfiguration { points, genus })
    }

    pub fn points(&self) -> &[C] {
        &self.points
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn min_gap(&self) -> f64 {
        let mut min_gap = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                min_gap = min_gap.min((self.points[i] - self.points[j]).norm());
            }
        }
        min_gap
    }

    /// Indices of the branch points in the canonical (Re, Im) order.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&i, &j| {
            let (a, b) = (self.points[i], self.points[j]);
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        idx
    }
}

/// Contour quadrature parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub target_tolerance: f64,
    pub max_refinements: usize,
}

impl QuadratureSpec {
    pub fn new(node_count: usize, target_tolerance: f64, max_refinements: usize) -> Result<Self> {
        if node_count < 16 {
            return Err(Error::InvalidInput("node_count must be >= 16".into()));
        }
        if !(target_tolerance > 0.0 && target_tolerance <= 1e-6) {
            return Err(Error::InvalidInput(
                "target_tolerance must lie in (0, 1e-6]".into(),
            ));
        }
        Ok(QuadratureSpec { node_count, target_tolerance, max_refinements })
    }

    pub fn settings(&self) -> QuadSettings {
        QuadSettings {
            nodes: self.node_count,
            tol: self.target_tolerance,
            max_refine: self.max_refinements,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.target_tolerance = tol;
        self
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { node_count: 24, target_tolerance: 1e-11, max_refinements: 9 }
    }
}

/// Canonical homology basis realised as explicit contours in the u-plane.
#[derive(Clone, Debug)]
pub struct CycleBasis {
    /// The g finite cuts as ordered endpoint pairs, canonical order.
    pub cuts: Vec<(C, C)>,
    /// Start of the cut running to infinity along Re -> +oo.
    pub ray_start: C,
    pub a_paths: Vec<Path>,
    pub b_paths: Vec<Path>,
    a_radii: Vec<f64>,
    b_heights: Vec<f64>,
    b_right: Vec<f64>,
}

impl CycleBasis {
    /// Builds the canonical basis for a configuration whose sorted cuts are
    /// separated in real part (always the case for the nearly-real data this
    /// crate works with).
    pub fn canonical(config: &BranchConfiguration) -> Result<Self> {
        let g = config.genus();
        let idx = config.sorted_indices();
        let pts = config.points();
        let sorted: Vec<C> = idx.iter().map(|&i| pts[i]).collect();
        let min_gap = config.min_gap();

        let mut cuts = Vec::with_capacity(g);
        for k in 0..g {
            cuts.push((sorted[2 * k], sorted[2 * k + 1]));
        }
        let ray_start = sorted[2 * g];

        // Separation checks for the rectangle construction.
        for k in 0..g {
            let m = 0.5 * (cuts[k].0.re + cuts[k].1.re);
            for (j, &(p, q)) in cuts.iter().enumerate() {
                if j != k && p.re <= m && m <= q.re {
                    return Err(Error::DegenerateConfiguration(format!(
                        "cuts {j} and {k} overlap in real part; canonical cycles unavailable"
                    )));
                }
            }
            if m >= ray_start.re {
                return Err(Error::DegenerateConfiguration(
                    "finite cut reaches past the infinite cut".into(),
                ));
            }
        }
        let max_im = pts.iter().map(|p| p.im.abs()).fold(0.0f64, f64::max);
        if max_im > 0.2 * min_gap {
            return Err(Error::DegenerateConfiguration(
                "branch points stray too far from the real axis for the canonical cycles".into(),
            ));
        }

        let mut a_paths = Vec::with_capacity(g);
        let mut a_radii = Vec::with_capacity(g);
        for k in 0..g {
            let r = stadium_radius(&cuts[k], &sorted, &[])?;
            a_paths.push(stadium(&cuts[k], r));
            a_radii.push(r);
        }

        let mut b_paths = Vec::with_capacity(g);
        let mut b_heights = Vec::with_capacity(g);
        let mut b_right = Vec::with_capacity(g);
        for k in 0..g {
            let h = (0.45 + 0.11 * k as f64) * 0.5 * min_gap;
            let xr = ray_start.re + (0.45 + 0.2 * k as f64) * min_gap;
            b_paths.push(rectangle(&cuts[k], h, xr));
            b_heights.push(h);
            b_right.push(xr);
        }

        Ok(CycleBasis { cuts, ray_start, a_paths, b_paths, a_radii, b_heights, b_right })
    }
}

/// Stadium radius around a cut keeping clear of the remaining branch points
/// and of the listed excluded poles.
fn stadium_radius(cut: &(C, C), all_sorted: &[C], exclusions: &[C]) -> Result<f64> {
    let (p, q) = *cut;
    let mut r = 0.35 * (q - p).norm();
    let scale = all_sorted
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .fold(f64::INFINITY, f64::min);
    for &e in all_sorted {
        if (e - p).norm() < 1e-14 || (e - q).norm() < 1e-14 {
            continue;
        }
        r = r.min(0.45 * dist_to_segment(e, p, q));
    }
    for &z in exclusions {
        let d = dist_to_segment(z, p, q);
        if d < POLE_FLOOR_FRAC * scale {
            return Err(Error::PoleOnContour { pole: z, dist: d });
        }
        r = r.min(0.6 * d);
    }
    Ok(r)
}

fn dist_to_segment(z: C, p: C, q: C) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = ((z - p).re * d.re + (z - p).im * d.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

/// Counterclockwise stadium contour around the segment [p, q] at distance r.
fn stadium(cut: &(C, C), r: f64) -> Path {
    let (p, q) = *cut;
    let d = (q - p) / (q - p).norm();
    let n = C::new(0.0, 1.0) * d;
    let ang_n = n.im.atan2(n.re);
    Path::new(vec![
        Piece::Line { from: q + n * r, to: p + n * r },
        Piece::Arc { center: p, radius: r, start: ang_n, sweep: std::f64::consts::PI },
        Piece::Line { from: p - n * r, to: q - n * r },
        Piece::Arc { center: q, radius: r, start: ang_n + std::f64::consts::PI, sweep: std::f64::consts::PI },
    ])
}

/// Counterclockwise rectangle crossing the given cut at its midpoint and the
/// infinite cut at real coordinate `x_right`.
fn rectangle(cut: &(C, C), h: f64, x_right: f64) -> Path {
    let m = 0.5 * (cut.0 + cut.1);
    let bl = C::new(m.re, -h);
    let br = C::new(x_right, -h);
    let tr = C::new(x_right, h);
    let tl = C::new(m.re, h);
    Path::new(vec![
        Piece::Line { from: bl, to: br },
        Piece::Line { from: br, to: tr },
        Piece::Line { from: tr, to: tl },
        Piece::Line { from: tl, to: bl },
    ])
}

/// A point on the two-sheeted cover.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub u: C,
    pub sheet: i8,
    pub v: C,
}

impl SurfacePoint {
    /// Hyperelliptic involution (u, v) -> (u, -v).
    pub fn star(&self) -> SurfacePoint {
        SurfacePoint { u: self.u, sheet: -self.sheet, v: -self.v }
    }
}

/// A curve together with its canonical cycles, period matrices and the
/// normalisation of the holomorphic differentials.  Immutable once built.
#[derive(Clone, Debug)]
pub struct CurveFrame {
    pub config: BranchConfiguration,
    pub cycles: CycleBasis,
    pub quad: QuadratureSpec,
    /// aper[(k, l)] = oint_{a_k} u^l phi
    pub aper: DMatrix<C>,
    /// bper[(k, l)] = oint_{b_k} u^l phi
    pub bper: DMatrix<C>,
    /// omega_j = sum_l coeff[(j, l)] u^l phi
    coeff: DMatrix<C>,
    pub riemann: DMatrix<C>,
    base_u: C,
    base_v: C,
    min_gap: f64,
    cond_aper: f64,
}

impl CurveFrame {
    /// Builds the frame: quadrature of all a- and b-periods of the monomial
    /// differentials, normalisation, Riemann matrix and its sanity checks.
    pub fn build(
        config: BranchConfiguration,
        cycles: CycleBasis,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        let g = config.genus();
        let branch = config.points().to_vec();
        let min_gap = config.min_gap();
        let max_abs = branch.iter().map(|b| b.norm()).fold(0.0f64, f64::max);
        let base_u = C::new(2.0 * max_abs + 3.0, 0.0);
        let base_v = base_v_at(&branch, base_u, g);

        let settings = quad.settings();
        let mut aper = DMatrix::from_element(g, g, C::new(0.0, 0.0));
        let mut bper = DMatrix::from_element(g, g, C::new(0.0, 0.0));
        for k in 0..g {
            let path = &cycles.a_paths[k];
            let v0 = anchor_v(&branch, base_u, base_v, path.start_point(), min_gap)?;
            let (vals, _) = integrate_path_vec(&settings, &branch, &[], path, v0, g, |u, v| {
                monomials_over_v(u, v, g)
            })?;
            for l in 0..g {
                aper[(k, l)] = vals[l];
            }
            let path = &cycles.b_paths[k];
            let v0 = anchor_v(&branch, base_u, base_v, path.start_point(), min_gap)?;
            let (vals, _) = integrate_path_vec(&settings, &branch, &[], path, v0, g, |u, v| {
                monomials_over_v(u, v, g)
            })?;
            for l in 0..g {
                bper[(k, l)] = vals[l];
            }
        }

        let aper_t = aper.transpose();
        let inv = aper_t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateConfiguration("singular a-period matrix".into()))?;
        let cond_aper = one_norm(&aper_t) * one_norm(&inv);
        if cond_aper > 1e12 {
            return Err(Error::DegenerateConfiguration(format!(
                "a-period matrix condition number {cond_aper:e} exceeds 1e12"
            )));
        }
        let coeff = inv;
        let riemann = &coeff * bper.transpose();

        // Symmetry and positivity of the Riemann matrix.
        let scale = riemann.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        for j in 0..g {
            for k in 0..g {
                if (riemann[(j, k)] - riemann[(k, j)]).norm() > 1e-8 * scale.max(1.0) {
                    return Err(Error::DegenerateConfiguration(format!(
                        "Riemann matrix asymmetric: |B_jk - B_kj| = {:e}",
                        (riemann[(j, k)] - riemann[(k, j)]).norm()
                    )));
                }
            }
        }
        let im = DMatrix::from_fn(g, g, |j, k| 0.5 * (riemann[(j, k)].im + riemann[(k, j)].im));
        if im.clone().cholesky().is_none() {
            return Err(Error::DegenerateConfiguration(
                "imaginary part of Riemann matrix not positive definite".into(),
            ));
        }

        Ok(CurveFrame {
            config,
            cycles,
            quad,
            aper,
            bper,
            coeff,
            riemann,
            base_u,
            base_v,
            min_gap,
            cond_aper,
        })
    }

    pub fn genus(&self) -> usize {
        self.config.genus()
    }

    pub fn branch(&self) -> &[C] {
        self.config.points()
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn cond_aper(&self) -> f64 {
        self.cond_aper
    }

    /// Normalisation coefficients: omega_j = sum_l coeff[(j,l)] u^l phi.
    pub fn coeff(&self) -> &DMatrix<C> {
        &self.coeff
    }

    // ----- sheet structure -------------------------------------------------

    /// v on sheet +1 at u, by continuation from the base point along the
    /// canonical route (real segments approached from above).
    pub fn canonical_v(&self, u: C) -> Result<C> {
        if (u - self.base_u).norm() < 1e-14 {
            return Ok(self.base_v);
        }
        let path = self.route(self.base_u, u)?;
        Ok(continue_v(self.branch(), &path, self.base_v))
    }

    pub fn point(&self, u: C, sheet: i8) -> Result<SurfacePoint> {
        for &b in self.branch() {
            if (u - b).norm() < 1e-13 * self.min_gap.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "({u}) is a branch point; ramification points have no sheet label"
                )));
            }
        }
        let v1 = self.canonical_v(u)?;
        Ok(SurfacePoint { u, sheet, v: if sheet >= 0 { v1 } else { -v1 } })
    }

    /// Surface point with prescribed v (snapped onto the curve).
    pub fn point_from_v(&self, u: C, v_target: C) -> Result<SurfacePoint> {
        let v1 = self.canonical_v(u)?;
        let sheet = if (v_target - v1).norm() <= (v_target + v1).norm() { 1 } else { -1 };
        Ok(SurfacePoint { u, sheet, v: if sheet > 0 { v1 } else { -v1 } })
    }

    /// Checks v^2 = prod(u - u_j) to relative 1e-12.
    pub fn on_curve(&self, p: &SurfacePoint) -> bool {
        let mut prod = C::new(1.0, 0.0);
        for &b in self.branch() {
            prod *= p.u - b;
        }
        (p.v * p.v - prod).norm() <= 1e-12 * prod.norm().max(1e-300)
    }

    // ----- differential evaluations ----------------------------------------

    /// phi = du/v at a regular point, in the local parameter u.
    pub fn phi_at(&self, p: &SurfacePoint) -> C {
        1.0 / p.v
    }

    /// phi(P_n) = 2 / sqrt(prod_{j != n} (u_n - u_j)), principal square root.
    /// Branch index n is 1-based into the configuration's point order.
    pub fn phi_ramification(&self, n: usize) -> Result<C> {
        let pts = self.branch();
        if n == 0 || n > pts.len() {
            return Err(Error::InvalidIndex(n, pts.len()));
        }
        let un = pts[n - 1];
        let mut prod = C::new(1.0, 0.0);
        for (j, &b) in pts.iter().enumerate() {
            if j != n - 1 {
                prod *= un - b;
            }
        }
        Ok(2.0 / prod.sqrt())
    }

    /// Same as [`phi_ramification`], but with the square-root branch flipped
    /// if needed to stay continuous with `anchor` (used by finite-difference
    /// harnesses that vary branch points across builds).
    pub fn phi_ramification_anchored(&self, n: usize, anchor: C) -> Result<C> {
        let raw = self.phi_ramification(n)?;
        if (raw - anchor).norm() <= (raw + anchor).norm() {
            Ok(raw)
        } else {
            Ok(-raw)
        }
    }

    /// Normalised holomorphic differentials at a regular point (local
    /// parameter u): omega_j(P) = sum_l coeff[(j,l)] u^l / v.
    pub fn omega_at(&self, p: &SurfacePoint) -> Vec<C> {
        let g = self.genus();
        let mut upow = C::new(1.0, 0.0);
        let mut vals = vec![C::new(0.0, 0.0); g];
        for l in 0..g {
            for j in 0..g {
                vals[j] += self.coeff[(j, l)] * upow;
            }
            upow *= p.u;
        }
        for v in &mut vals {
            *v /= p.v;
        }
        vals
    }

    /// omega_j(P_n) with respect to the standard local parameter
    /// sqrt(u - u_n), sharing the branch of [`phi_ramification`].
    pub fn omega_ramification(&self, n: usize) -> Result<Vec<C>> {
        let phi_n = self.phi_ramification(n)?;
        let un = self.branch()[n - 1];
        let g = self.genus();
        let mut vals = vec![C::new(0.0, 0.0); g];
        let mut upow = C::new(1.0, 0.0);
        for l in 0..g {
            for j in 0..g {
                vals[j] += self.coeff[(j, l)] * upow;
            }
            upow *= un;
        }
        for v in &mut vals {
            *v *= phi_n;
        }
        Ok(vals)
    }

    /// omega_j(P_infinity) with respect to the local parameter u^{-1/2} on
    /// the canonical branch v ~ +u^{g+1/2}.
    pub fn omega_infinity(&self) -> Vec<C> {
        let g = self.genus();
        (0..g).map(|j| -2.0 * self.coeff[(j, g - 1)]).collect()
    }

    // ----- period integrals -------------------------------------------------

    /// oint_{a_k} f(u, v) du with the contour shrunk to exclude the given
    /// poles (0-based k).
    pub fn a_period<F>(&self, k: usize, exclusions: &[C], f: F) -> Result<C>
    where
        F: Fn(C, C) -> C,
    {
        let path = self.a_contour(k, exclusions)?;
        let v0 = self.contour_anchor(&path)?;
        let (val, _) =
            integrate_path(&self.quad.settings(), self.branch(), exclusions, &path, v0, f)?;
        Ok(val)
    }

    pub fn a_period_vec<F>(&self, k: usize, exclusions: &[C], dim: usize, f: F) -> Result<Vec<C>>
    where
        F: Fn(C, C) -> Vec<C>,
    {
        let path = self.a_contour(k, exclusions)?;
        let v0 = self.contour_anchor(&path)?;
        let (vals, _) =
            integrate_path_vec(&self.quad.settings(), self.branch(), exclusions, &path, v0, dim, f)?;
        Ok(vals)
    }

    /// oint_{b_k} f(u, v) du, likewise avoiding the given poles.
    pub fn b_period<F>(&self, k: usize, exclusions: &[C], f: F) -> Result<C>
    where
        F: Fn(C, C) -> C,
    {
        let path = self.b_contour(k, exclusions)?;
        let v0 = self.contour_anchor(&path)?;
        let (val, _) =
            integrate_path(&self.quad.settings(), self.branch(), exclusions, &path, v0, f)?;
        Ok(val)
    }

    /// Stadium representative of a_k excluding the listed poles; poles that
    /// coincide with branch points are integrable and ignored.
    pub fn a_contour(&self, k: usize, exclusions: &[C]) -> Result<Path> {
        let idx = self.config.sorted_indices();
        let sorted: Vec<C> = idx.iter().map(|&i| self.config.points()[i]).collect();
        let cut = self.cycles.cuts[k];
        let filtered: Vec<C> = exclusions
            .iter()
            .copied()
            .filter(|z| self.branch().iter().all(|b| (z - b).norm() > 1e-12 * self.min_gap))
            .collect();
        let r = stadium_radius(&cut, &sorted, &filtered)?;
        let r = r.min(self.cycles.a_radii[k]);
        Ok(stadium(&cut, r))
    }

    /// Rectangle representative of b_k with its height shrunk so that the
    /// listed poles stay outside.  The height never drops below the
    /// imaginary spread of the branch points, which would change the
    /// homotopy class of the lifted cycle.
    pub fn b_contour(&self, k: usize, exclusions: &[C]) -> Result<Path> {
        let mut h = self.cycles.b_heights[k];
        let xr = self.cycles.b_right[k];
        let xl = 0.5 * (self.cycles.cuts[k].0.re + self.cycles.cuts[k].1.re);
        let floor = POLE_FLOOR_FRAC * self.min_gap;
        let max_im = self.branch().iter().map(|b| b.im.abs()).fold(0.0f64, f64::max);
        let h_min = (1.3 * max_im).max(floor);
        for &z in exclusions {
            if self.branch().iter().any(|b| (z - b).norm() <= 1e-12 * self.min_gap) {
                continue;
            }
            if z.re >= xl - floor && z.re <= xr + floor && z.im.abs() < h {
                let shrunk = 0.6 * z.im.abs();
                if shrunk < h_min {
                    return Err(Error::PoleOnContour { pole: z, dist: z.im.abs() });
                }
                h = shrunk;
            }
        }
        Ok(rectangle(&self.cycles.cuts[k], h, xr))
    }

    /// v at the start of a contour, anchored to the canonical sheet.
    fn contour_anchor(&self, path: &Path) -> Result<C> {
        anchor_v(self.branch(), self.base_u, self.base_v, path.start_point(), self.min_gap)
    }

    /// I^{a_k}_{pole} = oint_{a_k} du / ((u - pole) v).
    pub fn i_a_integral(&self, k: usize, pole: C) -> Result<C> {
        self.a_period(k, &[pole], |u, v| 1.0 / ((u - pole) * v))
    }

    /// Constant data of W(., P_n): (phi(P_n), the g integrals I^{a_j}_{u_n}).
    pub fn w_ramification_coeffs(&self, n: usize) -> Result<(C, Vec<C>)> {
        let phi_n = self.phi_ramification(n)?;
        let un = self.branch()[n - 1];
        let mut ints = Vec::with_capacity(self.genus());
        for j in 0..self.genus() {
            ints.push(self.i_a_integral(j, un)?);
        }
        Ok((phi_n, ints))
    }

    /// W(P, P_n) in the local parameter u at the regular point P:
    /// [1/(u - u_n)] phi(P)/phi(P_n) - sum_j (I^{a_j}_{u_n}/phi(P_n)) omega_j(P).
    pub fn w_ramification(&self, p: &SurfacePoint, n: usize) -> Result<C> {
        let (phi_n, ints) = self.w_ramification_coeffs(n)?;
        let un = self.branch()[n - 1];
        if (p.u - un).norm() < 1e-12 * self.min_gap {
            return Err(Error::EvaluationAtPole(p.u));
        }
        let omega = self.omega_at(p);
        let mut val = self.phi_at(p) / ((p.u - un) * phi_n);
        for j in 0..self.genus() {
            val -= ints[j] / phi_n * omega[j];
        }
        Ok(val)
    }

    // ----- Abel map ---------------------------------------------------------

    /// Abel map int_{P_infinity}^{P} omega along the canonical route:
    /// the tail from infinity to the real base point on sheet +1, then a
    /// routed path descending to u(P), plus a branch-point loop if P lies on
    /// the other sheet.  The value is path-specific; reduce modulo the
    /// lattice columns of (I  B) with [`lattice_reduce`].
    pub fn abel_map(&self, p: &SurfacePoint) -> Result<Vec<C>> {
        let g = self.genus();
        let branch = self.branch();
        let settings = self.quad.settings();

        // Tail from infinity: u = t^{-2} on the canonical branch.
        let tb = 1.0 / self.base_u.re.sqrt();
        let tail_path = Path::new(vec![Piece::Line { from: C::new(1e-300, 0.0), to: C::new(tb, 0.0) }]);
        let branch_t: Vec<C> = Vec::new();
        let coeff = self.coeff.clone();
        let branch_owned = branch.to_vec();
        let (tail, _) = integrate_path_vec(
            &settings,
            &branch_t,
            &[],
            &tail_path,
            C::new(1.0, 0.0),
            g,
            move |t, _| {
                // w(t) = sqrt(prod (1 - u_j t^2)), continued from w(0) = 1.
                let mut prod = C::new(1.0, 0.0);
                for &b in &branch_owned {
                    prod *= C::new(1.0, 0.0) - b * t * t;
                }
                let w = prod.sqrt();
                let w = if w.re >= 0.0 { w } else { -w };
                let mut vals = vec![C::new(0.0, 0.0); g];
                let mut acc = C::new(1.0, 0.0); // t^{2g-2l-2} for l = g-1 downward
                for l in (0..g).rev() {
                    for j in 0..g {
                        vals[j] += coeff[(j, l)] * (-2.0) * acc / w;
                    }
                    acc *= t * t;
                }
                vals
            },
        )?;

        // Routed descent from the base point.
        let path = self.route(self.base_u, p.u)?;
        let coeff = self.coeff.clone();
        let (mut vals, v_end) = integrate_path_vec(
            &settings,
            branch,
            &[],
            &path,
            self.base_v,
            g,
            move |u, v| {
                let mut out = vec![C::new(0.0, 0.0); g];
                let mut upow = C::new(1.0, 0.0);
                for l in 0..g {
                    for j in 0..g {
                        out[j] += coeff[(j, l)] * upow;
                    }
                    upow *= u;
                }
                for o in &mut out {
                    *o /= v;
                }
                out
            },
        )?;
        for j in 0..g {
            vals[j] += tail[j];
        }

        // Sheet fix: if the continuation arrived on the other sheet, loop a
        // nearby branch point (the loop integral is genuine: the segment is
        // traversed once per sheet and the contributions add).
        let mismatch = (v_end - p.v).norm() > (v_end + p.v).norm();
        if mismatch {
            let (loop_vals, v_after) = self.sheet_flip_loop(p.u, v_end)?;
            for j in 0..g {
                vals[j] += loop_vals[j];
            }
            if (v_after - p.v).norm() > (v_after + p.v).norm() {
                return Err(Error::PathThroughBranchPoint(
                    "sheet-flip loop failed to land on the requested sheet".into(),
                ));
            }
        }
        Ok(vals)
    }

    /// Integral of the omega-vector along a small loop around the branch
    /// point nearest to u, starting and ending at u; flips the sheet.
    fn sheet_flip_loop(&self, u: C, v_at_u: C) -> Result<(Vec<C>, C)> {
        let g = self.genus();
        let branch = self.branch();
        let e = *branch
            .iter()
            .min_by(|a, b| (*a - u).norm().partial_cmp(&(*b - u).norm()).unwrap())
            .unwrap();
        let mut rho = 0.35 * self.min_gap;
        for &b in branch {
            if (b - e).norm() > 1e-14 {
                rho = rho.min(0.4 * (b - e).norm());
            }
        }
        let dist = (u - e).norm();
        if dist < rho {
            rho = 0.5 * dist.max(1e-6 * self.min_gap);
        }
        let dir = (u - e) / (u - e).norm();
        let entry = e + dir * rho;
        let ang = (entry - e).im.atan2((entry - e).re);
        let path = Path::new(vec![
            Piece::Line { from: u, to: entry },
            Piece::Arc { center: e, radius: rho, start: ang, sweep: 2.0 * std::f64::consts::PI },
            Piece::Line { from: entry, to: u },
        ]);
        let coeff = self.coeff.clone();
        let (vals, v_end) = integrate_path_vec(
            &self.quad.settings(),
            branch,
            &[],
            &path,
            v_at_u,
            g,
            move |uu, vv| {
                let mut out = vec![C::new(0.0, 0.0); g];
                let mut upow = C::new(1.0, 0.0);
                for l in 0..g {
                    for j in 0..g {
                        out[j] += coeff[(j, l)] * upow;
                    }
                    upow *= uu;
                }
                for o in &mut out {
                    *o /= vv;
                }
                out
            },
        )?;
        Ok((vals, v_end))
    }

    /// Routed path between two points: up from `from`, across at a safe
    /// height, down to `to`, with counterclockwise arc detours around branch
    /// points that come within the route clearance.
    pub fn route(&self, from: C, to: C) -> Result<Path> {
        let max_im = self.branch().iter().map(|b| b.im.abs()).fold(0.0f64, f64::max);
        let h = 2.0 * max_im + 1.0 * self.min_gap;
        let clearance = 0.25 * self.min_gap;
        let w1 = C::new(from.re, from.im.max(h));
        let w2 = C::new(to.re, to.im.max(h));
        let mut pieces = Vec::new();
        for (a, b) in [(from, w1), (w1, w2), (w2, to)] {
            if (a - b).norm() < 1e-15 {
                continue;
            }
            bump_line(a, b, self.branch(), clearance, &mut pieces, 0)?;
        }
        if pieces.is_empty() {
            pieces.push(Piece::Line { from, to });
        }
        Ok(Path::new(pieces))
    }

    // ----- lattice ----------------------------------------------------------

    /// Real coordinates (alpha, beta) with z = alpha + B beta.
    pub fn lattice_coords(&self, z: &[C]) -> (Vec<f64>, Vec<f64>) {
        let g = self.genus();
        let y = DMatrix::from_fn(g, g, |j, k| self.riemann[(j, k)].im);
        let x = DMatrix::from_fn(g, g, |j, k| self.riemann[(j, k)].re);
        let im = nalgebra::DVector::from_fn(g, |j, _| z[j].im);
        let re = nalgebra::DVector::from_fn(g, |j, _| z[j].re);
        let beta = y.lu().solve(&im).expect("Im B positive definite");
        let alpha = re - x * &beta;
        (alpha.iter().copied().collect(), beta.iter().copied().collect())
    }

    /// z reduced modulo the lattice generated by the columns of (I  B).
    pub fn lattice_reduce(&self, z: &[C]) -> Vec<C> {
        let (alpha, beta) = self.lattice_coords(z);
        let g = self.genus();
        let mut out = z.to_vec();
        for j in 0..g {
            out[j] -= C::new(alpha[j].round(), 0.0);
            for k in 0..g {
                out[j] -= self.riemann[(j, k)] * beta[k].round();
            }
        }
        out
    }

    /// Distance to the nearest lattice point, in lattice-coordinate units.
    pub fn lattice_distance(&self, z: &[C]) -> f64 {
        let (alpha, beta) = self.lattice_coords(z);
        let mut s = 0.0;
        for a in alpha.iter().chain(beta.iter()) {
            let f = a - a.round();
            s += f * f;
        }
        s.sqrt()
    }
}

fn one_norm(m: &DMatrix<C>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn monomials_over_v(u: C, v: C, g: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(g);
    let mut upow = C::new(1.0, 0.0);
    for _ in 0..g {
        out.push(upow / v);
        upow *= u;
    }
    out
}

fn base_v_at(branch: &[C], base_u: C, g: usize) -> C {
    // v = +u^{g+1/2} sqrt(prod (1 - u_j/u)) with per-factor principal roots;
    // every factor is close to 1 at the base point.
    let mut v = base_u.powf(g as f64 + 0.5);
    for &b in branch {
        v *= (C::new(1.0, 0.0) - b / base_u).sqrt();
    }
    v
}

/// v on the canonical sheet at a contour start point: continue from the base
/// along the routed path.
fn anchor_v(branch: &[C], base_u: C, base_v: C, target: C, min_gap: f64) -> Result<C> {
    let max_im = branch.iter().map(|b| b.im.abs()).fold(0.0f64, f64::max);
    let h = 2.0 * max_im + 1.0 * min_gap;
    let clearance = 0.25 * min_gap;
    let w1 = C::new(base_u.re, base_u.im.max(h));
    let w2 = C::new(target.re, target.im.max(h));
    let mut pieces = Vec::new();
    for (a, b) in [(base_u, w1), (w1, w2), (w2, target)] {
        if (a - b).norm() < 1e-15 {
            continue;
        }
        bump_line(a, b, branch, clearance, &mut pieces, 0)?;
    }
    if pieces.is_empty() {
        return Ok(base_v);
    }
    Ok(continue_v(branch, &Path::new(pieces), base_v))
}

/// Appends `from -> to` to `pieces`, detouring around any obstacle within
/// `clearance` of the segment with a circular arc (counterclockwise when the
/// obstacle sits left of or on the travel direction).
fn bump_line(
    from: C,
    to: C,
    obstacles: &[C],
    clearance: f64,
    pieces: &mut Vec<Piece>,
    depth: usize,
) -> Result<()> {
    if depth > 8 {
        return Err(Error::PathThroughBranchPoint(format!(
            "could not route segment {from} -> {to} around the branch points"
        )));
    }
    let d = to - from;
    let len = d.norm();
    if len < 1e-15 {
        return Ok(());
    }
    let dir = d / len;
    // Closest offending obstacle by projection order.
    let mut hit: Option<(f64, C, f64)> = None;
    for &z in obstacles {
        let t = ((z - from).re * dir.re + (z - from).im * dir.im).clamp(0.0, len);
        let dist = (from + dir * t - z).norm();
        let interior = t > 1e-12 && t < len - 1e-12;
        let endpoint_far = (z - from).norm() > 1e-12 && (z - to).norm() > 1e-12;
        if dist < clearance * 0.999 && interior && endpoint_far {
            if hit.is_none() || t < hit.unwrap().0 {
                hit = Some((t, z, dist));
            }
        }
    }
    let Some((t, z, dist)) = hit else {
        pieces.push(Piece::Line { from, to });
        return Ok(());
    };
    // Both segment endpoints must be outside the detour circle.
    let radius = clearance.min(0.45 * (z - from).norm()).min(0.45 * (z - to).norm());
    if radius < 1e-9 {
        return Err(Error::PathThroughBranchPoint(format!(
            "segment endpoint sits on top of a branch point near {z}"
        )));
    }
    let half = (radius * radius - dist * dist).max(0.0).sqrt();
    let t_in = (t - half).max(0.0);
    let t_out = (t + half).min(len);
    let p_in = snap_to_circle(from + dir * t_in, z, radius);
    let p_out = snap_to_circle(from + dir * t_out, z, radius);
    let ang_in = (p_in - z).im.atan2((p_in - z).re);
    let ang_out = (p_out - z).im.atan2((p_out - z).re);
    let cross = dir.re * (z - from).im - dir.im * (z - from).re;
    let mut sweep = ang_out - ang_in;
    if cross > 0.0 {
        // Obstacle left of travel: detour clockwise (right side).
        while sweep > 0.0 {
            sweep -= 2.0 * std::f64::consts::PI;
        }
    } else {
        while sweep < 0.0 {
            sweep += 2.0 * std::f64::consts::PI;
        }
    }
    bump_line(from, p_in, obstacles, clearance, pieces, depth + 1)?;
    pieces.push(Piece::Arc { center: z, radius, start: ang_in, sweep });
    bump_line(p_out, to, obstacles, clearance, pieces, depth + 1)?;
    Ok(())
}

fn snap_to_circle(p: C, center: C, radius: f64) -> C {
    let d = p - center;
    let n = d.norm();
    if n < 1e-15 {
        return center + C::new(radius, 0.0);
    }
    center + d * (radius / n)
}

// ----- symplectic transformations ------------------------------------------

/// Integer block matrix ((A, B), (C, D)) acting on the stacked cycle vector
/// (b, a).
#[derive(Clone, Debug)]
pub struct SymplecticBlocks {
    pub a: DMatrix<i64>,
    pub b: DMatrix<i64>,
    pub c: DMatrix<i64>,
    pub d: DMatrix<i64>,
}

impl SymplecticBlocks {
    pub fn identity(g: usize) -> Self {
        SymplecticBlocks {
            a: DMatrix::identity(g, g),
            b: DMatrix::zeros(g, g),
            c: DMatrix::zeros(g, g),
            d: DMatrix::identity(g, g),
        }
    }

    pub fn genus(&self) -> usize {
        self.a.nrows()
    }

    /// S^t J S = J over the integers.
    pub fn is_symplectic(&self) -> bool {
        let g = self.genus();
        let n = 2 * g;
        let mut s = DMatrix::<i64>::zeros(n, n);
        for i in 0..g {
            for j in 0..g {
                s[(i, j)] = self.a[(i, j)];
                s[(i, j + g)] = self.b[(i, j)];
                s[(i + g, j)] = self.c[(i, j)];
                s[(i + g, j + g)] = self.d[(i, j)];
            }
        }
        let mut jmat = DMatrix::<i64>::zeros(n, n);
        for i in 0..g {
            jmat[(i, i + g)] = 1;
            jmat[(i + g, i)] = -1;
        }
        s.transpose() * &jmat * &s == jmat
    }

    pub fn inverse(&self) -> SymplecticBlocks {
        // For symplectic S, S^{-1} = ((D^t, -B^t), (-C^t, A^t)).
        SymplecticBlocks {
            a: self.d.transpose(),
            b: -self.b.transpose(),
            c: -self.c.transpose(),
            d: self.a.transpose(),
        }
    }

    fn to_c(m: &DMatrix<i64>) -> DMatrix<C> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C::new(m[(i, j)] as f64, 0.0))
    }
}

/// Transformation of the lattice coordinates and the Riemann matrix under a
/// change of canonical homology basis: c1' = A c1 - B c2, c2' = D c2 - C c1,
/// B' = (A B + B)(C B + D)^{-1}.
pub fn symplectic_transform(
    c1: &[C],
    c2: &[C],
    riemann: &DMatrix<C>,
    s: &SymplecticBlocks,
) -> Result<(Vec<C>, Vec<C>, DMatrix<C>)> {
    if !s.is_symplectic() {
        return Err(Error::NotSymplectic);
    }
    let g = s.genus();
    let a = SymplecticBlocks::to_c(&s.a);
    let b = SymplecticBlocks::to_c(&s.b);
    let c = SymplecticBlocks::to_c(&s.c);
    let d = SymplecticBlocks::to_c(&s.d);
    let v1 = nalgebra::DVector::from_column_slice(c1);
    let v2 = nalgebra::DVector::from_column_slice(c2);
    let c1p = &a * &v1 - &b * &v2;
    let c2p = &d * &v2 - &c * &v1;
    let denom = (&c * riemann + &d)
        .try_inverse()
        .ok_or(Error::NotSymplectic)?;
    let bp = (&a * riemann + &b) * denom;
    let _ = g;
    Ok((
        c1p.iter().copied().collect(),
        c2p.iter().copied().collect(),
        bp,
    ))
}

// ----- intersection pairing (used by the cycle-convention tests) ------------

/// Signed intersection number of two lifted cycles, computed from sampled
/// polylines carrying their continued v values.
pub fn intersection_number(branch: &[C], p1: &Path, v1: C, p2: &Path, v2: C) -> i32 {
    let poly1 = sample_lift(branch, p1, v1);
    let poly2 = sample_lift(branch, p2, v2);
    let mut total = 0i32;
    for w1 in poly1.windows(2) {
        for w2 in poly2.windows(2) {
            let (a0, va, a1, _) = (w1[0].0, w1[0].1, w1[1].0, w1[1].1);
            let (b0, vb, b1, _) = (w2[0].0, w2[0].1, w2[1].0, w2[1].1);
            if let Some((s, t)) = seg_intersect(a0, a1, b0, b1) {
                let x = a0 + (a1 - a0) * s;
                let _ = t;
                let va_x = sqrt_poly_near(branch, x, va);
                let vb_x = sqrt_poly_near(branch, x, vb);
                if (va_x - vb_x).norm() < (va_x + vb_x).norm() {
                    let da = a1 - a0;
                    let db = b1 - b0;
                    let cross = da.re * db.im - da.im * db.re;
                    total += if cross > 0.0 { 1 } else { -1 };
                }
            }
        }
    }
    total
}

fn sample_lift(branch: &[C], path: &Path, v0: C) -> Vec<(C, C)> {
    let mut out = Vec::new();
    let mut v = v0;
    for piece in &path.pieces {
        let steps = (64.0 * piece.length().max(1e-12)).ceil() as usize;
        let steps = steps.clamp(32, 4096);
        for i in 0..steps {
            let t = i as f64 / steps as f64;
            let u = piece.at(t);
            v = sqrt_poly_near(branch, u, v);
            out.push((u, v));
        }
    }
    // close the polyline
    out.push(out[0]);
    out
}

fn seg_intersect(a0: C, a1: C, b0: C, b1: C) -> Option<(f64, f64)> {
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let denom = d1.re * d2.im - d1.im * d2.re;
    if denom.abs() < 1e-18 {
        return None;
    }
    let r = b0 - a0;
    let s = (r.re * d2.im - r.im * d2.re) / denom;
    let t = (r.re * d1.im - r.im * d1.re) / denom;
    if s > 1e-12 && s < 1.0 - 1e-12 && t > 1e-12 && t < 1.0 - 1e-12 {
        Some((s, t))
    } else {
        None
    }
}

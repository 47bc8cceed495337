//! Jacobi inversion: recovering the degree-g divisor Q_1 + ... + Q_g with
//! sum_j int_{P_inf}^{Q_j} omega = c_1 + B c_2 by a Newton iteration on the
//! u-coordinates, and tracking it under small branch-point deformations with
//! the lattice coordinates held fixed.

use num_complex::Complex64 as C;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::{CurveFrame, SurfacePoint, DEFORMATION_CAP_FRAC};
use crate::error::{Error, Result};
use crate::quad::sqrt_poly_near;

/// Divisor admissibility tolerance from the inversion contract.
const ADMISSIBLE_TOL: f64 = 1e-8;
/// Newton convergence target on the lattice-reduced Abel residual.
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const SEED_CANDIDATES: usize = 64;
const SEED_ATTEMPTS: usize = 8;

/// Constant coordinate vectors (c_1, c_2) of the point z_0 = c_1 + B c_2 in
/// the Jacobian, the primitive data of the whole construction.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCoordinates {
    pub c1: Vec<C>,
    pub c2: Vec<C>,
}

impl LatticeCoordinates {
    pub fn new(c1: Vec<C>, c2: Vec<C>) -> Result<Self> {
        if c1.len() != c2.len() || c1.is_empty() {
            return Err(Error::InvalidInput(
                "c1 and c2 must be non-empty vectors of equal length".into(),
            ));
        }
        for z in c1.iter().chain(c2.iter()) {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidInput("lattice coordinates must be finite".into()));
            }
        }
        if c1.len() == 1 && is_half_integer(c1[0]) && is_half_integer(c2[0]) {
            return Err(Error::HalfIntegerInput);
        }
        Ok(LatticeCoordinates { c1, c2 })
    }

    pub fn genus(&self) -> usize {
        self.c1.len()
    }

    /// z_0 = c_1 + B c_2 for the lattice of the given frame.
    pub fn z0(&self, frame: &CurveFrame) -> Vec<C> {
        let g = self.genus();
        let mut z = self.c1.clone();
        for j in 0..g {
            for k in 0..g {
                z[j] += frame.riemann[(j, k)] * self.c2[k];
            }
        }
        z
    }
}

fn is_half_integer(z: C) -> bool {
    z.im.abs() < 1e-12 && (2.0 * z.re - (2.0 * z.re).round()).abs() < 1e-12
}

/// A positive divisor of degree g satisfying the admissibility conditions:
/// points pairwise distinct, away from the ramification points and never
/// paired by the hyperelliptic involution.
#[derive(Clone, Debug)]
pub struct Divisor {
    points: Vec<SurfacePoint>,
}

impl Divisor {
    pub fn new(frame: &CurveFrame, points: Vec<SurfacePoint>) -> Result<Self> {
        let d = Divisor { points };
        d.check_admissible(frame)?;
        Ok(d)
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    /// u-coordinates q_j.
    pub fn q(&self) -> Vec<C> {
        self.points.iter().map(|p| p.u).collect()
    }

    pub fn check_admissible(&self, frame: &CurveFrame) -> Result<()> {
        let pts = &self.points;
        if pts.len() != frame.genus() {
            return Err(Error::DegenerateDivisor(format!(
                "expected {} points, got {}",
                frame.genus(),
                pts.len()
            )));
        }
        for (i, p) in pts.iter().enumerate() {
            for &b in frame.branch() {
                if (p.u - b).norm() < ADMISSIBLE_TOL {
                    return Err(Error::DegenerateDivisor(format!(
                        "Q_{} lies within {ADMISSIBLE_TOL:e} of a branch point",
                        i + 1
                    )));
                }
            }
            for (k, q) in pts.iter().enumerate().skip(i + 1) {
                if (p.u - q.u).norm() < ADMISSIBLE_TOL {
                    if p.sheet == q.sheet {
                        return Err(Error::DegenerateDivisor(format!(
                            "Q_{} and Q_{} coincide",
                            i + 1,
                            k + 1
                        )));
                    }
                    return Err(Error::DegenerateDivisor(format!(
                        "Q_{} and Q_{} are paired by the hyperelliptic involution",
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Abel sum of the divisor minus z_0, reduced modulo the lattice.
fn residual(frame: &CurveFrame, points: &[SurfacePoint], z0: &[C]) -> Result<Vec<C>> {
    let g = frame.genus();
    let mut sum = vec![C::new(0.0, 0.0); g];
    for p in points {
        let a = frame.abel_map(p)?;
        for j in 0..g {
            sum[j] += a[j];
        }
    }
    for j in 0..g {
        sum[j] -= z0[j];
    }
    Ok(frame.lattice_reduce(&sum))
}

fn residual_norm(r: &[C]) -> f64 {
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the Jacobi inversion problem for z_0 = c_1 + B c_2.  With a guess
/// the Newton iteration starts there (the tracking path); otherwise random
/// admissible seeds are ranked by their lattice-reduced residual.
pub fn invert(
    frame: &CurveFrame,
    coords: &LatticeCoordinates,
    guess: Option<&Divisor>,
) -> Result<Divisor> {
    if coords.genus() != frame.genus() {
        return Err(Error::InvalidInput(format!(
            "coordinate genus {} does not match curve genus {}",
            coords.genus(),
            frame.genus()
        )));
    }
    let z0 = coords.z0(frame);
    if let Some(d) = guess {
        let mut points = d.points().to_vec();
        // Re-anchor the guess onto this frame's curve (tracking across a
        // small deformation): keep u, move v onto the new curve.
        for p in &mut points {
            let v = sqrt_poly_near(frame.branch(), p.u, p.v);
            *p = frame.point_from_v(p.u, v)?;
        }
        if let Ok(div) = newton(frame, points, &z0) {
            return Ok(div);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut seeds: Vec<(f64, Vec<SurfacePoint>)> = Vec::new();
    let centroid = frame.branch().iter().sum::<C>() / frame.branch().len() as f64;
    let spread = frame
        .branch()
        .iter()
        .map(|b| (b - centroid).norm())
        .fold(0.0f64, f64::max)
        .max(frame.min_gap());
    for _ in 0..SEED_CANDIDATES {
        let mut pts = Vec::with_capacity(frame.genus());
        for _ in 0..frame.genus() {
            loop {
                let u = centroid
                    + C::new(
                        rng.gen_range(-1.6..1.6) * spread,
                        rng.gen_range(-1.2..1.2) * spread,
                    );
                if frame.branch().iter().all(|b| (u - b).norm() > 0.05 * frame.min_gap())
                    && pts.iter().all(|p: &SurfacePoint| (u - p.u).norm() > 0.05 * frame.min_gap())
                {
                    let sheet = if rng.gen_bool(0.5) { 1 } else { -1 };
                    if let Ok(p) = frame.point(u, sheet) {
                        pts.push(p);
                    }
                    break;
                }
            }
        }
        let r = residual(frame, &pts, &z0)?;
        seeds.push((residual_norm(&r), pts));
    }
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best_err = f64::INFINITY;
    for (start_norm, pts) in seeds.into_iter().take(SEED_ATTEMPTS) {
        match newton(frame, pts, &z0) {
            Ok(div) => return Ok(div),
            Err(Error::NewtonDivergence(e)) => best_err = best_err.min(e),
            Err(Error::DegenerateDivisor(_)) => best_err = best_err.min(start_norm),
            Err(e) => return Err(e),
        }
    }
    Err(Error::NewtonDivergence(best_err))
}

/// Newton iteration on the u-coordinates with the Jacobian [omega_k(Q_j)];
/// sheets follow the moving points by continuation along the straight step.
fn newton(frame: &CurveFrame, mut points: Vec<SurfacePoint>, z0: &[C]) -> Result<Divisor> {
    let g = frame.genus();
    let step_cap = 0.35 * frame.min_gap();
    let mut best = f64::INFINITY;
    for _iter in 0..NEWTON_MAX_ITER {
        let r = residual(frame, &points, z0)?;
        let rnorm = residual_norm(&r);
        if rnorm < NEWTON_TOL {
            // One polishing step for quadratic convergence, then accept.
            let jac = jacobian(frame, &points);
            if let Some(delta) = solve(&jac, &r) {
                apply_step(frame, &mut points, &delta, step_cap)?;
            }
            return Divisor::new(frame, points);
        }
        if !rnorm.is_finite() {
            return Err(Error::NewtonDivergence(f64::INFINITY));
        }
        best = best.min(rnorm);
        let jac = jacobian(frame, &points);
        let delta = solve(&jac, &r).ok_or(Error::NewtonDivergence(rnorm))?;
        apply_step(frame, &mut points, &delta, step_cap)?;
        let _ = g;
    }
    Err(Error::NewtonDivergence(best))
}

/// J[(k, j)] = omega_k(Q_j).
fn jacobian(frame: &CurveFrame, points: &[SurfacePoint]) -> nalgebra::DMatrix<C> {
    let g = frame.genus();
    nalgebra::DMatrix::from_fn(g, g, |k, j| frame.omega_at(&points[j])[k])
}

fn solve(jac: &nalgebra::DMatrix<C>, rhs: &[C]) -> Option<Vec<C>> {
    let b = nalgebra::DVector::from_column_slice(rhs);
    jac.clone().lu().solve(&b).map(|x| x.iter().copied().collect())
}

/// Moves u_j by -delta_j (clamped), continuing v along the straight segment
/// in substeps so the sheet follows the point.
fn apply_step(
    frame: &CurveFrame,
    points: &mut [SurfacePoint],
    delta: &[C],
    step_cap: f64,
) -> Result<()> {
    for (p, &d) in points.iter_mut().zip(delta.iter()) {
        let mut step = -d;
        if step.norm() > step_cap {
            step *= step_cap / step.norm();
        }
        let target = p.u + step;
        let substeps = (8.0 * step.norm() / frame.min_gap()).ceil().max(4.0) as usize;
        let mut v = p.v;
        let mut u = p.u;
        for s in 1..=substeps {
            let unew = p.u + step * (s as f64 / substeps as f64);
            // Keep clear of branch points along the hop.
            for &b in frame.branch() {
                if (unew - b).norm() < 1e-9 * frame.min_gap() {
                    return Err(Error::DegenerateDivisor(
                        "Newton step crossed a branch point".into(),
                    ));
                }
            }
            v = sqrt_poly_near(frame.branch(), unew, v);
            u = unew;
        }
        let sheet = {
            let v1 = frame.canonical_v(u)?;
            if (v - v1).norm() <= (v + v1).norm() { 1 } else { -1 }
        };
        *p = SurfacePoint { u: target, sheet, v };
    }
    Ok(())
}

/// Re-inverts on a deformed frame with the same lattice coordinates, seeded
/// by the old divisor.  Deformations beyond the cut-topology cap are refused.
pub fn track(
    frame_old: &CurveFrame,
    divisor_old: &Divisor,
    frame_new: &CurveFrame,
    coords: &LatticeCoordinates,
) -> Result<Divisor> {
    let cap = DEFORMATION_CAP_FRAC * frame_old.min_gap();
    let old = frame_old.branch();
    let new = frame_new.branch();
    if old.len() != new.len() {
        return Err(Error::InvalidInput("frames have different genus".into()));
    }
    let max_move = old
        .iter()
        .zip(new.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    if max_move > cap {
        return Err(Error::InvalidInput(format!(
            "deformation {max_move:e} exceeds the cap {cap:e}"
        )));
    }
    invert(frame_new, coords, Some(divisor_old))
}

/// Picard solution for g = 1: the u-coordinate of the inverted point Q_0.
pub fn picard_y0(frame: &CurveFrame, coords: &LatticeCoordinates) -> Result<C> {
    if frame.genus() != 1 {
        return Err(Error::InvalidInput("picard_y0 requires genus 1".into()));
    }
    let div = invert(frame, coords, None)?;
    Ok(div.points()[0].u)
}

/// Real-split lattice coordinates of a divisor: solves
/// z_0 = c_1 + B c_2 with real c_1, c_2 (the test-side convention for
/// deriving coordinates from a chosen divisor).
pub fn coords_from_divisor(frame: &CurveFrame, divisor: &Divisor) -> Result<LatticeCoordinates> {
    let g = frame.genus();
    let mut z = vec![C::new(0.0, 0.0); g];
    for p in divisor.points() {
        let a = frame.abel_map(p)?;
        for j in 0..g {
            z[j] += a[j];
        }
    }
    let (alpha, beta) = frame.lattice_coords(&z);
    LatticeCoordinates::new(
        alpha.iter().map(|&a| C::new(a, 0.0)).collect(),
        beta.iter().map(|&b| C::new(b, 0.0)).collect(),
    )
}

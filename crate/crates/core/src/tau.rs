//! Jacobi theta functions with characteristics and the elliptic tau function
//! of the four-point Schlesinger system, together with the consistency check
//! d ln tau / dx = tr(A^(1) A^(3))/x + tr(A^(2) A^(3))/(x-1).

use num_complex::Complex64 as C;

use crate::curve::{CurveFrame, QuadratureSpec, SurfacePoint};
use crate::error::{Error, Result};
use crate::inversion::{invert, Divisor, LatticeCoordinates};
use crate::omega::build_omega;
use crate::painleve::elliptic_frame;
use crate::schlesinger::{build_matrices, Mat2};

const TWO_PI_I: C = C::new(0.0, 2.0 * std::f64::consts::PI);
const PI_I: C = C::new(0.0, std::f64::consts::PI);

/// Theta series data for one period mu with Im mu > 0.
#[derive(Clone, Copy, Debug)]
pub struct ThetaContext {
    pub mu: C,
}

impl ThetaContext {
    pub fn new(mu: C) -> Result<Self> {
        if !(mu.im > 0.0) {
            return Err(Error::InvalidInput(format!(
                "theta context needs Im mu > 0, got {mu}"
            )));
        }
        Ok(ThetaContext { mu })
    }

    /// theta[p, q](z) = sum_n exp(i pi (n+p)^2 mu + 2 pi i (n+p)(z+q)),
    /// summed symmetrically until the tails drop below 1e-17 relative.
    pub fn theta_char(&self, p: f64, q: f64, z: C) -> C {
        self.theta_char_dz(p, q, z, 0)
    }

    /// d^k/dz^k of theta[p, q] (term-wise differentiated series).
    pub fn theta_char_dz(&self, p: f64, q: f64, z: C, k: usize) -> C {
        let qc = C::new(q, 0.0);
        let mut acc = C::new(0.0, 0.0);
        let mut quiet = 0;
        let mut n = 0i64;
        let scale_est = 1.0f64;
        loop {
            let mut tail = 0.0f64;
            for m in [n, -n - 1] {
                let a = C::new(m as f64 + p, 0.0);
                let term = (PI_I * a * a * self.mu + TWO_PI_I * a * (z + qc)).exp()
                    * (TWO_PI_I * a).powu(k as u32);
                acc += term;
                tail = tail.max(term.norm());
            }
            if tail < 1e-17 * acc.norm().max(scale_est) {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
            n += 1;
            if n > 4096 {
                break;
            }
        }
        acc
    }

    /// theta_1(z) = -theta[1/2, 1/2](z).
    pub fn theta1(&self, z: C) -> C {
        -self.theta_char(0.5, 0.5, z)
    }

    pub fn theta1_dz(&self, z: C) -> C {
        -self.theta_char_dz(0.5, 0.5, z, 1)
    }

    pub fn theta1_dzz(&self, z: C) -> C {
        -self.theta_char_dz(0.5, 0.5, z, 2)
    }

    /// W(P, Q) = [ (theta1'/theta1)^2 - theta1''/theta1 ](z_P - z_Q)
    ///           * omega(P) omega(Q)  (values in the local parameter u).
    pub fn w_kernel(&self, z_diff: C, omega_p: C, omega_q: C) -> C {
        let t = self.theta1(z_diff);
        let t1 = self.theta1_dz(z_diff);
        let t2 = self.theta1_dzz(z_diff);
        ((t1 / t) * (t1 / t) - t2 / t) * omega_p * omega_q
    }
}

/// W(P, Q_0) - W(P, Q_0^*) through the theta-series kernel; this is the
/// independent representation used by the variational-identity tests.
pub fn w_diff_theta(
    frame: &CurveFrame,
    divisor: &Divisor,
    u_p: C,
    sheet: i8,
) -> Result<C> {
    let ctx = ThetaContext::new(frame.riemann[(0, 0)])?;
    let p = frame.point(u_p, sheet)?;
    let q0 = divisor.points()[0];
    let z_p = frame.abel_map(&p)?[0];
    let z_q0 = frame.abel_map(&q0)?[0];
    let z_q0s = frame.abel_map(&q0.star())?[0];
    let om_p = frame.omega_at(&p)[0];
    let om_q0 = frame.omega_at(&q0)[0];
    let om_q0s = frame.omega_at(&q0.star())[0];
    Ok(ctx.w_kernel(z_p - z_q0, om_p, om_q0) - ctx.w_kernel(z_p - z_q0s, om_p, om_q0s))
}

/// tau(x) = theta[c2 + 1/2, c1 + 1/2](0) / ((x(x-1))^{1/8} sqrt(I0)) with
/// principal branches (the constant factor C of the tau function is 1).
pub fn tau_value(frame: &CurveFrame, coords: &LatticeCoordinates) -> Result<C> {
    if frame.genus() != 1 {
        return Err(Error::InvalidInput("tau_value requires genus 1".into()));
    }
    let (c1, c2) = (coords.c1[0], coords.c2[0]);
    if is_half_int(c1) && is_half_int(c2) {
        return Err(Error::HalfIntegerInput);
    }
    let ctx = ThetaContext::new(frame.riemann[(0, 0)])?;
    let num = ctx.theta_char(c2.re + 0.5, c1.re + 0.5, C::new(0.0, 0.0));
    // Complex characteristics: fall back to the shifted-argument form.
    let num = if c1.im.abs() > 0.0 || c2.im.abs() > 0.0 {
        theta_char_complex(&ctx, c2 + 0.5, c1 + 0.5)
    } else {
        num
    };
    let x = frame.branch()[2];
    let i0 = frame.aper[(0, 0)];
    Ok(num / ((x * (x - 1.0)).powf(0.125) * i0.sqrt()))
}

fn is_half_int(z: C) -> bool {
    z.im.abs() < 1e-12 && (2.0 * z.re - (2.0 * z.re).round()).abs() < 1e-12
}

/// theta[a, b](0) for complex characteristics via the series directly.
fn theta_char_complex(ctx: &ThetaContext, a: C, b: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for n in -64i64..=64 {
        let m = C::new(n as f64, 0.0) + a;
        acc += (PI_I * m * m * ctx.mu + TWO_PI_I * m * b).exp();
    }
    acc
}

/// tau over a real grid with branch continuity enforced; returns the tau
/// values and the continuously unwrapped ln tau.
pub fn tau_grid(
    coords: &LatticeCoordinates,
    xs: &[f64],
    quad: QuadratureSpec,
) -> Result<(Vec<C>, Vec<C>)> {
    let mut taus = Vec::with_capacity(xs.len());
    for &x in xs {
        let frame = elliptic_frame(C::new(x, 0.0), quad)?;
        taus.push(tau_value(&frame, coords)?);
    }
    // Continuity: the 1/8 and 1/2 powers may hop branches between grid
    // points; fix by the correction in the 16-element branch group nearest
    // to the previous value.
    let mut fixed = taus.clone();
    for i in 1..fixed.len() {
        let prev = fixed[i - 1];
        let mut best = fixed[i];
        let mut best_d = (best - prev).norm();
        for k in 0..16 {
            let phase = (TWO_PI_I * C::new(k as f64 / 16.0, 0.0)).exp();
            let cand = fixed[i] * phase;
            let d = (cand - prev).norm();
            if d < best_d {
                best_d = d;
                best = cand;
            }
        }
        fixed[i] = best;
    }
    let logs = unwrap_log(&fixed)?;
    Ok((fixed, logs))
}

/// Continuous logarithm along a grid of nonzero values.
fn unwrap_log(vals: &[C]) -> Result<Vec<C>> {
    let mut out = Vec::with_capacity(vals.len());
    let mut arg_prev = 0.0f64;
    for (i, v) in vals.iter().enumerate() {
        if v.norm() == 0.0 {
            return Err(Error::InvalidInput("log of zero while unwrapping".into()));
        }
        let mut arg = v.arg();
        if i > 0 {
            while arg - arg_prev > std::f64::consts::PI {
                arg -= 2.0 * std::f64::consts::PI;
            }
            while arg - arg_prev < -std::f64::consts::PI {
                arg += 2.0 * std::f64::consts::PI;
            }
        }
        arg_prev = arg;
        out.push(C::new(v.norm().ln(), arg));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TauReport {
    pub xs: Vec<f64>,
    pub taus: Vec<C>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub min_abs_tau: f64,
}

/// Compares d ln tau / dx (fourth-order stencils on the unwrapped log) with
/// tr(A^(1) A^(3))/x + tr(A^(2) A^(3))/(x - 1).
pub fn tau_consistency(
    coords: &LatticeCoordinates,
    xs: &[f64],
    quad: QuadratureSpec,
) -> Result<TauReport> {
    if xs.len() < 5 {
        return Err(Error::GridTooCoarse(xs.len()));
    }
    let h = xs[1] - xs[0];
    for w in xs.windows(2) {
        if (w[1] - w[0] - h).abs() > 1e-9 * h {
            return Err(Error::InvalidInput("grid must be uniform".into()));
        }
    }
    let (taus, logs) = tau_grid(coords, xs, quad)?;
    let mut guess: Option<Divisor> = None;
    let mut trace_side = Vec::with_capacity(xs.len());
    for &x in xs {
        let frame = elliptic_frame(C::new(x, 0.0), quad)?;
        let divisor = invert(&frame, coords, guess.as_ref())?;
        let om = build_omega(&frame, divisor.clone(), coords.clone())?;
        let (_, set) = build_matrices(&om)?;
        let t = trace_formula(&set.matrices, x);
        trace_side.push(t);
        guess = Some(divisor);
    }
    let mut residuals = vec![0.0; xs.len()];
    let mut max_residual = 0.0f64;
    for i in 2..xs.len() - 2 {
        let d = (logs[i - 2] - 8.0 * logs[i - 1] + 8.0 * logs[i + 1] - logs[i + 2]) / (12.0 * h);
        let r = (d - trace_side[i]).norm() / trace_side[i].norm().max(1.0);
        residuals[i] = r;
        max_residual = max_residual.max(r);
    }
    let min_abs_tau = taus.iter().map(|t| t.norm()).fold(f64::INFINITY, f64::min);
    Ok(TauReport { xs: xs.to_vec(), taus, residuals, max_residual, min_abs_tau })
}

/// tr(A^(1) A^(3))/x + tr(A^(2) A^(3))/(x-1) for branch order (0, 1, x).
pub fn trace_formula(matrices: &[Mat2], x: f64) -> C {
    let a13 = matrices[0].mul(&matrices[2]).trace();
    let a23 = matrices[1].mul(&matrices[2]).trace();
    a13 / C::new(x, 0.0) + a23 / C::new(x - 1.0, 0.0)
}

/// Pieces of the Lemma 8.2 relation for the standalone finite-difference
/// test:
///   omega(P_x)^2/16 (Omega(P_inf)/omega(P_inf))^2
///     = (y0 - x)/(4x(x-1)) + d/dx [ i pi c2^2 mu - ln(I0)/2 + ln theta1(int_{Q0}^{Pinf} omega) ].
/// The potential's raw factors are returned so the differencing caller can
/// form branch-safe log ratios.
pub struct Lemma82Sides {
    pub lhs: C,
    /// The x-independent part (y0 - x)/(4x(x-1)).
    pub rhs_static: C,
    pub mu: C,
    pub i0: C,
    /// theta1 at the argument -(c1 + c2 mu).
    pub theta1: C,
    pub c2: C,
}

pub fn lemma82_sides(
    frame: &CurveFrame,
    divisor: &Divisor,
    coords: &LatticeCoordinates,
) -> Result<Lemma82Sides> {
    let om = build_omega(frame, divisor.clone(), coords.clone())?;
    let x = frame.branch()[2];
    let y0 = divisor.points()[0].u;
    let om_inf = om.eval_infinity();
    let w_inf = frame.omega_infinity()[0];
    let w_px = frame.omega_ramification(3)?[0];
    let lhs = w_px * w_px / 16.0 * (om_inf / w_inf) * (om_inf / w_inf);
    let rhs_static = (y0 - x) / (4.0 * x * (x - 1.0));
    let mu = frame.riemann[(0, 0)];
    let i0 = frame.aper[(0, 0)];
    let ctx = ThetaContext::new(mu)?;
    let c2 = coords.c2[0];
    let z = -(coords.c1[0] + c2 * mu);
    Ok(Lemma82Sides { lhs, rhs_static, mu, i0, theta1: ctx.theta1(z), c2 })
}

/// Surface point helper shared by tau tests.
pub fn q0_of(divisor: &Divisor) -> SurfacePoint {
    divisor.points()[0]
}

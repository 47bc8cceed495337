//! The residue matrices A^(n) of the rank-two Schlesinger system built from
//! the differential Omega, their algebraic sum rules, the finite-difference
//! verification harness for the Schlesinger PDEs, the elliptic lemma
//! identities and the Garnier-system byproducts.

use num_complex::Complex64 as C;

use crate::curve::{BranchConfiguration, CurveFrame, CycleBasis};
use crate::error::{Error, Result};
use crate::inversion::{invert, track, Divisor, LatticeCoordinates};
use crate::omega::{build_omega, OmegaDifferential};
use crate::poly;

/// Complex 2x2 matrix, just enough algebra for the Schlesinger system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C; 2]; 2]);

impl Mat2 {
    pub fn zeros() -> Self {
        Mat2([[C::new(0.0, 0.0); 2]; 2])
    }

    pub fn diag(a: C, b: C) -> Self {
        let mut m = Mat2::zeros();
        m.0[0][0] = a;
        m.0[1][1] = b;
        m
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let mut out = Mat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * other.0[0][j] + self.0[i][1] * other.0[1][j];
            }
        }
        out
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += other.0[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] -= other.0[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: C) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] *= s;
            }
        }
        out
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> C {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// The coefficients beta_n of the solution.
#[derive(Clone, Debug)]
pub struct BetaSet {
    pub betas: Vec<C>,
}

impl BetaSet {
    /// sum beta_n, which must equal -g.
    pub fn sum(&self) -> C {
        self.betas.iter().sum()
    }
}

/// The 2g+1 traceless residue matrices plus the residue at infinity.
#[derive(Clone, Debug)]
pub struct ResidueMatrixSet {
    pub matrices: Vec<Mat2>,
    pub a_infinity: Mat2,
}

impl ResidueMatrixSet {
    pub fn a12(&self, n: usize) -> C {
        self.matrices[n].0[0][1]
    }

    pub fn a21(&self, n: usize) -> C {
        self.matrices[n].0[1][0]
    }

    pub fn a11(&self, n: usize) -> C {
        self.matrices[n].0[0][0]
    }
}

/// Builds beta_n and A^(n) from Omega:
///   A12^(n) = (1/4) Omega(P_n) phi(P_n) prod_a (u_n - q_a),
///   beta_n  = (1/4) Omega(P_n) sum_j v_j(P_n) - (1/2) Omega(P_inf) A12^(n),
///   A^(n)   = [[-1/4 - beta_n/2, A12^(n)],
///              [-(beta_n + beta_n^2)/(4 A12^(n)), 1/4 + beta_n/2]].
pub fn build_matrices(om: &OmegaDifferential<'_>) -> Result<(BetaSet, ResidueMatrixSet)> {
    let frame = om.frame;
    let g = frame.genus();
    let npts = 2 * g + 1;
    let q = om.q();
    let om_inf = om.eval_infinity();
    let mut betas = Vec::with_capacity(npts);
    let mut matrices = Vec::with_capacity(npts);
    let scale = frame.min_gap().max(1.0);
    for n in 1..=npts {
        let data = om.ramification_data(n)?;
        let un = frame.branch()[n - 1];
        let mut prod = C::new(1.0, 0.0);
        for qa in &q {
            prod *= un - qa;
        }
        let a12 = 0.25 * data.omega * data.phi * prod;
        if a12.norm() < 1e-12 / scale {
            return Err(Error::VanishingA12 { index: n, magnitude: a12.norm() });
        }
        let vsum: C = data.v.iter().sum();
        let beta = 0.25 * data.omega * vsum - 0.5 * om_inf * a12;
        let mut m = Mat2::zeros();
        m.0[0][0] = C::new(-0.25, 0.0) - 0.5 * beta;
        m.0[0][1] = a12;
        m.0[1][0] = -0.25 * (beta + beta * beta) / a12;
        m.0[1][1] = C::new(0.25, 0.0) + 0.5 * beta;
        betas.push(beta);
        matrices.push(m);
    }
    let mut sum = Mat2::zeros();
    for m in &matrices {
        sum = sum.add(m);
    }
    let a_infinity = sum.scale(C::new(-1.0, 0.0));
    Ok((BetaSet { betas }, ResidueMatrixSet { matrices, a_infinity }))
}

/// A(u) = sum_n A^(n) / (u - u_n).
pub fn a_of_u(set: &ResidueMatrixSet, branch: &[C], u: C) -> Result<Mat2> {
    let mut out = Mat2::zeros();
    for (m, &un) in set.matrices.iter().zip(branch.iter()) {
        if (u - un).norm() < 1e-12 {
            return Err(Error::EvaluationAtPole(u));
        }
        out = out.add(&m.scale(1.0 / (u - un)));
    }
    Ok(out)
}

/// Residual of one Schlesinger pair at one step size.
#[derive(Clone, Debug)]
pub struct PairResidual {
    /// 1-based indices: d A^(j) / d u_k.
    pub j: usize,
    pub k: usize,
    pub abs: f64,
    pub rel: f64,
    pub formula_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SchlesingerReport {
    pub step: f64,
    pub pairs: Vec<PairResidual>,
    pub max_rel: f64,
}

/// Rebuilds the full pipeline (frame, tracked divisor, matrices) at the given
/// branch points.
pub fn rebuild_at(
    points: Vec<C>,
    base_frame: &CurveFrame,
    base_divisor: &Divisor,
    coords: &LatticeCoordinates,
    tol: f64,
) -> Result<(BetaSet, ResidueMatrixSet)> {
    let config = BranchConfiguration::new(points)?;
    let cycles = CycleBasis::canonical(&config)?;
    let quad = base_frame.quad.with_tolerance(tol);
    let frame = CurveFrame::build(config, cycles, quad)?;
    let divisor = track(base_frame, base_divisor, &frame, coords)?;
    let om = build_omega(&frame, divisor, coords.clone())?;
    build_matrices(&om)
}

/// Central-difference verification of the Schlesinger system
///   dA^(j)/du_k = [A^(k), A^(j)]/(u_k - u_j)          (j != k)
///   dA^(k)/du_k = -sum_{j != k} [A^(k), A^(j)]/(u_k - u_j)
/// with the divisor tracked at fixed (c1, c2) across every perturbed build.
pub fn verify_schlesinger(
    frame: &CurveFrame,
    coords: &LatticeCoordinates,
    step: f64,
) -> Result<SchlesingerReport> {
    let cap = crate::curve::DEFORMATION_CAP_FRAC * frame.min_gap();
    if step > cap {
        return Err(Error::InvalidInput(format!(
            "step {step:e} exceeds the deformation cap {cap:e}"
        )));
    }
    let divisor = invert(frame, coords, None)?;
    let om = build_omega(&frame, divisor.clone(), coords.clone())?;
    let (_, base) = build_matrices(&om)?;
    let npts = frame.branch().len();
    // Differencing noise must stay below the reported residual.
    let tol = (step * step / 100.0).min(frame.quad.target_tolerance);

    let mut pairs = Vec::with_capacity(npts * npts);
    let mut max_rel = 0.0f64;
    for k in 0..npts {
        let mut plus = frame.branch().to_vec();
        plus[k] += step;
        let mut minus = frame.branch().to_vec();
        minus[k] -= step;
        let (_, set_p) = rebuild_at(plus, frame, &divisor, coords, tol)?;
        let (_, set_m) = rebuild_at(minus, frame, &divisor, coords, tol)?;
        for j in 0..npts {
            let fd = set_p.matrices[j]
                .sub(&set_m.matrices[j])
                .scale(C::new(1.0 / (2.0 * step), 0.0));
            let formula = schlesinger_rhs(&base, frame.branch(), j, k);
            let abs = fd.sub(&formula).norm();
            let fnorm = formula.norm();
            let rel = abs / fnorm.max(1e-6);
            max_rel = max_rel.max(rel);
            pairs.push(PairResidual { j: j + 1, k: k + 1, abs, rel, formula_norm: fnorm });
        }
    }
    Ok(SchlesingerReport { step, pairs, max_rel })
}

/// Right-hand side of the Schlesinger equation for dA^(j)/du_k.
pub fn schlesinger_rhs(set: &ResidueMatrixSet, branch: &[C], j: usize, k: usize) -> Mat2 {
    if j != k {
        set.matrices[k]
            .commutator(&set.matrices[j])
            .scale(1.0 / (branch[k] - branch[j]))
    } else {
        let mut out = Mat2::zeros();
        for jp in 0..branch.len() {
            if jp != k {
                out = out.sub(
                    &set.matrices[k]
                        .commutator(&set.matrices[jp])
                        .scale(1.0 / (branch[k] - branch[jp])),
                );
            }
        }
        out
    }
}

/// Deviations of the algebraic sum rules forced by the construction.
#[derive(Clone, Debug)]
pub struct SumRuleReport {
    pub sum_a12: f64,
    pub sum_a21: f64,
    /// |sum A11 + 1/4|
    pub sum_a11: f64,
    /// |sum beta + g|
    pub beta_sum: f64,
    /// Frobenius distance of A^(inf) from diag(1/4, -1/4).
    pub a_infinity_dev: f64,
    pub max_trace: f64,
    /// max |det A^(n) + 1/16| (eigenvalues +-1/4).
    pub max_det_dev: f64,
}

pub fn sum_rules(betas: &BetaSet, set: &ResidueMatrixSet, genus: usize) -> SumRuleReport {
    let mut sum_a12 = C::new(0.0, 0.0);
    let mut sum_a21 = C::new(0.0, 0.0);
    let mut sum_a11 = C::new(0.0, 0.0);
    let mut max_trace = 0.0f64;
    let mut max_det_dev = 0.0f64;
    for m in &set.matrices {
        sum_a12 += m.0[0][1];
        sum_a21 += m.0[1][0];
        sum_a11 += m.0[0][0];
        max_trace = max_trace.max(m.trace().norm());
        max_det_dev = max_det_dev.max((m.det() + C::new(1.0 / 16.0, 0.0)).norm());
    }
    let target = Mat2::diag(C::new(0.25, 0.0), C::new(-0.25, 0.0));
    SumRuleReport {
        sum_a12: sum_a12.norm(),
        sum_a21: sum_a21.norm(),
        sum_a11: (sum_a11 + C::new(0.25, 0.0)).norm(),
        beta_sum: (betas.sum() + C::new(genus as f64, 0.0)).norm(),
        a_infinity_dev: set.a_infinity.sub(&target).norm(),
        max_trace,
        max_det_dev,
    }
}

/// Residuals of the elliptic lemma identities (genus 1, branch order 0,1,x):
///   (5.18-5.20)  Omega/phi differences at the ramification points,
///   (5.21)       d/dx Omega(P) at a regular point by finite differences,
///   (5.22)       d/dx Omega(P_i) for i in {1, 2} by finite differences.
#[derive(Clone, Debug)]
pub struct EllipticIdentityReport {
    pub eq_0x: f64,
    pub eq_1x: f64,
    pub eq_01: f64,
    pub closure: f64,
    pub d_omega_regular_rel: f64,
    pub d_omega_ram_rel: [f64; 2],
}

/// The identities need Omega rebuilt at x +- h with the divisor tracked, so
/// this takes the raw coordinates rather than a finished Omega.  `theta_w`
/// must return W(P, Q_0) - W(P, Q_0^*) at the regular point P = (u, sheet)
/// through a representation independent of `w_ramification` (the theta-series
/// kernel in the tau module serves).
pub fn elliptic_identities(
    coords: &LatticeCoordinates,
    x: f64,
    quad: crate::curve::QuadratureSpec,
    theta_w: &dyn Fn(&CurveFrame, &Divisor, C, i8) -> Result<C>,
) -> Result<EllipticIdentityReport> {
    let h = 1e-6;
    let quad_tight = quad.with_tolerance((h * h / 100.0f64).min(quad.target_tolerance));
    let frame = crate::painleve::elliptic_frame(C::new(x, 0.0), quad_tight)?;
    let divisor = invert(&frame, coords, None)?;
    let om = build_omega(&frame, divisor.clone(), coords.clone())?;

    let d1 = om.ramification_data(1)?;
    let d2 = om.ramification_data(2)?;
    let d3 = om.ramification_data(3)?;
    let (r1, r2, r3) = (d1.omega / d1.phi, d2.omega / d2.phi, d3.omega / d3.phi);
    let q0 = divisor.points()[0];
    let phi_q0 = frame.phi_at(&q0);
    let y0 = q0.u;
    let xc = C::new(x, 0.0);
    let scale = r1.norm().max(r3.norm()).max(1.0);
    let eq_0x = (r1 - r3 - phi_q0 * xc * (y0 - 1.0)).norm() / scale;
    let eq_1x = (r2 - r3 - phi_q0 * y0 * (xc - 1.0)).norm() / scale;
    let eq_01 = (r1 - r2 - phi_q0 * (y0 - xc)).norm() / scale;
    // (5.20) as the linear combination (5.18) - (5.19):
    let closure = ((r1 - r3 - phi_q0 * xc * (y0 - 1.0)) - (r2 - r3 - phi_q0 * y0 * (xc - 1.0))
        - (r1 - r2 - phi_q0 * (y0 - xc)))
        .norm();

    // (5.21): d/dx Omega(P) at a regular point, u(P) fixed.  The callback
    // supplies W(P, Q_0) - W(P, Q_0^*) through an independent representation
    // of the bidifferential.
    let up = C::new(0.4 * x + 1.7, 0.6);
    let sheet = 1i8;
    let p = frame.point(up, sheet)?;
    let dy0 = crate::painleve::dy0_dx_analytic(&om, &divisor)?;
    let w_p_px = frame.w_ramification(&p, 3)?;
    let w_diff = theta_w(&frame, &divisor, up, sheet)?;
    let rhs_521 = 0.5 * d3.omega * w_p_px + w_diff * dy0;
    let fd_521 = {
        let om_p = eval_omega_at_x(coords, x + h, quad_tight, up, sheet, &divisor)?;
        let om_m = eval_omega_at_x(coords, x - h, quad_tight, up, sheet, &divisor)?;
        (om_p - om_m) / (2.0 * h)
    };
    let d_omega_regular_rel = (fd_521 - rhs_521).norm() / rhs_521.norm().max(1e-12);

    // (5.22): d/dx Omega(P_i), i = 1, 2 (u_i = 0, 1).
    let mut d_omega_ram_rel = [0.0f64; 2];
    for (slot, i) in [(0usize, 1usize), (1, 2)] {
        let di = om.ramification_data(i)?;
        let ui = frame.branch()[i - 1];
        let rhs = 0.5 * d3.omega * frame.omega_ramification(3)?[0]
            / frame.omega_ramification(i)?[0]
            * (y0 - xc)
            / ((xc - ui) * (y0 - ui));
        let fd = {
            let om_p = eval_omega_ram_at_x(coords, x + h, quad_tight, i, di.phi, &divisor)?;
            let om_m = eval_omega_ram_at_x(coords, x - h, quad_tight, i, di.phi, &divisor)?;
            (om_p - om_m) / (2.0 * h)
        };
        d_omega_ram_rel[slot] = (fd - rhs).norm() / rhs.norm().max(1e-12);
    }

    Ok(EllipticIdentityReport {
        eq_0x,
        eq_1x,
        eq_01,
        closure,
        d_omega_regular_rel,
        d_omega_ram_rel,
    })
}

fn eval_omega_at_x(
    coords: &LatticeCoordinates,
    x: f64,
    quad: crate::curve::QuadratureSpec,
    up: C,
    sheet: i8,
    guess: &Divisor,
) -> Result<C> {
    let frame = crate::painleve::elliptic_frame(C::new(x, 0.0), quad)?;
    let divisor = invert(&frame, coords, Some(guess))?;
    let om = build_omega(&frame, divisor, coords.clone())?;
    let p = frame.point(up, sheet)?;
    om.eval_regular(&p)
}

fn eval_omega_ram_at_x(
    coords: &LatticeCoordinates,
    x: f64,
    quad: crate::curve::QuadratureSpec,
    n: usize,
    anchor_phi: C,
    guess: &Divisor,
) -> Result<C> {
    let frame = crate::painleve::elliptic_frame(C::new(x, 0.0), quad)?;
    let divisor = invert(&frame, coords, Some(guess))?;
    let om = build_omega(&frame, divisor, coords.clone())?;
    om.eval_ramification_anchored(n, anchor_phi)
}

/// Location and Laurent data of one pole of a rational function.
#[derive(Clone, Debug)]
pub struct PoleData {
    pub location: C,
    /// coeffs[m] multiplies (u - location)^{-(m+1)}.
    pub coeffs: Vec<C>,
}

/// Byproducts for the multidimensional Garnier system.
#[derive(Clone, Debug)]
pub struct GarnierData {
    /// Zeros of Omega (the Garnier coordinates z_i).
    pub z: Vec<C>,
    /// Momenta with the printed summation range i = 1..2g-1.
    pub momenta: Vec<C>,
    /// Momenta summed over the full range i = 1..2g+1.
    pub momenta_full_range: Vec<C>,
    /// Simple poles of p1 = -d/du ln A12(u) with their residues.
    pub p1_poles: Vec<PoleData>,
    /// Poles of p2 (double at branch points, simple at the z_i).
    pub p2_poles: Vec<PoleData>,
    numerator: Vec<C>,
    branch: Vec<C>,
    a11: Vec<C>,
    a21: Vec<C>,
}

impl GarnierData {
    /// A12(u) = N(u) / prod_n (u - u_n).
    pub fn a12_at(&self, u: C) -> C {
        let mut den = C::new(1.0, 0.0);
        for &b in &self.branch {
            den *= u - b;
        }
        poly::eval(&self.numerator, u) / den
    }

    pub fn p1_at(&self, u: C) -> C {
        // -d/du ln A12 = sum_n 1/(u - u_n) - N'(u)/N(u)
        let dn = poly::derivative(&self.numerator);
        let mut val = -poly::eval(&dn, u) / poly::eval(&self.numerator, u);
        for &b in &self.branch {
            val += 1.0 / (u - b);
        }
        val
    }

    pub fn p2_at(&self, u: C) -> C {
        let a11: C = self
            .a11
            .iter()
            .zip(&self.branch)
            .map(|(&a, &b)| a / (u - b))
            .sum();
        let a11_deriv: C = self
            .a11
            .iter()
            .zip(&self.branch)
            .map(|(&a, &b)| -a / ((u - b) * (u - b)))
            .sum();
        let a21: C = self
            .a21
            .iter()
            .zip(&self.branch)
            .map(|(&a, &b)| a / (u - b))
            .sum();
        let a12 = self.a12_at(u);
        let det = -a11 * a11 - a12 * a21;
        det - a11_deriv + a11 * (-self.p1_at(u))
    }
}

/// Assembles the Garnier outputs from Omega and the residue matrices.
pub fn garnier_outputs(om: &OmegaDifferential<'_>) -> Result<GarnierData> {
    let zeros = om.find_zeros()?;
    if zeros.near_degenerate {
        return Err(Error::DegenerateZeros(
            "cleared numerator has nearly coincident roots".into(),
        ));
    }
    let (betas, set) = build_matrices(om)?;
    let g = om.genus();
    let branch = om.frame.branch().to_vec();
    let npts = 2 * g + 1;
    let momentum = |range: usize, zk: C| -> C {
        (0..range)
            .map(|i| 0.25 * (1.0 + 2.0 * betas.betas[i]) / (branch[i] - zk))
            .sum()
    };
    let momenta: Vec<C> = zeros.zs.iter().map(|&zk| momentum(2 * g - 1, zk)).collect();
    let momenta_full: Vec<C> = zeros.zs.iter().map(|&zk| momentum(npts, zk)).collect();

    let numerator = om.numerator_poly();
    let a11: Vec<C> = (0..npts).map(|n| set.a11(n)).collect();
    let a21: Vec<C> = (0..npts).map(|n| set.a21(n)).collect();

    let data = GarnierData {
        z: zeros.zs.clone(),
        momenta,
        momenta_full_range: momenta_full,
        p1_poles: Vec::new(),
        p2_poles: Vec::new(),
        numerator,
        branch: branch.clone(),
        a11,
        a21,
    };

    // p1's poles are exact by construction: +1 at branch points, -1 at zeros.
    let mut p1_poles = Vec::new();
    for &b in &branch {
        p1_poles.push(PoleData { location: b, coeffs: vec![C::new(1.0, 0.0)] });
    }
    for &z in &zeros.zs {
        p1_poles.push(PoleData { location: z, coeffs: vec![C::new(-1.0, 0.0)] });
    }
    // p2's Laurent coefficients by Cauchy integrals on small circles.
    let mut p2_poles = Vec::new();
    let mut all_special: Vec<C> = branch.clone();
    all_special.extend_from_slice(&zeros.zs);
    for &b in &branch {
        let r = circle_radius(b, &all_special);
        let c2 = cauchy_coeff(&data, b, r, 2);
        let c1 = cauchy_coeff(&data, b, r, 1);
        p2_poles.push(PoleData { location: b, coeffs: vec![c1, c2] });
    }
    for &z in &zeros.zs {
        let r = circle_radius(z, &all_special);
        let c1 = cauchy_coeff(&data, z, r, 1);
        p2_poles.push(PoleData { location: z, coeffs: vec![c1] });
    }

    Ok(GarnierData { p1_poles, p2_poles, ..data })
}

fn circle_radius(center: C, special: &[C]) -> f64 {
    let mut r = f64::INFINITY;
    for &s in special {
        let d = (s - center).norm();
        if d > 1e-12 {
            r = r.min(0.25 * d);
        }
    }
    if r.is_finite() {
        r
    } else {
        0.25
    }
}

/// (1/2 pi i) oint p2(u) (u - center)^{order - 1} du on a small circle.
fn cauchy_coeff(data: &GarnierData, center: C, radius: f64, order: usize) -> C {
    let n = 256;
    let mut acc = C::new(0.0, 0.0);
    for k in 0..n {
        let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let w = C::new(0.0, ang).exp() * radius;
        let u = center + w;
        let du = C::new(0.0, 1.0) * w * (2.0 * std::f64::consts::PI / n as f64);
        acc += data.p2_at(u) * w.powu(order as u32 - 1) * du;
    }
    acc / C::new(0.0, 2.0 * std::f64::consts::PI)
}

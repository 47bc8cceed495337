//! Billiard ordered games among confocal quadrics in R^d: Jacobi
//! coordinates, reflections, caustics, the spectral curve, and the two
//! periodicity criteria (lattice defect of the Abel sum, and the Cayley-type
//! rank condition in the d = 3 two-ellipsoid case).

use num_complex::Complex64 as C;

use crate::curve::{BranchConfiguration, CurveFrame, CycleBasis, QuadratureSpec, SurfacePoint};
use crate::error::{Error, Result};
use crate::poly;

/// Confocal family Q_lambda: sum x_i^2/(a_i - lambda) = 1 with
/// a_1 > a_2 > ... > a_d > 0.
#[derive(Clone, Debug)]
pub struct ConfocalFamily {
    a: Vec<f64>,
}

impl ConfocalFamily {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidInput("need dimension >= 2".into()));
        }
        for w in a.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::InvalidInput(
                    "semi-axes must be strictly decreasing".into(),
                ));
            }
        }
        if !(a[a.len() - 1] > 0.0) {
            return Err(Error::InvalidInput("semi-axes must be positive".into()));
        }
        Ok(ConfocalFamily { a })
    }

    pub fn axes(&self) -> &[f64] {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Q_lambda at x minus 1 (zero on the quadric, negative inside an
    /// ellipsoid).
    pub fn quadric_residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let mut s = -1.0;
        for (xi, ai) in x.iter().zip(&self.a) {
            s += xi * xi / (ai - lambda);
        }
        s
    }

    /// Unit normal of Q_lambda at a point on it.
    pub fn unit_normal(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let mut n: Vec<f64> = x
            .iter()
            .zip(&self.a)
            .map(|(xi, ai)| xi / (ai - lambda))
            .collect();
        let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut n {
            *v /= len;
        }
        n
    }
}

/// Boundary quadrics and bounce signature of a billiard ordered game.
/// All boundaries are ellipsoids; an outside bounce must sit between inside
/// bounces at strictly smaller parameters for the game to stay bounded.
#[derive(Clone, Debug)]
pub struct GameSpec {
    pub betas: Vec<f64>,
    pub signature: Vec<i8>,
}

impl GameSpec {
    pub fn new(fam: &ConfocalFamily, betas: Vec<f64>, signature: Vec<i8>) -> Result<Self> {
        if betas.len() != signature.len() || betas.is_empty() {
            return Err(Error::InvalidInput(
                "betas and signature must have equal nonzero length".into(),
            ));
        }
        let a_min = *fam.axes().last().unwrap();
        for &b in &betas {
            if !(b < a_min) {
                return Err(Error::InvalidInput(format!(
                    "boundary parameter {b} is not an ellipsoid (needs beta < {a_min})"
                )));
            }
        }
        for s in &signature {
            if *s != 1 && *s != -1 {
                return Err(Error::InvalidInput("signature entries must be +-1".into()));
            }
        }
        let m = betas.len();
        for s in 0..m {
            if signature[s] == -1 {
                let prev = (s + m - 1) % m;
                let next = (s + 1) % m;
                if m == 1 || signature[prev] != 1 || signature[next] != 1 {
                    return Err(Error::InvalidInput(
                        "an outside bounce must be surrounded by inside bounces".into(),
                    ));
                }
                if !(betas[prev] < betas[s] && betas[next] < betas[s]) {
                    return Err(Error::InvalidInput(
                        "an outside bounce needs strictly smaller neighbouring betas".into(),
                    ));
                }
            }
        }
        Ok(GameSpec { betas, signature })
    }
}

/// Position, unit velocity and cached Jacobi coordinates of the moving point.
#[derive(Clone, Debug)]
pub struct BilliardState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub jacobi: Vec<f64>,
}

impl BilliardState {
    pub fn new(fam: &ConfocalFamily, position: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        let len = velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len < 1e-300 {
            return Err(Error::InvalidInput("zero velocity".into()));
        }
        let velocity: Vec<f64> = velocity.iter().map(|v| v / len).collect();
        let jacobi = jacobi_coordinates(fam, &position)?;
        Ok(BilliardState { position, velocity, jacobi })
    }
}

/// The d real confocal parameters through a point, sorted descending, found
/// by bisection on the interlacing intervals
/// (a_2, a_1), ..., (a_d, a_{d-1}), (-inf, a_d).
pub fn jacobi_coordinates(fam: &ConfocalFamily, point: &[f64]) -> Result<Vec<f64>> {
    let d = fam.dim();
    if point.len() != d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if point.iter().any(|x| x.abs() < 1e-10) {
        return Err(Error::DegeneratePoint);
    }
    let a = fam.axes();
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        // On (a_{i+1}, a_i) the residual runs from -inf to +inf; left of a_d
        // it runs from -1 up to +inf.
        let (mut lo, mut hi) = if i + 1 < d {
            let width = a[i] - a[i + 1];
            (a[i + 1] + 1e-13 * width, a[i] - 1e-13 * width)
        } else {
            let mut lo = a[d - 1] - 1.0;
            let mut tries = 0;
            while fam.quadric_residual(lo, point) > 0.0 {
                lo = a[d - 1] - 2.0 * (a[d - 1] - lo);
                tries += 1;
                if tries > 200 {
                    return Err(Error::DegeneratePoint);
                }
            }
            (lo, a[d - 1] - 1e-13)
        };
        if fam.quadric_residual(lo, point) > 0.0 || fam.quadric_residual(hi, point) < 0.0 {
            return Err(Error::DegeneratePoint);
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if fam.quadric_residual(m, point) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// The point in the positive orthant with the given confocal parameters:
/// x_i^2 = prod_j (a_i - lambda_j) / prod_{k != i} (a_i - a_k).
pub fn point_from_jacobi(fam: &ConfocalFamily, lambda: &[f64]) -> Vec<f64> {
    let a = fam.axes();
    let d = fam.dim();
    (0..d)
        .map(|i| {
            let mut num = 1.0;
            for &l in lambda {
                num *= a[i] - l;
            }
            let mut den = 1.0;
            for k in 0..d {
                if k != i {
                    den *= a[i] - a[k];
                }
            }
            (num / den).max(0.0).sqrt()
        })
        .collect()
}

/// Mirror reflection in the tangent hyperplane of Q_beta at the state's
/// position.
pub fn reflect(fam: &ConfocalFamily, state: &BilliardState, beta: f64) -> Result<BilliardState> {
    let res = fam.quadric_residual(beta, &state.position);
    if res.abs() > 1e-10 {
        return Err(Error::OffQuadric(res.abs()));
    }
    let n = fam.unit_normal(beta, &state.position);
    let vn: f64 = state.velocity.iter().zip(&n).map(|(v, n)| v * n).sum();
    let velocity: Vec<f64> = state
        .velocity
        .iter()
        .zip(&n)
        .map(|(v, n)| v - 2.0 * vn * n)
        .collect();
    Ok(BilliardState {
        position: state.position.clone(),
        velocity,
        jacobi: state.jacobi.clone(),
    })
}

/// The d-1 confocal parameters of quadrics tangent to the line p + t e: the
/// roots of F(l) = (B^2 - 4AC)(l) prod_i (a_i - l), where A, B, C are the
/// coefficients of the restriction of Q_l to the line.  The diagonal i = j
/// contributions of B^2 and -4AC cancel, leaving a degree d-1 polynomial.
pub fn caustics_of_line(fam: &ConfocalFamily, point: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
    let d = fam.dim();
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len < 1e-300 {
        return Err(Error::InvalidInput("zero direction".into()));
    }
    let e: Vec<f64> = dir.iter().map(|v| v / len).collect();
    let a = fam.axes();
    let linear = |root: f64| vec![C::new(root, 0.0), C::new(-1.0, 0.0)]; // (a_i - l)
    let mut f = vec![C::new(0.0, 0.0)];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut part = vec![C::new(1.0, 0.0)];
            for k in 0..d {
                if k != i && k != j {
                    part = poly::mul(&part, &linear(a[k]));
                }
            }
            let cross = 4.0 * point[i] * e[i] * point[j] * e[j] - 4.0 * e[i] * e[i] * point[j] * point[j];
            poly::add_scaled(&mut f, &part, C::new(cross, 0.0));
        }
        let mut part = vec![C::new(1.0, 0.0)];
        for k in 0..d {
            if k != i {
                part = poly::mul(&part, &linear(a[k]));
            }
        }
        poly::add_scaled(&mut f, &part, C::new(4.0 * e[i] * e[i], 0.0));
    }
    let trimmed = poly::trim(&f, 1e-12);
    if trimmed.len() != d {
        return Err(Error::TangencyDegenerate);
    }
    let roots = poly::roots(&trimmed)?;
    let mut out = Vec::with_capacity(d - 1);
    for r in roots {
        if r.im.abs() > 1e-7 * (1.0 + r.re.abs()) {
            return Err(Error::TangencyDegenerate);
        }
        out.push(r.re);
    }
    let as_c: Vec<C> = out.iter().map(|&r| C::new(r, 0.0)).collect();
    if out.len() > 1 && poly::min_root_separation(&as_c) < 1e-10 {
        return Err(Error::TangencyDegenerate);
    }
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(out)
}

/// One bounce of a trajectory.
#[derive(Clone, Debug)]
pub struct Bounce {
    pub target_beta: f64,
    pub position: Vec<f64>,
    pub velocity_out: Vec<f64>,
    pub jacobi: Vec<f64>,
    pub caustics: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: BilliardState,
    pub bounces: Vec<Bounce>,
}

impl Trajectory {
    pub fn end_position(&self) -> &[f64] {
        &self.bounces.last().unwrap().position
    }
}

/// Runs `rounds` cycles of the bounce schedule beta_1 -> ... -> beta_{d-1}.
/// Each leg advances to the first forward crossing of the target quadric in
/// the direction the signature demands (exiting for an inside bounce,
/// entering for an outside bounce) and verifies the extremum classification
/// of the smallest Jacobi coordinate at the bounce.
pub fn run_game(
    fam: &ConfocalFamily,
    spec: &GameSpec,
    start: &BilliardState,
    rounds: usize,
) -> Result<Trajectory> {
    let mut pos = start.position.clone();
    let mut vel = start.velocity.clone();
    let mut bounces = Vec::with_capacity(rounds * spec.betas.len());
    for _ in 0..rounds {
        for (s, &beta) in spec.betas.iter().enumerate() {
            let inside = spec.signature[s] == 1;
            let t = next_hit(fam, &pos, &vel, beta, inside)?;
            let new_pos: Vec<f64> = pos.iter().zip(&vel).map(|(p, v)| p + t * v).collect();
            let state = BilliardState::new(fam, new_pos.clone(), vel.clone())?;
            let reflected = reflect(fam, &state, beta)?;
            // Extremum check on a three-point sample around the bounce.
            let delta = 1e-5 * t.max(1e-3);
            let before: Vec<f64> = pos
                .iter()
                .zip(&vel)
                .map(|(p, v)| p + (t - delta) * v)
                .collect();
            let after: Vec<f64> = new_pos
                .iter()
                .zip(&reflected.velocity)
                .map(|(p, v)| p + delta * v)
                .collect();
            let lb = jacobi_coordinates(fam, &before)?;
            let la = jacobi_coordinates(fam, &after)?;
            let ld = fam.dim() - 1;
            let ok = if inside {
                lb[ld] > beta && la[ld] > beta
            } else {
                lb[ld] < beta && la[ld] < beta
            };
            if !ok {
                return Err(Error::SignatureViolation {
                    beta,
                    expected: if inside { "local minimum" } else { "local maximum" },
                });
            }
            let caustics = caustics_of_line(fam, &new_pos, &reflected.velocity)?;
            bounces.push(Bounce {
                target_beta: beta,
                position: new_pos.clone(),
                velocity_out: reflected.velocity.clone(),
                jacobi: state.jacobi.clone(),
                caustics,
            });
            pos = new_pos;
            vel = reflected.velocity;
        }
    }
    Ok(Trajectory { start: start.clone(), bounces })
}

/// First forward parameter t at which p + t e crosses Q_beta in the required
/// direction (the sign of the along-line derivative of the quadric residual).
fn next_hit(fam: &ConfocalFamily, p: &[f64], e: &[f64], beta: f64, inside: bool) -> Result<f64> {
    let mut qa = 0.0;
    let mut qb = 0.0;
    let mut qc = -1.0;
    for i in 0..fam.dim() {
        let w = fam.axes()[i] - beta;
        qa += e[i] * e[i] / w;
        qb += 2.0 * p[i] * e[i] / w;
        qc += p[i] * p[i] / w;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return Err(Error::NoIntersection);
    }
    let sq = disc.sqrt();
    let mut roots = [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)];
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &t in roots.iter() {
        if t <= 1e-9 {
            continue;
        }
        let slope = 2.0 * qa * t + qb;
        if (inside && slope > 0.0) || (!inside && slope < 0.0) {
            return Ok(t);
        }
    }
    Err(Error::NoIntersection)
}

/// The genus d-1 spectral curve nu^2 = prod (l - a_i) prod (l - alpha_j)
/// with its canonical frame.
pub struct SpectralCurve {
    pub branch: Vec<f64>,
    pub frame: CurveFrame,
}

pub fn spectral_curve(
    fam: &ConfocalFamily,
    alphas: &[f64],
    quad: QuadratureSpec,
) -> Result<SpectralCurve> {
    let mut branch: Vec<f64> = fam.axes().to_vec();
    branch.extend_from_slice(alphas);
    let pts: Vec<C> = branch.iter().map(|&b| C::new(b, 0.0)).collect();
    let config = BranchConfiguration::new(pts)?;
    let cycles = CycleBasis::canonical(&config)?;
    let frame = CurveFrame::build(config, cycles, quad)?;
    Ok(SpectralCurve { branch, frame })
}

impl SpectralCurve {
    /// P_beta = (beta, i_s sqrt(P(beta))); the sign i_s selects the sheet in
    /// the canonical labelling.
    pub fn boundary_point(&self, beta: f64, sign: i8) -> Result<SurfacePoint> {
        self.frame.point(C::new(beta, 0.0), sign)
    }
}

#[derive(Clone, Debug)]
pub struct PeriodicityReport {
    /// Per-coordinate distance of the Abel sum to (1/n) Lambda, in lattice
    /// units.
    pub defect: Vec<f64>,
    pub defect_norm: f64,
    pub verdict: bool,
    /// Raw lattice coordinates of the Abel sum.
    pub coords: (Vec<f64>, Vec<f64>),
}

/// Periodicity criterion: the game is periodic iff
/// sum_s A(P_{beta_s}) lies in (1/n) Lambda.
pub fn periodicity_check(
    fam: &ConfocalFamily,
    spec: &GameSpec,
    alphas: &[f64],
    n: u32,
    quad: QuadratureSpec,
) -> Result<PeriodicityReport> {
    let curve = spectral_curve(fam, alphas, quad)?;
    periodicity_check_on(&curve, spec, n)
}

pub fn periodicity_check_on(
    curve: &SpectralCurve,
    spec: &GameSpec,
    n: u32,
) -> Result<PeriodicityReport> {
    let g = curve.frame.genus();
    let mut sum = vec![C::new(0.0, 0.0); g];
    for (s, &beta) in spec.betas.iter().enumerate() {
        let p = curve.boundary_point(beta, spec.signature[s])?;
        let a = curve.frame.abel_map(&p)?;
        for j in 0..g {
            sum[j] += a[j];
        }
    }
    let (alpha_c, beta_c) = curve.frame.lattice_coords(&sum);
    let nn = n as f64;
    let mut defect = Vec::with_capacity(2 * g);
    for v in alpha_c.iter().chain(beta_c.iter()) {
        let scaled = v * nn;
        defect.push((scaled - scaled.round()) / nn);
    }
    let defect_norm = defect.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(PeriodicityReport {
        defect,
        defect_norm,
        verdict: defect_norm < 1e-6,
        coords: (alpha_c, beta_c),
    })
}

#[derive(Clone, Debug)]
pub struct CayleyReport {
    pub singular_values: Vec<f64>,
    pub rank_threshold: f64,
    pub verdict: bool,
}

/// Cayley-type condition for a trajectory closing after m bounces off each
/// of two ellipsoids (d = 3): the (m-1) x (m-2) matrix of derivatives
/// f_j^(r)(P_{beta_2}) has rank < m-2, with
/// f_j = [nu - B_0 - ... - B_{j+1}(l - beta_1)^{j+1}] / l^{j+1}
/// and nu = B_0 + B_1 (l - beta_1) + ... the expansion around the point
/// symmetric to P_{beta_1} under the involution (sheet with
/// nu(beta_1) = -i_1 sqrt(P(beta_1))).  All coefficients and derivatives are
/// extracted with Cauchy integrals on circles avoiding the branch points.
pub fn cayley_rank_d3(
    fam: &ConfocalFamily,
    beta1: f64,
    beta2: f64,
    sig: (i8, i8),
    alphas: &[f64],
    m: usize,
    quad: QuadratureSpec,
) -> Result<CayleyReport> {
    if fam.dim() != 3 {
        return Err(Error::InvalidInput("cayley_rank_d3 requires d = 3".into()));
    }
    if m < 3 {
        return Err(Error::InvalidInput("need m >= 3".into()));
    }
    let curve = spectral_curve(fam, alphas, quad)?;
    let branch = &curve.branch;

    let p1 = curve.boundary_point(beta1, -sig.0)?;
    let b1 = C::new(beta1, 0.0);
    let r1 = expansion_radius(branch, beta1, &[])?;
    let samples1 = circle_samples(branch, b1, p1.v, r1, 1024)?;
    let coeffs = taylor_from_samples(&samples1, b1, m + 2);

    let p2 = curve.boundary_point(beta2, sig.1)?;
    let b2 = C::new(beta2, 0.0);
    let r2 = expansion_radius(branch, beta2, &[0.0, beta1])?;
    let samples2 = circle_samples(branch, b2, p2.v, r2, 1024)?;

    let rows = m - 1;
    let cols = m - 2;
    let mut mat = nalgebra::DMatrix::from_element(rows, cols, C::new(0.0, 0.0));
    let nquad = samples2.len();
    for (l, nu) in samples2 {
        let w = l - b2;
        let dl = C::new(0.0, 1.0) * w * (2.0 * std::f64::consts::PI / nquad as f64);
        let mut pw = C::new(1.0, 0.0);
        let mut partial = C::new(0.0, 0.0);
        let mut poly_parts = Vec::with_capacity(cols);
        for (idx, bc) in coeffs.iter().enumerate().take(cols + 2) {
            partial += bc * pw;
            pw *= l - b1;
            if idx >= 2 {
                // after adding B_0..B_{j+1} with j+1 = idx, i.e. j = idx-1
                poly_parts.push(partial);
            }
        }
        for j in 1..=cols {
            let fj = (nu - poly_parts[j - 1]) / l.powu(j as u32 + 1);
            for r in 1..=rows {
                let factor = factorial(r) / C::new(0.0, 2.0 * std::f64::consts::PI);
                mat[(r - 1, j - 1)] += factor * fj / w.powu(r as u32 + 1) * dl;
            }
        }
    }

    let svals = singular_values(&mat);
    let smax = svals.iter().copied().fold(0.0f64, f64::max);
    let smin = svals.iter().copied().fold(f64::INFINITY, f64::min);
    let rank_threshold = 1e-8 * smax;
    Ok(CayleyReport {
        singular_values: svals,
        rank_threshold,
        verdict: smin < rank_threshold,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Radius of a circle around `center` clearing the branch points and the
/// extra singular points.
fn expansion_radius(branch: &[f64], center: f64, extra: &[f64]) -> Result<f64> {
    let mut r = f64::INFINITY;
    for &b in branch.iter().chain(extra.iter()) {
        let d = (b - center).abs();
        if d > 1e-12 {
            r = r.min(0.5 * d);
        } else if extra.contains(&b) {
            continue;
        } else {
            return Err(Error::ExpansionRadiusTooSmall(format!(
                "{center} coincides with a branch point"
            )));
        }
    }
    if !r.is_finite() || r < 1e-9 {
        return Err(Error::ExpansionRadiusTooSmall(format!(
            "no room for an expansion circle around {center}"
        )));
    }
    Ok(r)
}

/// Samples (l, nu(l)) on the circle |l - center| = r, with nu continued
/// around the circle from the branch fixed by nu(center) = v_center; errors
/// if the continuation does not close up (a branch point inside the circle).
fn circle_samples(
    branch: &[f64],
    center: C,
    v_center: C,
    r: f64,
    n: usize,
) -> Result<Vec<(C, C)>> {
    let nu_raw = |l: C, near: C| -> C {
        let mut prod = C::new(1.0, 0.0);
        for &b in branch {
            prod *= l - C::new(b, 0.0);
        }
        let w = prod.sqrt();
        if (w - near).norm() <= (w + near).norm() {
            w
        } else {
            -w
        }
    };
    // Walk radially out to the circle to pick up the branch.
    let steps = 64;
    let mut v = v_center;
    for s in 1..=steps {
        let l = center + C::new(r * s as f64 / steps as f64, 0.0);
        v = nu_raw(l, v);
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let l = center + C::new(0.0, ang).exp() * r;
        v = nu_raw(l, v);
        out.push((l, v));
    }
    let closing = nu_raw(out[0].0, v);
    if (closing - out[0].1).norm() > 1e-8 * closing.norm() {
        return Err(Error::ExpansionRadiusTooSmall(
            "nu is not single-valued on the expansion circle".into(),
        ));
    }
    Ok(out)
}

/// Taylor coefficients around `center` from closed equispaced samples.
fn taylor_from_samples(samples: &[(C, C)], center: C, count: usize) -> Vec<C> {
    let n = samples.len();
    let mut coeffs = vec![C::new(0.0, 0.0); count];
    for (l, v) in samples {
        let w = l - center;
        let dl = C::new(0.0, 1.0) * w * (2.0 * std::f64::consts::PI / n as f64);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c += v / w.powu(j as u32 + 1) * dl;
        }
    }
    for c in &mut coeffs {
        *c /= C::new(0.0, 2.0 * std::f64::consts::PI);
    }
    coeffs
}

/// Singular values of a complex matrix through its real 2m x 2n embedding
/// (each singular value of the complex matrix appears twice there).
fn singular_values(m: &nalgebra::DMatrix<C>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut real = nalgebra::DMatrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i, j + cols)] = -z.im;
            real[(i + rows, j)] = z.im;
            real[(i + rows, j + cols)] = z.re;
        }
    }
    let svd = real.svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s.into_iter().step_by(2).collect()
}

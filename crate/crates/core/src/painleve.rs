//! Painlevé VI residual verification, the Okamoto transformation between the
//! (0,0,0,1/2) and (1/8,-1/8,1/8,3/8) parameter sets, and the grid pipelines
//! that produce y0(x) (projection of the inverted divisor point) and y(x)
//! (projection of the zeros of Omega) on the family v^2 = u(u-1)(u-x).

use num_complex::Complex64 as C;

use crate::curve::{BranchConfiguration, CurveFrame, CycleBasis, QuadratureSpec};
use crate::error::{Error, Result};
use crate::inversion::{invert, Divisor, LatticeCoordinates};
use crate::omega::{build_omega, OmegaDifferential};

/// Parameters (alpha, beta, gamma, delta) of Painlevé VI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PviParameters {
    pub alpha: C,
    pub beta: C,
    pub gamma: C,
    pub delta: C,
}

impl PviParameters {
    /// (0, 0, 0, 1/2) — satisfied by the Picard solution y0.
    pub fn picard() -> Self {
        PviParameters {
            alpha: C::new(0.0, 0.0),
            beta: C::new(0.0, 0.0),
            gamma: C::new(0.0, 0.0),
            delta: C::new(0.5, 0.0),
        }
    }

    /// (1/8, -1/8, 1/8, 3/8) — satisfied by the zero of Omega.
    pub fn okamoto_image() -> Self {
        PviParameters {
            alpha: C::new(0.125, 0.0),
            beta: C::new(-0.125, 0.0),
            gamma: C::new(0.125, 0.0),
            delta: C::new(0.375, 0.0),
        }
    }
}

/// y = y0 + y0(y0-1)(y0-x) / (x(x-1) y0' - y0(y0-1)).
pub fn okamoto_transform(y0: C, dy0_dx: C, x: C) -> Result<C> {
    let den = x * (x - 1.0) * dy0_dx - y0 * (y0 - 1.0);
    let scale = (x.norm() + y0.norm() + 1.0).powi(2);
    if den.norm() <= 1e-12 * scale {
        return Err(Error::OkamotoSingularity { x, den: den.norm() });
    }
    Ok(y0 + y0 * (y0 - 1.0) * (y0 - x) / den)
}

/// A solution sampled over a real grid.
#[derive(Clone, Debug)]
pub struct SolutionSample {
    pub xs: Vec<f64>,
    pub y: Vec<C>,
    pub y0: Vec<C>,
    /// Indices where the Okamoto denominator or the exclusion rule fired.
    pub excluded: Vec<usize>,
    pub provenance: String,
}

impl SolutionSample {
    fn validate(&self) -> Result<f64> {
        let n = self.xs.len();
        if n < 5 {
            return Err(Error::GridTooCoarse(n));
        }
        let h = self.xs[1] - self.xs[0];
        for w in self.xs.windows(2) {
            if (w[1] - w[0] - h).abs() > 1e-9 * h.abs() {
                return Err(Error::InvalidInput("grid must be uniform".into()));
            }
        }
        for &x in &self.xs {
            if x.abs() < 1e-6 || (x - 1.0).abs() < 1e-6 {
                return Err(Error::InvalidInput(
                    "grid points must stay 1e-6 away from {0, 1}".into(),
                ));
            }
        }
        Ok(h)
    }
}

/// Right-hand side of Painlevé VI for given (x, y, y').
pub fn pvi_rhs(x: C, y: C, yp: C, p: &PviParameters) -> C {
    let half = C::new(0.5, 0.0);
    let t1 = half * (1.0 / y + 1.0 / (y - 1.0) + 1.0 / (y - x)) * yp * yp;
    let t2 = (1.0 / x + 1.0 / (x - 1.0) + 1.0 / (y - x)) * yp;
    let t3 = y * (y - 1.0) * (y - x) / (x * x * (x - 1.0) * (x - 1.0))
        * (p.alpha + p.beta * x / (y * y) + p.gamma * (x - 1.0) / ((y - 1.0) * (y - 1.0))
            + p.delta * x * (x - 1.0) / ((y - x) * (y - x)));
    t1 - t2 + t3
}

/// Per-point residuals |y'' - RHS| with fourth-order central stencils on the
/// `y` column of the sample; points whose stencil touches an excluded index
/// are skipped (their residual is reported as 0 and listed in `skipped`).
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub max: f64,
    pub skipped: Vec<usize>,
}

pub fn pvi_residual(sample: &SolutionSample, params: &PviParameters) -> Result<ResidualReport> {
    residual_of(&sample.xs, &sample.y, &sample.excluded, params)
}

/// Residual of the y0 column against the Picard parameter set.
pub fn pvi_residual_y0(sample: &SolutionSample, params: &PviParameters) -> Result<ResidualReport> {
    residual_of(&sample.xs, &sample.y0, &sample.excluded, params)
}

fn residual_of(
    xs: &[f64],
    y: &[C],
    excluded: &[usize],
    params: &PviParameters,
) -> Result<ResidualReport> {
    let sample = SolutionSample {
        xs: xs.to_vec(),
        y: y.to_vec(),
        y0: y.to_vec(),
        excluded: excluded.to_vec(),
        provenance: String::new(),
    };
    let h = sample.validate()?;
    let n = xs.len();
    let mut residuals = vec![0.0; n];
    let mut skipped = Vec::new();
    let mut max = 0.0f64;
    for i in 0..n {
        if i < 2 || i + 2 >= n {
            skipped.push(i);
            continue;
        }
        if (i - 2..=i + 2).any(|j| excluded.contains(&j)) {
            skipped.push(i);
            continue;
        }
        let yp = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
        let ypp = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2])
            / (12.0 * h * h);
        let x = C::new(xs[i], 0.0);
        let r = (ypp - pvi_rhs(x, y[i], yp, params)).norm();
        residuals[i] = r;
        max = max.max(r);
    }
    Ok(ResidualReport { residuals, max, skipped })
}

/// Frame of the curve v^2 = u(u-1)(u-x) with the branch points in the paper
/// order (u_1, u_2, u_3) = (0, 1, x).
pub fn elliptic_frame(x: C, quad: QuadratureSpec) -> Result<CurveFrame> {
    let config = BranchConfiguration::new(vec![C::new(0.0, 0.0), C::new(1.0, 0.0), x])?;
    let cycles = CycleBasis::canonical(&config)?;
    CurveFrame::build(config, cycles, quad)
}

/// One fully assembled grid point of the elliptic pipeline.
pub struct PipelinePoint {
    pub x: f64,
    pub frame: CurveFrame,
    pub divisor: Divisor,
    pub y0: C,
    pub y: C,
    pub y_okamoto: Option<C>,
    pub dy0_dx: C,
}

/// dy0/dx = -(1/4) Omega(P_x) omega(P_x) / omega(Q_0); the ramification-branch
/// signs cancel in the product Omega(P_x) omega(P_x).
pub fn dy0_dx_analytic(om: &OmegaDifferential<'_>, divisor: &Divisor) -> Result<C> {
    let frame = om.frame;
    let om_px = om.eval_ramification(3)?;
    let w_px = frame.omega_ramification(3)?[0];
    let w_q0 = frame.omega_at(&divisor.points()[0])[0];
    Ok(-0.25 * om_px * w_px / w_q0)
}

/// Runs the pipeline at one x, seeding the inversion from the previous point.
pub fn pipeline_point(
    x: f64,
    coords: &LatticeCoordinates,
    quad: QuadratureSpec,
    guess: Option<&Divisor>,
) -> Result<PipelinePoint> {
    let frame = elliptic_frame(C::new(x, 0.0), quad)?;
    let divisor = invert(&frame, coords, guess)?;
    let y0 = divisor.points()[0].u;
    let om = build_omega(&frame, divisor.clone(), coords.clone())?;
    let zeros = om.find_zeros()?;
    let y = zeros.zs[0];
    let dy0 = dy0_dx_analytic(&om, &divisor)?;
    let xc = C::new(x, 0.0);
    let y_okamoto = if excluded_y0(y0, xc) {
        None
    } else {
        okamoto_transform(y0, dy0, xc).ok()
    };
    drop(om);
    Ok(PipelinePoint { x, frame, divisor, y0, y, y_okamoto, dy0_dx: dy0 })
}

fn excluded_y0(y0: C, x: C) -> bool {
    y0.norm() < 1e-8 || (y0 - 1.0).norm() < 1e-8 || (y0 - x).norm() < 1e-8
}

/// Full solve over a real grid, with divisor continuation along the grid.
pub struct PviRun {
    pub sample: SolutionSample,
    pub y_okamoto: Vec<Option<C>>,
    pub dy0_dx: Vec<C>,
}

pub fn solve_elliptic_grid(
    coords: &LatticeCoordinates,
    xs: &[f64],
    quad: QuadratureSpec,
) -> Result<PviRun> {
    let mut y = Vec::with_capacity(xs.len());
    let mut y0 = Vec::with_capacity(xs.len());
    let mut y_ok = Vec::with_capacity(xs.len());
    let mut dy0s = Vec::with_capacity(xs.len());
    let mut excluded = Vec::new();
    let mut guess: Option<Divisor> = None;
    for (i, &x) in xs.iter().enumerate() {
        let pt = pipeline_point(x, coords, quad, guess.as_ref())?;
        if pt.y_okamoto.is_none() {
            excluded.push(i);
        }
        y.push(pt.y);
        y0.push(pt.y0);
        y_ok.push(pt.y_okamoto);
        dy0s.push(pt.dy0_dx);
        guess = Some(pt.divisor);
    }
    Ok(PviRun {
        sample: SolutionSample {
            xs: xs.to_vec(),
            y,
            y0,
            excluded,
            provenance: "omega-zero".into(),
        },
        y_okamoto: y_ok,
        dy0_dx: dy0s,
    })
}

/// Hitchin's rational case: c_1 = m/k, c_2 = n/k with k >= 3 and the pair not
/// simultaneously half-integer.
pub fn hitchin_case(
    m: i64,
    n: i64,
    k: i64,
    xs: &[f64],
    quad: QuadratureSpec,
) -> Result<PviRun> {
    if k < 3 {
        return Err(Error::InvalidInput("hitchin_case requires k >= 3".into()));
    }
    let coords = LatticeCoordinates::new(
        vec![C::new(m as f64 / k as f64, 0.0)],
        vec![C::new(n as f64 / k as f64, 0.0)],
    )?;
    let mut run = solve_elliptic_grid(&coords, xs, quad)?;
    run.sample.provenance = format!("hitchin-rational({m},{n},{k})");
    Ok(run)
}

/// Lattice distance of k * AbelMap(Q_0) — zero for a point of order k.
pub fn torsion_defect(frame: &CurveFrame, divisor: &Divisor, k: i64) -> Result<f64> {
    let a = frame.abel_map(&divisor.points()[0])?;
    let scaled: Vec<C> = a.iter().map(|z| z * k as f64).collect();
    Ok(frame.lattice_distance(&scaled))
}

//! The third-kind differential Omega with simple poles of residue +1/-1 at
//! the divisor points and their involutions, prescribed a-periods -4 pi i c_2
//! and b-periods 4 pi i c_1.  It is stored through the divisor-adapted basis
//! v_j of holomorphic differentials as
//!     Omega(P) = sum_j v_j(P) (1/(u - q_j) + alpha_j),
//! which is rational in u once the divisor is known; evaluation, zero finding
//! and the residue matrices all read off this representation.

use num_complex::Complex64 as C;

use crate::curve::{CurveFrame, SurfacePoint};
use crate::error::{Error, Result};
use crate::inversion::{Divisor, LatticeCoordinates};
use crate::poly;

const FOUR_PI_I: C = C::new(0.0, 4.0 * std::f64::consts::PI);

/// Evaluations at a ramification point sharing one square-root branch.
#[derive(Clone, Debug)]
pub struct RamificationData {
    pub phi: C,
    pub omega: C,
    pub v: Vec<C>,
}

/// Zeros of Omega (common u-coordinates of the involution-paired zeros).
#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub zs: Vec<C>,
    /// Set when the cleared numerator has nearly coincident roots; downstream
    /// Garnier output is then unreliable.
    pub near_degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct OmegaDifferential<'a> {
    pub frame: &'a CurveFrame,
    pub divisor: Divisor,
    pub coords: LatticeCoordinates,
    /// Normalisation coefficients alpha_j.
    pub alphas: Vec<C>,
    /// D_j = phi(Q_j) prod_{a != j} (q_j - q_a), the v_j denominators.
    denom: Vec<C>,
}

/// Solves the g x g a-period system for the alpha_j and returns the built
/// differential.  The divisor must satisfy the admissibility conditions.
pub fn build_omega<'a>(
    frame: &'a CurveFrame,
    divisor: Divisor,
    coords: LatticeCoordinates,
) -> Result<OmegaDifferential<'a>> {
    divisor.check_admissible(frame)?;
    let g = frame.genus();
    let q = divisor.q();
    let denom: Vec<C> = (0..g)
        .map(|j| {
            let mut d = frame.phi_at(&divisor.points()[j]);
            for a in 0..g {
                if a != j {
                    d *= q[j] - q[a];
                }
            }
            d
        })
        .collect();

    // Period matrix V[(k, j)] = oint_{a_k} v_j and the singular parts
    // S[k] = oint_{a_k} sum_j v_j/(u - q_j).
    let mut vmat = nalgebra::DMatrix::from_element(g, g, C::new(0.0, 0.0));
    let mut svec = vec![C::new(0.0, 0.0); g];
    for k in 0..g {
        let qk = q.clone();
        let dk = denom.clone();
        let vals = frame.a_period_vec(k, &q, g + 1, move |u, v| {
            let mut out = Vec::with_capacity(g + 1);
            let mut sing = C::new(0.0, 0.0);
            for j in 0..g {
                let mut prod = C::new(1.0, 0.0);
                for a in 0..g {
                    if a != j {
                        prod *= u - qk[a];
                    }
                }
                let vj = prod / (dk[j] * v);
                out.push(vj);
                sing += vj / (u - qk[j]);
            }
            out.push(sing);
            out
        })?;
        for j in 0..g {
            vmat[(k, j)] = vals[j];
        }
        svec[k] = vals[g];
    }

    let inv = vmat.clone().try_inverse();
    let inv = match inv {
        Some(m) => m,
        None => return Err(Error::SingularAlphaSystem(f64::INFINITY)),
    };
    let cond = mat_one_norm(&vmat) * mat_one_norm(&inv);
    if cond > 1e12 {
        return Err(Error::SingularAlphaSystem(cond));
    }
    let rhs = nalgebra::DVector::from_fn(g, |k, _| -FOUR_PI_I * coords.c2[k] - svec[k]);
    let alphas: Vec<C> = (&inv * rhs).iter().copied().collect();

    Ok(OmegaDifferential { frame, divisor, coords, alphas, denom })
}

fn mat_one_norm(m: &nalgebra::DMatrix<C>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl<'a> OmegaDifferential<'a> {
    pub fn genus(&self) -> usize {
        self.frame.genus()
    }

    pub fn q(&self) -> Vec<C> {
        self.divisor.q()
    }

    pub fn denominators(&self) -> &[C] {
        &self.denom
    }

    /// v_j(P) at a regular point, local parameter u.
    pub fn v_basis_at(&self, p: &SurfacePoint) -> Vec<C> {
        let q = self.q();
        let g = self.genus();
        (0..g)
            .map(|j| {
                let mut prod = C::new(1.0, 0.0);
                for a in 0..g {
                    if a != j {
                        prod *= p.u - q[a];
                    }
                }
                prod / (self.denom[j] * p.v)
            })
            .collect()
    }

    /// v_j(P_n) in the standard local parameter sqrt(u - u_n) (the branch of
    /// phi(P_n) is the frame's principal choice).
    pub fn v_basis_ramification(&self, n: usize) -> Result<Vec<C>> {
        let phi_n = self.frame.phi_ramification(n)?;
        Ok(self.v_basis_ram_with(n, phi_n))
    }

    fn v_basis_ram_with(&self, n: usize, phi_n: C) -> Vec<C> {
        let un = self.frame.branch()[n - 1];
        let q = self.q();
        let g = self.genus();
        (0..g)
            .map(|j| {
                let mut prod = C::new(1.0, 0.0);
                for a in 0..g {
                    if a != j {
                        prod *= un - q[a];
                    }
                }
                prod * phi_n / self.denom[j]
            })
            .collect()
    }

    /// v_j(P_infinity) = -2 / D_j in the local parameter u^{-1/2}.
    pub fn v_basis_infinity(&self) -> Vec<C> {
        self.denom.iter().map(|d| -2.0 / d).collect()
    }

    /// Omega at a regular point off the divisor and branch points.
    pub fn eval_regular(&self, p: &SurfacePoint) -> Result<C> {
        let q = self.q();
        let tol = 1e-10 * self.frame.min_gap();
        if q.iter().any(|&qj| (p.u - qj).norm() < tol) {
            return Err(Error::EvaluationAtPole(p.u));
        }
        if self.frame.branch().iter().any(|&b| (p.u - b).norm() < tol) {
            return Err(Error::EvaluationAtPole(p.u));
        }
        let vb = self.v_basis_at(p);
        let mut val = C::new(0.0, 0.0);
        for j in 0..self.genus() {
            val += vb[j] * (1.0 / (p.u - q[j]) + self.alphas[j]);
        }
        Ok(val)
    }

    /// Omega(P_n) in the standard local parameter at the ramification point.
    pub fn eval_ramification(&self, n: usize) -> Result<C> {
        let phi_n = self.frame.phi_ramification(n)?;
        Ok(self.eval_ram_with(n, phi_n))
    }

    /// Same with the square-root branch at P_n matched to `anchor`
    /// (finite-difference harnesses across nearby configurations).
    pub fn eval_ramification_anchored(&self, n: usize, anchor_phi: C) -> Result<C> {
        let phi_n = self.frame.phi_ramification_anchored(n, anchor_phi)?;
        Ok(self.eval_ram_with(n, phi_n))
    }

    fn eval_ram_with(&self, n: usize, phi_n: C) -> C {
        let un = self.frame.branch()[n - 1];
        let q = self.q();
        let vb = self.v_basis_ram_with(n, phi_n);
        let mut val = C::new(0.0, 0.0);
        for j in 0..self.genus() {
            val += vb[j] * (1.0 / (un - q[j]) + self.alphas[j]);
        }
        val
    }

    /// Everything the residue matrices need at P_n, computed with one shared
    /// square-root branch so products like Omega(P_n) phi(P_n) are
    /// branch-independent.
    pub fn ramification_data(&self, n: usize) -> Result<RamificationData> {
        let phi = self.frame.phi_ramification(n)?;
        let v = self.v_basis_ram_with(n, phi);
        let omega = {
            let un = self.frame.branch()[n - 1];
            let q = self.q();
            let mut val = C::new(0.0, 0.0);
            for j in 0..self.genus() {
                val += v[j] * (1.0 / (un - q[j]) + self.alphas[j]);
            }
            val
        };
        Ok(RamificationData { phi, omega, v })
    }

    /// Omega(P_infinity) = -2 sum_j alpha_j / D_j  (local parameter u^{-1/2}).
    pub fn eval_infinity(&self) -> C {
        let vinf = self.v_basis_infinity();
        self.alphas
            .iter()
            .zip(vinf.iter())
            .map(|(&a, &v)| a * v)
            .sum()
    }

    /// Coefficients of the cleared numerator N(u) with
    /// Omega/phi = N(u) / prod_a (u - q_a):
    /// N = sum_j [prod_{a != j}(u - q_a)] [prod_{a != j}(u - q_a) + alpha_j prod_a (u - q_a)] / D_j.
    pub fn numerator_poly(&self) -> Vec<C> {
        let q = self.q();
        let g = self.genus();
        let full = poly::from_roots(&q);
        let mut num: Vec<C> = vec![C::new(0.0, 0.0)];
        for j in 0..g {
            let others: Vec<C> = (0..g).filter(|&a| a != j).map(|a| q[a]).collect();
            let pj = poly::from_roots(&others);
            let mut inner = pj.clone();
            poly::add_scaled(&mut inner, &full, self.alphas[j]);
            let term = poly::mul(&pj, &inner);
            poly::add_scaled(&mut num, &term, 1.0 / self.denom[j]);
        }
        num
    }

    /// The 2g-1 u-coordinates of the involution-paired zeros of Omega.
    pub fn find_zeros(&self) -> Result<ZeroSet> {
        let g = self.genus();
        let num = self.numerator_poly();
        let trimmed = poly::trim(&num, 1e-11);
        if trimmed.len() != 2 * g {
            return Err(Error::RootFindingFailure(format!(
                "cleared numerator has degree {} instead of {}",
                trimmed.len() - 1,
                2 * g - 1
            )));
        }
        let mut zs = poly::roots(&trimmed)?;
        // Newton polish against the full-precision coefficients.
        let dnum = poly::derivative(&num);
        for z in &mut zs {
            for _ in 0..4 {
                let f = poly::eval(&num, *z);
                let d = poly::eval(&dnum, *z);
                if d.norm() < 1e-300 {
                    break;
                }
                *z -= f / d;
            }
        }
        zs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        let near_degenerate = poly::min_root_separation(&zs) < 1e-10;
        Ok(ZeroSet { zs, near_degenerate })
    }

    /// dq_j/du_k = -(1/4) Omega(P_k) v_j(P_k); the ramification-branch signs
    /// cancel in the product.
    pub fn dq_du(&self, j: usize, k: usize) -> Result<C> {
        let g = self.genus();
        if j == 0 || j > g {
            return Err(Error::InvalidIndex(j, g));
        }
        let om = self.eval_ramification(k)?;
        let vb = self.v_basis_ramification(k)?;
        Ok(-0.25 * om * vb[j - 1])
    }

    /// Recomputed a-periods of Omega (should equal -4 pi i c_2).
    pub fn a_periods(&self) -> Result<Vec<C>> {
        let q = self.q();
        let g = self.genus();
        (0..g)
            .map(|k| {
                let qk = q.clone();
                let dk = self.denom.clone();
                let al = self.alphas.clone();
                self.frame.a_period(k, &q, move |u, v| {
                    let mut val = C::new(0.0, 0.0);
                    for j in 0..qk.len() {
                        let mut prod = C::new(1.0, 0.0);
                        for a in 0..qk.len() {
                            if a != j {
                                prod *= u - qk[a];
                            }
                        }
                        val += prod / (dk[j] * v) * (1.0 / (u - qk[j]) + al[j]);
                    }
                    val
                })
            })
            .collect()
    }

    /// Recomputed b-periods of Omega (should equal 4 pi i c_1).
    pub fn b_periods(&self) -> Result<Vec<C>> {
        let q = self.q();
        let g = self.genus();
        (0..g)
            .map(|k| {
                let qk = q.clone();
                let dk = self.denom.clone();
                let al = self.alphas.clone();
                self.frame.b_period(k, &q, move |u, v| {
                    let mut val = C::new(0.0, 0.0);
                    for j in 0..qk.len() {
                        let mut prod = C::new(1.0, 0.0);
                        for a in 0..qk.len() {
                            if a != j {
                                prod *= u - qk[a];
                            }
                        }
                        val += prod / (dk[j] * v) * (1.0 / (u - qk[j]) + al[j]);
                    }
                    val
                })
            })
            .collect()
    }

    /// Rebuilds the normalisation coefficients from the periods seen by a
    /// symplectically transformed homology basis; the theorem this checks is
    /// that the outcome coincides with `self.alphas`.
    pub fn alphas_in_basis(&self, s: &crate::curve::SymplecticBlocks) -> Result<Vec<C>> {
        let g = self.genus();
        let q = self.q();
        // a- and b-periods of the v_j basis and of the singular parts.
        let mut va = nalgebra::DMatrix::from_element(g, g, C::new(0.0, 0.0));
        let mut vb = nalgebra::DMatrix::from_element(g, g, C::new(0.0, 0.0));
        let mut sa = vec![C::new(0.0, 0.0); g];
        let mut sb = vec![C::new(0.0, 0.0); g];
        for k in 0..g {
            let (qk, dk) = (q.clone(), self.denom.clone());
            let vals = self.frame.a_period_vec(k, &q, g + 1, move |u, v| {
                basis_and_singular(u, v, &qk, &dk)
            })?;
            for j in 0..g {
                va[(k, j)] = vals[j];
            }
            sa[k] = vals[g];
            let (qk, dk) = (q.clone(), self.denom.clone());
            let path = self.frame.b_contour(k, &q)?;
            let v0 = {
                // anchor on canonical sheet
                let start = path.start_point();
                let v1 = self.frame.canonical_v(start)?;
                v1
            };
            let (vals, _) = crate::quad::integrate_path_vec(
                &self.frame.quad.settings(),
                self.frame.branch(),
                &q,
                &path,
                v0,
                g + 1,
                move |u, v| basis_and_singular(u, v, &qk, &dk),
            )?;
            for j in 0..g {
                vb[(k, j)] = vals[j];
            }
            sb[k] = vals[g];
        }
        // New a-cycles: a~ = C b + D a, so periods transform accordingly.
        let cb = nalgebra::DMatrix::from_fn(g, g, |i, j| C::new(s.c[(i, j)] as f64, 0.0));
        let db = nalgebra::DMatrix::from_fn(g, g, |i, j| C::new(s.d[(i, j)] as f64, 0.0));
        let vnew = &cb * &vb + &db * &va;
        let snew: Vec<C> = (0..g)
            .map(|k| {
                (0..g)
                    .map(|m| cb[(k, m)] * sb[m] + db[(k, m)] * sa[m])
                    .sum()
            })
            .collect();
        let (_, c2p, _) = crate::curve::symplectic_transform(
            &self.coords.c1,
            &self.coords.c2,
            &self.frame.riemann,
            s,
        )?;
        let rhs = nalgebra::DVector::from_fn(g, |k, _| -FOUR_PI_I * c2p[k] - snew[k]);
        let sol = vnew
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularAlphaSystem(f64::INFINITY))?;
        Ok(sol.iter().copied().collect())
    }
}

fn basis_and_singular(u: C, v: C, q: &[C], denom: &[C]) -> Vec<C> {
    let g = q.len();
    let mut out = Vec::with_capacity(g + 1);
    let mut sing = C::new(0.0, 0.0);
    for j in 0..g {
        let mut prod = C::new(1.0, 0.0);
        for a in 0..g {
            if a != j {
                prod *= u - q[a];
            }
        }
        let vj = prod / (denom[j] * v);
        out.push(vj);
        sing += vj / (u - q[j]);
    }
    out.push(sing);
    out
}

//! Small dense complex polynomials (ascending coefficients) and root finding
//! by the Durand-Kerner iteration with a Newton polish, which is ample for
//! the degree <= 7 polynomials appearing in this crate.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

pub fn eval(coeffs: &[C], x: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn derivative(coeffs: &[C]) -> Vec<C> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

pub fn mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add_scaled(a: &mut Vec<C>, b: &[C], s: C) {
    if a.len() < b.len() {
        a.resize(b.len(), C::new(0.0, 0.0));
    }
    for (i, &y) in b.iter().enumerate() {
        a[i] += y * s;
    }
}

/// Monic polynomial with the given roots.
pub fn from_roots(roots: &[C]) -> Vec<C> {
    let mut out = vec![C::new(1.0, 0.0)];
    for &r in roots {
        out = mul(&out, &[-r, C::new(1.0, 0.0)]);
    }
    out
}

/// Trims trailing coefficients below `tol` relative to the largest one.
pub fn trim(coeffs: &[C], tol: f64) -> Vec<C> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut out = coeffs.to_vec();
    while out.len() > 1 && out.last().unwrap().norm() <= tol * scale {
        out.pop();
    }
    out
}

/// All complex roots, Durand-Kerner followed by a Newton polish per root.
pub fn roots(coeffs: &[C]) -> Result<Vec<C>> {
    let coeffs = trim(coeffs, 1e-14);
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    if lead.norm() == 0.0 {
        return Err(Error::RootFindingFailure("zero leading coefficient".into()));
    }
    let monic: Vec<C> = coeffs.iter().map(|c| c / lead).collect();
    if deg == 1 {
        return Ok(vec![-monic[0]]);
    }
    // Initial guesses on a circle of the Cauchy-bound radius.
    let radius = 1.0
        + monic[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let mut zs: Vec<C> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            C::new(radius * 0.7 * ang.cos(), radius * 0.7 * ang.sin())
        })
        .collect();
    for _ in 0..400 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = C::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= zs[i] - zs[j];
                }
            }
            if denom.norm() < 1e-300 {
                zs[i] += C::new(1e-8, 1e-8);
                continue;
            }
            let step = eval(&monic, zs[i]) / denom;
            zs[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius.max(1.0) {
            break;
        }
    }
    // Newton polish.
    let dcoeffs = derivative(&monic);
    for z in &mut zs {
        for _ in 0..8 {
            let f = eval(&monic, *z);
            let d = eval(&dcoeffs, *z);
            if d.norm() < 1e-300 {
                break;
            }
            let step = f / d;
            *z -= step;
            if step.norm() < 1e-15 * (z.norm() + 1.0) {
                break;
            }
        }
    }
    let worst = zs
        .iter()
        .map(|&z| eval(&monic, z).norm())
        .fold(0.0f64, f64::max);
    if !worst.is_finite() || worst > 1e-6 * radius.powi(deg as i32).max(1.0) {
        return Err(Error::RootFindingFailure(format!(
            "residual {worst:e} after polish"
        )));
    }
    Ok(zs)
}

/// Discriminant-style degeneracy measure: the minimum pairwise root distance
/// scaled by the root magnitude.
pub fn min_root_separation(roots: &[C]) -> f64 {
    let scale = roots.iter().map(|r| r.norm()).fold(1.0f64, f64::max);
    let mut min = f64::INFINITY;
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            min = min.min((roots[i] - roots[j]).norm() / scale);
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_roots() {
        let want = [C::new(1.0, 0.0), C::new(-2.0, 0.5), C::new(0.3, -0.7)];
        let poly = from_roots(&want);
        let mut got = roots(&poly).unwrap();
        for w in want {
            let i = got
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - w).norm().partial_cmp(&(b.1 - w).norm()).unwrap())
                .unwrap()
                .0;
            assert!((got[i] - w).norm() < 1e-12);
            got.remove(i);
        }
    }
}

//! Anchors the cycle and sheet conventions: intersection pairing, Riemann
//! matrix normalisation, the modular lambda function, Rauch variational
//! formula and the Abel map identities.

use isomono_core::curve::{
    intersection_number, BranchConfiguration, CurveFrame, CycleBasis, QuadratureSpec,
    SymplecticBlocks,
};
use isomono_core::tau::ThetaContext;
use isomono_core::C64 as C;

fn frame(points: Vec<C>) -> CurveFrame {
    let config = BranchConfiguration::new(points).unwrap();
    let cycles = CycleBasis::canonical(&config).unwrap();
    CurveFrame::build(config, cycles, QuadratureSpec::default()).unwrap()
}

fn elliptic(x: f64) -> CurveFrame {
    frame(vec![C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(x, 0.0)])
}

#[test]
fn intersection_pairing_is_symplectic_g1() {
    let f = elliptic(0.37);
    let branch = f.branch();
    let a = &f.cycles.a_paths[0];
    let b = &f.cycles.b_paths[0];
    let va = f.canonical_v(a.start_point()).unwrap();
    let vb = f.canonical_v(b.start_point()).unwrap();
    assert_eq!(intersection_number(branch, a, va, a, va), 0);
    assert_eq!(intersection_number(branch, b, vb, b, vb), 0);
    assert_eq!(intersection_number(branch, a, va, b, vb), 1);
}

#[test]
fn intersection_pairing_is_symplectic_g2() {
    let f = frame(vec![
        C::new(0.0, 0.0),
        C::new(1.0, 0.0),
        C::new(2.0, 0.0),
        C::new(3.0, 0.0),
        C::new(4.0, 0.0),
    ]);
    let branch = f.branch();
    for j in 0..2 {
        for k in 0..2 {
            let aj = &f.cycles.a_paths[j];
            let ak = &f.cycles.a_paths[k];
            let bj = &f.cycles.b_paths[j];
            let bk = &f.cycles.b_paths[k];
            let vaj = f.canonical_v(aj.start_point()).unwrap();
            let vak = f.canonical_v(ak.start_point()).unwrap();
            let vbj = f.canonical_v(bj.start_point()).unwrap();
            let vbk = f.canonical_v(bk.start_point()).unwrap();
            if j != k {
                assert_eq!(intersection_number(branch, aj, vaj, ak, vak), 0, "a{j} a{k}");
                assert_eq!(intersection_number(branch, bj, vbj, bk, vbk), 0, "b{j} b{k}");
            }
            let expect = if j == k { 1 } else { 0 };
            assert_eq!(
                intersection_number(branch, ak, vak, bj, vbj),
                expect,
                "a{k} o b{j}"
            );
        }
    }
}

#[test]
fn riemann_matrix_normalisation_recomputed() {
    let f = frame(vec![
        C::new(0.0, 0.0),
        C::new(1.0, 0.0),
        C::new(2.0, 0.0),
        C::new(3.0, 0.0),
        C::new(4.0, 0.0),
    ]);
    let g = f.genus();
    // oint_{a_k} omega_j = delta at doubled node count.
    let tight = QuadratureSpec::new(48, 1e-12, 10).unwrap();
    let f2 = CurveFrame::build(f.config.clone(), f.cycles.clone(), tight).unwrap();
    for k in 0..g {
        for j in 0..g {
            let coeff = f.coeff().clone();
            let per = f2
                .a_period(k, &[], move |u, v| {
                    let mut val = C::new(0.0, 0.0);
                    let mut upow = C::new(1.0, 0.0);
                    for l in 0..g {
                        val += coeff[(j, l)] * upow / v;
                        upow *= u;
                    }
                    val
                })
                .unwrap();
            let want = if j == k { 1.0 } else { 0.0 };
            assert!(
                (per - C::new(want, 0.0)).norm() < 1e-10,
                "a-period [{k},{j}] = {per}"
            );
        }
    }
    // Symmetry and positivity.
    for j in 0..g {
        for k in 0..g {
            assert!((f.riemann[(j, k)] - f.riemann[(k, j)]).norm() < 1e-10);
        }
    }
}

#[test]
fn modular_lambda_of_mu_recovers_x() {
    // lambda(mu) = theta2^4/theta3^4 must return the branch point x.
    for &x in &[0.5, 0.3, 0.72] {
        let f = elliptic(x);
        let mu = f.riemann[(0, 0)];
        assert!(mu.im > 0.0);
        if (x - 0.5).abs() < 1e-12 {
            assert!(mu.re.abs() < 1e-9, "mu = {mu} should be purely imaginary");
            assert!((mu.im - 1.0).abs() < 1e-9, "x = 1/2 is the square lattice");
        }
        let ctx = ThetaContext::new(mu).unwrap();
        let t2 = ctx.theta_char(0.5, 0.0, C::new(0.0, 0.0));
        let t3 = ctx.theta_char(0.0, 0.0, C::new(0.0, 0.0));
        let lambda = (t2 / t3).powu(4);
        assert!(
            (lambda - C::new(x, 0.0)).norm() < 1e-9,
            "x = {x}: lambda(mu) = {lambda}"
        );
    }
}

#[test]
fn rauch_formula_for_dmu_dx() {
    let x = 0.37;
    let h = 1e-5;
    let mu_p = elliptic(x + h).riemann[(0, 0)];
    let mu_m = elliptic(x - h).riemann[(0, 0)];
    let fd = (mu_p - mu_m) / (2.0 * h);
    let f = elliptic(x);
    let w_px = f.omega_ramification(3).unwrap()[0];
    let formula = C::new(0.0, std::f64::consts::PI) * w_px * w_px;
    assert!(
        (fd - formula).norm() < 1e-5 * formula.norm(),
        "fd = {fd}, formula = {formula}"
    );
}

#[test]
fn abel_map_basics() {
    let f = elliptic(0.37);
    // Involution antisymmetry modulo the lattice.
    let p = f.point(C::new(0.6, 0.8), 1).unwrap();
    let a1 = f.abel_map(&p).unwrap();
    let a2 = f.abel_map(&p.star()).unwrap();
    let sum = vec![a1[0] + a2[0]];
    assert!(f.lattice_distance(&sum) < 1e-9, "A(P)+A(P*) = {:?}", sum);
    // Ramification points are 2-torsion.
    let f2 = elliptic(0.5);
    let near0 = f2.point(C::new(1e-6, 0.0), 1).unwrap();
    let a = f2.abel_map(&near0).unwrap();
    let doubled = vec![a[0] * 2.0];
    assert!(
        f2.lattice_distance(&doubled) < 1e-4,
        "2 A(P_0) = {:?} should be near the lattice",
        doubled
    );
}

#[test]
fn abel_antisymmetry_g2() {
    let f = frame(vec![
        C::new(0.0, 0.0),
        C::new(1.0, 0.0),
        C::new(2.0, 0.0),
        C::new(3.0, 0.0),
        C::new(4.0, 0.0),
    ]);
    let p = f.point(C::new(1.4, 0.9), -1).unwrap();
    let a1 = f.abel_map(&p).unwrap();
    let a2 = f.abel_map(&p.star()).unwrap();
    let sum: Vec<C> = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
    assert!(f.lattice_distance(&sum) < 1e-9, "A(P)+A(P*) = {:?}", sum);
}

#[test]
fn phi_ramification_modulus_identity() {
    let f = frame(vec![
        C::new(0.1, 0.0),
        C::new(0.9, 0.0),
        C::new(2.2, 0.0),
        C::new(3.1, 0.0),
        C::new(4.5, 0.0),
    ]);
    for n in 1..=5 {
        let phi = f.phi_ramification(n).unwrap();
        let mut prod = C::new(1.0, 0.0);
        for (j, &b) in f.branch().iter().enumerate() {
            if j != n - 1 {
                prod *= f.branch()[n - 1] - b;
            }
        }
        assert!((phi.norm_sqr() * prod.norm() - 4.0).abs() < 1e-12);
    }
}

#[test]
fn symplectic_transform_identity_and_inverse() {
    let f = elliptic(0.37);
    let c1 = vec![C::new(0.3, 0.1)];
    let c2 = vec![C::new(0.2, -0.05)];
    let id = SymplecticBlocks::identity(1);
    let (c1p, c2p, bp) = isomono_core::curve::symplectic_transform(&c1, &c2, &f.riemann, &id).unwrap();
    assert!((c1p[0] - c1[0]).norm() < 1e-15);
    assert!((c2p[0] - c2[0]).norm() < 1e-15);
    assert!((bp[(0, 0)] - f.riemann[(0, 0)]).norm() < 1e-15);

    // S = ((0, -1), (1, 0)): c1' = c2... per the stated formulas
    let mut s = SymplecticBlocks::identity(1);
    s.a[(0, 0)] = 0;
    s.b[(0, 0)] = -1;
    s.c[(0, 0)] = 1;
    s.d[(0, 0)] = 0;
    assert!(s.is_symplectic());
    let (c1p, c2p, bp) = isomono_core::curve::symplectic_transform(&c1, &c2, &f.riemann, &s).unwrap();
    assert!((c1p[0] - c2[0]).norm() < 1e-15);
    assert!((c2p[0] + c1[0]).norm() < 1e-15);
    assert!((bp[(0, 0)] + 1.0 / f.riemann[(0, 0)]).norm() < 1e-12);

    // Round trip through the inverse.
    let sinv = s.inverse();
    assert!(sinv.is_symplectic());
    let (c1b, c2b, bb) = isomono_core::curve::symplectic_transform(&c1p, &c2p, &bp, &sinv).unwrap();
    assert!((c1b[0] - c1[0]).norm() < 1e-12);
    assert!((c2b[0] - c2[0]).norm() < 1e-12);
    assert!((bb[(0, 0)] - f.riemann[(0, 0)]).norm() < 1e-12);
}

#[test]
fn w_kernel_tests_g1() {
    let f = elliptic(0.5);
    // a-period of W(., P_n) vanishes by construction of the formula.
    let (phi_n, ints) = f.w_ramification_coeffs(3).unwrap();
    let un = f.branch()[2];
    let coeff = f.coeff().clone();
    let per = f
        .a_period(0, &[], move |u, v| {
            let omega0 = coeff[(0, 0)] / v;
            1.0 / ((u - un) * v * phi_n) - ints[0] / phi_n * omega0
        })
        .unwrap();
    assert!(per.norm() < 1e-9, "a-period of W = {per}");
    // b-period: oint_b W(., P_x) = 2 pi i omega(P_x).
    let coeff = f.coeff().clone();
    let per = f
        .b_period(0, &[], move |u, v| {
            let omega0 = coeff[(0, 0)] / v;
            1.0 / ((u - un) * v * phi_n) - ints[0] / phi_n * omega0
        })
        .unwrap();
    let want = C::new(0.0, 2.0 * std::f64::consts::PI) * f.omega_ramification(3).unwrap()[0];
    assert!(
        (per - want).norm() < 1e-8 * want.norm().max(1.0),
        "b-period of W = {per}, want {want}"
    );
    // Antisymmetry under the involution.
    let p = f.point(C::new(0.3, 0.7), 1).unwrap();
    let w1 = f.w_ramification(&p, 3).unwrap();
    let w2 = f.w_ramification(&p.star(), 3).unwrap();
    assert!((w1 + w2).norm() < 1e-12 * w1.norm().max(1.0));
}

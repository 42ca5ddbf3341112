use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiar::waveguide::*;
use tiar::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn problem(geo: &WaveguideGeometry, nx: usize, nz: usize) -> WaveguideProblem {
    let grid = DiscretizationGrid::for_geometry(geo, nx, nz).unwrap();
    WaveguideProblem::new(geo, &grid).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

#[test]
fn fem_matrix_structure() {
    let geo = WaveguideGeometry::benchmark();
    for (nx, nz) in [(4, 5), (10, 11), (40, 41)] {
        let p = problem(&geo, nx, nz);
        let m = &p.matrices;
        let a1 = m.a[1].to_dense();
        let a2 = m.a[2].to_dense();
        let scale = a1.norm();
        assert!(
            (&a1 + a1.transpose()).norm() < 1e-13 * scale,
            "A₁ skew at {nx}x{nz}"
        );
        assert!((&a2 - a2.transpose()).norm() < 1e-14 * a2.norm());
        assert!(
            a2.clone().cholesky().is_some(),
            "A₂ positive definite at {nx}x{nz}"
        );

        let a0 = m.a[0].to_dense();
        assert!((&a0 - a0.transpose()).norm() < 1e-13 * a0.norm());

        let n = (nx + 2) * nz;
        let ones = vec![c(1.0, 0.0); n];
        let g = m.gradient_full.apply(&ones);
        let gscale = m.gradient_full.frobenius_norm();
        assert!(g.iter().all(|v| v.norm() < 1e-12 * gscale));
        let total: f64 = m.mass_full.triplets().iter().map(|t| t.2).sum();
        assert!((total - (geo.x_plus - geo.x_minus)).abs() < 1e-12);
    }
}

#[test]
fn block_shapes_and_stencil_rows() {
    let geo = WaveguideGeometry::benchmark();
    let p = problem(&geo, 6, 7);
    let m = &p.matrices;
    let (ni, nz) = (42, 7);
    for a in &m.a {
        assert_eq!((a.nrows(), a.ncols()), (ni, ni));
    }
    for c1 in &m.c1 {
        assert_eq!((c1.nrows(), c1.ncols()), (ni, 2 * nz));
    }
    assert_eq!((m.c2t.nrows(), m.c2t.ncols()), (2 * nz, ni));
    // Boundary rows differentiate a linear profile in x exactly.
    let hx = p.grid().h_x();
    let u: Vec<C64> = (0..ni)
        .map(|i| c(1.0 + 2.0 * (hx * (i / nz + 1) as f64), 0.0))
        .collect();
    let r = m.c2t.apply(&u);
    let d0 = m.stencil.d0;
    for j in 0..nz {
        // left: d₀·u(x₋) + … = u_x(x₋)
        assert!((r[j] + d0 * 1.0 - 2.0).norm() < 1e-10);
        let right = 1.0 + 2.0 * (hx * 7.0);
        assert!((r[nz + j] + d0 * right + 2.0).norm() < 1e-10);
    }
}

/// `∫κ²(Σ interior hats)²` by a fine midpoint rule, independent of the
/// element-wise Gauss integration used in assembly.
#[test]
fn kappa_mass_matches_fine_quadrature() {
    for geo in [WaveguideGeometry::benchmark(), WaveguideGeometry::complex()] {
        let p = problem(&geo, 7, 9);
        let grid = *p.grid();
        let ni = grid.interior_dim();
        let ones = vec![c(1.0, 0.0); ni];
        let k1 = p.matrices.kappa_mass.apply(&ones);
        let fem: f64 = k1.iter().map(|v| v.re).sum();

        let hx = grid.h_x();
        let profile = |x: f64| {
            let t = (x - grid.x_minus) / hx;
            let s = (grid.x_plus - x) / hx;
            t.min(s).clamp(0.0, 1.0)
        };
        let (sx, sz) = (6000, 600);
        let (dx, dz) = ((grid.x_plus - grid.x_minus) / sx as f64, 1.0 / sz as f64);
        let mut oracle = 0.0;
        for i in 0..sx {
            let x = grid.x_minus + (i as f64 + 0.5) * dx;
            let w = profile(x).powi(2);
            for j in 0..sz {
                let z = (j as f64 + 0.5) * dz;
                oracle += geo.kappa_at(x, z).powi(2) * w * dx * dz;
            }
        }
        assert!((fem - oracle).abs() < 1e-4 * oracle, "{fem} vs {oracle}");
    }
}

#[test]
fn constant_medium_kappa_mass_is_scaled_mass() {
    let geo = WaveguideGeometry {
        omega: 1.0,
        kappa_minus: 2.0,
        kappa_plus: 2.0,
        x_minus: -0.3,
        x_plus: 0.7,
        regions: vec![Region {
            x0: -0.3,
            x1: 0.7,
            z0: 0.0,
            z1: 1.0,
            kappa: 2.0,
        }],
        description: None,
    };
    let p = problem(&geo, 5, 5);
    let k = p.matrices.kappa_mass.to_dense();
    let a2 = p.matrices.a[2].to_dense();
    assert!((k - a2 * 4.0).norm() < 1e-13);
}

fn dft(nz: usize) -> DMatrix<C64> {
    let p = (nz / 2) as i64;
    DMatrix::from_fn(nz, nz, |j, k| {
        let mode = k as i64 - p;
        C64::from_polar(1.0, 2.0 * PI * mode as f64 * j as f64 / nz as f64)
    })
}

#[test]
fn dtn_matches_dense_fourier_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for nz in [3, 7, 21] {
        let r = dft(nz);
        let rinv = r.clone().try_inverse().unwrap();
        for (side, kappa) in [(Side::Minus, 2.3f64.sqrt() * PI), (Side::Plus, PI)] {
            let op = DtnOperator::new(side, kappa, nz).unwrap();
            let gamma = c(-0.7, -2.1);
            let s = DVector::from_vec(op.s_values(gamma).unwrap());
            let dense = &r * DMatrix::from_diagonal(&s) * &rinv;
            let g = random_vec(&mut rng, nz);
            let fast = op.apply(gamma, &g).unwrap();
            let slow = &dense * DVector::from_vec(g.clone());
            let err = (DVector::from_vec(fast) - &slow).norm() / slow.norm();
            assert!(err < 1e-13, "nz={nz}: {err}");
        }
    }
}

#[test]
fn fourier_modes_are_recovered() {
    let nz = 9;
    let op = DtnOperator::new(Side::Plus, 1.0, nz).unwrap();
    for (idx, k) in modes(nz).enumerate() {
        let coeffs = op.to_modes(&fourier_mode(nz, k)).unwrap();
        for (i, v) in coeffs.iter().enumerate() {
            let expect = if i == idx { 1.0 } else { 0.0 };
            assert!((v - expect).norm() < 1e-14);
        }
        let back = op.from_modes(&coeffs).unwrap();
        let direct = fourier_mode(nz, k);
        assert!(back
            .iter()
            .zip(&direct)
            .all(|(a, b)| (a - b).norm() < 1e-14));
    }
}

#[test]
fn dtn_rejects_bad_lengths() {
    let op = DtnOperator::new(Side::Minus, 1.0, 5).unwrap();
    assert!(op.apply(c(-1.0, 0.5), &[c(0.0, 0.0); 4]).is_err());
    assert!(DtnOperator::new(Side::Minus, 1.0, 4).is_err());
}

#[test]
fn exterior_solutions_decay_and_satisfy_dtn() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let gamma = c(
            rng.random_range(-3.0..-0.01),
            rng.random_range(-2.0 * PI..0.0),
        );
        let g = random_vec(&mut rng, 11);
        for kappa in [PI, 2.3f64.sqrt() * PI] {
            let r = exterior_check(gamma, kappa, &g, &[0.0, 0.1, 0.5, 2.0]).unwrap();
            assert!(
                r.ode_residual < 1e-12 && r.decaying && r.dtn_mismatch < 1e-6,
                "{gamma}: {r:?}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dtn_coefficients_decay(re in -5.0f64..-1e-3, im in -2.0 * PI..2.0 * PI, kappa in 0.5f64..12.0) {
        let gamma = c(re, im);
        for k in -200i64..=200 {
            let b = beta(gamma, kappa, k);
            prop_assume!(b.im != 0.0);
            let s = s_coeff(gamma, kappa, k).unwrap();
            prop_assert!(s.re < 0.0);
            let rate = b.im.signum() * b.sqrt().im;
            prop_assert!((rate + s.re).abs() <= 1e-12 * rate.abs().max(1.0));
        }
    }

    #[test]
    fn residual_is_scale_invariant(re in 0.1f64..4.0, im in -3.0f64..3.0, seed in 0u64..1000) {
        let geo = WaveguideGeometry::benchmark();
        let p = problem(&geo, 4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_vec(&mut rng, p.dim());
        let gamma = c(-0.3, -1.0);
        let e1 = p.residual(gamma, &w).unwrap();
        let scaled: Vec<C64> = w.iter().map(|v| v * c(re, im)).collect();
        let e2 = p.residual(gamma, &scaled).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1);
    }
}

#[test]
fn residual_denominator_terms() {
    let geo = WaveguideGeometry::benchmark();
    let p = problem(&geo, 4, 5);
    let gamma = c(-0.2, -1.5);
    let m = &p.matrices;
    let g = gamma.norm();
    let mut expect = 0.0;
    for i in 0..3 {
        expect += g.powi(i as i32) * (m.a[i].frobenius_norm() + m.c1[i].frobenius_norm());
    }
    expect += m.c2t.frobenius_norm() + 2.0 * m.stencil.d0.abs();
    for k in modes(5) {
        expect += s_coeff(gamma, geo.kappa_minus, k).unwrap().norm();
        expect += s_coeff(gamma, geo.kappa_plus, k).unwrap().norm();
    }
    assert!((p.residual_scale(gamma).unwrap() - expect).abs() < 1e-12 * expect);
    assert!(p.residual(gamma, &vec![c(0.0, 0.0); p.dim()]).is_err());
}

#[test]
fn evaluate_matches_block_assembly() {
    let geo = WaveguideGeometry::complex();
    let p = problem(&geo, 5, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = random_vec(&mut rng, p.dim());
    let gamma = c(-0.4, -2.5);
    let m = &p.matrices;
    let ni = p.grid().interior_dim();
    let nz = 7;

    let to = |x: &tiar::linalg::CsrMatrix<f64>| x.to_dense().map(|v| c(v, 0.0));
    let q = to(&m.a[0]) + to(&m.a[1]) * gamma + to(&m.a[2]) * gamma * gamma;
    let c1 = to(&m.c1[0]) + to(&m.c1[1]) * gamma + to(&m.c1[2]) * gamma * gamma;
    let r = dft(nz);
    let rinv = r.clone().try_inverse().unwrap();
    let mut pm = DMatrix::<C64>::zeros(2 * nz, 2 * nz);
    for (side, kappa) in [geo.kappa_minus, geo.kappa_plus].into_iter().enumerate() {
        let d = DVector::from_iterator(
            nz,
            modes(nz).map(|k| s_coeff(gamma, kappa, k).unwrap() + m.stencil.d0),
        );
        let blk = &r * DMatrix::from_diagonal(&d) * &rinv;
        pm.view_mut((side * nz, side * nz), (nz, nz))
            .copy_from(&blk);
    }
    let mut full = DMatrix::<C64>::zeros(p.dim(), p.dim());
    full.view_mut((0, 0), (ni, ni)).copy_from(&q);
    full.view_mut((0, ni), (ni, 2 * nz)).copy_from(&c1);
    full.view_mut((ni, 0), (2 * nz, ni)).copy_from(&to(&m.c2t));
    full.view_mut((ni, ni), (2 * nz, 2 * nz)).copy_from(&pm);

    let fast = DVector::from_vec(p.evaluate(gamma, &w).unwrap());
    let slow = full * DVector::from_vec(w);
    assert!((fast - &slow).norm() < 1e-12 * slow.norm());
}

#[test]
fn geometry_validation() {
    let mut g = WaveguideGeometry::benchmark();
    g.regions.pop();
    assert!(g.validate().is_err());
    let mut g = WaveguideGeometry::benchmark();
    g.regions[1].z1 = 0.6;
    assert!(g.validate().is_err());
    let mut g = WaveguideGeometry::benchmark();
    g.kappa_plus = -1.0;
    assert!(g.validate().is_err());
    assert!(WaveguideGeometry::from_json("{").is_err());
    let grid = DiscretizationGrid::for_geometry(&WaveguideGeometry::benchmark(), 10, 11).unwrap();
    assert_eq!((grid.refined().n_x, grid.refined().n_z), (20, 21));
    assert!(DiscretizationGrid::new(1, 5, 0.0, 1.0).is_err());
    assert!(DiscretizationGrid::new(4, 6, 0.0, 1.0).is_err());
    let other = DiscretizationGrid::new(4, 5, 0.0, 2.0).unwrap();
    assert!(WaveguideProblem::new(&WaveguideGeometry::benchmark(), &other).is_err());
}

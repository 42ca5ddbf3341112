use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiar::arnoldi::*;
use tiar::nep::{CayleyShift, NepProblem};
use tiar::waveguide::*;
use tiar::wtiar::*;
use tiar::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn nep(nx: usize, nz: usize, gamma0: C64, depth: usize) -> CayleyNep {
    let geo = WaveguideGeometry::benchmark();
    let grid = DiscretizationGrid::for_geometry(&geo, nx, nz).unwrap();
    CayleyNep::new(WaveguideProblem::new(&geo, &grid).unwrap(), gamma0, depth).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let n: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    d / n
}

/// `ℓ!·[λ^ℓ]f` by the trapezoidal rule on `|λ| = r`, for every `ℓ < samples.len()`.
fn cauchy(samples: &[C64], r: f64, l_max: usize) -> Vec<C64> {
    let n = samples.len();
    let mut fact = 1.0;
    (0..=l_max)
        .map(|l| {
            if l > 0 {
                fact *= l as f64;
            }
            let s: C64 = samples
                .iter()
                .enumerate()
                .map(|(k, v)| v * C64::from_polar(1.0, -2.0 * PI * (l * k) as f64 / n as f64))
                .sum();
            s * fact / (n as f64 * r.powi(l as i32))
        })
        .collect()
}

fn circle(r: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| C64::from_polar(r, 2.0 * PI * k as f64 / n as f64))
        .collect()
}

#[test]
fn alpha_matches_contour_of_dtn_coefficient() {
    let g0 = c(-3.0, PI);
    let shift = CayleyShift::new(g0).unwrap();
    let d0 = -7.5;
    let r = 0.3;
    let pts = circle(r, 256);
    for kappa in [2.3f64.sqrt() * PI, PI] {
        for j in -5..=5 {
            let samples: Vec<C64> = pts
                .iter()
                .map(|&l| (1.0 - l) * (s_coeff(shift.inverse(l).unwrap(), kappa, j).unwrap() + d0))
                .collect();
            let oracle = cauchy(&samples, r, 8);
            let series = alpha_recursion(g0, kappa, j, 8, d0).unwrap();
            for (l, (a, o)) in series.alpha.iter().zip(&oracle).enumerate() {
                assert!(
                    (a - o).norm() < 1e-8 * o.norm(),
                    "κ={kappa} j={j} ℓ={l}: {a} vs {o}"
                );
            }
        }
    }
}

/// Continuation of `(1−λ)s_j(γ(λ))` over the unit disk: the square root of
/// `(1−λ)²β_j(γ(λ))` followed continuously from `λ = 0`.
fn continued_samples(shift: &CayleyShift, kappa: f64, j: i64, r: f64, n: usize) -> Vec<C64> {
    let q = |l: C64| (1.0 - l) * (1.0 - l) * beta(shift.inverse(l).unwrap(), kappa, j);
    let w = beta(shift.gamma0(), kappa, j).im.signum();
    let follow = |prev: C64, l: C64| {
        let s = q(l).sqrt();
        if (s - prev).norm() <= (s + prev).norm() {
            s
        } else {
            -s
        }
    };
    let mut root = q(c(0.0, 0.0)).sqrt();
    for k in 1..=400 {
        root = follow(root, c(r * k as f64 / 400.0, 0.0));
    }
    let mut out = Vec::with_capacity(n);
    for l in circle(r, n) {
        root = follow(root, l);
        out.push(c(0.0, w) * root);
    }
    out
}

#[test]
fn alpha_matches_continued_contour_to_order_30() {
    let g0 = c(-3.0, -PI);
    let shift = CayleyShift::new(g0).unwrap();
    let r = 0.9;
    for kappa in [2.3f64.sqrt() * PI, PI] {
        for j in -5..=5 {
            let oracle = cauchy(&continued_samples(&shift, kappa, j, r, 4096), r, 30);
            let series = alpha_recursion(g0, kappa, j, 30, 0.0).unwrap();
            for l in 2..=30 {
                let (a, o) = (series.alpha[l], oracle[l]);
                assert!(
                    (a - o).norm() < 1e-8 * o.norm(),
                    "κ={kappa} j={j} ℓ={l}: {a} vs {o}"
                );
            }
        }
    }
}

#[test]
fn taylor_coefficients_stay_bounded() {
    for g0 in [c(-3.0, PI), c(-2.0, -PI), c(-0.5, 1.0)] {
        for j in [-40, -1, 0, 3, 40] {
            let s = alpha_recursion(g0, PI, j, MAX_DEPTH, 0.0).unwrap();
            let scale = s.f[0].norm();
            assert!(s
                .f
                .iter()
                .all(|f| f.norm() <= 10.0 * scale.max(1.0) * (1.0 + (j as f64).abs())));
            assert!(s.alpha.iter().all(|a| a.re.is_finite() && a.im.is_finite()));
        }
    }
}

#[test]
fn derivatives_match_contour_of_transformed_problem() {
    let nep = nep(6, 7, c(-3.0, -PI), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = random_vec(&mut rng, nep.problem().dim());
    let r = 0.3;
    let pts = circle(r, 64);
    let samples: Vec<Vec<C64>> = pts
        .iter()
        .map(|&l| nep.evaluate_at(l, &v).unwrap())
        .collect();
    let n = v.len();
    let mut oracle = vec![vec![c(0.0, 0.0); n]; 9];
    for i in 0..n {
        let col: Vec<C64> = samples.iter().map(|s| s[i]).collect();
        for (l, val) in cauchy(&col, r, 8).into_iter().enumerate() {
            oracle[l][i] = val;
        }
    }
    for (l, o) in oracle.iter().enumerate() {
        let d = nep.apply_derivative(l, &v).unwrap();
        assert!(rel(&d, o) < 1e-9, "order {l}: {}", rel(&d, o));
    }
    assert!(nep.apply_derivative(13, &v).is_err());
}

#[test]
fn block_values_at_the_shift() {
    let g0 = c(-3.0, -PI);
    let nep = nep(5, 7, g0, 4);
    let m = &nep.problem().matrices;
    let q = tiar::linalg::CsrMatrix::combine(&[
        (c(1.0, 0.0), &m.a[0]),
        (g0, &m.a[1]),
        (g0 * g0, &m.a[2]),
    ]);
    let diff = q.to_dense() - nep.fa(0).to_dense();
    assert!(diff.norm() < 1e-13 * q.frobenius_norm());
    let d0 = m.stencil.d0;
    for (idx, k) in modes(7).enumerate() {
        let s = s_coeff(g0, nep.problem().geometry.kappa_minus, k).unwrap();
        assert!((nep.alpha().minus(0)[idx] - (s + d0)).norm() < 1e-12 * s.norm());
        let s = s_coeff(g0, nep.problem().geometry.kappa_plus, k).unwrap();
        assert!((nep.alpha().plus(0)[idx] - (s + d0)).norm() < 1e-12 * s.norm());
    }
}

#[test]
fn schur_solve_is_consistent() {
    let nep = nep(20, 21, c(-3.0, -PI), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..3 {
        let r = random_vec(&mut rng, nep.problem().dim());
        let x = nep.solve_zero(&r).unwrap();
        let back = nep.apply_derivative(0, &x).unwrap();
        assert!(rel(&back, &r) < 1e-11, "{}", rel(&back, &r));
        let direct = nep.evaluate_at(c(0.0, 0.0), &x).unwrap();
        assert!(rel(&direct, &r) < 1e-11);
    }
    assert!(nep.solve_zero(&[c(1.0, 0.0)]).is_err());
}

#[test]
fn ring_ordering_narrows_band_without_changing_solves() {
    let (nx, nz) = (12, 13);
    let nep = nep(nx, nz, c(-3.0, -PI), 4);
    let perm = ring_ordering(nx, nz);
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..nx * nz).collect::<Vec<_>>());
    let (kl, ku) = nep.schur().bandwidth();
    assert!(kl <= nz + 2 && ku <= nz + 2, "{kl} {ku}");
    assert!(nep.fa(0).bandwidth().0 >= 2 * nz - 2);

    let c2t = &nep.problem().matrices.c2t;
    let nb = 2 * nz;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = nalgebra::DMatrix::from_fn(nb, nb, |i, j| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            + if i == j { c(50.0, 0.0) } else { c(0.0, 0.0) }
    });
    let plain = SchurPrecomputation::new(nep.fa(0), nep.fc(0), c2t, p.clone(), None).unwrap();
    let ring = SchurPrecomputation::new(nep.fa(0), nep.fc(0), c2t, p.clone(), Some(perm)).unwrap();
    let r = random_vec(&mut rng, nx * nz + nb);
    assert!(rel(&ring.solve(&r).unwrap(), &plain.solve(&r).unwrap()) < 1e-12);

    let bad = SchurPrecomputation::new(nep.fa(0), nep.fc(0), c2t, p, Some(vec![0; nx * nz]));
    assert!(matches!(bad, Err(tiar::Error::InvalidInput(_))));
}

#[test]
fn structured_step_matches_full_vectors() {
    let nep = nep(10, 11, c(-3.0, -PI), 40);
    let n = nep.problem().dim();
    let x1 = DVector::from_element(n, c(1.0, 0.0));
    let mut worst: f64 = 0.0;
    tiar_run_with(
        &nep,
        &x1,
        20,
        &ArnoldiOptions::default(),
        &mut |_, basis| {
            let mut t = PhaseTimes::default();
            let fast = nep.next_y1(basis, &mut t)?;
            let slow = FullVectors(&nep).next_y1(basis, &mut t)?;
            worst = worst.max((fast - &slow).norm() / slow.norm());
            Ok(())
        },
    )
    .unwrap();
    assert!(worst < 1e-11, "{worst}");
}

#[test]
fn zero_tensor_gives_zero_direction() {
    let nep = nep(4, 5, c(-3.0, -PI), 6);
    let n = nep.problem().dim();
    let k = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = random_vec(&mut rng, n * k);
    let basis = BasisTensor::from_parts(n, k, z, vec![c(0.0, 0.0); k * k * k]).unwrap();
    let y1 = nep.next_y1(&basis, &mut PhaseTimes::default()).unwrap();
    assert_eq!(y1.norm(), 0.0);
}

#[test]
fn hessenberg_agrees_with_generic_tiar() {
    let nep = nep(20, 21, c(-3.0, -PI), 30);
    let x1 = DVector::from_element(nep.problem().dim(), c(1.0, 0.0));
    let opts = ArnoldiOptions::default();
    let fast = tiar_run_with(&nep, &x1, 30, &opts, &mut |_, _| Ok(())).unwrap();
    let slow = tiar_run(&nep, &x1, 30, &opts).unwrap();
    let (a, b) = (fast.hessenberg.matrix(), slow.hessenberg.matrix());
    assert!((&a - &b).norm() < 1e-9 * b.norm());
}

#[test]
fn naive_step_matches_derivative_sum() {
    let nep = nep(4, 5, c(-2.0, -PI), 5);
    let n = nep.problem().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ys = nalgebra::DMatrix::from_fn(n, 4, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let y1 = nep.solve_step(&ys).unwrap();
    let mut total = nep.apply_derivative(0, y1.as_slice()).unwrap();
    for i in 1..=4 {
        let d = nep
            .apply_derivative(i, ys.column(i - 1).as_slice())
            .unwrap();
        for (t, v) in total.iter_mut().zip(d) {
            *t += v;
        }
    }
    let scale = ys.norm();
    assert!(total.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() < 1e-11 * scale);
}

#[test]
fn construction_errors() {
    let geo = WaveguideGeometry::benchmark();
    let grid = DiscretizationGrid::for_geometry(&geo, 4, 5).unwrap();
    let p = WaveguideProblem::new(&geo, &grid).unwrap();
    assert!(CayleyNep::new(p.clone(), c(0.0, 1.0), 5).is_err());
    assert!(CayleyNep::new(p.clone(), c(-1.0, 2.0 * PI), 5).is_err());
    assert!(CayleyNep::new(p, c(-3.0, -PI), MAX_DEPTH + 1).is_err());
}

#[test]
fn converged_values_lie_near_the_benchmark_modes() {
    let nep = nep(10, 11, c(-3.0, -PI), 100);
    let n = nep.problem().dim();
    let x1 = DVector::from_element(n, c(1.0 / (n as f64).sqrt(), 0.0));
    let run = wtiar_run(&nep, &x1, 100, &RunOptions::default()).unwrap();
    let good: Vec<C64> = run
        .report
        .values
        .iter()
        .filter(|v| v.residual.is_some_and(|r| r < 1e-8))
        .map(|v| v.target())
        .collect();
    for target in [c(-0.0103, -4.9663), c(-0.0082, -1.3910)] {
        assert!(
            good.iter().any(|g| (g - target).norm() < 3e-3),
            "{target} not in {good:?}"
        );
    }
    assert_eq!(run.report.history.records.len(), 100);
    assert!(run.report.history.converged(1e-8, 1e-6).len() >= 2);
}

#[test]
fn solver_names_round_trip() {
    for s in [Solver::Iar, Solver::Tiar, Solver::Wtiar] {
        assert_eq!(s.to_string().parse::<Solver>().unwrap(), s);
    }
    assert!("arnoldi".parse::<Solver>().is_err());
    let o = Omega::default();
    assert!(o.contains(c(-0.01, -1.3)));
    assert!(
        !o.contains(c(0.01, -1.3)) && !o.contains(c(-0.01, 1.3)) && !o.contains(c(-0.01, -7.0))
    );
}

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::{Error, Result, C64};

/// `β_k(γ) = (γ + 2πik)² + κ²`.
pub fn beta(gamma: C64, kappa: f64, k: i64) -> C64 {
    let g = gamma + C64::new(0.0, 2.0 * PI * k as f64);
    g * g + kappa * kappa
}

/// `s_k(γ) = sign(Im β_k)·i·√β_k` with the principal square root.
pub fn s_coeff(gamma: C64, kappa: f64, k: i64) -> Result<C64> {
    let b = beta(gamma, kappa, k);
    if b.im == 0.0 || !b.im.is_finite() {
        return Err(Error::DegenerateBranch { mode: k });
    }
    Ok(b.im.signum() * C64::i() * b.sqrt())
}

/// Modes `j = −p, …, p` in the order used for all diagonal data.
pub fn modes(n_z: usize) -> impl Iterator<Item = i64> {
    let p = (n_z / 2) as i64;
    -p..=p
}

/// Samples of `e^{2πikz}` at `z_j = j/n_z`.
pub fn fourier_mode(n_z: usize, k: i64) -> Vec<C64> {
    (0..n_z)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * (k * j as i64) as f64 / n_z as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Minus,
    Plus,
}

/// Discrete DtN map `R·L(γ)·R⁻¹` on one boundary column, with `R` and `R⁻¹`
/// applied by FFT.
#[derive(Clone)]
pub struct DtnOperator {
    side: Side,
    kappa: f64,
    n_z: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DtnOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DtnOperator")
            .field("side", &self.side)
            .field("kappa", &self.kappa)
            .field("n_z", &self.n_z)
            .finish()
    }
}

impl DtnOperator {
    pub fn new(side: Side, kappa: f64, n_z: usize) -> Result<Self> {
        if n_z.is_multiple_of(2) {
            return Err(Error::Grid(format!("n_z = {n_z} must be odd")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            side,
            kappa,
            n_z,
            forward: planner.plan_fft_forward(n_z),
            inverse: planner.plan_fft_inverse(n_z),
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// `s_j(γ)` for `j = −p, …, p`.
    pub fn s_values(&self, gamma: C64) -> Result<Vec<C64>> {
        modes(self.n_z)
            .map(|j| s_coeff(gamma, self.kappa, j))
            .collect()
    }

    /// `R⁻¹g`: Fourier coefficients of the samples `g`, ordered by mode
    /// `−p, …, p`.
    pub fn to_modes(&self, g: &[C64]) -> Result<Vec<C64>> {
        let n = self.n_z;
        if g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
        let mut buf = g.to_vec();
        self.forward.process(&mut buf);
        // DFT bin b holds mode j = b for b ≤ p and j = b − n_z above.
        let p = n / 2;
        let scale = 1.0 / n as f64;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (b, v) in buf.into_iter().enumerate() {
            let idx = if b <= p { b + p } else { b - p - 1 };
            out[idx] = v * scale;
        }
        Ok(out)
    }

    /// `Rc`: samples at the nodes of the expansion with coefficients `c`.
    pub fn from_modes(&self, c: &[C64]) -> Result<Vec<C64>> {
        let n = self.n_z;
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        let p = n / 2;
        let mut buf: Vec<C64> = (0..n)
            .map(|b| c[if b <= p { b + p } else { b - p - 1 }])
            .collect();
        self.inverse.process(&mut buf);
        Ok(buf)
    }

    /// `R·diag(d)·R⁻¹·g` with `d` ordered by mode `−p, …, p`.
    pub fn apply_diagonal(&self, diag: &[C64], g: &[C64]) -> Result<Vec<C64>> {
        if diag.len() != self.n_z {
            return Err(Error::DimensionMismatch {
                expected: self.n_z,
                got: diag.len(),
            });
        }
        let mut modes = self.to_modes(g)?;
        for (m, d) in modes.iter_mut().zip(diag) {
            *m *= d;
        }
        self.from_modes(&modes)
    }

    /// `R·L(γ)·R⁻¹·g`.
    pub fn apply(&self, gamma: C64, g: &[C64]) -> Result<Vec<C64>> {
        self.apply_diagonal(&self.s_values(gamma)?, g)
    }

    /// `R·(L(γ) + d₀I)·R⁻¹·g`.
    pub fn apply_shifted(&self, gamma: C64, d0: f64, g: &[C64]) -> Result<Vec<C64>> {
        let diag: Vec<C64> = self.s_values(gamma)?.into_iter().map(|s| s + d0).collect();
        self.apply_diagonal(&diag, g)
    }
}

/// Outcome of checking the exterior mode solutions against the DtN map.
#[derive(Debug, Clone, Serialize)]
pub struct ExteriorReport {
    /// Largest `|w_k'' + β_k w_k| / (|β_k|·|w_k|)` over modes and samples.
    pub ode_residual: f64,
    /// Every mode with `g_k ≠ 0` strictly decays along the sample distances.
    pub decaying: bool,
    /// Largest relative mismatch between a centred difference of `w_k` at the
    /// boundary and `s_k·g_k`.
    pub dtn_mismatch: f64,
}

/// Builds `w_k(d) = g_k·e^{s_k d}` at distances `d ≥ 0` from the boundary for
/// the modes `k = −p, …, p` of `g` and checks the exterior ODE, decay and the
/// DtN relation.
pub fn exterior_check(
    gamma: C64,
    kappa: f64,
    g_hat: &[C64],
    distances: &[f64],
) -> Result<ExteriorReport> {
    if g_hat.len().is_multiple_of(2) {
        return Err(Error::Grid(
            "mode vector must have odd length 2p + 1".into(),
        ));
    }
    if distances.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidInput(
            "sample distances must be non-negative".into(),
        ));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();

    let mut report = ExteriorReport {
        ode_residual: 0.0,
        decaying: true,
        dtn_mismatch: 0.0,
    };
    for (k, gk) in modes(g_hat.len()).zip(g_hat) {
        let b = beta(gamma, kappa, k);
        let s = s_coeff(gamma, kappa, k)?;
        if *gk == C64::new(0.0, 0.0) {
            continue;
        }
        let w = |d: f64| gk * (s * d).exp();
        let mut prev = f64::INFINITY;
        for &d in &sorted {
            let wd = w(d);
            let second = s * s * wd;
            let res = (second + b * wd).norm() / (b.norm() * wd.norm()).max(f64::MIN_POSITIVE);
            report.ode_residual = report.ode_residual.max(res);
            if !(wd.norm() < prev) {
                report.decaying = false;
            }
            prev = wd.norm();
        }
        let h = 1e-4 / (1.0 + s.norm());
        let fd = (w(h) - w(-h)) / (2.0 * h);
        let mismatch = (fd - s * gk).norm() / (s * gk).norm();
        report.dtn_mismatch = report.dtn_mismatch.max(mismatch);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn beta_examples() {
        let b = beta(c(-1.0, -1.0), PI, 0);
        assert!((b - c(PI * PI, 2.0)).norm() < 1e-14);
        let k = 3;
        let kappa = 1.7;
        let root = c(0.0, -2.0 * PI * k as f64 + kappa);
        assert!(beta(root, kappa, k).norm() < 1e-12);
    }

    #[test]
    fn degenerate_branch() {
        assert!(matches!(
            s_coeff(c(0.0, 1.0), PI, 0),
            Err(Error::DegenerateBranch { mode: 0 })
        ));
    }

    #[test]
    fn constant_is_mode_zero() {
        let op = DtnOperator::new(Side::Plus, PI, 7).unwrap();
        let gamma = c(-3.0, PI);
        let g = vec![c(2.0, -1.0); 7];
        let out = op.apply(gamma, &g).unwrap();
        let s0 = s_coeff(gamma, PI, 0).unwrap();
        for (o, v) in out.iter().zip(&g) {
            assert!((o - s0 * v).norm() < 1e-13);
        }
    }

    #[test]
    fn exterior_single_mode() {
        let gamma = c(-0.5, -2.0);
        let mut g = vec![c(0.0, 0.0); 5];
        g[2] = c(1.0, 0.0);
        let r = exterior_check(gamma, PI, &g, &[0.0, 0.5, 1.0, 3.0]).unwrap();
        assert!(
            r.ode_residual < 1e-12 && r.decaying && r.dtn_mismatch < 1e-6,
            "{r:?}"
        );
    }
}

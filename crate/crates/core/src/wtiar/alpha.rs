use std::f64::consts::PI;

use crate::waveguide::modes;
use crate::{Error, Result, C64};

/// Taylor data of `(1 − λ)(s_j(γ(λ)) + d₀)` at `λ = 0` for one mode `j`.
///
/// `(1 − λ)²β_j(γ(λ)) = aλ² + bλ + c`, so `(1 − λ)s_j(γ(λ)) = i·w·√(aλ² + bλ + c)`
/// near the origin with `w = sign(Im β_j(γ₀))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSeries {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub w: f64,
    /// Taylor coefficients of `√(aλ² + bλ + c)`.
    pub f: Vec<C64>,
    /// Derivatives `α_ℓ`, `ℓ = 0, …, ℓ_max`.
    pub alpha: Vec<C64>,
}

/// Three-term recurrence for the derivatives `α_ℓ` of
/// `(1 − λ)(s_j((γ₀ + λγ̄₀)/(1 − λ)) + d₀)` at `λ = 0`.
pub fn alpha_recursion(
    gamma0: C64,
    kappa: f64,
    j: i64,
    l_max: usize,
    d0: f64,
) -> Result<AlphaSeries> {
    if gamma0.re == 0.0 || !gamma0.re.is_finite() || !gamma0.im.is_finite() {
        return Err(Error::InvalidShift(format!(
            "{gamma0} is purely imaginary or not finite"
        )));
    }
    let g = gamma0;
    let gb = g.conj();
    let tpj = C64::new(0.0, 2.0 * PI * j as f64);
    let k2 = kappa * kappa;
    let a = (gb - tpj) * (gb - tpj) + k2;
    let b = 2.0 * (g + tpj) * (gb - tpj) - 2.0 * k2;
    let c = (g + tpj) * (g + tpj) + k2;
    let w = (g.re * (g.im + 2.0 * PI * j as f64)).signum();
    if c == C64::new(0.0, 0.0) || g.im + 2.0 * PI * j as f64 == 0.0 {
        return Err(Error::DegenerateBranch { mode: j });
    }

    let mut f = Vec::with_capacity(l_max + 1);
    let sc = c.sqrt();
    f.push(sc);
    if l_max >= 1 {
        f.push(b / (2.0 * sc));
    }
    for l in 2..=l_max {
        let lf = l as f64;
        let next =
            -(2.0 * a * (lf - 3.0) * f[l - 2] + b * (2.0 * lf - 3.0) * f[l - 1]) / (2.0 * lf * c);
        f.push(next);
    }

    let iw = C64::new(0.0, w);
    let mut alpha = Vec::with_capacity(l_max + 1);
    let mut factorial = 1.0;
    for (l, fl) in f.iter().enumerate() {
        if l >= 1 {
            factorial *= l as f64;
        }
        alpha.push(match l {
            0 => iw * fl + d0,
            1 => iw * fl - d0,
            _ => iw * fl * factorial,
        });
    }
    Ok(AlphaSeries {
        a,
        b,
        c,
        w,
        f,
        alpha,
    })
}

/// `α_{±,j,ℓ}` for all modes `j = −p, …, p` and `ℓ = 0, …, depth`, stored by
/// derivative order so that `D_ℓ` is a contiguous slice.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    n_z: usize,
    depth: usize,
    minus: Vec<C64>,
    plus: Vec<C64>,
}

/// `ℓ!` overflows `f64` beyond this order.
pub const MAX_DEPTH: usize = 170;

impl AlphaTable {
    pub fn new(
        gamma0: C64,
        kappa_minus: f64,
        kappa_plus: f64,
        n_z: usize,
        depth: usize,
        d0: f64,
    ) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidInput(format!(
                "derivative order {depth} exceeds the supported maximum {MAX_DEPTH}"
            )));
        }
        let mut minus = vec![C64::new(0.0, 0.0); n_z * (depth + 1)];
        let mut plus = minus.clone();
        for (idx, j) in modes(n_z).enumerate() {
            let sm = alpha_recursion(gamma0, kappa_minus, j, depth, d0)?;
            let sp = alpha_recursion(gamma0, kappa_plus, j, depth, d0)?;
            for l in 0..=depth {
                minus[l * n_z + idx] = sm.alpha[l];
                plus[l * n_z + idx] = sp.alpha[l];
            }
        }
        Ok(Self {
            n_z,
            depth,
            minus,
            plus,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Diagonal of `D_ℓ` on the left boundary, ordered by mode.
    pub fn minus(&self, l: usize) -> &[C64] {
        &self.minus[l * self.n_z..(l + 1) * self.n_z]
    }

    pub fn plus(&self, l: usize) -> &[C64] {
        &self.plus[l * self.n_z..(l + 1) * self.n_z]
    }
}

//! The Cayley-transformed waveguide problem
//! `M̃(λ) = [[(1−λ)²Q(γ), (1−λ)²C₁(γ)], [(1−λ)C₂ᵀ, (1−λ)P(γ)]]`, `γ = γ(λ)`,
//! and the structured TIAR step that never forms the full vectors
//! `y₄, …, y_{k+1}`.

mod alpha;
mod schur;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use alpha::{alpha_recursion, AlphaSeries, AlphaTable, MAX_DEPTH};
pub use schur::SchurPrecomputation;

use crate::arnoldi::{
    iar_run_monitored, ritz_pairs, tiar_run_with, ArnoldiOptions, BasisTensor, Breakdown,
    ConvergenceHistory, FullVectors, HessenbergState, IterationRecord, PhaseTimes, RitzReport,
    RitzValue, TensorAction,
};
use crate::linalg::CsrMatrix;
use crate::nep::{CayleyShift, NepProblem};
use crate::waveguide::{DtnOperator, WaveguideProblem};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `M̃` around `λ = 0` with everything the iteration needs precomputed.
#[derive(Debug, Clone)]
pub struct CayleyNep {
    shift: CayleyShift,
    problem: WaveguideProblem,
    fa: [CsrMatrix<C64>; 3],
    fc: [CsrMatrix<C64>; 3],
    alpha: AlphaTable,
    schur: SchurPrecomputation,
}

/// Interior ordering that visits each periodic column as `0, n_z−1, 1,
/// n_z−2, …`, so that neighbours on the ring are at most two apart and the
/// band of `Q` is about `n_z` instead of `2n_z`.
pub fn ring_ordering(n_x: usize, n_z: usize) -> Vec<usize> {
    (0..n_x)
        .flat_map(|i| {
            (0..n_z).map(move |t| i * n_z + if t % 2 == 0 { t / 2 } else { n_z - 1 - t / 2 })
        })
        .collect()
}

/// `[F(0), F′(0), F″(0)]` for `F(λ) = (1−λ)²(X₀ + γX₁ + γ²X₂)`.
fn derivative_blocks(x: &[CsrMatrix<f64>; 3], g0: C64) -> [CsrMatrix<C64>; 3] {
    let gb = g0.conj();
    let one = C64::new(1.0, 0.0);
    let two = C64::new(2.0, 0.0);
    [
        CsrMatrix::combine(&[(one, &x[0]), (g0, &x[1]), (g0 * g0, &x[2])]),
        CsrMatrix::combine(&[(-two, &x[0]), (gb - g0, &x[1]), (two * g0 * gb, &x[2])]),
        CsrMatrix::combine(&[(two, &x[0]), (-two * gb, &x[1]), (two * gb * gb, &x[2])]),
    ]
}

impl CayleyNep {
    /// Precomputes the blocks at `γ₀`, the `α` table up to derivative order
    /// `depth` (the number of iterations to be run) and the Schur solver.
    pub fn new(problem: WaveguideProblem, gamma0: C64, depth: usize) -> Result<Self> {
        let shift = CayleyShift::new(gamma0)?;
        let m = &problem.matrices;
        let grid = problem.grid();
        let alpha = AlphaTable::new(
            gamma0,
            problem.geometry.kappa_minus,
            problem.geometry.kappa_plus,
            grid.n_z,
            depth.max(2),
            m.stencil.d0,
        )?;
        let fa = derivative_blocks(&m.a, gamma0);
        let fc = derivative_blocks(&m.c1, gamma0);
        let p0 = boundary_matrix(&problem, alpha.minus(0), alpha.plus(0))?;
        let schur = SchurPrecomputation::new(
            &fa[0],
            &fc[0],
            &m.c2t,
            p0,
            Some(ring_ordering(grid.n_x, grid.n_z)),
        )?;
        Ok(Self {
            shift,
            problem,
            fa,
            fc,
            alpha,
            schur,
        })
    }

    pub fn shift(&self) -> &CayleyShift {
        &self.shift
    }

    pub fn problem(&self) -> &WaveguideProblem {
        &self.problem
    }

    pub fn alpha(&self) -> &AlphaTable {
        &self.alpha
    }

    pub fn schur(&self) -> &SchurPrecomputation {
        &self.schur
    }

    /// `F_A⁽ⁱ⁾(0)` for `i ≤ 2`.
    pub fn fa(&self, i: usize) -> &CsrMatrix<C64> {
        &self.fa[i]
    }

    /// `F_{C₁}⁽ⁱ⁾(0)` for `i ≤ 2`.
    pub fn fc(&self, i: usize) -> &CsrMatrix<C64> {
        &self.fc[i]
    }

    fn interior_dim(&self) -> usize {
        self.problem.grid().interior_dim()
    }

    fn check_len(&self, v: &[C64]) -> Result<()> {
        let n = self.problem.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `P̃⁽ⁱ⁾(0)b` on both boundary columns, added to `out`.
    fn boundary_derivative_add(&self, i: usize, b: &[C64], out: &mut [C64]) -> Result<()> {
        if i > self.alpha.depth() {
            return Err(Error::InvalidInput(format!(
                "derivative order {i} exceeds the precomputed depth {}",
                self.alpha.depth()
            )));
        }
        let nz = self.problem.grid().n_z;
        let lm = self
            .problem
            .dtn_minus
            .apply_diagonal(self.alpha.minus(i), &b[..nz])?;
        let lp = self
            .problem
            .dtn_plus
            .apply_diagonal(self.alpha.plus(i), &b[nz..])?;
        for (o, v) in out.iter_mut().zip(lm.iter().chain(&lp)) {
            *o += v;
        }
        Ok(())
    }

    /// `M̃⁽ⁱ⁾(0)v`, applied term by term on the full vector.
    pub fn apply_derivative(&self, i: usize, v: &[C64]) -> Result<Vec<C64>> {
        self.check_len(v)?;
        let ni = self.interior_dim();
        let (u, b) = v.split_at(ni);
        let mut out = vec![ZERO; v.len()];
        let (top, bottom) = out.split_at_mut(ni);
        if i <= 2 {
            self.fa[i].mul_add(u, top);
            self.fc[i].mul_add(b, top);
        }
        match i {
            0 => self.problem.matrices.c2t.mul_add(u, bottom),
            1 => {
                let cu = self.problem.matrices.c2t.apply(u);
                for (o, c) in bottom.iter_mut().zip(cu) {
                    *o -= c;
                }
            }
            _ => {}
        }
        self.boundary_derivative_add(i, b, bottom)?;
        Ok(out)
    }

    /// `M̃(0)⁻¹r`.
    pub fn solve_zero(&self, r: &[C64]) -> Result<Vec<C64>> {
        self.check_len(r)?;
        self.schur.solve(r)
    }

    /// `M̃(λ)w` through the untransformed problem at `γ(λ)`.
    pub fn evaluate_at(&self, lambda: C64, w: &[C64]) -> Result<Vec<C64>> {
        let gamma = self.shift.inverse(lambda)?;
        let mut out = self.problem.evaluate(gamma, w)?;
        let t = C64::new(1.0, 0.0) - lambda;
        let ni = self.interior_dim();
        for (i, v) in out.iter_mut().enumerate() {
            *v *= if i < ni { t * t } else { t };
        }
        Ok(out)
    }

    /// `z₁ + z₂ = Σ_{i=1}^{k} M̃⁽ⁱ⁾(0) y_{i+1}` read from the newest tensor
    /// slab: `y₂` and `y₃` in full, the boundary rows of the rest through
    /// the Fourier coefficients of the trailing rows of `Z`.
    fn structured_rhs(&self, basis: &BasisTensor, times: &mut PhaseTimes) -> Result<Vec<C64>> {
        let clock = Instant::now();
        let k = basis.k();
        let n = basis.n();
        let grid = self.problem.grid();
        let (ni, nz) = (grid.interior_dim(), grid.n_z);
        if k > self.alpha.depth() {
            return Err(Error::InvalidInput(format!(
                "iteration {k} exceeds the precomputed derivative depth {}",
                self.alpha.depth()
            )));
        }
        let slab = basis.slab(k - 1);
        let coef = |c: usize, l: usize| slab[c * k + l];

        let full = |c: usize| {
            let mut y = vec![ZERO; n];
            let inv = 1.0 / (c + 1) as f64;
            for l in 0..k {
                let a = coef(c, l) * inv;
                if a != ZERO {
                    for (yi, zi) in y.iter_mut().zip(basis.z_column(l)) {
                        *yi += a * zi;
                    }
                }
            }
            y
        };
        let y2 = full(0);
        let y3 = if k >= 2 { Some(full(1)) } else { None };

        // Fourier coefficients of the boundary rows of each z_l.
        let nb = 2 * nz;
        let mut zhat = Vec::with_capacity(nb * k);
        for l in 0..k {
            let zb = &basis.z_column(l)[ni..];
            zhat.extend(self.problem.dtn_minus.to_modes(&zb[..nz])?);
            zhat.extend(self.problem.dtn_plus.to_modes(&zb[nz..])?);
        }
        times.y_block += clock.elapsed();

        let clock = Instant::now();
        let mut acc = vec![ZERO; nb];
        let mut yhat = vec![ZERO; nb];
        for c in 0..k {
            yhat.iter_mut().for_each(|v| *v = ZERO);
            for l in 0..k {
                let a = coef(c, l);
                if a != ZERO {
                    for (y, z) in yhat.iter_mut().zip(&zhat[l * nb..(l + 1) * nb]) {
                        *y += a * z;
                    }
                }
            }
            let i = c + 1;
            let inv = 1.0 / i as f64;
            let d = self.alpha.minus(i).iter().chain(self.alpha.plus(i));
            for ((a, y), d) in acc.iter_mut().zip(&yhat).zip(d) {
                *a += d * y * inv;
            }
        }
        let mut z = vec![ZERO; n];
        {
            let (top, bottom) = z.split_at_mut(ni);
            self.fa[1].mul_add(&y2[..ni], top);
            self.fc[1].mul_add(&y2[ni..], top);
            if let Some(y3) = &y3 {
                self.fa[2].mul_add(&y3[..ni], top);
                self.fc[2].mul_add(&y3[ni..], top);
            }
            let cu = self.problem.matrices.c2t.apply(&y2[..ni]);
            let lm = self.problem.dtn_minus.from_modes(&acc[..nz])?;
            let lp = self.problem.dtn_plus.from_modes(&acc[nz..])?;
            for ((o, c), v) in bottom.iter_mut().zip(cu).zip(lm.iter().chain(&lp)) {
                *o += v - c;
            }
        }
        times.y1_solve += clock.elapsed();
        Ok(z)
    }
}

/// Dense `blockdiag(R diag(d₋) R⁻¹, R diag(d₊) R⁻¹)`.
fn boundary_matrix(
    problem: &WaveguideProblem,
    d_minus: &[C64],
    d_plus: &[C64],
) -> Result<DMatrix<C64>> {
    let nz = problem.grid().n_z;
    let mut p = DMatrix::<C64>::zeros(2 * nz, 2 * nz);
    let blocks: [(&DtnOperator, &[C64]); 2] =
        [(&problem.dtn_minus, d_minus), (&problem.dtn_plus, d_plus)];
    for (side, (op, d)) in blocks.into_iter().enumerate() {
        let off = side * nz;
        let mut e = vec![ZERO; nz];
        for j in 0..nz {
            e[j] = C64::new(1.0, 0.0);
            let col = op.apply_diagonal(d, &e)?;
            e[j] = ZERO;
            for (i, v) in col.into_iter().enumerate() {
                p[(off + i, off + j)] = v;
            }
        }
    }
    Ok(p)
}

impl TensorAction for CayleyNep {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn next_y1(&self, basis: &BasisTensor, times: &mut PhaseTimes) -> Result<DVector<C64>> {
        let z = self.structured_rhs(basis, times)?;
        let clock = Instant::now();
        let r: Vec<C64> = z.into_iter().map(|v| -v).collect();
        let y1 = self.schur.solve(&r)?;
        times.y1_solve += clock.elapsed();
        Ok(DVector::from_vec(y1))
    }
}

/// Generic view used by IAR and plain TIAR: every derivative is applied to a
/// materialized vector.
impl NepProblem for CayleyNep {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn solve_step(&self, ys: &DMatrix<C64>) -> Result<DVector<C64>> {
        let n = self.problem.dim();
        if ys.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: ys.nrows(),
            });
        }
        let mut z = vec![ZERO; n];
        for (c, col) in ys.column_iter().enumerate() {
            let v = self.apply_derivative(c + 1, col.as_slice())?;
            for (zi, vi) in z.iter_mut().zip(v) {
                *zi -= vi;
            }
        }
        Ok(DVector::from_vec(self.schur.solve(&z)?))
    }

    fn evaluate(&self, lambda: C64, w: &DVector<C64>) -> Result<DVector<C64>> {
        Ok(DVector::from_vec(self.evaluate_at(lambda, w.as_slice())?))
    }
}

/// Rectangle `(−∞, re_max) × (im_min, im_max)` of the `γ`-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for Omega {
    /// `(−∞, 0) × (−2π, 0)`.
    fn default() -> Self {
        Self {
            re_max: 0.0,
            im_min: -2.0 * PI,
            im_max: 0.0,
        }
    }
}

impl Omega {
    pub fn contains(&self, g: C64) -> bool {
        g.re < self.re_max && g.im > self.im_min && g.im < self.im_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Iar,
    Tiar,
    Wtiar,
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iar" => Ok(Self::Iar),
            "tiar" => Ok(Self::Tiar),
            "wtiar" => Ok(Self::Wtiar),
            other => Err(Error::InvalidInput(format!("unknown solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Iar => "iar",
            Self::Tiar => "tiar",
            Self::Wtiar => "wtiar",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub arnoldi: ArnoldiOptions,
    /// Extract Ritz values with residuals after every iteration, not only at
    /// the end.
    pub history: bool,
    /// Residuals are computed only for values inside this region; `None`
    /// computes all of them.
    pub residual_region: Option<Omega>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            arnoldi: ArnoldiOptions::default(),
            history: true,
            residual_region: Some(Omega::default()),
        }
    }
}

/// Outcome of one solver run on the waveguide problem.
#[derive(Debug, Clone)]
pub struct WaveguideRun {
    pub solver: Solver,
    pub hessenberg: HessenbergState,
    pub breakdown: Option<Breakdown>,
    pub times: PhaseTimes,
    pub report: RitzReport,
    /// Complex numbers held by the Krylov basis at the end of the run.
    pub basis_storage: usize,
    /// Basis vectors at the end of the run.
    pub basis_columns: usize,
}

impl WaveguideRun {
    pub fn iterations(&self) -> usize {
        self.hessenberg.iterations()
    }
}

/// Ritz values of the leading `k×k` block mapped back to `γ`, with
/// `E(w, γ)` for `w = Σ_j s_j q_{1,j}` when `γ` lies in `region`.
pub fn waveguide_ritz(
    nep: &CayleyNep,
    h: &HessenbergState,
    k: usize,
    first_block: &dyn Fn(&[C64]) -> DVector<C64>,
    region: Option<&Omega>,
) -> Result<(Vec<RitzValue>, usize)> {
    let (pairs, excluded) = ritz_pairs(h, k, Some(&nep.shift))?;
    let mut values = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mut v = p.value;
        let gamma = v.target();
        if gamma.re.is_finite() && gamma.im.is_finite() && region.is_none_or(|o| o.contains(gamma))
        {
            let w = first_block(p.vector.as_slice());
            // a branch point hit exactly leaves the residual undefined
            v.residual = nep.problem.residual(gamma, w.as_slice()).ok();
        }
        values.push(v);
    }
    Ok((values, excluded))
}

/// Runs `m` iterations of the chosen solver on `M̃` from `x₁`.
pub fn solve_waveguide(
    nep: &CayleyNep,
    solver: Solver,
    x1: &DVector<C64>,
    m: usize,
    opts: &RunOptions,
) -> Result<WaveguideRun> {
    let region = opts.residual_region;
    let mut history = ConvergenceHistory::default();
    let mut eig_time = Duration::ZERO;
    let mut last: Option<(Vec<RitzValue>, usize)> = None;

    let mut record = |h: &HessenbergState,
                      first_block: &dyn Fn(&[C64]) -> DVector<C64>,
                      force: bool|
     -> Result<()> {
        if !(opts.history || force) {
            return Ok(());
        }
        let clock = Instant::now();
        let k = h.iterations();
        let (values, excluded) = waveguide_ritz(nep, h, k, first_block, region.as_ref())?;
        eig_time += clock.elapsed();
        history.push(IterationRecord {
            iteration: k,
            ritz: values.clone(),
        });
        last = Some((values, excluded));
        Ok(())
    };

    let (hessenberg, breakdown, mut times, storage, columns) = match solver {
        Solver::Iar => {
            let run = iar_run_monitored(nep, x1, m, &opts.arnoldi, &mut |h, b| {
                record(h, &|s| b.first_block_combination(s), false)
            })?;
            if !opts.history {
                record(
                    &run.hessenberg,
                    &|s| run.basis.first_block_combination(s),
                    true,
                )?;
            }
            (
                run.hessenberg,
                run.breakdown,
                run.times,
                run.basis.storage_len(),
                run.basis.len(),
            )
        }
        Solver::Tiar | Solver::Wtiar => {
            let full = FullVectors(nep);
            let action: &dyn TensorAction = match solver {
                Solver::Wtiar => nep,
                _ => &full,
            };
            let run = tiar_run_with(action, x1, m, &opts.arnoldi, &mut |h, b| {
                record(h, &|s| b.first_block_combination(s), false)
            })?;
            if !opts.history {
                record(
                    &run.hessenberg,
                    &|s| run.basis.first_block_combination(s),
                    true,
                )?;
            }
            (
                run.hessenberg,
                run.breakdown,
                run.times,
                run.basis.storage_len(),
                run.basis.k(),
            )
        }
    };
    times.hessenberg_eig += eig_time;
    let (values, excluded_zero) = last.unwrap_or_default();
    Ok(WaveguideRun {
        solver,
        hessenberg,
        breakdown,
        times,
        report: RitzReport {
            values,
            excluded_zero,
            history,
        },
        basis_storage: storage,
        basis_columns: columns,
    })
}

/// WTIAR: TIAR with the structured step on `M̃`.
pub fn wtiar_run(
    nep: &CayleyNep,
    x1: &DVector<C64>,
    m: usize,
    opts: &RunOptions,
) -> Result<WaveguideRun> {
    solve_waveguide(nep, Solver::Wtiar, x1, m, opts)
}

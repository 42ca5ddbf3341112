//! Discretized periodic waveguide: geometry, finite elements, DtN boundary
//! maps and the nonlinear matrix `M(γ)`.

mod dtn;
mod fem;
mod geometry;

pub use dtn::{
    beta, exterior_check, fourier_mode, modes, s_coeff, DtnOperator, ExteriorReport, Side,
};
pub use fem::{assemble_fem, BoundaryStencil, WaveguideMatrices};
pub use geometry::{DiscretizationGrid, Region, WaveguideGeometry};

use nalgebra::DVector;

use crate::{Error, Result, C64};

/// The assembled waveguide problem
/// `M(γ) = [[Q(γ), C₁(γ)], [C₂ᵀ, P(γ)]]` with
/// `P(γ) = blockdiag(R(L₋ + d₀)R⁻¹, R(L₊ + d₀)R⁻¹)`.
#[derive(Debug, Clone)]
pub struct WaveguideProblem {
    pub geometry: WaveguideGeometry,
    pub matrices: WaveguideMatrices,
    pub dtn_minus: DtnOperator,
    pub dtn_plus: DtnOperator,
    norms: BlockNorms,
}

#[derive(Debug, Clone, Copy)]
struct BlockNorms {
    a: [f64; 3],
    c1: [f64; 3],
    c2t: f64,
}

impl WaveguideProblem {
    pub fn new(geometry: &WaveguideGeometry, grid: &DiscretizationGrid) -> Result<Self> {
        let matrices = assemble_fem(geometry, grid)?;
        let nz = grid.n_z;
        let norms = BlockNorms {
            a: std::array::from_fn(|i| matrices.a[i].frobenius_norm()),
            c1: std::array::from_fn(|i| matrices.c1[i].frobenius_norm()),
            c2t: matrices.c2t.frobenius_norm(),
        };
        Ok(Self {
            geometry: geometry.clone(),
            dtn_minus: DtnOperator::new(Side::Minus, geometry.kappa_minus, nz)?,
            dtn_plus: DtnOperator::new(Side::Plus, geometry.kappa_plus, nz)?,
            matrices,
            norms,
        })
    }

    pub fn grid(&self) -> &DiscretizationGrid {
        &self.matrices.grid
    }

    /// `n_x·n_z + 2n_z`.
    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    /// `M(γ)w`.
    pub fn evaluate(&self, gamma: C64, w: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.len(),
            });
        }
        let grid = self.grid();
        let (ni, nz) = (grid.interior_dim(), grid.n_z);
        let (u, ub) = w.split_at(ni);
        let m = &self.matrices;
        let mut out = vec![C64::new(0.0, 0.0); n];
        {
            let (top, bottom) = out.split_at_mut(ni);
            let mut pow = C64::new(1.0, 0.0);
            for i in 0..3 {
                let su: Vec<C64> = u.iter().map(|v| v * pow).collect();
                let sb: Vec<C64> = ub.iter().map(|v| v * pow).collect();
                m.a[i].mul_add(&su, top);
                m.c1[i].mul_add(&sb, top);
                pow *= gamma;
            }
            m.c2t.mul_add(u, bottom);
            let d0 = m.stencil.d0;
            let lm = self.dtn_minus.apply_shifted(gamma, d0, &ub[..nz])?;
            let lp = self.dtn_plus.apply_shifted(gamma, d0, &ub[nz..])?;
            for (o, v) in bottom.iter_mut().zip(lm.iter().chain(&lp)) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Denominator of the relative residual:
    /// `Σ|γ|ⁱ(‖A_i‖ + ‖C₁,ᵢ‖) + ‖C₂ᵀ‖ + 2|d₀| + Σ_j(|s₊,j| + |s₋,j|)`,
    /// Frobenius norms throughout.
    pub fn residual_scale(&self, gamma: C64) -> Result<f64> {
        let g = gamma.norm();
        let mut scale = 0.0;
        let mut pow = 1.0;
        for i in 0..3 {
            scale += pow * (self.norms.a[i] + self.norms.c1[i]);
            pow *= g;
        }
        scale += self.norms.c2t + 2.0 * self.matrices.stencil.d0.abs();
        for op in [&self.dtn_minus, &self.dtn_plus] {
            scale += op.s_values(gamma)?.iter().map(|s| s.norm()).sum::<f64>();
        }
        Ok(scale)
    }

    /// `E(w, γ) = ‖M(γ)w‖ / scale(γ)` for `w` normalized to unit length.
    pub fn residual(&self, gamma: C64, w: &[C64]) -> Result<f64> {
        let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidInput("zero vector has no residual".into()));
        }
        let mw = self.evaluate(gamma, w)?;
        let r = mw.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / norm;
        Ok(r / self.residual_scale(gamma)?)
    }

    /// As [`Self::residual`] for an nalgebra vector.
    pub fn residual_vec(&self, gamma: C64, w: &DVector<C64>) -> Result<f64> {
        self.residual(gamma, w.as_slice())
    }
}

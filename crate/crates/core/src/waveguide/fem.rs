use serde::Serialize;

use super::geometry::{DiscretizationGrid, WaveguideGeometry};
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// One-sided second-order difference `u_x(x₋) ≈ d₀u₀ + d₁u₁ + d₂u₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryStencil {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

impl BoundaryStencil {
    pub fn new(h_x: f64) -> Self {
        Self {
            d0: -3.0 / (2.0 * h_x),
            d1: 2.0 / h_x,
            d2: -1.0 / (2.0 * h_x),
        }
    }
}

/// Discretization blocks of the waveguide problem.
///
/// Unknowns are ordered `[û; û₋; û₊]` with `û` stacked column by column in
/// `x` (z fastest). `A_i` act on `û`, `C₁,ᵢ` on `[û₋; û₊]`; `Q(γ) = A₀ + γA₁
/// + γ²A₂` and `C₁(γ)` likewise.
#[derive(Debug, Clone)]
pub struct WaveguideMatrices {
    pub grid: DiscretizationGrid,
    pub a: [CsrMatrix<f64>; 3],
    pub c1: [CsrMatrix<f64>; 3],
    pub c2t: CsrMatrix<f64>,
    pub stencil: BoundaryStencil,
    /// `∫κ²uφ` on interior dofs (the `K` part of `A₀`).
    pub kappa_mass: CsrMatrix<f64>,
    /// `−∫∇u·∇φ` over all dofs, boundary columns included.
    pub gradient_full: CsrMatrix<f64>,
    /// `∫uφ` over all dofs.
    pub mass_full: CsrMatrix<f64>,
}

// 1D element matrices on a unit-free reference: stiffness·h and mass/h.
const K1: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 1.0]];
const M1: [[f64; 2]; 2] = [[2.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 6.0]];
// ∫φ_b' φ_a over an element, independent of h.
const D1: [[f64; 2]; 2] = [[-0.5, 0.5], [-0.5, 0.5]];

/// `∫_{lo}^{hi} φ_a φ_b` for the linear hat pair on `[x0, x0 + h]`, exact by
/// two-point Gauss.
fn partial_mass(x0: f64, h: f64, lo: f64, hi: f64) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    if hi <= lo {
        return m;
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let off = half / 3f64.sqrt();
    for x in [mid - off, mid + off] {
        let t = (x - x0) / h;
        let phi = [1.0 - t, t];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += half * phi[a] * phi[b];
            }
        }
    }
    m
}

/// Assembles the bilinear forms `a(u,φ) = −∫∇u·∇φ + ∫κ²uφ`,
/// `b(u,φ) = 2∫u_zφ` and `c(u,φ) = ∫uφ` with bilinear elements, periodic in
/// `z`, and splits them into interior and boundary blocks. The `κ²` term is
/// integrated exactly over the parts of each element covered by each region.
pub fn assemble_fem(
    geometry: &WaveguideGeometry,
    grid: &DiscretizationGrid,
) -> Result<WaveguideMatrices> {
    geometry.validate()?;
    if grid.x_minus != geometry.x_minus || grid.x_plus != geometry.x_plus {
        return Err(Error::Grid("grid bounds differ from the geometry".into()));
    }
    let (nx, nz) = (grid.n_x, grid.n_z);
    let (hx, hz) = (grid.h_x(), grid.h_z());
    let full = (nx + 2) * nz;
    let node = |i: usize, j: usize| i * nz + j % nz;

    let mut grad = Vec::with_capacity(16 * (nx + 1) * nz);
    let mut mass = Vec::with_capacity(16 * (nx + 1) * nz);
    let mut conv = Vec::with_capacity(16 * (nx + 1) * nz);
    let mut kmass = Vec::with_capacity(16 * (nx + 1) * nz);

    for i in 0..=nx {
        let x0 = grid.x(i);
        let x1 = x0 + hx;
        for j in 0..nz {
            let z0 = grid.z(j);
            let z1 = z0 + hz;
            let nodes = [
                node(i, j),
                node(i + 1, j),
                node(i, j + 1),
                node(i + 1, j + 1),
            ];

            // κ² mass from the region pieces overlapping this element
            let mut km = [[0.0; 4]; 4];
            for r in &geometry.regions {
                let (xl, xh) = (x0.max(r.x0), x1.min(r.x1));
                let (zl, zh) = (z0.max(r.z0), z1.min(r.z1));
                if xh <= xl || zh <= zl {
                    continue;
                }
                let mx = partial_mass(x0, hx, xl, xh);
                let mz = partial_mass(z0, hz, zl, zh);
                let k2 = r.kappa * r.kappa;
                for a in 0..4 {
                    for b in 0..4 {
                        km[a][b] += k2 * mx[a % 2][b % 2] * mz[a / 2][b / 2];
                    }
                }
            }

            for a in 0..4 {
                let (ax, az) = (a % 2, a / 2);
                for b in 0..4 {
                    let (bx, bz) = (b % 2, b / 2);
                    let (r, c) = (nodes[a], nodes[b]);
                    let stiff =
                        K1[ax][bx] / hx * M1[az][bz] * hz + M1[ax][bx] * hx * K1[az][bz] / hz;
                    grad.push((r, c, -stiff));
                    mass.push((r, c, M1[ax][bx] * hx * M1[az][bz] * hz));
                    conv.push((r, c, M1[ax][bx] * hx * D1[az][bz]));
                    kmass.push((r, c, km[a][b]));
                }
            }
        }
    }

    let grad = CsrMatrix::from_triplets(full, full, &grad);
    let mass = CsrMatrix::from_triplets(full, full, &mass);
    let conv = CsrMatrix::from_triplets(full, full, &conv);
    let kmass = CsrMatrix::from_triplets(full, full, &kmass);

    // Full node index → interior index or boundary column index.
    let interior = |g: usize| (g >= nz && g < (nx + 1) * nz).then(|| g - nz);
    let boundary = |g: usize| {
        if g < nz {
            Some(g)
        } else if g >= (nx + 1) * nz {
            Some(g - (nx + 1) * nz + nz)
        } else {
            None
        }
    };
    let n = nx * nz;
    let split = |m: &CsrMatrix<f64>, scale: f64| {
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for (r, c, v) in m.triplets() {
            let Some(r) = interior(r) else { continue };
            if let Some(c) = interior(c) {
                inner.push((r, c, scale * v));
            } else if let Some(c) = boundary(c) {
                outer.push((r, c, scale * v));
            }
        }
        (
            CsrMatrix::from_triplets(n, n, &inner),
            CsrMatrix::from_triplets(n, 2 * nz, &outer),
        )
    };

    let (a_grad, c_grad) = split(&grad, 1.0);
    let (a_k, c_k) = split(&kmass, 1.0);
    let (a1, c11) = split(&conv, 2.0);
    let (a2, c12) = split(&mass, 1.0);
    let add = |x: &CsrMatrix<f64>, y: &CsrMatrix<f64>| {
        let mut t = x.triplets();
        t.extend(y.triplets());
        CsrMatrix::from_triplets(x.nrows(), x.ncols(), &t)
    };
    let a0 = add(&a_grad, &a_k);
    let c10 = add(&c_grad, &c_k);

    let stencil = BoundaryStencil::new(hx);
    let mut c2 = Vec::with_capacity(4 * nz);
    for j in 0..nz {
        c2.push((j, j, stencil.d1));
        c2.push((j, nz + j, stencil.d2));
        c2.push((nz + j, (nx - 2) * nz + j, stencil.d2));
        c2.push((nz + j, (nx - 1) * nz + j, stencil.d1));
    }
    let c2t = CsrMatrix::from_triplets(2 * nz, n, &c2);

    Ok(WaveguideMatrices {
        grid: *grid,
        a: [a0, a1, a2],
        c1: [c10, c11, c12],
        c2t,
        stencil,
        kappa_mass: a_k,
        gradient_full: grad,
        mass_full: mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_mass_full_interval() {
        let m = partial_mass(1.0, 0.5, 1.0, 1.5);
        assert!((m[0][0] - 0.5 / 3.0).abs() < 1e-15);
        assert!((m[0][1] - 0.5 / 6.0).abs() < 1e-15);
        let half = partial_mass(0.0, 1.0, 0.0, 0.5);
        // ∫₀^½ (1−t)² dt = 7/24
        assert!((half[0][0] - 7.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn stencil_is_exact_for_quadratics() {
        let h = 0.1;
        let s = BoundaryStencil::new(h);
        let f = |x: f64| 3.0 - 2.0 * x + 5.0 * x * x;
        let approx = s.d0 * f(0.0) + s.d1 * f(h) + s.d2 * f(2.0 * h);
        assert!((approx - (-2.0)).abs() < 1e-12);
    }
}

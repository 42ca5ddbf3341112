use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned rectangle `[x0,x1]×[z0,z1]` with constant wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
    pub kappa: f64,
}

impl Region {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.z1 - self.z0)
    }

    fn overlap(&self, other: &Region) -> f64 {
        let dx = self.x1.min(other.x1) - self.x0.max(other.x0);
        let dz = self.z1.min(other.z1) - self.z0.max(other.z0);
        dx.max(0.0) * dz.max(0.0)
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.z0..=self.z1).contains(&z)
    }
}

/// Periodic waveguide: piecewise-constant wavenumber on the strip
/// `[x₋,x₊]×[0,1]`, constant `κ₋` to the left and `κ₊` to the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideGeometry {
    pub omega: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Relative slack used when checking that regions tile the strip.
const TILE_TOL: f64 = 1e-12;

impl WaveguideGeometry {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega,
            self.kappa_minus,
            self.kappa_plus,
            self.x_minus,
            self.x_plus,
        ];
        if !finite.iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry("non-finite parameter".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::Geometry(format!(
                "ω = {} must be positive",
                self.omega
            )));
        }
        if self.kappa_minus <= 0.0 || self.kappa_plus <= 0.0 {
            return Err(Error::Geometry(
                "exterior wavenumbers must be positive".into(),
            ));
        }
        if !(self.x_minus < self.x_plus) {
            return Err(Error::Geometry(format!(
                "x₋ = {} must be below x₊ = {}",
                self.x_minus, self.x_plus
            )));
        }
        if self.regions.is_empty() {
            return Err(Error::Geometry("no interior regions".into()));
        }
        let width = self.x_plus - self.x_minus;
        let slack = TILE_TOL * width.max(1.0);
        for (i, r) in self.regions.iter().enumerate() {
            if ![r.x0, r.x1, r.z0, r.z1, r.kappa]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::Geometry(format!("region {i} is not finite")));
            }
            if !(r.kappa > 0.0) {
                return Err(Error::Geometry(format!(
                    "region {i} has κ = {} ≤ 0",
                    r.kappa
                )));
            }
            if !(r.x0 < r.x1 && r.z0 < r.z1) {
                return Err(Error::Geometry(format!("region {i} is empty")));
            }
            if r.x0 < self.x_minus - slack
                || r.x1 > self.x_plus + slack
                || r.z0 < -slack
                || r.z1 > 1.0 + slack
            {
                return Err(Error::Geometry(format!("region {i} leaves the strip")));
            }
            for (j, s) in self.regions.iter().enumerate().skip(i + 1) {
                if r.overlap(s) > slack {
                    return Err(Error::Geometry(format!("regions {i} and {j} overlap")));
                }
            }
        }
        let covered: f64 = self.regions.iter().map(Region::area).sum();
        if (covered - width).abs() > 1e-10 * width {
            return Err(Error::Geometry(format!(
                "regions cover area {covered} but the strip has area {width}"
            )));
        }
        Ok(())
    }

    /// Wavenumber at a point; exterior values outside `[x₋,x₊]`.
    pub fn kappa_at(&self, x: f64, z: f64) -> f64 {
        if x < self.x_minus {
            return self.kappa_minus;
        }
        if x > self.x_plus {
            return self.kappa_plus;
        }
        let z = z.rem_euclid(1.0);
        self.regions
            .iter()
            .find(|r| r.contains(x, z))
            .map_or(self.kappa_plus, |r| r.kappa)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(text).map_err(|e| Error::Geometry(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Geometry(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "benchmark" => Ok(Self::benchmark()),
            "complex" => Ok(Self::complex()),
            other => Err(Error::Geometry(format!("unknown preset {other:?}"))),
        }
    }

    /// Slab waveguide with a rectangular grating, `ω = π`.
    ///
    /// Substrate `√2.3·ω` for `x < 0`, a film of `√3·ω` on `[0, 2/π]`, a
    /// half-period grating of film material on `[2/π, 2/π + 0.4]` and cover
    /// `ω` beyond. The layout is reconstructed from the published parameters
    /// and eigenvalues rather than from a machine-readable figure.
    pub fn benchmark() -> Self {
        let omega = PI;
        let film = 3f64.sqrt() * omega;
        let cover = omega;
        let xf = 2.0 / PI;
        let xp = xf + 0.4;
        Self {
            omega,
            kappa_minus: 2.3f64.sqrt() * omega,
            kappa_plus: cover,
            x_minus: 0.0,
            x_plus: xp,
            regions: vec![
                Region { x0: 0.0, x1: xf, z0: 0.0, z1: 1.0, kappa: film },
                Region { x0: xf, x1: xp, z0: 0.0, z1: 0.5, kappa: film },
                Region { x0: xf, x1: xp, z0: 0.5, z1: 1.0, kappa: cover },
            ],
            description: Some(
                "substrate sqrt(2.3)*pi | film sqrt(3)*pi on [0, 2/pi] | grating (film for z < 1/2, cover above) on [2/pi, 2/pi + 0.4] | cover pi"
                    .into(),
            ),
        }
    }

    /// Layered guide with two high-index inclusions on `[0, 2]`, `ω = π`.
    ///
    /// Uses the wavenumbers `√2.3·ω`, `2√3·ω`, `4√3·ω`, `ω` of the published
    /// complex-shape example; the arrangement of the inclusions is our own.
    pub fn complex() -> Self {
        let omega = PI;
        let k1 = 2.3f64.sqrt() * omega;
        let k2 = 2.0 * 3f64.sqrt() * omega;
        let k3 = 4.0 * 3f64.sqrt() * omega;
        let k4 = omega;
        let r = |x0, x1, z0, z1, kappa| Region {
            x0,
            x1,
            z0,
            z1,
            kappa,
        };
        Self {
            omega,
            kappa_minus: k1,
            kappa_plus: k4,
            x_minus: 0.0,
            x_plus: 2.0,
            regions: vec![
                // guiding layer with an embedded high-index block
                r(0.0, 0.5, 0.0, 1.0, k2),
                r(0.5, 1.0, 0.0, 0.25, k2),
                r(0.5, 1.0, 0.25, 0.75, k3),
                r(0.5, 1.0, 0.75, 1.0, k2),
                // staircase towards the cover
                r(1.0, 1.5, 0.0, 0.6, k2),
                r(1.0, 1.5, 0.6, 1.0, k4),
                r(1.5, 2.0, 0.0, 0.2, k3),
                r(1.5, 2.0, 0.2, 1.0, k4),
            ],
            description: Some(
                "designed layout using the four wavenumbers of the complex-shape example".into(),
            ),
        }
    }
}

/// Uniform grid with `n_x` interior node columns and `n_z` (odd) nodes per
/// period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscretizationGrid {
    pub n_x: usize,
    pub n_z: usize,
    pub x_minus: f64,
    pub x_plus: f64,
}

impl DiscretizationGrid {
    pub fn new(n_x: usize, n_z: usize, x_minus: f64, x_plus: f64) -> Result<Self> {
        if n_x < 2 {
            return Err(Error::Grid(format!("n_x = {n_x} must be at least 2")));
        }
        if n_z < 3 || n_z.is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "n_z = {n_z} must be odd and at least 3"
            )));
        }
        if !(x_minus < x_plus) {
            return Err(Error::Grid("empty x-interval".into()));
        }
        Ok(Self {
            n_x,
            n_z,
            x_minus,
            x_plus,
        })
    }

    pub fn for_geometry(geometry: &WaveguideGeometry, n_x: usize, n_z: usize) -> Result<Self> {
        Self::new(n_x, n_z, geometry.x_minus, geometry.x_plus)
    }

    pub fn h_x(&self) -> f64 {
        (self.x_plus - self.x_minus) / (self.n_x + 1) as f64
    }

    pub fn h_z(&self) -> f64 {
        1.0 / self.n_z as f64
    }

    /// `p` with `n_z = 2p + 1`.
    pub fn p(&self) -> usize {
        (self.n_z - 1) / 2
    }

    /// `x_i = x₋ + i·h_x` for `i = 0, …, n_x + 1`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_minus + i as f64 * self.h_x()
    }

    /// `z_j = j·h_z` for `j = 0, …, n_z − 1`.
    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.h_z()
    }

    /// Interior unknowns `n_x·n_z`.
    pub fn interior_dim(&self) -> usize {
        self.n_x * self.n_z
    }

    /// Size of `M(γ)`: `n_x·n_z + 2n_z`.
    pub fn dim(&self) -> usize {
        (self.n_x + 2) * self.n_z
    }

    /// Next refinement level, `n_x → 2n_x` and `n_z → 2n_z − 1` (keeps `n_z`
    /// odd; the meshes are not nested).
    pub fn refined(&self) -> Self {
        Self {
            n_x: 2 * self.n_x,
            n_z: 2 * self.n_z - 1,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        WaveguideGeometry::benchmark().validate().unwrap();
        WaveguideGeometry::complex().validate().unwrap();
        assert!(WaveguideGeometry::preset("nope").is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = WaveguideGeometry::benchmark();
        let back = WaveguideGeometry::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn tiling_violations_are_rejected() {
        let mut g = WaveguideGeometry::benchmark();
        g.regions.pop();
        assert!(matches!(g.validate(), Err(Error::Geometry(_))));
        let mut g = WaveguideGeometry::benchmark();
        g.regions[1].z1 = 0.7;
        assert!(g.validate().is_err());
        let mut g = WaveguideGeometry::benchmark();
        g.regions[0].kappa = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn kappa_lookup() {
        let g = WaveguideGeometry::benchmark();
        assert_eq!(g.kappa_at(-1.0, 0.3), g.kappa_minus);
        assert_eq!(g.kappa_at(5.0, 0.3), g.kappa_plus);
        assert_eq!(g.kappa_at(0.1, 0.9), 3f64.sqrt() * PI);
        assert_eq!(g.kappa_at(0.9, 0.75), PI);
    }

    #[test]
    fn grid_parameters() {
        let g = DiscretizationGrid::new(10, 11, 0.0, 1.1).unwrap();
        assert!((g.h_x() - 0.1).abs() < 1e-15);
        assert_eq!(g.p(), 5);
        assert_eq!(g.dim(), 132);
        assert_eq!(g.refined().n_z, 21);
        assert!(DiscretizationGrid::new(10, 10, 0.0, 1.0).is_err());
        assert!(DiscretizationGrid::new(1, 11, 0.0, 1.0).is_err());
    }
}

//! Canonical example spaces.
//!
//! Every generator places points on a lattice with an exactly representable
//! spacing when `n` is a power of two, so pairwise distances on grids are
//! computed without rounding. Default extents put the radius-1 threshold of
//! the Lipschitz norm strictly between the grid resolution and the diameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{FiniteHomSpace, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Grid1d,
    Grid2d,
    Snowflake,
    PowerMetric,
    WeightedGrid,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "grid1d" => Self::Grid1d,
            "grid2d" => Self::Grid2d,
            "snowflake" => Self::Snowflake,
            "power_metric" | "power" => Self::PowerMetric,
            "weighted_grid" => Self::WeightedGrid,
            other => return Err(Error::InvalidSpec(format!("unknown generator kind {other:?}"))),
        })
    }
}

/// Parameters of a generated space.
///
/// `n` is the point count, except for `grid2d` where it is the side length
/// (`n * n` points). `exponent` is the snowflake exponent, the power-metric
/// exponent, or the weight exponent `a` in `(1 + |x|)^a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub spacing: Option<f64>,
    pub exponent: Option<f64>,
}

impl GeneratorSpec {
    pub fn grid1d(n: usize) -> Self {
        Self { kind: GeneratorKind::Grid1d, n, spacing: None, exponent: None }
    }

    pub fn grid2d(side: usize) -> Self {
        Self { kind: GeneratorKind::Grid2d, n: side, spacing: None, exponent: None }
    }

    pub fn snowflake(eps: f64, n: usize) -> Self {
        Self { kind: GeneratorKind::Snowflake, n, spacing: None, exponent: Some(eps) }
    }

    pub fn power_metric(p: f64, n: usize) -> Self {
        Self { kind: GeneratorKind::PowerMetric, n, spacing: None, exponent: Some(p) }
    }

    /// Weighted 1-D grid with spacing 1/16 and diameter about `n / 16`.
    pub fn weighted_grid(a: f64, n: usize) -> Self {
        Self { kind: GeneratorKind::WeightedGrid, n, spacing: None, exponent: Some(a) }
    }

    pub fn with_spacing(mut self, h: f64) -> Self {
        self.spacing = Some(h);
        self
    }

    fn exponent_or_default(&self) -> f64 {
        match self.kind {
            GeneratorKind::Snowflake => self.exponent.unwrap_or(0.5),
            GeneratorKind::PowerMetric => self.exponent.unwrap_or(2.0),
            GeneratorKind::WeightedGrid => self.exponent.unwrap_or(0.0),
            _ => 1.0,
        }
    }

    /// Coordinate spacing actually used.
    pub fn effective_spacing(&self) -> f64 {
        if let Some(h) = self.spacing {
            return h;
        }
        let n = self.n as f64;
        match self.kind {
            GeneratorKind::Grid1d | GeneratorKind::Grid2d => 4.0 / n,
            // metric extent (n h)^e = 4
            GeneratorKind::Snowflake | GeneratorKind::PowerMetric => 4f64.powf(1.0 / self.exponent_or_default()) / n,
            GeneratorKind::WeightedGrid => 1.0 / 16.0,
        }
    }

    /// Name used for the generated space.
    pub fn label(&self) -> String {
        match self.kind {
            GeneratorKind::Grid1d => format!("grid1d(n={})", self.n),
            GeneratorKind::Grid2d => format!("grid2d({}x{})", self.n, self.n),
            GeneratorKind::Snowflake => format!("snowflake(eps={}, n={})", self.exponent_or_default(), self.n),
            GeneratorKind::PowerMetric => format!("power_metric(p={}, n={})", self.exponent_or_default(), self.n),
            GeneratorKind::WeightedGrid => format!("weighted_grid(a={}, n={})", self.exponent_or_default(), self.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidSpec(format!("n = {} < 8", self.n)));
        }
        let h = self.effective_spacing();
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidSpec(format!("spacing {h} must be positive")));
        }
        let e = self.exponent_or_default();
        match self.kind {
            GeneratorKind::Snowflake if !(e > 0.0 && e <= 1.0) => {
                return Err(Error::InvalidSpec(format!("snowflake exponent {e} not in (0, 1]")))
            }
            GeneratorKind::PowerMetric if !(e >= 1.0) => {
                return Err(Error::InvalidSpec(format!("power exponent {e} < 1")))
            }
            GeneratorKind::WeightedGrid if !e.is_finite() => {
                return Err(Error::InvalidSpec(format!("weight exponent {e} not finite")))
            }
            _ => {}
        }
        // resolution below radius 1, extent at least 4, in metric units
        let to_metric = |t: f64| match self.kind {
            GeneratorKind::Snowflake | GeneratorKind::PowerMetric => t.powf(e),
            _ => t,
        };
        let resolution = to_metric(h);
        let extent = to_metric(h * self.n as f64);
        if resolution >= 1.0 {
            return Err(Error::InvalidSpec(format!("grid resolution {resolution} must be below 1")));
        }
        if extent < 4.0 * (1.0 - 1e-12) {
            return Err(Error::InvalidSpec(format!("metric extent {extent} must be at least 4")));
        }
        Ok(())
    }
}

/// Builds the space described by `spec`. Deterministic.
pub fn generate(spec: &GeneratorSpec) -> Result<FiniteHomSpace> {
    spec.validate()?;
    let n = spec.n;
    let h = spec.effective_spacing();
    let e = spec.exponent_or_default();
    let line = |count: usize| -> Vec<Vec<f64>> { (0..count).map(|i| vec![i as f64 * h]).collect() };
    let name = spec.label();
    match spec.kind {
        GeneratorKind::Grid1d => FiniteHomSpace::from_coords(name, line(n), vec![h; n], Metric::Euclidean),
        GeneratorKind::Grid2d => {
            let coords: Vec<Vec<f64>> =
                (0..n * n).map(|id| vec![(id % n) as f64 * h, (id / n) as f64 * h]).collect();
            FiniteHomSpace::from_coords(name, coords, vec![h * h; n * n], Metric::Euclidean)
        }
        GeneratorKind::Snowflake => FiniteHomSpace::from_coords(name, line(n), vec![h; n], Metric::Snowflake { eps: e }),
        GeneratorKind::PowerMetric => FiniteHomSpace::from_coords(name, line(n), vec![h; n], Metric::Power { p: e }),
        GeneratorKind::WeightedGrid => {
            let coords = line(n);
            let w = coords.iter().map(|c| h * (1.0 + c[0].abs()).powf(e)).collect();
            FiniteHomSpace::from_coords(name, coords, w, Metric::Euclidean)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::validate_space;

    #[test]
    fn grid1d_256_layout() {
        let s = generate(&GeneratorSpec::grid1d(256)).unwrap();
        assert_eq!(s.n(), 256);
        assert!(s.weights().iter().all(|&w| w == 1.0 / 64.0));
        let c = s.coords().unwrap();
        assert_eq!(c[0][0], 0.0);
        assert_eq!(c[255][0], 255.0 / 64.0);
        assert_eq!(s.total_mass(), 4.0);
    }

    #[test]
    fn known_quasi_triangle_constants() {
        let g = generate(&GeneratorSpec::grid1d(64)).unwrap();
        assert_eq!(validate_space(&g).unwrap().a0, 1.0);
        let sf = generate(&GeneratorSpec::snowflake(0.5, 64)).unwrap();
        assert_eq!(validate_space(&sf).unwrap().a0, 1.0);
        let pm = generate(&GeneratorSpec::power_metric(2.0, 64)).unwrap();
        assert_eq!(validate_space(&pm).unwrap().a0, 2.0);
        let g2 = generate(&GeneratorSpec::grid2d(12)).unwrap();
        assert_eq!(validate_space(&g2).unwrap().a0, 1.0);
    }

    #[test]
    fn weighted_grid_unit_window_mass_decays() {
        let s = generate(&GeneratorSpec::weighted_grid(-0.5, 1024)).unwrap();
        let near = s.ball_measure(16, 1.0 + 1.0 / 32.0);
        let far = s.ball_measure(1023, 1.0 + 1.0 / 32.0);
        assert!(far < 0.15 && near > 1.0, "near {near} far {far}");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate(&GeneratorSpec::grid1d(4)).is_err());
        assert!(generate(&GeneratorSpec::snowflake(1.5, 64)).is_err());
        assert!(generate(&GeneratorSpec::power_metric(0.5, 64)).is_err());
        assert!(generate(&GeneratorSpec::grid1d(64).with_spacing(-1.0)).is_err());
        // diameter below 4
        assert!(generate(&GeneratorSpec::grid1d(64).with_spacing(1.0 / 64.0)).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::weighted_grid(2.0, 128);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }
}

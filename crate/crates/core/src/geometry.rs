//! Geometric classifiers: lower and upper bounds on unit-ball measures and
//! Ahlfors regularity, each with a measure side and a wavelet side.
//!
//! Unit balls are read as `B(x, 1+) = { z : d(x, z) <= 1 }`, the limit of
//! `B(x, r)` as `r` decreases to 1. With this reading the sup branch of the
//! Lipschitz norm of the constant function is exactly `m^(-theta)` where `m`
//! is the smallest unit-ball measure.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicTree;
use crate::norms::carleson::carleson_norm;
use crate::norms::lip::{lip_norm, BRANCH_RADIUS};
use crate::par;
use crate::space::{FiniteHomSpace, GEOM_TOL};
use crate::wavelet::{CoefficientSet, WaveletBasis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Lower bound passes iff `min_x mu(B(x, 1+)) >= lower_min`.
    pub lower_min: f64,
    /// Upper bound passes iff `max_x mu(B(x, 1+)) <= upper_max`.
    pub upper_max: f64,
    /// Wavelet-side upper bound: largest level-0 cube mass.
    pub cube_mass_max: f64,
    /// Ahlfors passes iff the regularity constant is at most this.
    pub reg_max: f64,
    /// Wavelet-side Ahlfors: largest allowed spread of normalized cube masses.
    pub spread_max: f64,
    /// Number of radii in the Ahlfors regression.
    pub radii: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { lower_min: 0.25, upper_max: 16.0, cube_mass_max: 16.0, reg_max: 8.0, spread_max: 10.0, radii: 16 }
    }
}

/// Radius just above 1: open balls of this radius are closed unit balls.
pub fn unit_radius() -> f64 {
    BRANCH_RADIUS.next_up()
}

fn unit_ball_masses(space: &FiniteHomSpace) -> Vec<f64> {
    let r = unit_radius();
    par::map_range(space.n(), |x| space.ball_measure(x, r))
}

fn argmin(v: &[f64]) -> (f64, usize) {
    v.iter().enumerate().fold((f64::INFINITY, 0), |b, (i, &x)| if x < b.0 { (x, i) } else { b })
}

fn argmax(v: &[f64]) -> (f64, usize) {
    v.iter().enumerate().fold((f64::NEG_INFINITY, 0), |b, (i, &x)| if x > b.0 { (x, i) } else { b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerVerdict {
    /// `min_x mu(B(x, 1+))`.
    pub m: f64,
    pub witness: usize,
    /// Lipschitz norm of the constant function 1.
    pub lip_one: f64,
    /// `lip_one <= m^(-theta)` and `lip_one >= mu(X)^(-theta)`.
    pub lip_consistent: bool,
    pub pass: bool,
}

pub fn geometry_lower(space: &FiniteHomSpace, theta: f64, cfg: &GeometryConfig) -> LowerVerdict {
    let (m, witness) = argmin(&unit_ball_masses(space));
    let lip_one = lip_norm(&vec![1.0; space.n()], space, theta).value;
    let hi = m.powf(-theta) * (1.0 + GEOM_TOL);
    let lo = space.total_mass().powf(-theta) * (1.0 - GEOM_TOL);
    LowerVerdict { m, witness, lip_one, lip_consistent: lip_one <= hi && lip_one >= lo, pass: m >= cfg.lower_min }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperVerdict {
    /// `max_x mu(B(x, 1+))`.
    pub big_m: f64,
    pub witness: usize,
    /// Largest level-0 cube mass and its cube index.
    pub cube_mass_max: f64,
    pub cube_witness: usize,
    /// `||phi||_inf / ||phi||_*` over level-0 fathers (min, max); equals
    /// `mu(Q)^theta`.
    pub father_ratio: (f64, f64),
    /// `||phi||_inf / ||phi||_lip` at the lightest and heaviest level-0
    /// cubes (min, max).
    pub father_lip_ratio: (f64, f64),
    pub measure_pass: bool,
    pub wavelet_pass: bool,
    pub pass: bool,
    pub agree: bool,
}

pub fn geometry_upper(space: &FiniteHomSpace, basis: &WaveletBasis, theta: f64, cfg: &GeometryConfig) -> UpperVerdict {
    let (big_m, witness) = argmax(&unit_ball_masses(space));
    let tree = &basis.tree;
    let masses: Vec<f64> = tree.level(0).iter().map(|q| q.mass).collect();
    let (cube_mass_max, cube_witness) = argmax(&masses);
    let father_ratio = par::map_slice(basis.fathers(), |e| {
        let mut unit = CoefficientSet::zeros(basis);
        unit.values[basis.position(&e.key).unwrap()] = 1.0;
        e.coeffs[0].abs() / carleson_norm(&unit, tree, theta).value
    })
    .into_iter()
    .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    // the lip route is informational; evaluated at the lightest and heaviest cubes
    let (_, light) = argmin(&masses);
    let lip_ratio = |a: usize| {
        let e = &basis.fathers()[a];
        e.coeffs[0].abs() / lip_norm(&e.dense(tree), space, theta).value
    };
    let (r_light, r_heavy) = (lip_ratio(light), lip_ratio(cube_witness));
    let father_lip_ratio = (r_light.min(r_heavy), r_light.max(r_heavy));
    let measure_pass = big_m <= cfg.upper_max;
    let wavelet_pass = father_ratio.1 <= cfg.cube_mass_max.powf(theta) * (1.0 + GEOM_TOL);
    UpperVerdict {
        big_m,
        witness,
        cube_mass_max,
        cube_witness,
        father_ratio,
        father_lip_ratio,
        measure_pass,
        wavelet_pass,
        pass: measure_pass,
        agree: measure_pass == wavelet_pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhlforsVerdict {
    pub omega_hat: f64,
    /// `exp(max residual - min residual)` over all `(x, r)` samples.
    pub reg_const: f64,
    pub radii: Vec<f64>,
    /// Sample with the largest and smallest `mu(B(x, r)) / r^omega_hat`.
    pub max_sample: (usize, f64),
    pub min_sample: (usize, f64),
    /// Levels whose cubes are resolved by the point set.
    pub wavelet_levels: Vec<i32>,
    /// `max / min` of `mu(Q) / delta^(k omega_hat)` over resolved cubes.
    pub wavelet_spread: f64,
    pub measure_pass: bool,
    pub wavelet_pass: bool,
    pub pass: bool,
    pub agree: bool,
    /// Coarsest level of the tree (levels below it are truncated).
    pub k_min: i32,
}

/// Regression radii: `count` log-spaced values in `[2 h, diam / 3]`, each
/// moved to the midpoint of the gap between consecutive distinct distances
/// that contains it.
pub fn ahlfors_radii(space: &FiniteHomSpace, count: usize) -> Vec<f64> {
    let dd = space.distinct_distances();
    let lo = 2.0 * space.min_positive_distance();
    let hi = space.diameter() / 3.0;
    if !(hi > lo) || count < 2 {
        return vec![];
    }
    let mut radii: Vec<f64> = (0..count)
        .map(|i| {
            let r = lo * (hi / lo).powf(i as f64 / (count - 1) as f64);
            let j = dd.partition_point(|&d| d < r);
            match (j.checked_sub(1).map(|i| dd[i]), dd.get(j)) {
                (Some(a), Some(&b)) if b > a => 0.5 * (a + b),
                _ => r,
            }
        })
        .collect();
    radii.dedup();
    radii
}

/// Fits `omega_hat` to the upper envelope `r -> max_x mu(B(x, r))`, which is
/// attained away from the edges of a truncated space, and measures the
/// spread of `mu(B(x, r)) / r^omega_hat` over all samples.
pub fn ahlfors_test(space: &FiniteHomSpace, tree: &DyadicTree, cfg: &GeometryConfig) -> AhlforsVerdict {
    let radii = ahlfors_radii(space, cfg.radii);
    let n = space.n();
    let table = par::map_slice(&radii, |&r| (0..n).map(|x| space.ball_measure(x, r)).collect::<Vec<f64>>());
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = table.iter().map(|row| row.iter().cloned().fold(0.0, f64::max).ln()).collect();
    let omega_hat = slope(&xs, &ys);
    let mut max_sample = (0, f64::NEG_INFINITY);
    let mut min_sample = (0, f64::INFINITY);
    for (row, &r) in table.iter().zip(&radii) {
        for (x, &mu) in row.iter().enumerate() {
            let q = mu.ln() - omega_hat * r.ln();
            if q > max_sample.1 {
                max_sample = (x, q);
            }
            if q < min_sample.1 {
                min_sample = (x, q);
            }
        }
    }
    let reg_const = (max_sample.1 - min_sample.1).exp();
    let max_sample = (max_sample.0, max_sample.1.exp());
    let min_sample = (min_sample.0, min_sample.1.exp());

    let resolution = space.min_positive_distance();
    let wavelet_levels: Vec<i32> =
        (0..=tree.k_max).filter(|&k| k == 0 || tree.c_sharp() * tree.scale(k) >= 2.0 * resolution).collect();
    let mut rho: Vec<f64> = Vec::new();
    for &k in &wavelet_levels {
        for q in tree.level(k) {
            // level-0 cubes carry fathers; finer resolved cubes carry mothers
            if k == 0 || q.new_center {
                rho.push(q.mass / tree.scale(k).powf(omega_hat));
            }
        }
    }
    let wavelet_spread = rho.iter().cloned().fold(0.0, f64::max) / rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let measure_pass = reg_const <= cfg.reg_max;
    let wavelet_pass = wavelet_spread <= cfg.spread_max;
    AhlforsVerdict {
        omega_hat,
        reg_const,
        radii,
        max_sample,
        min_sample,
        wavelet_levels,
        wavelet_spread,
        measure_pass,
        wavelet_pass,
        pass: measure_pass,
        agree: measure_pass == wavelet_pass,
        k_min: tree.k_min,
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub theta: f64,
    pub config: GeometryConfig,
    pub lower: LowerVerdict,
    pub upper: UpperVerdict,
    pub ahlfors: AhlforsVerdict,
}

pub fn classify(space: &FiniteHomSpace, basis: &WaveletBasis, theta: f64, cfg: &GeometryConfig) -> GeometryReport {
    GeometryReport {
        theta,
        config: *cfg,
        lower: geometry_lower(space, theta, cfg),
        upper: geometry_upper(space, basis, theta, cfg),
        ahlfors: ahlfors_test(space, &basis.tree, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_tree, TreeOptions};
    use crate::generate::{generate, GeneratorSpec};
    use crate::space::Metric;
    use crate::wavelet::build_mra;

    #[test]
    fn two_distant_points_pass_lower() {
        let s = FiniteHomSpace::from_coords("two", vec![vec![0.0], vec![10.0]], vec![1.0, 1.0], Metric::Euclidean).unwrap();
        let v = geometry_lower(&s, 0.3, &GeometryConfig::default());
        assert_eq!(v.m, 1.0);
        assert!(v.pass && v.lip_consistent);
        assert_eq!(v.lip_one, 1.0);
    }

    #[test]
    fn grid_constant_lip_is_unit_ball_power() {
        let s = generate(&GeneratorSpec::grid1d(256)).unwrap();
        let v = geometry_lower(&s, 0.3, &GeometryConfig::default());
        assert_eq!(v.lip_one, 1.0 / v.m.powf(0.3));
        assert!(v.pass);
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let a = ahlfors_test(&s, &tree, &GeometryConfig::default());
        assert!((a.omega_hat - 1.0).abs() < 0.05, "{}", a.omega_hat);
        assert!(a.pass && a.agree);
    }

    #[test]
    fn haar_father_sup_norm() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let b = build_mra(&tree).unwrap();
        for e in b.fathers() {
            let v = e.dense(&tree);
            let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert_eq!(sup, 1.0 / tree.cube(e.support).mass.sqrt());
        }
        let u = geometry_upper(&s, &b, 0.3, &GeometryConfig::default());
        assert!(u.pass && u.agree);
    }
}

//! Carleson sequence norm of wavelet coefficients.
//!
//! `||c||_* = sup_Q ( S(Q) / mu(Q)^(1 + 2 theta) )^(1/2)` over cubes of level
//! `k >= 0`, where `S(Q)` sums the squared father coefficients of level-0
//! cubes inside `Q` and the squared mother coefficients whose key cube lies
//! inside `Q`. `S` is accumulated bottom-up with exact partial sums, so every
//! `S(Q)` is the correctly rounded sum of its squared terms.
//!
//! A cube whose parent has a single child has the same point set as the
//! parent; only the topmost cube of such a chain (within `k >= 0`) is
//! evaluated, since it contains every term the copies below it contain.

use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeKey, DyadicTree};
use crate::par;
use crate::sum::ExactSum;
use crate::wavelet::CoefficientSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonNorm {
    pub value: f64,
    pub witness: CubeKey,
}

pub(crate) fn carleson_value(s: f64, mass: f64, theta: f64) -> f64 {
    (s / mass.powf(1.0 + 2.0 * theta)).sqrt()
}

/// True for cubes evaluated by the supremum.
pub fn is_canonical(tree: &DyadicTree, key: CubeKey) -> bool {
    if key.level < 0 {
        return false;
    }
    if key.level == 0 {
        return true;
    }
    let parent = tree.cube(key).parent.expect("cubes above k_min have parents");
    tree.level(key.level - 1)[parent].children.len() > 1
}

/// `S(Q)` for every cube at levels `0..=k_max`, indexed `[k][alpha]`.
pub fn carleson_sums(coeffs: &CoefficientSet, tree: &DyadicTree) -> Vec<Vec<ExactSum>> {
    let depth = tree.k_max.max(-1) + 1;
    let mut own: Vec<Vec<Vec<f64>>> = (0..depth).map(|k| vec![Vec::new(); tree.level(k).len()]).collect();
    for (key, c) in coeffs.iter() {
        let q = key.cube;
        if q.level >= 0 && q.level <= tree.k_max {
            own[q.level as usize][q.index].push(c * c);
        }
    }
    let mut sums: Vec<Vec<ExactSum>> = vec![Vec::new(); depth as usize];
    for k in (0..depth).rev() {
        let cubes = tree.level(k);
        let finer = sums.get(k as usize + 1);
        let own_k = &own[k as usize];
        let level = par::map_range(cubes.len(), |a| {
            let mut acc: ExactSum = own_k[a].iter().copied().collect();
            if let Some(f) = finer {
                for &c in &cubes[a].children {
                    acc.merge(&f[c]);
                }
            }
            acc
        });
        sums[k as usize] = level;
    }
    sums
}

pub fn carleson_norm(coeffs: &CoefficientSet, tree: &DyadicTree, theta: f64) -> CarlesonNorm {
    let sums = carleson_sums(coeffs, tree);
    let mut best = CarlesonNorm { value: f64::NEG_INFINITY, witness: CubeKey::new(0, 0) };
    for (k, level) in sums.iter().enumerate() {
        for (a, s) in level.iter().enumerate() {
            let key = CubeKey::new(k as i32, a);
            if !is_canonical(tree, key) {
                continue;
            }
            let v = carleson_value(s.value(), tree.cube(key).mass, theta);
            if v > best.value {
                best = CarlesonNorm { value: v, witness: key };
            }
        }
    }
    best
}

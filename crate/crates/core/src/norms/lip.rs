//! Inhomogeneous Lipschitz norm.
//!
//! `M(B) = osc_B f / mu(B)^theta` for balls of radius `r <= 1` and
//! `M(B) = max_B |f| / mu(B)^theta` for `r > 1`; the norm is the supremum
//! over all balls.
//!
//! For a fixed center the open balls `B(x, r)` are the prefixes of the
//! neighbor list grouped by equal distance. If the prefix ending with the
//! group at distance `D_j` is followed by a group at `D_(j+1)`, it is the ball
//! for every `r` in `(D_j, D_(j+1)]`. The oscillation branch is reachable iff
//! `D_j < 1`, the sup branch iff `D_(j+1) > 1` (or the prefix is the whole
//! space). One scan per center therefore visits every ball exactly once.

use serde::{Deserialize, Serialize};

use crate::par;
use crate::space::FiniteHomSpace;
use crate::sum::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Oscillation,
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipWitness {
    pub center: usize,
    pub radius: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipNorm {
    pub value: f64,
    pub witness: LipWitness,
}

/// Radius separating the two branches.
pub const BRANCH_RADIUS: f64 = 1.0;

pub(crate) fn osc_value(max: f64, min: f64, mass: f64, theta: f64) -> f64 {
    (max - min) / mass.powf(theta)
}

pub(crate) fn sup_value(abs_max: f64, mass: f64, theta: f64) -> f64 {
    abs_max / mass.powf(theta)
}

/// `M(B(center, radius))` evaluated directly from the member list.
pub fn ball_functional(f: &[f64], space: &FiniteHomSpace, theta: f64, center: usize, radius: f64) -> f64 {
    let members = space.ball_members(center, radius);
    let mass = exact_sum(members.iter().map(|&z| space.weight(z)));
    if radius <= BRANCH_RADIUS {
        let max = members.iter().map(|&z| f[z]).fold(f64::NEG_INFINITY, f64::max);
        let min = members.iter().map(|&z| f[z]).fold(f64::INFINITY, f64::min);
        osc_value(max, min, mass, theta)
    } else {
        sup_value(members.iter().map(|&z| f[z].abs()).fold(0.0, f64::max), mass, theta)
    }
}

/// Supremum of `M(B)` over all balls centered at points, with a ball that
/// attains it. Ties go to the lowest center, then the smallest radius.
pub fn lip_norm(f: &[f64], space: &FiniteHomSpace, theta: f64) -> LipNorm {
    assert_eq!(f.len(), space.n(), "function length must match the space");
    let cache = space.cache();
    let n = space.n();
    let per_center = par::map_range(n, |x| {
        let nb = cache.neighbors(x);
        let ds = cache.sorted_distances(x);
        let cum = cache.cumulative(x);
        let (mut hi, mut lo, mut amax) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
        let mut best: Option<(f64, f64, Branch)> = None;
        let mut consider = |v: f64, r: f64, b: Branch| {
            if best.is_none_or(|(bv, _, _)| v > bv) {
                best = Some((v, r, b));
            }
        };
        let mut j = 0;
        while j < n {
            let d = ds[j];
            while j < n && ds[j] == d {
                let v = f[nb[j] as usize];
                hi = hi.max(v);
                lo = lo.min(v);
                amax = amax.max(v.abs());
                j += 1;
            }
            let mass = cum[j - 1];
            let next = ds.get(j).copied();
            if d < BRANCH_RADIUS {
                let r = next.map_or(BRANCH_RADIUS, |dn| dn.min(BRANCH_RADIUS));
                consider(osc_value(hi, lo, mass, theta), r, Branch::Oscillation);
            }
            match next {
                Some(dn) if dn > BRANCH_RADIUS => consider(sup_value(amax, mass, theta), dn, Branch::Sup),
                None => consider(sup_value(amax, mass, theta), d.max(BRANCH_RADIUS) + 1.0, Branch::Sup),
                _ => {}
            }
        }
        best.unwrap()
    });
    let (mut value, mut witness) = (f64::NEG_INFINITY, None);
    for (x, (v, r, b)) in per_center.into_iter().enumerate() {
        if v > value {
            value = v;
            witness = Some(LipWitness { center: x, radius: r, branch: b });
        }
    }
    LipNorm { value, witness: witness.unwrap() }
}

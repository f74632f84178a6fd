//! Doubling statistics and ball-comparison checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::space::{FiniteHomSpace, GEOM_TOL};

/// Empirical doubling constant `C_mu = sup mu(2B)/mu(B)` and upper dimension
/// `omega = log2(C_mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingProfile {
    pub c_mu: f64,
    pub omega: f64,
    /// `(2^m, max ratio over radii in [2^m, 2^(m+1)))`, ascending.
    pub per_scale: Vec<(f64, f64)>,
    /// Radius window the supremum was taken over.
    pub window: (f64, f64),
}

/// Doubling profile over all radii.
pub fn doubling_profile(space: &FiniteHomSpace) -> DoublingProfile {
    doubling_profile_window(space, 0.0, f64::INFINITY)
}

/// Doubling profile restricted to radii in `[r_min, r_max]`.
///
/// For a fixed center the ratio `mu(B(x,2r))/mu(B(x,r))` is a step function
/// that is constant on intervals `(b_i, b_(i+1)]` between breakpoints
/// `{d(x,z), d(x,z)/2}`, so evaluating at the breakpoints (plus the left end
/// of the window) gives the exact supremum.
pub fn doubling_profile_window(space: &FiniteHomSpace, r_min: f64, r_max: f64) -> DoublingProfile {
    let cache = space.cache();
    let n = space.n();
    let per_center = par::map_range(n, |x| {
        let ds = cache.sorted_distances(x);
        let mut radii: Vec<f64> = Vec::with_capacity(2 * n + 1);
        for &d in &ds[1..] {
            radii.push(d);
            radii.push(d / 2.0);
        }
        if r_min > 0.0 {
            radii.push(r_min);
        }
        radii.retain(|&r| r > 0.0 && r >= r_min && r <= r_max);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let mut bins: Vec<(i32, f64)> = Vec::new();
        for r in radii {
            let ratio = cache.ball_measure(x, 2.0 * r) / cache.ball_measure(x, r);
            let m = r.log2().floor() as i32;
            match bins.iter_mut().find(|(b, _)| *b == m) {
                Some((_, v)) => *v = v.max(ratio),
                None => bins.push((m, ratio)),
            }
        }
        bins
    });
    let mut merged: Vec<(i32, f64)> = Vec::new();
    for bins in per_center {
        for (m, v) in bins {
            match merged.iter_mut().find(|(b, _)| *b == m) {
                Some((_, w)) => *w = w.max(v),
                None => merged.push((m, v)),
            }
        }
    }
    merged.sort_by_key(|&(m, _)| m);
    let c_mu = merged.iter().map(|&(_, v)| v).fold(1.0, f64::max);
    DoublingProfile {
        c_mu,
        omega: c_mu.log2(),
        per_scale: merged.into_iter().map(|(m, v)| (2f64.powi(m), v)).collect(),
        window: (r_min, r_max),
    }
}

/// One tested `(x, y, r1, r2)` tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRatioTuple {
    pub x: usize,
    pub y: usize,
    pub r1: f64,
    pub r2: f64,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRatioReport {
    pub tested: usize,
    /// Tuples with `r1 + d(x,y) < r2`, outside the hypothesis.
    pub skipped: usize,
    pub violations: Vec<BallRatioTuple>,
}

/// Checks `mu(B(x,r1))/mu(B(y,r2)) <= A0^w ((r1 + d(x,y))/r2)^w` on a tuple.
/// Returns `None` when the hypothesis `r1 + d(x,y) >= r2` fails.
pub fn ball_ratio_tuple(
    space: &FiniteHomSpace,
    a0: f64,
    omega: f64,
    x: usize,
    y: usize,
    r1: f64,
    r2: f64,
) -> Option<BallRatioTuple> {
    let dxy = space.dist(x, y);
    if r1 + dxy < r2 {
        return None;
    }
    let ratio = space.ball_measure(x, r1) / space.ball_measure(y, r2);
    let bound = a0.powf(omega) * ((r1 + dxy) / r2).powf(omega);
    Some(BallRatioTuple { x, y, r1, r2, ratio, bound })
}

/// Samples `samples` tuples (fixed seed) and reports bound violations.
pub fn check_ball_ratio_bound(
    space: &FiniteHomSpace,
    profile: &DoublingProfile,
    a0: f64,
    samples: usize,
    seed: u64,
) -> BallRatioReport {
    let radii = space.distinct_distances();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.n();
    let tuples: Vec<(usize, usize, f64, f64)> = (0..samples)
        .map(|_| {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            let r1 = radii[rng.gen_range(0..radii.len())];
            let r2 = radii[rng.gen_range(0..radii.len())];
            (x, y, r1, r2)
        })
        .collect();
    check_tuples(space, profile.omega, a0, &tuples)
}

/// Checks an explicit list of tuples.
pub fn check_tuples(space: &FiniteHomSpace, omega: f64, a0: f64, tuples: &[(usize, usize, f64, f64)]) -> BallRatioReport {
    let results = par::map_slice(tuples, |&(x, y, r1, r2)| ball_ratio_tuple(space, a0, omega, x, y, r1, r2));
    let mut report = BallRatioReport { tested: 0, skipped: 0, violations: Vec::new() };
    for r in results {
        match r {
            None => report.skipped += 1,
            Some(t) => {
                report.tested += 1;
                if t.ratio > t.bound * (1.0 + GEOM_TOL) {
                    report.violations.push(t);
                }
            }
        }
    }
    report
}

/// Largest `V(x,y)/V(y,x)` over all pairs, to compare with `(2 A0)^omega`.
pub fn pair_volume_asymmetry(space: &FiniteHomSpace) -> f64 {
    let n = space.n();
    let rows = par::map_range(n, |x| {
        let mut best = 1.0f64;
        for y in 0..n {
            if y != x {
                let d = space.dist(x, y);
                best = best.max(space.ball_measure(x, d) / space.ball_measure(y, d));
            }
        }
        best
    });
    rows.into_iter().fold(1.0, f64::max)
}

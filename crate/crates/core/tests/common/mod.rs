//! Brute-force oracles shared by the integration tests. None of them reuse
//! the library's summation, ball cache or tree traversal.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use hmtk::dyadic::{CubeKey, DyadicTree};
use hmtk::space::FiniteHomSpace;
use hmtk::wavelet::CoefficientSet;

/// Every finite `f64` is an integer multiple of `2^-1074`.
fn to_scaled(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let v = BigInt::from(mant) << ((e + 1074) as usize);
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Exact sum rounded to nearest, ties to even.
pub fn exact_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let total: BigInt = terms.into_iter().map(to_scaled).sum();
    if total.is_zero() {
        return 0.0;
    }
    let neg = total.is_negative();
    let mag = total.abs();
    let bits = mag.bits() as i64;
    let shift = (bits - 53).max(0);
    let mut m = &mag >> (shift as usize);
    if shift > 0 {
        let rem = &mag - (&m << (shift as usize));
        let half = BigInt::from(1) << ((shift - 1) as usize);
        if rem > half || (rem == half && (&m % 2u32) == BigInt::from(1)) {
            m += 1;
        }
    }
    let m = m.to_f64().unwrap();
    // scale by 2^(shift - 1074) in two exact steps
    let e = shift - 1074;
    let v = m * 2f64.powi((e / 2) as i32) * 2f64.powi((e - e / 2) as i32);
    if neg {
        -v
    } else {
        v
    }
}

/// `mu({z : d(x, z) < r})` by a scan of all points.
pub fn ball_mass(space: &FiniteHomSpace, x: usize, r: f64) -> f64 {
    exact_sum((0..space.n()).filter(|&z| space.dist(x, z) < r).map(|z| space.weight(z)))
}

/// Supremum of the ball functional over centers at points and radii at every
/// distance, every midpoint between consecutive distances, 1, and beyond the
/// diameter.
pub fn lip_oracle(f: &[f64], space: &FiniteHomSpace, theta: f64) -> f64 {
    let n = space.n();
    let mut best = f64::NEG_INFINITY;
    for x in 0..n {
        let mut ds: Vec<f64> = (0..n).map(|y| space.dist(x, y)).collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        let mut radii: Vec<f64> = ds.iter().copied().filter(|&d| d > 0.0).collect();
        radii.extend(ds.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        radii.push(1.0);
        radii.push(ds[ds.len() - 1] + 1.0);
        for r in radii {
            let members: Vec<usize> = (0..n).filter(|&z| space.dist(x, z) < r).collect();
            let mass = exact_sum(members.iter().map(|&z| space.weight(z)));
            let v = if r <= 1.0 {
                let hi = members.iter().map(|&z| f[z]).fold(f64::NEG_INFINITY, f64::max);
                let lo = members.iter().map(|&z| f[z]).fold(f64::INFINITY, f64::min);
                (hi - lo) / mass.powf(theta)
            } else {
                members.iter().map(|&z| f[z].abs()).fold(0.0, f64::max) / mass.powf(theta)
            };
            best = best.max(v);
        }
    }
    best
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|p| b.binary_search(p).is_ok())
}

/// Max over cubes of level >= 0 of `(S / mu(Q)^(1+2 theta))^(1/2)`, where `S`
/// sums squared coefficients whose key cube is a subset of `Q`. Returns the
/// first cube in `(level, index)` order attaining it.
pub fn carleson_oracle(coeffs: &CoefficientSet, tree: &DyadicTree, space: &FiniteHomSpace, theta: f64) -> (f64, CubeKey) {
    let mut best = (f64::NEG_INFINITY, CubeKey::new(0, 0));
    for k in 0..=tree.k_max {
        for (a, q) in tree.level(k).iter().enumerate() {
            let s = exact_sum(coeffs.iter().filter_map(|(key, c)| {
                let kc = key.cube;
                (kc.level >= 0 && subset(&tree.cube(kc).members, &q.members)).then_some(c * c)
            }));
            let mass = exact_sum(q.members.iter().map(|&z| space.weight(z)));
            let v = (s / mass.powf(1.0 + 2.0 * theta)).sqrt();
            if v > best.0 {
                best = (v, CubeKey::new(k, a));
            }
        }
    }
    best
}

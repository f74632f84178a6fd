//! Empirical constants of the pointwise, multiplier and pairing estimates.

use serde::{Deserialize, Serialize};

use super::kernels::{test_function_norm, TestFunctionType};
use super::lip::lip_norm;
use crate::error::{Error, Result};
use crate::par;
use crate::space::FiniteHomSpace;
use crate::sum::ExactSum;

/// Radius used for `|f(x)| <= C ||f|| V_r(x)^theta`.
pub const POINTWISE_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub lip: f64,
    /// `max_x |f(x)| / (lip V_2(x)^theta)`.
    pub c1: f64,
    pub c1_witness: usize,
    /// `max_{x != y} |f(x) - f(y)| / (lip V(x, y)^theta)`.
    pub c2: f64,
    pub c2_witness: (usize, usize),
    pub ceiling: f64,
    pub exceeds_ceiling: bool,
}

pub fn check_pointwise_bounds(f: &[f64], space: &FiniteHomSpace, theta: f64, ceiling: f64) -> PointwiseReport {
    let lip = lip_norm(f, space, theta).value;
    let n = space.n();
    let rows = par::map_range(n, |x| {
        let c1 = f[x].abs() / space.ball_measure(x, POINTWISE_RADIUS).powf(theta);
        let mut c2 = (0.0f64, x);
        for y in 0..n {
            if y != x {
                let v = (f[x] - f[y]).abs() / space.ball_measure(x, space.dist(x, y)).powf(theta);
                if v > c2.0 {
                    c2 = (v, y);
                }
            }
        }
        (c1, c2)
    });
    let mut rep = PointwiseReport {
        lip,
        c1: 0.0,
        c1_witness: 0,
        c2: 0.0,
        c2_witness: (0, 0),
        ceiling,
        exceeds_ceiling: false,
    };
    if lip == 0.0 {
        return rep;
    }
    for (x, (c1, (c2, y))) in rows.into_iter().enumerate() {
        if c1 / lip > rep.c1 {
            rep.c1 = c1 / lip;
            rep.c1_witness = x;
        }
        if c2 / lip > rep.c2 {
            rep.c2 = c2 / lip;
            rep.c2_witness = (x, y);
        }
    }
    rep.exceeds_ceiling = rep.c1 > ceiling || rep.c2 > ceiling;
    rep
}

/// Numerator, the two factors of the denominator, and their quotient when
/// the denominator is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRatio {
    pub numerator: f64,
    pub test_norm: f64,
    pub lip: f64,
    pub ratio: Option<f64>,
}

impl BoundRatio {
    fn new(numerator: f64, test_norm: f64, lip: f64) -> Self {
        let den = test_norm * lip;
        Self { numerator, test_norm, lip, ratio: (den > 0.0).then(|| numerator / den) }
    }
}

/// `||psi f||_lip / (||psi||_G ||f||_lip)`; needs `theta <= 1/omega` and
/// `beta >= theta omega`.
pub fn check_multiplier_bound(
    psi: &[f64],
    ty: TestFunctionType,
    f: &[f64],
    space: &FiniteHomSpace,
    a0: f64,
    theta: f64,
    omega: f64,
) -> Result<BoundRatio> {
    if !(theta > 0.0 && theta * omega <= 1.0) || !(ty.beta >= theta * omega && ty.beta <= 1.0) {
        return Err(Error::Precondition(format!(
            "multiplier bound needs 0 < theta <= 1/omega and theta*omega <= beta <= 1 (theta={theta}, omega={omega}, beta={})",
            ty.beta
        )));
    }
    let prod: Vec<f64> = psi.iter().zip(f).map(|(a, b)| a * b).collect();
    let num = lip_norm(&prod, space, theta).value;
    let g = test_function_norm(psi, space, a0, ty)?.value;
    Ok(BoundRatio::new(num, g, lip_norm(f, space, theta).value))
}

/// `|<f, psi>| / (||psi||_G ||f||_lip)`; needs `gamma > theta omega`.
pub fn check_pairing_bound(
    psi: &[f64],
    ty: TestFunctionType,
    f: &[f64],
    space: &FiniteHomSpace,
    a0: f64,
    theta: f64,
    omega: f64,
) -> Result<BoundRatio> {
    if !(ty.gamma > theta * omega) {
        return Err(Error::Precondition(format!(
            "pairing bound needs gamma > theta*omega (gamma={}, theta*omega={})",
            ty.gamma,
            theta * omega
        )));
    }
    let pairing = (0..space.n()).map(|x| f[x] * psi[x] * space.weight(x)).collect::<ExactSum>().value();
    let g = test_function_norm(psi, space, a0, ty)?.value;
    Ok(BoundRatio::new(pairing.abs(), g, lip_norm(f, space, theta).value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};
    use crate::norms::kernels::kernel_p_row;

    #[test]
    fn pointwise_constants() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        let z = check_pointwise_bounds(&[0.0; 64], &s, 0.3, 1e6);
        assert_eq!((z.c1, z.c2), (0.0, 0.0));
        let one = check_pointwise_bounds(&[1.0; 64], &s, 0.3, 1e6);
        let expect = (0..64).map(|x| 1.0 / s.ball_measure(x, 2.0).powf(0.3)).fold(0.0, f64::max) / one.lip;
        assert_eq!(one.c1, expect);
        assert!(!one.exceeds_ceiling);
    }

    #[test]
    fn multiplier_and_pairing() {
        let s = generate(&GeneratorSpec::grid1d(128)).unwrap();
        let ty = TestFunctionType { x0: 64, r: 1.0, beta: 1.0, gamma: 0.6 };
        let psi = kernel_p_row(&s, ty.gamma, ty.x0, ty.r);
        let m = check_multiplier_bound(&psi, ty, &[0.0; 128], &s, 1.0, 0.3, 1.0).unwrap();
        assert_eq!(m.numerator, 0.0);
        assert_eq!(m.ratio, None);
        let one = check_multiplier_bound(&psi, ty, &[1.0; 128], &s, 1.0, 0.3, 1.0).unwrap();
        assert!(one.ratio.unwrap().is_finite());
        let p = check_pairing_bound(&psi, ty, &[1.0; 128], &s, 1.0, 0.3, 1.0).unwrap();
        assert!(p.ratio.unwrap() > 0.0);
        let bad = TestFunctionType { gamma: 0.2, ..ty };
        assert!(matches!(check_pairing_bound(&psi, bad, &[1.0; 128], &s, 1.0, 0.3, 1.0), Err(Error::Precondition(_))));
    }
}

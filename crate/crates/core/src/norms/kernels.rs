//! Decay kernels, test-function norms and the Hölder norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::space::FiniteHomSpace;
use crate::sum::ExactSum;

/// `P_gamma(x0, x; r) = (V_r(x0) + V(x0, x))^(-1) (r / (r + d(x0, x)))^gamma`,
/// with `V(x0, x0) = 0`.
pub fn kernel_p(space: &FiniteHomSpace, gamma: f64, x0: usize, r: f64, x: usize) -> f64 {
    let d = space.dist(x0, x);
    let v = if x == x0 { 0.0 } else { space.ball_measure(x0, d) };
    (r / (r + d)).powf(gamma) / (space.ball_measure(x0, r) + v)
}

/// `P_gamma(x0, . ; r)` at every point.
pub fn kernel_p_row(space: &FiniteHomSpace, gamma: f64, x0: usize, r: f64) -> Vec<f64> {
    (0..space.n()).map(|x| kernel_p(space, gamma, x0, r, x)).collect()
}

/// Parameters of `E_k(x, y; r) = exp(-(nu / r) (d(x, y) / delta^k)^s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpKernel {
    pub nu: f64,
    pub s: f64,
    pub delta: f64,
    pub k: i32,
}

impl ExpKernel {
    pub fn new(nu: f64, s: f64, delta: f64, k: i32) -> Result<Self> {
        if !(nu > 0.0) || !(s > 0.0 && s <= 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Precondition(format!("need nu > 0, s in (0, 1], delta in (0, 1); got {nu}, {s}, {delta}")));
        }
        Ok(Self { nu, s, delta, k })
    }

    pub fn eval_distance(&self, d: f64, r: f64) -> f64 {
        (-(self.nu / r) * (d / self.delta.powi(self.k)).powf(self.s)).exp()
    }

    pub fn eval(&self, space: &FiniteHomSpace, x: usize, y: usize, r: f64) -> f64 {
        self.eval_distance(space.dist(x, y), r)
    }
}

/// `max_x0 sum_x P_gamma(x0, x; r) mu_x` with the maximizing `x0`.
pub fn kernel_p_integral_sweep(space: &FiniteHomSpace, gamma: f64, r: f64) -> (f64, usize) {
    let totals = par::map_range(space.n(), |x0| {
        (0..space.n()).map(|x| kernel_p(space, gamma, x0, r, x) * space.weight(x)).collect::<ExactSum>().value()
    });
    let mut best = (f64::NEG_INFINITY, 0);
    for (x0, t) in totals.into_iter().enumerate() {
        if t > best.0 {
            best = (t, x0);
        }
    }
    best
}

/// `sup_{x != y} |f(x) - f(y)| / d(x, y)^e + max |f|`.
pub fn holder_norm(f: &[f64], space: &FiniteHomSpace, exponent: f64) -> f64 {
    let n = space.n();
    let rows = par::map_range(n, |x| {
        let mut best = 0.0f64;
        for y in x + 1..n {
            best = best.max((f[x] - f[y]).abs() / space.dist(x, y).powf(exponent));
        }
        best
    });
    rows.into_iter().fold(0.0, f64::max) + f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Type `(x0, r, beta, gamma)` of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionType {
    pub x0: usize,
    pub r: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionNorm {
    /// Smallest constant in the size condition.
    pub size: f64,
    /// Smallest constant in the regularity condition.
    pub regularity: f64,
    pub value: f64,
}

/// Smallest `C` in both test-function conditions. Regularity pairs satisfy
/// `d(x, y) <= (r + d(x0, x)) / (2 A0)`.
pub fn test_function_norm(f: &[f64], space: &FiniteHomSpace, a0: f64, ty: TestFunctionType) -> Result<TestFunctionNorm> {
    if !(ty.beta > 0.0 && ty.beta <= 1.0) || !(ty.gamma > 0.0) || !(ty.r > 0.0) {
        return Err(Error::Precondition(format!(
            "test function type needs beta in (0, 1], gamma > 0, r > 0 (got {}, {}, {})",
            ty.beta, ty.gamma, ty.r
        )));
    }
    if f.len() != space.n() {
        return Err(Error::LengthMismatch { expected: space.n(), got: f.len() });
    }
    let p = kernel_p_row(space, ty.gamma, ty.x0, ty.r);
    let n = space.n();
    let rows = par::map_range(n, |x| {
        let size = f[x].abs() / p[x];
        let scale = ty.r + space.dist(ty.x0, x);
        let reach = scale / (2.0 * a0);
        let mut reg = 0.0f64;
        for y in 0..n {
            let d = space.dist(x, y);
            if y != x && d <= reach {
                reg = reg.max((f[x] - f[y]).abs() / ((d / scale).powf(ty.beta) * p[x]));
            }
        }
        (size, reg)
    });
    let size = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let regularity = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(TestFunctionNorm { size, regularity, value: size.max(regularity) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};

    #[test]
    fn kernel_values() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        let e = ExpKernel::new(0.7, 1.0, 0.125, 2).unwrap();
        assert_eq!(e.eval(&s, 5, 5, 1.0), 1.0);
        // d(x0, x) = r
        let (x0, x, r) = (10, 26, 1.0);
        assert_eq!(s.dist(x0, x), r);
        let expect = 0.5f64.powf(1.5) / (s.ball_measure(x0, r) + s.ball_measure(x0, r));
        assert_eq!(kernel_p(&s, 1.5, x0, r, x), expect);
        assert!(ExpKernel::new(0.0, 1.0, 0.5, 0).is_err());
    }

    #[test]
    fn test_function_norm_of_the_kernel_itself() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        let ty = TestFunctionType { x0: 20, r: 1.0, beta: 1.0, gamma: 1.0 };
        let p = kernel_p_row(&s, 1.0, 20, 1.0);
        let t = test_function_norm(&p, &s, 1.0, ty).unwrap();
        assert!((t.size - 1.0).abs() < 1e-15);
        assert!(t.regularity.is_finite());
        assert_eq!(test_function_norm(&[0.0; 64], &s, 1.0, ty).unwrap().value, 0.0);
    }

    #[test]
    fn holder_norm_cases() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        assert_eq!(holder_norm(&[-2.0; 64], &s, 0.5), 2.0);
        let f: Vec<f64> = (0..64).map(|i| s.dist(0, i).powf(0.5)).collect();
        let fmax = f.iter().cloned().fold(0.0, f64::max);
        assert!(holder_norm(&f, &s, 0.5) <= 1.0 + fmax + 1e-12);
        let jump: Vec<f64> = (0..64).map(|i| if i < 32 { 0.0 } else { 1.0 }).collect();
        let h = s.min_positive_distance();
        assert_eq!(holder_norm(&jump, &s, 0.5), h.powf(-0.5) + 1.0);
    }

    #[test]
    fn kernel_integral_is_bounded_uniformly() {
        let s = generate(&GeneratorSpec::grid1d(256)).unwrap();
        let (c, _) = kernel_p_integral_sweep(&s, 1.0, 1.0);
        assert!(c.is_finite() && c < 10.0, "{c}");
    }
}

//! End-to-end comparison of the Lipschitz and Carleson norms over a probe
//! suite, with partial-sum stability and the pointwise, multiplier and
//! pairing constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doubling::doubling_profile;
use crate::dyadic::{build_tree, CubeKey, TreeOptions};
use crate::error::{Error, Result};
use crate::geometry::{classify, GeometryConfig, GeometryReport};
use crate::norms::bounds::{check_multiplier_bound, check_pairing_bound, check_pointwise_bounds};
use crate::norms::carleson::carleson_norm;
use crate::norms::kernels::{kernel_p_row, TestFunctionType};
use crate::norms::lip::{lip_norm, LipWitness};
use crate::par;
use crate::space::{validate_space, FiniteHomSpace};
use crate::wavelet::{analyze, build_mra, check_basis, l2_sq, l2_sq_on, partial_sum_from, synthesize, BasisChecks, WaveletBasis};

/// Slack in the monotonicity check of squared partial-sum errors, relative
/// to `||f||^2`.
pub const MONOTONE_TOL: f64 = 1e-12;
/// `lip(f_n) <= PARTIAL_SUM_FACTOR * C* * lip(f)`.
pub const PARTIAL_SUM_FACTOR: f64 = 3.0;
/// Constants above this are flagged by the pointwise check.
pub const POINTWISE_CEILING: f64 = 1e6;

/// Default probe names, in report order.
pub const DEFAULT_PROBES: [&str; 20] = [
    "one",
    "dist",
    "dist_pow",
    "sin1",
    "sin2",
    "sin4",
    "mother0",
    "mother1",
    "mother2",
    "bump_r0.25",
    "bump_r1",
    "smooth0",
    "smooth1",
    "smooth2",
    "smooth3",
    "smooth4",
    "smooth5",
    "smooth6",
    "smooth7",
    "smooth8",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub tree: TreeOptionsSer,
    pub probes: Vec<String>,
    pub seed: u64,
    pub geometry: GeometryConfig,
}

/// Serializable mirror of [`TreeOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeOptionsSer {
    pub delta: Option<f64>,
    pub c0: Option<f64>,
    #[serde(rename = "C0")]
    pub big_c0: Option<f64>,
    pub strict: bool,
}

impl From<TreeOptionsSer> for TreeOptions {
    fn from(t: TreeOptionsSer) -> Self {
        TreeOptions { delta: t.delta, c0: t.c0, big_c0: t.big_c0, strict: t.strict }
    }
}

impl ExperimentConfig {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            tree: TreeOptionsSer::default(),
            probes: DEFAULT_PROBES.iter().map(|s| s.to_string()).collect(),
            seed: 0x1a2b3c,
            geometry: GeometryConfig::default(),
        }
    }
}

/// Everything a probe may depend on.
pub struct ProbeContext<'a> {
    pub space: &'a FiniteHomSpace,
    pub basis: &'a WaveletBasis,
    pub theta: f64,
    pub omega: f64,
    /// Point of smallest eccentricity.
    pub x0: usize,
    /// Point of largest eccentricity.
    pub corner: usize,
    pub seed: u64,
}

impl<'a> ProbeContext<'a> {
    pub fn new(space: &'a FiniteHomSpace, basis: &'a WaveletBasis, theta: f64, omega: f64, seed: u64) -> Self {
        let ecc = par::map_range(space.n(), |x| space.dist_row(x).iter().cloned().fold(0.0, f64::max));
        let mut x0 = 0;
        let mut corner = 0;
        for (x, &e) in ecc.iter().enumerate() {
            if e < ecc[x0] {
                x0 = x;
            }
            if e > ecc[corner] {
                corner = x;
            }
        }
        Self { space, basis, theta, omega, x0, corner, seed }
    }

    fn dist_from(&self, p: usize) -> Vec<f64> {
        self.space.dist_row(p).to_vec()
    }

    /// Mother of scale `level` (clamped to the finest available) whose center
    /// is nearest `x0`; lowest key on ties.
    fn mother_near_x0(&self, level: i32) -> Option<Vec<f64>> {
        let top = self.basis.max_level();
        if top < 0 {
            return None;
        }
        let level = level.min(top);
        let tree = &self.basis.tree;
        self.basis
            .mothers()
            .iter()
            .filter(|e| e.level == level)
            .min_by(|a, b| {
                let da = self.space.dist(a.center, self.x0);
                let db = self.space.dist(b.center, self.x0);
                da.total_cmp(&db).then(a.key.cmp(&b.key))
            })
            .map(|e| e.dense(tree))
    }

    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let n = self.space.n();
        let diam = self.space.diameter();
        let u = self.dist_from(self.corner);
        let v = self.dist_from(self.x0);
        let freq = |m: f64| m * std::f64::consts::PI / diam;
        Ok(match name {
            "zero" => vec![0.0; n],
            "one" => vec![1.0; n],
            "dist" => v,
            "dist_pow" => v.iter().map(|d| d.powf(self.theta * self.omega)).collect(),
            "sin1" => u.iter().map(|t| (freq(2.0) * t).sin()).collect(),
            "sin2" => u.iter().map(|t| (freq(4.0) * t).sin()).collect(),
            "sin4" => u.iter().map(|t| (freq(8.0) * t).sin()).collect(),
            "mother0" | "mother1" | "mother2" => {
                let level: i32 = name[6..].parse().unwrap();
                self.mother_near_x0(level).ok_or_else(|| Error::Precondition("tree has no mothers".into()))?
            }
            "bump_r0.25" => kernel_p_row(self.space, 1.0, self.x0, 0.25),
            "bump_r1" => kernel_p_row(self.space, 1.0, self.x0, 1.0),
            s if s.starts_with("smooth") => {
                let i: u64 = s[6..].parse().map_err(|_| Error::InvalidSpec(format!("unknown probe {s:?}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(i));
                let terms: Vec<(f64, f64, f64, f64)> = (1..=4)
                    .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3)))
                    .collect();
                (0..n)
                    .map(|x| {
                        terms
                            .iter()
                            .enumerate()
                            .map(|(m, &(a, p, b, q))| {
                                let k = freq((m + 1) as f64);
                                (a * (k * u[x] + p).cos() + b * (k * v[x] + q).cos()) / (m + 1) as f64
                            })
                            .sum()
                    })
                    .collect()
            }
            other => return Err(Error::InvalidSpec(format!("unknown probe {other:?}"))),
        })
    }
}

/// `x`, `sin(x)`, `cos(x)`, `exp(x)` or `abs(x)` of the first coordinate.
pub fn coordinate_function(space: &FiniteHomSpace, expr: &str) -> Result<Vec<f64>> {
    let g: fn(f64) -> f64 = match expr.replace(' ', "").as_str() {
        "x" => |t| t,
        "sin(x)" => f64::sin,
        "cos(x)" => f64::cos,
        "exp(x)" => f64::exp,
        "abs(x)" => f64::abs,
        other => return Err(Error::InvalidSpec(format!("unknown function {other:?}"))),
    };
    let coords = space.coords().ok_or_else(|| Error::Precondition(format!("{expr} needs point coordinates")))?;
    Ok(coords.iter().map(|c| g(c[0])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumTrace {
    /// `lip(f_n)` for `n = 0..=max mother level`.
    pub lip: Vec<f64>,
    /// `||f - f_n||_{L^2}` over the whole space.
    pub l2_error: Vec<f64>,
    pub max_lip_ratio: f64,
    /// Errors nonincreasing on the whole space and on every level-0 cube.
    pub l2_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeWitnesses {
    pub lip: LipWitness,
    pub carleson: CubeKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub name: String,
    pub lip: f64,
    pub carleson: f64,
    /// `carleson / lip`; absent when either norm vanishes.
    pub ratio: Option<f64>,
    pub degenerate: bool,
    pub witnesses: ProbeWitnesses,
    /// `| sum c^2 - ||f||^2 | / ||f||^2`.
    pub parseval_rel_error: f64,
    /// `||synthesize(analyze f) - f|| / ||f||` in `L^2(mu)`.
    pub reconstruction_rel_error: f64,
    pub partial_sums: PartialSumTrace,
}

pub fn run_probe(ctx: &ProbeContext, name: &str) -> Result<ProbeResult> {
    let space = ctx.space;
    let basis = ctx.basis;
    let f = ctx.values(name)?;
    let lip = lip_norm(&f, space, ctx.theta);
    let coeffs = analyze(&f, basis, space)?;
    let car = carleson_norm(&coeffs, &basis.tree, ctx.theta);
    let norm2 = l2_sq(&f, space);
    let rel = |e: f64| if norm2 > 0.0 { e / norm2 } else { e };
    let recon = synthesize(&coeffs, basis, space)?;
    let diff: Vec<f64> = recon.iter().zip(&f).map(|(a, b)| a - b).collect();

    let levels: Vec<i32> = (0..=basis.max_level().max(0)).collect();
    let parts = par::map_slice(&levels, |&n| {
        let fn_ = partial_sum_from(&coeffs, basis, space, n).unwrap();
        let err: Vec<f64> = fn_.iter().zip(&f).map(|(a, b)| b - a).collect();
        let per_cube: Vec<f64> =
            basis.tree.level(0).iter().map(|q| l2_sq_on(&err, space, q.members.iter().copied())).collect();
        (lip_norm(&fn_, space, ctx.theta).value, l2_sq(&err, space), per_cube)
    });
    let nonincreasing = |seq: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = seq.collect();
        v.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOL * norm2)
    };
    let mut l2_monotone = nonincreasing(&mut parts.iter().map(|p| p.1));
    for c in 0..basis.tree.level(0).len() {
        l2_monotone &= nonincreasing(&mut parts.iter().map(|p| p.2[c]));
    }
    let lip_n: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let max_lip_ratio = if lip.value > 0.0 { lip_n.iter().cloned().fold(0.0, f64::max) / lip.value } else { 0.0 };

    let degenerate = lip.value == 0.0 && car.value == 0.0;
    Ok(ProbeResult {
        name: name.to_string(),
        lip: lip.value,
        carleson: car.value,
        ratio: (lip.value > 0.0 && car.value > 0.0).then(|| car.value / lip.value),
        degenerate,
        witnesses: ProbeWitnesses { lip: lip.witness, carleson: car.witness },
        parseval_rel_error: rel((coeffs.energy() - norm2).abs()),
        reconstruction_rel_error: rel(l2_sq(&diff, space)).sqrt(),
        partial_sums: PartialSumTrace {
            lip: lip_n,
            l2_error: parts.iter().map(|p| p.1.sqrt()).collect(),
            max_lip_ratio,
            l2_monotone,
        },
    })
}

/// `max(max ratio, 1 / min ratio)` over probes with a ratio.
pub fn envelope(probes: &[ProbeResult]) -> Option<f64> {
    let ratios: Vec<f64> = probes.iter().filter_map(|p| p.ratio).collect();
    if ratios.is_empty() {
        return None;
    }
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(hi.max(1.0 / lo))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Largest pointwise constants over non-degenerate probes.
    pub c1: f64,
    pub c2: f64,
    pub pointwise_flagged: usize,
    /// Largest multiplier and pairing ratios over the pair suite.
    pub multiplier: f64,
    pub pairing: f64,
    pub pairs: usize,
    /// Pairs whose ratio was undefined (zero denominator).
    pub omitted: usize,
}

/// Multipliers: `P_1(x0, . ; 1)` and `exp(-d(x, x0)^2)`; functions: `one`,
/// `dist`, `sin1`, `sin2`, `smooth0`.
pub fn bound_constants(ctx: &ProbeContext, a0: f64) -> Result<BoundConstants> {
    let space = ctx.space;
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    let mut flagged = 0;
    for name in ["one", "dist", "dist_pow", "sin1", "sin2", "sin4", "bump_r1", "smooth0", "smooth1"] {
        let f = ctx.values(name)?;
        let r = check_pointwise_bounds(&f, space, ctx.theta, POINTWISE_CEILING);
        c1 = c1.max(r.c1);
        c2 = c2.max(r.c2);
        flagged += r.exceeds_ceiling as usize;
    }
    let gamma = (2.0 * ctx.theta * ctx.omega).max(1.0);
    let ty = TestFunctionType { x0: ctx.x0, r: 1.0, beta: 1.0, gamma };
    let gauss: Vec<f64> = space.dist_row(ctx.x0).iter().map(|d| (-d * d).exp()).collect();
    let psis = [kernel_p_row(space, gamma, ctx.x0, 1.0), gauss];
    let (mut mult, mut pair, mut pairs, mut omitted) = (0.0f64, 0.0f64, 0, 0);
    for psi in &psis {
        for name in ["one", "dist", "sin1", "sin2", "smooth0"] {
            let f = ctx.values(name)?;
            let m = check_multiplier_bound(psi, ty, &f, space, a0, ctx.theta, ctx.omega)?;
            let p = check_pairing_bound(psi, ty, &f, space, a0, ctx.theta, ctx.omega)?;
            pairs += 1;
            match m.ratio {
                Some(r) => mult = mult.max(r),
                None => omitted += 1,
            }
            match p.ratio {
                Some(r) => pair = pair.max(r),
                None => omitted += 1,
            }
        }
    }
    Ok(BoundConstants { c1, c2, pointwise_flagged: flagged, multiplier: mult, pairing: pair, pairs, omitted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub name: String,
    pub n: usize,
    pub a0: f64,
    pub c_mu: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub theta: f64,
    pub delta: f64,
    pub c0: f64,
    #[serde(rename = "C0")]
    pub big_c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomSummary {
    pub k_min: i32,
    pub k_max: i32,
    pub cubes_per_level: Vec<usize>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumSummary {
    pub factor: f64,
    pub max_lip_ratio: f64,
    pub bound: f64,
    pub lip_pass: bool,
    pub l2_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub axioms_clean: bool,
    pub basis_orthonormal: bool,
    pub reconstruction: bool,
    pub envelope_finite: bool,
    pub partial_sums: bool,
    /// Unit-ball lower bound holds; without it the constant probe is outside
    /// the hypotheses.
    pub hypothesis_lower: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub space: SpaceSummary,
    pub params: Params,
    pub axioms: AxiomSummary,
    pub basis_checks: BasisChecks,
    pub probes: Vec<ProbeResult>,
    #[serde(rename = "envelope_C")]
    pub envelope_c: Option<f64>,
    pub degenerate_probes: usize,
    pub partial_sums: PartialSumSummary,
    pub bounds: BoundConstants,
    pub geometry: GeometryReport,
    pub verdicts: Verdicts,
}

/// Nets, cubes, basis, then both norms for every probe.
pub fn equiv_experiment(space: &FiniteHomSpace, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(Error::Precondition(format!("theta must lie in (0, 1), got {}", cfg.theta)));
    }
    let val = validate_space(space)?;
    let profile = doubling_profile(space);
    let (tree, axioms) = build_tree(space, val.a0, cfg.tree.into())?;
    let basis = build_mra(&tree)?;
    let checks = check_basis(&basis, space);
    let ctx = ProbeContext::new(space, &basis, cfg.theta, profile.omega, cfg.seed);
    let probes = cfg.probes.iter().map(|p| run_probe(&ctx, p)).collect::<Result<Vec<_>>>()?;
    let env = envelope(&probes);
    let max_lip_ratio = probes.iter().map(|p| p.partial_sums.max_lip_ratio).fold(0.0, f64::max);
    let bound = PARTIAL_SUM_FACTOR * env.unwrap_or(f64::INFINITY);
    let l2_monotone = probes.iter().all(|p| p.partial_sums.l2_monotone);
    let bounds = bound_constants(&ctx, val.a0)?;
    let geometry = classify(space, &basis, cfg.theta, &cfg.geometry);
    let verdicts = Verdicts {
        axioms_clean: axioms.is_clean(),
        basis_orthonormal: checks.gram_max_dev <= 1e-10 && checks.max_mother_mean <= 1e-10,
        reconstruction: probes.iter().all(|p| p.reconstruction_rel_error <= 1e-8),
        envelope_finite: env.is_some_and(f64::is_finite),
        partial_sums: max_lip_ratio <= bound && l2_monotone,
        hypothesis_lower: geometry.lower.pass,
    };
    Ok(ExperimentReport {
        space: SpaceSummary { name: space.name().to_string(), n: space.n(), a0: val.a0, c_mu: profile.c_mu, omega: profile.omega },
        params: Params { theta: cfg.theta, delta: tree.params.delta, c0: tree.params.c0, big_c0: tree.params.big_c0 },
        axioms: AxiomSummary {
            k_min: tree.k_min,
            k_max: tree.k_max,
            cubes_per_level: tree.levels().map(|(_, c)| c.len()).collect(),
            violations: axioms.violations.len(),
        },
        basis_checks: checks,
        degenerate_probes: probes.iter().filter(|p| p.degenerate).count(),
        probes,
        envelope_c: env,
        partial_sums: PartialSumSummary {
            factor: PARTIAL_SUM_FACTOR,
            max_lip_ratio,
            bound,
            lip_pass: max_lip_ratio <= bound,
            l2_monotone,
        },
        bounds,
        geometry,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};

    #[test]
    fn zero_probe_is_degenerate_and_mother_probe_is_exact() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let b = build_mra(&tree).unwrap();
        let ctx = ProbeContext::new(&s, &b, 0.3, 1.0, 1);
        let z = run_probe(&ctx, "zero").unwrap();
        assert!(z.degenerate && z.ratio.is_none());
        let m = run_probe(&ctx, "mother0").unwrap();
        let key = m.witnesses.carleson;
        let mass = tree.cube(key).mass;
        assert!((m.carleson / mass.powf(-0.5 - 0.3) - 1.0).abs() < 1e-12);
        assert!(run_probe(&ctx, "nope").is_err());
    }

    #[test]
    fn every_default_probe_is_defined() {
        let s = generate(&GeneratorSpec::grid1d(64)).unwrap();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let b = build_mra(&tree).unwrap();
        let ctx = ProbeContext::new(&s, &b, 0.3, 1.0, 1);
        for p in DEFAULT_PROBES {
            let v = ctx.values(p).unwrap();
            assert!(v.iter().all(|x| x.is_finite()), "{p}");
        }
    }
}

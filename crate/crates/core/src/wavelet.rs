//! Haar-type multiresolution on a dyadic tree.
//!
//! `V_k` is spanned by indicators of level-`k` cubes. Level-0 fathers are the
//! normalized indicators `1_Q / sqrt(mu(Q))`. Inside every parent cube with
//! `m` children the `m - 1` mothers form an orthonormal basis of the part of
//! `span{1_child}` orthogonal to `1_parent`; each one is keyed to one
//! new-center child. Every element is piecewise constant, so it is stored as a
//! list of pieces (cubes of one level) and one coefficient per piece.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeKey, DyadicTree};
use crate::error::{Error, Result};
use crate::par;
use crate::space::FiniteHomSpace;
use crate::sum::{exact_sum, ExactSum};

/// Norm below which a Gram-Schmidt vector is treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Father,
    Mother,
}

/// Fathers are keyed by their level-0 cube, mothers by their new-center
/// child cube at level `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementKey {
    pub kind: ElementKind,
    pub cube: CubeKey,
}

impl ElementKey {
    pub fn father(index: usize) -> Self {
        Self { kind: ElementKind::Father, cube: CubeKey::new(0, index) }
    }

    pub fn mother(level: i32, index: usize) -> Self {
        Self { kind: ElementKind::Mother, cube: CubeKey::new(level, index) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletElement {
    pub key: ElementKey,
    /// Scale index `k`: 0 for fathers, the parent level for mothers.
    pub level: i32,
    /// Support cube: the level-0 cube for fathers, the parent for mothers.
    pub support: CubeKey,
    /// Point at which the element is centered.
    pub center: usize,
    /// Level of the pieces (`level` for fathers, `level + 1` for mothers).
    pub piece_level: i32,
    /// Cube indices at `piece_level`, ascending.
    pub pieces: Vec<usize>,
    /// Value on each piece.
    pub coeffs: Vec<f64>,
}

impl WaveletElement {
    pub fn is_mother(&self) -> bool {
        self.key.kind == ElementKind::Mother
    }

    /// Value at point `x`.
    pub fn value_at(&self, tree: &DyadicTree, x: usize) -> f64 {
        let c = tree.cube_of(self.piece_level, x);
        match self.pieces.binary_search(&c) {
            Ok(i) => self.coeffs[i],
            Err(_) => 0.0,
        }
    }

    /// `(point, value)` over the support.
    pub fn support_values<'a>(&'a self, tree: &'a DyadicTree) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.pieces.iter().zip(&self.coeffs).flat_map(move |(&p, &a)| {
            tree.level(self.piece_level)[p].members.iter().map(move |&x| (x, a))
        })
    }

    pub fn dense(&self, tree: &DyadicTree) -> Vec<f64> {
        let mut v = vec![0.0; tree.n_points()];
        for (x, a) in self.support_values(tree) {
            v[x] = a;
        }
        v
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut e = self.clone();
        e.coeffs.iter_mut().for_each(|a| *a *= c);
        e
    }
}

/// Fathers first (level-0 cube order), then mothers ordered by
/// `(k, parent index, child center id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    pub tree: DyadicTree,
    elements: Vec<WaveletElement>,
    n_fathers: usize,
    index: HashMap<ElementKey, usize>,
    /// Per parent cube `(k, alpha)`: the range of its mothers in `elements`.
    parent_ranges: HashMap<CubeKey, (usize, usize)>,
}

impl WaveletBasis {
    /// Assembles a basis from elements (fathers first) without re-checking
    /// orthonormality.
    pub fn from_elements(tree: DyadicTree, elements: Vec<WaveletElement>) -> Result<Self> {
        let n_fathers = elements.iter().take_while(|e| !e.is_mother()).count();
        if elements[n_fathers..].iter().any(|e| !e.is_mother()) {
            return Err(Error::parse("basis", "fathers must precede mothers"));
        }
        let mut index = HashMap::with_capacity(elements.len());
        let mut parent_ranges: HashMap<CubeKey, (usize, usize)> = HashMap::new();
        for (i, e) in elements.iter().enumerate() {
            if tree.get(e.support).is_none() || e.pieces.len() != e.coeffs.len() {
                return Err(Error::parse(format!("basis element {i}"), "support or pieces do not match the tree"));
            }
            let npieces = tree.level(e.piece_level).len();
            if e.pieces.iter().any(|&p| p >= npieces) {
                return Err(Error::parse(format!("basis element {i}"), "piece index out of range"));
            }
            if index.insert(e.key, i).is_some() {
                return Err(Error::parse(format!("basis element {i}"), "duplicate key"));
            }
            if e.is_mother() {
                let r = parent_ranges.entry(e.support).or_insert((i, i));
                if r.1 != i {
                    return Err(Error::parse(format!("basis element {i}"), "mothers of a parent must be contiguous"));
                }
                r.1 = i + 1;
            }
        }
        Ok(Self { tree, elements, n_fathers, index, parent_ranges })
    }

    pub fn elements(&self) -> &[WaveletElement] {
        &self.elements
    }

    pub fn fathers(&self) -> &[WaveletElement] {
        &self.elements[..self.n_fathers]
    }

    pub fn mothers(&self) -> &[WaveletElement] {
        &self.elements[self.n_fathers..]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, key: &ElementKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn element(&self, key: &ElementKey) -> Option<&WaveletElement> {
        self.position(key).map(|i| &self.elements[i])
    }

    /// Mothers supported on the parent cube `parent`.
    pub fn mothers_of(&self, parent: CubeKey) -> &[WaveletElement] {
        match self.parent_ranges.get(&parent) {
            Some(&(a, b)) => &self.elements[a..b],
            None => &[],
        }
    }

    /// Largest mother scale index present (`-1` if there are no mothers).
    pub fn max_level(&self) -> i32 {
        self.mothers().iter().map(|e| e.level).max().unwrap_or(-1)
    }
}

/// Builds fathers at level 0 and all mothers at levels `0..k_max`.
pub fn build_mra(tree: &DyadicTree) -> Result<WaveletBasis> {
    let mut elements: Vec<WaveletElement> = tree
        .level(0)
        .iter()
        .enumerate()
        .map(|(a, q)| WaveletElement {
            key: ElementKey::father(a),
            level: 0,
            support: CubeKey::new(0, a),
            center: q.center,
            piece_level: 0,
            pieces: vec![a],
            coeffs: vec![1.0 / q.mass.sqrt()],
        })
        .collect();
    for k in 0..tree.k_max {
        let parents = tree.level(k);
        let per_parent = par::map_range(parents.len(), |a| mothers_of_parent(tree, k, a));
        for m in per_parent {
            elements.extend(m?);
        }
    }
    WaveletBasis::from_elements(tree.clone(), elements)
}

fn mothers_of_parent(tree: &DyadicTree, k: i32, a: usize) -> Result<Vec<WaveletElement>> {
    let parent = &tree.level(k)[a];
    let kids = &parent.children;
    let m = kids.len();
    if m < 2 {
        return Ok(Vec::new());
    }
    let fine = tree.level(k + 1);
    let sqrt_mass: Vec<f64> = kids.iter().map(|&c| fine[c].mass.sqrt()).collect();
    let u: Vec<f64> = sqrt_mass.iter().map(|s| s / parent.mass.sqrt()).collect();
    let mut pivots: Vec<usize> = (0..m).filter(|&i| fine[kids[i]].new_center).collect();
    pivots.sort_by_key(|&i| fine[kids[i]].center);
    let mut basis: Vec<Vec<f64>> = vec![u];
    let mut out = Vec::with_capacity(m - 1);
    for &p in &pivots {
        let mut v = vec![0.0; m];
        v[p] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < RANK_TOL {
            return Err(Error::DegenerateCube { level: k, index: a });
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let child = kids[p];
        out.push(WaveletElement {
            key: ElementKey::mother(k + 1, child),
            level: k,
            support: CubeKey::new(k, a),
            center: fine[child].center,
            piece_level: k + 1,
            pieces: kids.clone(),
            coeffs: v.iter().zip(&sqrt_mass).map(|(x, s)| x / s).collect(),
        });
        basis.push(v);
    }
    if out.len() != m - 1 {
        return Err(Error::DegenerateCube { level: k, index: a });
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    exact_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Weighted inner products against every basis element, aligned with
/// `keys`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub keys: Vec<ElementKey>,
    pub values: Vec<f64>,
}

impl CoefficientSet {
    pub fn zeros(basis: &WaveletBasis) -> Self {
        Self { keys: basis.elements().iter().map(|e| e.key).collect(), values: vec![0.0; basis.len()] }
    }

    pub fn get(&self, key: &ElementKey) -> Option<f64> {
        self.keys.iter().position(|k| k == key).map(|i| self.values[i])
    }

    /// `sum c^2`, exactly rounded.
    pub fn energy(&self) -> f64 {
        exact_sum(self.values.iter().map(|c| c * c))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ElementKey, f64)> {
        self.keys.iter().zip(self.values.iter().copied())
    }
}

fn check_len(space: &FiniteHomSpace, f: &[f64]) -> Result<()> {
    if f.len() != space.n() {
        return Err(Error::LengthMismatch { expected: space.n(), got: f.len() });
    }
    Ok(())
}

/// `<f, e>_mu = sum f(x) e(x) mu_x` for every element `e`.
pub fn analyze(f: &[f64], basis: &WaveletBasis, space: &FiniteHomSpace) -> Result<CoefficientSet> {
    check_len(space, f)?;
    let tree = &basis.tree;
    let values = par::map_slice(basis.elements(), |e| {
        e.support_values(tree).map(|(x, a)| f[x] * a * space.weight(x)).collect::<ExactSum>().value()
    });
    Ok(CoefficientSet { keys: basis.elements().iter().map(|e| e.key).collect(), values })
}

/// `sum c_e e(x)`; keys absent from `coeffs` count as zero.
pub fn synthesize(coeffs: &CoefficientSet, basis: &WaveletBasis, space: &FiniteHomSpace) -> Result<Vec<f64>> {
    synthesize_filtered(coeffs, basis, space, |_| true)
}

/// `f_n`: fathers plus mothers with `k <= n`.
pub fn partial_sum(f: &[f64], basis: &WaveletBasis, space: &FiniteHomSpace, n: i32) -> Result<Vec<f64>> {
    let c = analyze(f, basis, space)?;
    partial_sum_from(&c, basis, space, n)
}

/// [`partial_sum`] from precomputed coefficients.
pub fn partial_sum_from(c: &CoefficientSet, basis: &WaveletBasis, space: &FiniteHomSpace, n: i32) -> Result<Vec<f64>> {
    synthesize_filtered(c, basis, space, |e| !e.is_mother() || e.level <= n)
}

fn synthesize_filtered(
    coeffs: &CoefficientSet,
    basis: &WaveletBasis,
    space: &FiniteHomSpace,
    keep: impl Fn(&WaveletElement) -> bool + Sync,
) -> Result<Vec<f64>> {
    if coeffs.keys.len() != coeffs.values.len() {
        return Err(Error::LengthMismatch { expected: coeffs.keys.len(), got: coeffs.values.len() });
    }
    let mut dense = vec![0.0; basis.len()];
    for (key, c) in coeffs.iter() {
        let i = basis.position(key).ok_or_else(|| Error::UnknownKey(format!("{key:?}")))?;
        if keep(&basis.elements()[i]) {
            dense[i] = c;
        }
    }
    let tree = &basis.tree;
    if tree.n_points() != space.n() {
        return Err(Error::LengthMismatch { expected: space.n(), got: tree.n_points() });
    }
    Ok(par::map_range(space.n(), |x| {
        let mut acc = ExactSum::new();
        let father = basis.position(&ElementKey::father(tree.cube_of(0, x))).unwrap();
        acc.add(dense[father] * basis.elements()[father].coeffs[0]);
        for k in 0..tree.k_max {
            let parent = CubeKey::new(k, tree.cube_of(k, x));
            let mothers = basis.mothers_of(parent);
            if mothers.is_empty() {
                continue;
            }
            let child = tree.cube_of(k + 1, x);
            let slot = mothers[0].pieces.binary_search(&child).unwrap();
            let start = basis.position(&mothers[0].key).unwrap();
            for (j, m) in mothers.iter().enumerate() {
                acc.add(dense[start + j] * m.coeffs[slot]);
            }
        }
        acc.value()
    }))
}

/// Orthonormality and moment diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisChecks {
    pub n_fathers: usize,
    pub n_mothers: usize,
    /// `(leaf cubes) - (level-0 cubes)`.
    pub expected_mothers: usize,
    /// `max |G - I|` over the Gram matrix of all elements.
    pub gram_max_dev: f64,
    /// `max |sum psi mu|` over mothers.
    pub max_mother_mean: f64,
}

/// Gram matrix deviation and mother means. Elements with disjoint level-0
/// supports are orthogonal exactly, so the Gram matrix is assembled one
/// level-0 cube at a time.
pub fn check_basis(basis: &WaveletBasis, space: &FiniteHomSpace) -> BasisChecks {
    let tree = &basis.tree;
    let n0 = tree.level(0).len();
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n0];
    for (i, e) in basis.elements().iter().enumerate() {
        let x = tree.cube(e.support).center;
        blocks[tree.cube_of(0, x)].push(i);
    }
    let dense_w = |e: &WaveletElement| {
        let mut v: Vec<(usize, f64)> = e.support_values(tree).collect();
        v.sort_by_key(|&(x, _)| x);
        v
    };
    let devs = par::map_slice(&blocks, |ids| {
        let vals: Vec<Vec<(usize, f64)>> = ids.iter().map(|&i| dense_w(&basis.elements()[i])).collect();
        let mut worst = 0.0f64;
        for a in 0..ids.len() {
            for b in a..ids.len() {
                let g = sparse_inner(&vals[a], &vals[b], space);
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    });
    let means = par::map_slice(basis.mothers(), |e| {
        e.support_values(tree).map(|(x, a)| a * space.weight(x)).collect::<ExactSum>().value().abs()
    });
    BasisChecks {
        n_fathers: basis.fathers().len(),
        n_mothers: basis.mothers().len(),
        expected_mothers: tree.level(tree.k_max).len() - n0,
        gram_max_dev: devs.into_iter().fold(0.0, f64::max),
        max_mother_mean: means.into_iter().fold(0.0, f64::max),
    }
}

fn sparse_inner(a: &[(usize, f64)], b: &[(usize, f64)], space: &FiniteHomSpace) -> f64 {
    let mut acc = ExactSum::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc.add(a[i].1 * b[j].1 * space.weight(a[i].0));
                i += 1;
                j += 1;
            }
        }
    }
    acc.value()
}

/// `||f||_{L^2(mu)}^2` restricted to `points`.
pub fn l2_sq_on(f: &[f64], space: &FiniteHomSpace, points: impl IntoIterator<Item = usize>) -> f64 {
    points.into_iter().map(|x| f[x] * f[x] * space.weight(x)).collect::<ExactSum>().value()
}

pub fn l2_sq(f: &[f64], space: &FiniteHomSpace) -> f64 {
    l2_sq_on(f, space, 0..space.n())
}

/// Envelope fit `|e(x)| sqrt(V_{delta^k}(c)) <= C exp(-nu d(x, c) / delta^k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub nu_hat: f64,
    pub s: f64,
    pub c_hat: f64,
    /// Least-squares slope gave `nu <= 0`; `nu_hat` was floored.
    pub nu_clamped: bool,
    /// `(k, tightest C over level-k elements)`.
    pub per_level_c: Vec<(i32, f64)>,
    /// `max / min` of the per-level constants.
    pub uniformity: f64,
    pub samples: usize,
}

/// Measured regularity quotient for one Hölder exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderPoint {
    pub eta: f64,
    pub c_eta: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub fathers: DecayFit,
    pub mothers: Option<DecayFit>,
    pub holder: Vec<HolderPoint>,
}

pub const NU_FLOOR: f64 = 1e-6;
pub const HOLDER_ETAS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

struct EnvelopeSample {
    level: i32,
    t: f64,
    y: f64,
}

fn envelope_samples(e: &WaveletElement, tree: &DyadicTree, space: &FiniteHomSpace) -> Vec<EnvelopeSample> {
    let scale = tree.scale(e.level);
    let v = space.ball_measure(e.center, scale).sqrt();
    e.support_values(tree)
        .filter(|&(_, a)| a.abs() > 1e-14)
        .map(|(x, a)| EnvelopeSample { level: e.level, t: space.dist(x, e.center) / scale, y: (a.abs() * v).ln() })
        .collect()
}

fn fit_family(samples: &[EnvelopeSample], nu: Option<f64>) -> DecayFit {
    let (nu_hat, clamped) = match nu {
        Some(v) => (v, false),
        None => {
            let m = samples.len() as f64;
            let mt = exact_sum(samples.iter().map(|s| s.t)) / m;
            let my = exact_sum(samples.iter().map(|s| s.y)) / m;
            let sxy = exact_sum(samples.iter().map(|s| (s.t - mt) * (s.y - my)));
            let sxx = exact_sum(samples.iter().map(|s| (s.t - mt) * (s.t - mt)));
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            if -slope > NU_FLOOR {
                (-slope, false)
            } else {
                (NU_FLOOR, true)
            }
        }
    };
    let mut per_level: Vec<(i32, f64)> = Vec::new();
    for s in samples {
        let c = (s.y + nu_hat * s.t).exp();
        match per_level.iter_mut().find(|(k, _)| *k == s.level) {
            Some((_, v)) => *v = v.max(c),
            None => per_level.push((s.level, c)),
        }
    }
    per_level.sort_by_key(|&(k, _)| k);
    let c_hat = per_level.iter().map(|&(_, c)| c).fold(0.0, f64::max);
    let c_min = per_level.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
    DecayFit {
        nu_hat,
        s: 1.0,
        c_hat,
        nu_clamped: clamped,
        uniformity: if c_min > 0.0 { c_hat / c_min } else { f64::INFINITY },
        per_level_c: per_level,
        samples: samples.len(),
    }
}

/// Fits the decay envelope for fathers and mothers and measures the Hölder
/// frontier of the mothers at scales between the grid resolution and
/// `delta^k`.
pub fn fit_decay(basis: &WaveletBasis, space: &FiniteHomSpace) -> DecayReport {
    fit_decay_with(basis, space, None)
}

/// [`fit_decay`] with `nu` held fixed for both families.
pub fn fit_decay_with(basis: &WaveletBasis, space: &FiniteHomSpace, nu: Option<f64>) -> DecayReport {
    let tree = &basis.tree;
    let collect = |els: &[WaveletElement]| -> Vec<EnvelopeSample> {
        par::map_slice(els, |e| envelope_samples(e, tree, space)).into_iter().flatten().collect()
    };
    let fathers = fit_family(&collect(basis.fathers()), nu);
    let mother_samples = collect(basis.mothers());
    let mothers = (!mother_samples.is_empty()).then(|| fit_family(&mother_samples, nu));
    let nu_m = mothers.as_ref().map_or(fathers.nu_hat, |m| m.nu_hat);
    let holder = holder_frontier(basis, space, nu_m);
    DecayReport { fathers, mothers, holder }
}

fn holder_frontier(basis: &WaveletBasis, space: &FiniteHomSpace, nu: f64) -> Vec<HolderPoint> {
    let tree = &basis.tree;
    let resolution = space.min_positive_distance();
    let cache = space.cache();
    let per = par::map_slice(basis.mothers(), |e| {
        let scale = tree.scale(e.level);
        let v = space.ball_measure(e.center, scale).sqrt();
        let mut best = [0.0f64; 4];
        let mut pairs = 0usize;
        for (x, a) in e.support_values(tree) {
            let env = (-nu * space.dist(x, e.center) / scale).exp();
            let within = cache.count_within(x, scale);
            let ds = cache.sorted_distances(x);
            for (j, &z) in cache.neighbors(x)[..within].iter().enumerate() {
                let d = ds[j];
                if d < resolution || d > scale {
                    continue;
                }
                let diff = (a - e.value_at(tree, z as usize)).abs();
                pairs += 1;
                if diff == 0.0 {
                    continue;
                }
                for (i, eta) in HOLDER_ETAS.iter().enumerate() {
                    best[i] = best[i].max(diff * v / ((d / scale).powf(*eta) * env));
                }
            }
        }
        (best, pairs)
    });
    HOLDER_ETAS
        .iter()
        .enumerate()
        .map(|(i, &eta)| HolderPoint {
            eta,
            c_eta: per.iter().map(|(b, _)| b[i]).fold(0.0, f64::max),
            pairs: per.iter().map(|(_, p)| p).sum(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_tree, TreeOptions};
    use crate::generate::{generate, GeneratorSpec};
    use crate::space::Metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (FiniteHomSpace, WaveletBasis) {
        let s = generate(&GeneratorSpec::grid1d(n)).unwrap();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let b = build_mra(&tree).unwrap();
        (s, b)
    }

    #[test]
    fn two_equal_children_give_the_haar_mother() {
        let s = FiniteHomSpace::from_coords("pair", vec![vec![0.0], vec![0.5]], vec![0.25, 0.25], Metric::Euclidean).unwrap();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let b = build_mra(&tree).unwrap();
        assert_eq!(b.fathers().len(), 1);
        assert_eq!(b.mothers().len(), 1);
        let psi = b.mothers()[0].dense(&tree);
        let m: f64 = 0.5;
        assert!((psi[0].abs() - 1.0 / m.sqrt()).abs() < 1e-15);
        assert!((psi[0] + psi[1]).abs() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal_with_vanishing_moments() {
        let (s, b) = setup(64);
        let c = check_basis(&b, &s);
        assert_eq!(c.n_fathers + c.n_mothers, 64);
        assert_eq!(c.n_mothers, c.expected_mothers);
        assert!(c.gram_max_dev <= 1e-12, "{}", c.gram_max_dev);
        assert!(c.max_mother_mean <= 1e-12);
    }

    #[test]
    fn constants_have_only_father_coefficients() {
        let (s, b) = setup(64);
        let c = analyze(&vec![3.0; 64], &b, &s).unwrap();
        for (e, v) in b.elements().iter().zip(&c.values) {
            if e.is_mother() {
                assert!(v.abs() < 1e-12);
            } else {
                let m = b.tree.cube(e.support).mass;
                assert!((v - 3.0 * m.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn a_father_analyzes_to_a_unit_vector() {
        let (s, b) = setup(64);
        let f = b.fathers()[1].dense(&b.tree);
        let c = analyze(&f, &b, &s).unwrap();
        for (i, v) in c.values.iter().enumerate() {
            let target = if i == 1 { 1.0 } else { 0.0 };
            assert!((v - target).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_and_reconstruction() {
        let (s, b) = setup(64);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = analyze(&f, &b, &s).unwrap();
        let norm = l2_sq(&f, &s);
        assert!((c.energy() - norm).abs() <= 1e-12 * norm);
        let g = synthesize(&c, &b, &s).unwrap();
        let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(f.iter().zip(&g).all(|(a, b)| (a - b).abs() <= 1e-12 * fmax));
    }

    #[test]
    fn synthesis_of_a_single_coefficient_is_the_element() {
        let (s, b) = setup(64);
        let mut c = CoefficientSet::zeros(&b);
        assert!(synthesize(&c, &b, &s).unwrap().iter().all(|&v| v == 0.0));
        let j = b.fathers().len() + 5;
        c.values[j] = 1.0;
        assert_eq!(synthesize(&c, &b, &s).unwrap(), b.elements()[j].dense(&b.tree));
        c.keys[0] = ElementKey::father(999);
        assert!(matches!(synthesize(&c, &b, &s), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn partial_sums_drop_finer_mothers() {
        let (s, b) = setup(64);
        let top = b.max_level();
        let m = b.mothers().iter().find(|e| e.level == top).unwrap();
        let f = m.dense(&b.tree);
        let fn_ = partial_sum(&f, &b, &s, top - 1).unwrap();
        assert!(fn_.iter().all(|v| v.abs() < 1e-12));
        let full = partial_sum(&f, &b, &s, top).unwrap();
        assert!(full.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let (s, b) = setup(64);
        assert!(matches!(analyze(&[1.0; 3], &b, &s), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn decay_fit_scales_with_amplitude() {
        let (s, b) = setup(64);
        let rep = fit_decay(&b, &s);
        let m = rep.mothers.clone().unwrap();
        assert!(m.nu_hat > 0.0 && m.c_hat.is_finite());
        let fathers: Vec<WaveletElement> = b.fathers().to_vec();
        let doubled: Vec<WaveletElement> = fathers.into_iter().chain(b.mothers().iter().map(|e| e.scaled(2.0))).collect();
        let b2 = WaveletBasis::from_elements(b.tree.clone(), doubled).unwrap();
        let m2 = fit_decay_with(&b2, &s, Some(m.nu_hat)).mothers.unwrap();
        assert!((m2.c_hat / m.c_hat - 2.0).abs() < 1e-12);
        assert_eq!(rep.holder.len(), 4);
    }
}

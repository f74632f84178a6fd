//! Nested nets and dyadic cubes.
//!
//! Nets are chosen fine-to-coarse: the finest level holds every point and each
//! coarser level is a greedy maximal `c0 delta^k`-separated subset of the next
//! finer one (lowest id first), so `X^k` is contained in `X^(k+1)` by
//! construction.
//!
//! Cubes come from the center tree: a level-`(k+1)` center that is already a
//! level-`k` center is its own parent; any other center hangs off the nearest
//! level-`k` center. A cube is the set of points whose ancestor chain passes
//! through its center. Partition and nesting hold by construction; the ball
//! sandwich holds whenever `12 A0^3 C0 delta <= c0` and is re-checked by
//! [`verify_cube_axioms`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::space::FiniteHomSpace;
use crate::sum::ExactSum;

/// Net constants `delta`, `c0`, `C0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeParams {
    pub delta: f64,
    pub c0: f64,
    #[serde(rename = "C0")]
    pub big_c0: f64,
}

impl CubeParams {
    /// `delta = 1/8`, `c0 = 1`, `C0 = 1.5 A0`.
    pub fn defaults(a0: f64) -> Self {
        Self { delta: 0.125, c0: 1.0, big_c0: 1.5 * a0 }
    }

    /// Left side of `12 A0^3 C0 delta <= c0`.
    pub fn admissibility_lhs(&self, a0: f64) -> f64 {
        12.0 * a0.powi(3) * self.big_c0 * self.delta
    }

    pub fn is_admissible(&self, a0: f64) -> bool {
        self.admissibility_lhs(a0) <= self.c0 && self.c0 <= self.big_c0 && self.delta > 0.0 && self.delta < 1.0
    }

    /// Halves `delta` until admissible.
    pub fn shrink_to_admissible(mut self, a0: f64) -> Self {
        while !self.is_admissible(a0) && self.delta > 1e-12 {
            self.delta /= 2.0;
        }
        self
    }

    /// Inner sandwich constant `c# = c0 / (3 A0^2)`.
    pub fn c_sharp(&self, a0: f64) -> f64 {
        self.c0 / (3.0 * a0 * a0)
    }

    /// Outer sandwich constant `C# = max(2 A0 C0, 1)`.
    pub fn big_c_sharp(&self, a0: f64) -> f64 {
        (2.0 * a0 * self.big_c0).max(1.0)
    }
}

/// Centers per level, `k_min..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetHierarchy {
    pub params: CubeParams,
    pub a0: f64,
    pub k_min: i32,
    pub k_max: i32,
    levels: Vec<Vec<usize>>,
}

impl NetHierarchy {
    /// Level-`k` centers in ascending id order.
    pub fn centers(&self, k: i32) -> &[usize] {
        &self.levels[(k - self.k_min) as usize]
    }

    pub fn sizes(&self) -> Vec<(i32, usize)> {
        (self.k_min..=self.k_max).map(|k| (k, self.centers(k).len())).collect()
    }
}

/// Finest level needed for singleton leaves: smallest `k >= 0` with
/// `delta^k < min_dist / C#`.
pub fn finest_level(space: &FiniteHomSpace, params: &CubeParams, a0: f64) -> i32 {
    let target = space.min_positive_distance() / params.big_c_sharp(a0);
    let mut k = 0;
    while params.delta.powi(k) >= target {
        k += 1;
    }
    k
}

pub fn build_nets(space: &FiniteHomSpace, a0: f64, params: CubeParams) -> Result<NetHierarchy> {
    if !(params.delta > 0.0 && params.delta < 1.0) || params.c0 <= 0.0 || params.c0 > params.big_c0 {
        return Err(Error::Precondition(format!(
            "need 0 < delta < 1 and 0 < c0 <= C0 (got delta={}, c0={}, C0={})",
            params.delta, params.c0, params.big_c0
        )));
    }
    if params.admissibility_lhs(a0) > params.c0 {
        return Err(Error::Admissibility { lhs: params.admissibility_lhs(a0), c0: params.c0 });
    }
    let n = space.n();
    let k_max = if n == 1 { 0 } else { finest_level(space, &params, a0) };
    let mut rev: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut k = k_max;
    loop {
        let finer = rev.last().unwrap();
        if k <= 0 && finer.len() == 1 {
            break;
        }
        k -= 1;
        let sep = params.c0 * params.delta.powi(k);
        let mut chosen: Vec<usize> = Vec::new();
        for &c in finer {
            if chosen.iter().all(|&s| space.dist(c, s) >= sep) {
                chosen.push(c);
            }
        }
        rev.push(chosen);
    }
    rev.reverse();
    let nets = NetHierarchy { params, a0, k_min: k, k_max, levels: rev };
    check_covering(space, &nets)?;
    Ok(nets)
}

fn check_covering(space: &FiniteHomSpace, nets: &NetHierarchy) -> Result<()> {
    for k in nets.k_min..=nets.k_max {
        let bound = nets.params.big_c0 * nets.params.delta.powi(k);
        let centers = nets.centers(k);
        let far = par::map_range(space.n(), |p| {
            let d = centers.iter().map(|&c| space.dist(p, c)).fold(f64::INFINITY, f64::min);
            (d >= bound).then_some((p, d))
        });
        if let Some((point, distance)) = far.into_iter().flatten().next() {
            return Err(Error::CoveringFailed { level: k, point, distance, bound });
        }
    }
    Ok(())
}

/// Address of a cube: level `k` and index `alpha` into that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeKey {
    pub level: i32,
    pub index: usize,
}

impl CubeKey {
    pub fn new(level: i32, index: usize) -> Self {
        Self { level, index }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: usize,
    /// Index into the next coarser level.
    pub parent: Option<usize>,
    /// Indices into the next finer level, ascending.
    pub children: Vec<usize>,
    /// Point ids, ascending.
    pub members: Vec<usize>,
    /// Center lies in `X^k \ X^(k-1)`.
    pub new_center: bool,
    pub mass: f64,
}

impl Cube {
    pub fn contains(&self, p: usize) -> bool {
        self.members.binary_search(&p).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicTree {
    pub params: CubeParams,
    pub a0: f64,
    pub k_min: i32,
    pub k_max: i32,
    levels: Vec<Vec<Cube>>,
    point_cube: Vec<Vec<usize>>,
}

impl DyadicTree {
    /// Assembles a tree from per-level cubes without checking any axiom.
    pub fn from_levels(params: CubeParams, a0: f64, k_min: i32, levels: Vec<Vec<Cube>>, n: usize) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty);
        }
        let k_max = k_min + levels.len() as i32 - 1;
        let point_cube = levels
            .iter()
            .map(|cubes| {
                let mut owner = vec![usize::MAX; n];
                for (i, c) in cubes.iter().enumerate() {
                    for &p in &c.members {
                        if p < n && owner[p] == usize::MAX {
                            owner[p] = i;
                        }
                    }
                }
                owner
            })
            .collect();
        Ok(Self { params, a0, k_min, k_max, levels, point_cube })
    }

    pub fn c_sharp(&self) -> f64 {
        self.params.c_sharp(self.a0)
    }

    pub fn big_c_sharp(&self) -> f64 {
        self.params.big_c_sharp(self.a0)
    }

    /// `delta^k`.
    pub fn scale(&self, k: i32) -> f64 {
        self.params.delta.powi(k)
    }

    pub fn level(&self, k: i32) -> &[Cube] {
        &self.levels[(k - self.k_min) as usize]
    }

    pub fn levels(&self) -> impl Iterator<Item = (i32, &[Cube])> {
        self.levels.iter().enumerate().map(move |(i, l)| (self.k_min + i as i32, l.as_slice()))
    }

    pub fn cube(&self, key: CubeKey) -> &Cube {
        &self.level(key.level)[key.index]
    }

    pub fn get(&self, key: CubeKey) -> Option<&Cube> {
        if key.level < self.k_min || key.level > self.k_max {
            return None;
        }
        self.level(key.level).get(key.index)
    }

    /// Index of the level-`k` cube containing `p`.
    pub fn cube_of(&self, k: i32, p: usize) -> usize {
        self.point_cube[(k - self.k_min) as usize][p]
    }

    /// Number of points the tree was built over.
    pub fn n_points(&self) -> usize {
        self.point_cube[0].len()
    }

    /// Topmost cube at level `>= floor` with the same point set as `key`.
    pub fn canonical(&self, key: CubeKey, floor: i32) -> CubeKey {
        let mut cur = key;
        while cur.level > floor {
            let cube = self.cube(cur);
            match cube.parent {
                Some(p) if self.level(cur.level - 1)[p].children.len() == 1 => cur = CubeKey::new(cur.level - 1, p),
                _ => break,
            }
        }
        cur
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Builds the cube tree over a net hierarchy.
pub fn build_cubes(space: &FiniteHomSpace, nets: &NetHierarchy) -> Result<DyadicTree> {
    let n = space.n();
    let depth = (nets.k_max - nets.k_min + 1) as usize;
    // parent_of[l][j]: parent index (level l-1) of center j at level l
    let mut parent_of: Vec<Vec<usize>> = vec![Vec::new(); depth];
    for l in 1..depth {
        let k = nets.k_min + l as i32;
        let coarse = nets.centers(k - 1);
        let fine = nets.centers(k);
        parent_of[l] = par::map_slice(fine, |&y| match coarse.binary_search(&y) {
            Ok(i) => i,
            Err(_) => {
                let mut best = 0;
                for (i, &c) in coarse.iter().enumerate() {
                    if space.dist(y, c) < space.dist(y, coarse[best]) {
                        best = i;
                    }
                }
                best
            }
        });
    }
    // finest level: every point is a center, index = point id
    let mut point_cube: Vec<Vec<usize>> = vec![Vec::new(); depth];
    point_cube[depth - 1] = (0..n).collect();
    for l in (0..depth - 1).rev() {
        point_cube[l] = point_cube[l + 1].iter().map(|&c| parent_of[l + 1][c]).collect();
    }
    let mut levels: Vec<Vec<Cube>> = Vec::with_capacity(depth);
    for l in 0..depth {
        let k = nets.k_min + l as i32;
        let centers = nets.centers(k);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
        for p in 0..n {
            members[point_cube[l][p]].push(p);
        }
        let coarse = if l > 0 { Some(nets.centers(k - 1)) } else { None };
        let cubes = centers
            .iter()
            .zip(members)
            .enumerate()
            .map(|(j, (&center, members))| {
                let mass = members.iter().map(|&p| space.weight(p)).collect::<ExactSum>().value();
                Cube {
                    center,
                    parent: (l > 0).then(|| parent_of[l][j]),
                    children: Vec::new(),
                    members,
                    new_center: coarse.is_some_and(|c| c.binary_search(&center).is_err()),
                    mass,
                }
            })
            .collect();
        levels.push(cubes);
    }
    for l in 1..depth {
        let (coarse, fine) = levels.split_at_mut(l);
        for (j, cube) in fine[0].iter().enumerate() {
            coarse[l - 1][cube.parent.unwrap()].children.push(j);
        }
    }
    Ok(DyadicTree { params: nets.params, a0: nets.a0, k_min: nets.k_min, k_max: nets.k_max, levels, point_cube })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Point in no cube or in several cubes of one level.
    Partition,
    /// Point of a child missing from its parent, or inconsistent links.
    Nesting,
    /// Point of `B(x, c# delta^k)` outside the cube.
    InnerBall,
    /// Cube point outside `B(x, C# delta^k)`.
    OuterBall,
    /// Center not a member, or wrong new-center flag.
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub kind: ViolationKind,
    pub level: i32,
    pub cube: usize,
    pub point: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AxiomReport {
    pub levels: usize,
    pub cubes: usize,
    /// `(k, number of child-in-parent checks)`; zero at the coarsest level.
    pub nesting_checks: Vec<(i32, usize)>,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustive check of partition, nesting and both ball inclusions.
pub fn verify_cube_axioms(space: &FiniteHomSpace, tree: &DyadicTree) -> AxiomReport {
    let n = space.n();
    let c_in = tree.c_sharp();
    let c_out = tree.big_c_sharp();
    let mut report = AxiomReport { levels: 0, cubes: 0, ..Default::default() };
    for (k, cubes) in tree.levels() {
        report.levels += 1;
        report.cubes += cubes.len();
        let v = |kind, cube, point| AxiomViolation { kind, level: k, cube, point };

        let mut owners: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, c) in cubes.iter().enumerate() {
            for &p in &c.members {
                if p < n {
                    owners[p].push(i);
                }
            }
        }
        for (p, o) in owners.iter().enumerate() {
            if o.len() != 1 {
                report.violations.push(v(ViolationKind::Partition, o.first().copied().unwrap_or(usize::MAX), p));
            }
        }

        let mut checks = 0;
        if k > tree.k_min {
            let coarse = tree.level(k - 1);
            for (i, c) in cubes.iter().enumerate() {
                checks += 1;
                let Some(parent) = c.parent.and_then(|p| coarse.get(p)) else {
                    report.violations.push(v(ViolationKind::Nesting, i, c.center));
                    continue;
                };
                if !parent.children.contains(&i) {
                    report.violations.push(v(ViolationKind::Nesting, i, c.center));
                }
                if let Some(&p) = c.members.iter().find(|&&p| !parent.contains(p)) {
                    report.violations.push(v(ViolationKind::Nesting, i, p));
                }
                let was_center = coarse.iter().any(|q| q.center == c.center);
                if c.new_center == was_center {
                    report.violations.push(v(ViolationKind::Center, i, c.center));
                }
            }
        }
        report.nesting_checks.push((k, checks));

        let scale = tree.scale(k);
        let r_in = c_in * scale;
        let r_out = c_out * scale;
        let per_cube = par::map_range(cubes.len(), |i| {
            let c = &cubes[i];
            let mut out = Vec::new();
            if !c.contains(c.center) {
                out.push(v(ViolationKind::Center, i, c.center));
            }
            if let Some(&p) = c.members.iter().find(|&&p| space.dist(c.center, p) >= r_out) {
                out.push(v(ViolationKind::OuterBall, i, p));
            }
            let cache = space.cache();
            let inside = cache.count_within(c.center, r_in);
            if let Some(&p) = cache.neighbors(c.center)[..inside].iter().find(|&&p| !c.contains(p as usize)) {
                out.push(v(ViolationKind::InnerBall, i, p as usize));
            }
            out
        });
        report.violations.extend(per_cube.into_iter().flatten());
    }
    report
}

/// Options for [`build_tree`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TreeOptions {
    pub delta: Option<f64>,
    pub c0: Option<f64>,
    pub big_c0: Option<f64>,
    /// Error instead of halving `delta` when the constants are inadmissible.
    pub strict: bool,
}

/// Nets, cubes and a clean axiom report, halving `delta` up to four times if
/// the verification finds a violation.
pub fn build_tree(space: &FiniteHomSpace, a0: f64, opts: TreeOptions) -> Result<(DyadicTree, AxiomReport)> {
    let defaults = CubeParams::defaults(a0);
    let mut params = CubeParams {
        delta: opts.delta.unwrap_or(defaults.delta),
        c0: opts.c0.unwrap_or(defaults.c0),
        big_c0: opts.big_c0.unwrap_or(defaults.big_c0),
    };
    if !opts.strict {
        params = params.shrink_to_admissible(a0);
    }
    let mut last = None;
    for _ in 0..=4 {
        let nets = build_nets(space, a0, params)?;
        let tree = build_cubes(space, &nets)?;
        let report = verify_cube_axioms(space, &tree);
        if report.is_clean() {
            return Ok((tree, report));
        }
        last = Some(report);
        params.delta /= 2.0;
    }
    let report = last.unwrap();
    let w = &report.violations[0];
    Err(Error::AxiomViolation(format!(
        "{:?} at level {} cube {} (witness point {}) after 4 retries",
        w.kind, w.level, w.cube, w.point
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};
    use crate::space::Metric;

    fn grid64() -> FiniteHomSpace {
        generate(&GeneratorSpec::grid1d(64)).unwrap()
    }

    #[test]
    fn two_points_both_survive_at_level_zero() {
        let s = FiniteHomSpace::from_coords("two", vec![vec![0.0], vec![1.0]], vec![1.0, 1.0], Metric::Euclidean).unwrap();
        let params = CubeParams { delta: 1.0 / 8.0, c0: 0.5, big_c0: 4.0 }.shrink_to_admissible(1.0);
        let nets = build_nets(&s, 1.0, params).unwrap();
        assert_eq!(nets.centers(0), &[0, 1]);
        assert_eq!(nets.centers(nets.k_max), &[0, 1]);
    }

    #[test]
    fn inadmissible_constants_rejected() {
        let s = grid64();
        let err = build_nets(&s, 1.0, CubeParams { delta: 0.125, c0: 1.0, big_c0: 1.5 }).unwrap_err();
        assert!(err.to_string().contains("admissibility violated"));
    }

    #[test]
    fn nets_are_nested_separated_and_shrink_geometrically() {
        let s = grid64();
        let params = CubeParams::defaults(1.0).shrink_to_admissible(1.0);
        let nets = build_nets(&s, 1.0, params).unwrap();
        assert_eq!(nets.centers(nets.k_max).len(), 64);
        for k in nets.k_min..nets.k_max {
            let coarse = nets.centers(k);
            let fine = nets.centers(k + 1);
            assert!(coarse.iter().all(|c| fine.contains(c)));
            assert!(coarse.len() <= fine.len());
            let sep = params.c0 * params.delta.powi(k);
            for (i, &a) in coarse.iter().enumerate() {
                for &b in &coarse[i + 1..] {
                    assert!(s.dist(a, b) >= sep);
                }
            }
        }
        // level 0 picks the unit lattice {0, 1, 2, 3}
        assert_eq!(nets.centers(0), &[0, 16, 32, 48]);
        assert_eq!(nets.centers(nets.k_min).len(), 1);
    }

    #[test]
    fn grid_tree_is_clean_and_cubes_are_small() {
        let s = grid64();
        let (tree, report) = build_tree(&s, 1.0, TreeOptions { delta: Some(0.25), ..Default::default() }).unwrap();
        assert!(report.is_clean(), "{:?}", report.violations);
        for (k, cubes) in tree.levels() {
            for c in cubes {
                let diam = c
                    .members
                    .iter()
                    .flat_map(|&a| c.members.iter().map(move |&b| (a, b)))
                    .map(|(a, b)| s.dist(a, b))
                    .fold(0.0, f64::max);
                assert!(diam <= 2.0 * tree.big_c_sharp() * tree.scale(k));
                assert!(c.mass > 0.0);
            }
        }
        assert_eq!(report.nesting_checks[0], (tree.k_min, 0));
        // leaves are singletons
        assert!(tree.level(tree.k_max).iter().all(|c| c.members.len() == 1));
    }

    #[test]
    fn new_center_counts_match_children() {
        let s = grid64();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        for k in tree.k_min..tree.k_max {
            for parent in tree.level(k) {
                let fresh = parent.children.iter().filter(|&&c| tree.level(k + 1)[c].new_center).count();
                assert_eq!(fresh, parent.children.len() - 1);
                for &c in &parent.children {
                    assert!(tree.level(k + 1)[c].mass <= parent.mass);
                }
            }
        }
    }

    #[test]
    fn single_cube_space() {
        let s = FiniteHomSpace::from_coords("one", vec![vec![0.0]], vec![2.0], Metric::Euclidean).unwrap();
        let (tree, report) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        assert!(report.is_clean());
        assert_eq!(tree.k_min, 0);
        assert_eq!(tree.level(0).len(), 1);
        assert_eq!(tree.level(0)[0].members, vec![0]);
    }

    fn mutate(tree: &DyadicTree, f: impl FnOnce(&mut Vec<Vec<Cube>>)) -> DyadicTree {
        let mut levels: Vec<Vec<Cube>> = tree.levels().map(|(_, c)| c.to_vec()).collect();
        f(&mut levels);
        DyadicTree::from_levels(tree.params, tree.a0, tree.k_min, levels, tree.n_points()).unwrap()
    }

    #[test]
    fn copied_point_breaks_partition() {
        let s = grid64();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let l0 = (0 - tree.k_min) as usize;
        let p = tree.level(0)[1].members[0];
        let bad = mutate(&tree, |lv| {
            lv[l0][0].members.push(p);
            lv[l0][0].members.sort();
        });
        let rep = verify_cube_axioms(&s, &bad);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Partition && v.point == p && v.level == 0));
    }

    #[test]
    fn moved_point_breaks_nesting_or_sandwich() {
        let s = grid64();
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        let l0 = (0 - tree.k_min) as usize;
        let p = *tree.level(0)[1].members.last().unwrap();
        let bad = mutate(&tree, |lv| {
            lv[l0][1].members.retain(|&q| q != p);
            lv[l0][0].members.push(p);
            lv[l0][0].members.sort();
        });
        let rep = verify_cube_axioms(&s, &bad);
        assert!(!rep.is_clean());
        assert!(rep.violations.iter().any(|v| v.point == p));
    }
}

//! The agglomerative loop and the checks that run on its output.
//!
//! Points are clusters `0..n`; the cluster created at iteration `j` (1-based)
//! gets id `n - 1 + j`. Among pairs attaining the minimum linkage value the
//! pair whose `(min point, min point)` key is lexicographically least wins.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::metric::{diam_unchecked, radius_unchecked, Clustering, DistanceMatrix};

/// Caller-supplied cluster distance `f(A, B, D)`.
pub type LinkageFn = Arc<dyn Fn(&[usize], &[usize], &DistanceMatrix) -> f64 + Send + Sync>;

/// Caller-supplied cohesion `cost(A, D)`.
pub type CostFn = Arc<dyn Fn(&[usize], &DistanceMatrix) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum LinkageMethod {
    /// Complete linkage: largest cross distance.
    Complete,
    /// Single linkage: smallest cross distance.
    Single,
    /// Average linkage: mean cross distance.
    Average,
    /// Minimax linkage: radius of the union.
    Minimax,
    Custom { name: String, f: LinkageFn },
}

impl LinkageMethod {
    pub fn custom(name: impl Into<String>, f: LinkageFn) -> Self {
        Self::Custom { name: name.into(), f }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Complete => "CL",
            Self::Single => "SL",
            Self::Average => "AL",
            Self::Minimax => "MM",
            Self::Custom { name, .. } => name,
        }
    }

    pub fn builtin() -> [LinkageMethod; 4] {
        [Self::Complete, Self::Single, Self::Average, Self::Minimax]
    }
}

impl fmt::Debug for LinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for LinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for LinkageMethod {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Custom { f: a, .. }, Self::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            (Self::Custom { .. }, _) | (_, Self::Custom { .. }) => false,
            _ => self.name() == other.name(),
        }
    }
}

impl FromStr for LinkageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CL" | "COMPLETE" => Ok(Self::Complete),
            "SL" | "SINGLE" => Ok(Self::Single),
            "AL" | "AVERAGE" => Ok(Self::Average),
            "MM" | "MINIMAX" => Ok(Self::Minimax),
            _ => Err(Error::Format(format!("unknown linkage method `{s}`"))),
        }
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u = Vec::with_capacity(a.len() + b.len());
    u.extend_from_slice(a);
    u.extend_from_slice(b);
    u
}

fn cross_max(a: &[usize], b: &[usize], d: &DistanceMatrix) -> f64 {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| d.get(x, y)))
        .fold(0.0, f64::max)
}

fn cross_min(a: &[usize], b: &[usize], d: &DistanceMatrix) -> f64 {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| d.get(x, y)))
        .fold(f64::INFINITY, f64::min)
}

fn cross_sum(a: &[usize], b: &[usize], d: &DistanceMatrix) -> f64 {
    a.iter().flat_map(|&x| b.iter().map(move |&y| d.get(x, y))).sum()
}

fn linkage_unchecked(method: &LinkageMethod, a: &[usize], b: &[usize], d: &DistanceMatrix) -> f64 {
    match method {
        LinkageMethod::Complete => cross_max(a, b, d),
        LinkageMethod::Single => cross_min(a, b, d),
        LinkageMethod::Average => cross_sum(a, b, d) / (a.len() * b.len()) as f64,
        LinkageMethod::Minimax => radius_unchecked(&union(a, b), d),
        LinkageMethod::Custom { f, .. } => f(a, b, d),
    }
}

fn check_pair(a: &[usize], b: &[usize], n: usize) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return precondition("linkage distance needs two nonempty clusters");
    }
    let mut seen = vec![false; n];
    for &p in a {
        if p >= n {
            return Err(Error::Structural(format!("point {p} outside 0..{n}")));
        }
        seen[p] = true;
    }
    for &p in b {
        if p >= n {
            return Err(Error::Structural(format!("point {p} outside 0..{n}")));
        }
        if seen[p] {
            return precondition(format!("clusters overlap at point {p}"));
        }
    }
    Ok(())
}

/// Distance between disjoint clusters `a` and `b` under `method`.
pub fn linkage_distance(
    method: &LinkageMethod,
    a: &[usize],
    b: &[usize],
    d: &DistanceMatrix,
) -> Result<f64> {
    check_pair(a, b, d.n())?;
    Ok(linkage_unchecked(method, a, b, d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub left: usize,
    pub right: usize,
    pub value: f64,
    pub iteration: usize,
}

impl MergeRecord {
    /// Id of the cluster this merge creates.
    pub fn result(&self, n: usize) -> usize {
        n - 1 + self.iteration
    }
}

/// The tie rule every dendrogram in this crate is built with.
pub const TIE_RULE: &str = "lexicographic-min-point";

#[derive(Clone, Debug)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<MergeRecord>,
    method: String,
    tie_rule: String,
}

impl Dendrogram {
    /// Wraps a merge list, checking that it replays to a single cluster.
    pub fn new(n: usize, merges: Vec<MergeRecord>, method: impl Into<String>) -> Result<Self> {
        let dg = Self { n, merges, method: method.into(), tie_rule: TIE_RULE.into() };
        dg.validate()?;
        Ok(dg)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.merges.len() != self.n - 1 {
            return Err(Error::Structural(format!(
                "{} merges cannot join {} points into one cluster",
                self.merges.len(),
                self.n
            )));
        }
        let mut live = vec![false; 2 * self.n - 1];
        live[..self.n].fill(true);
        for (j, m) in self.merges.iter().enumerate() {
            if m.iteration != j + 1 {
                return Err(Error::Structural(format!(
                    "merge {} carries iteration {}",
                    j + 1,
                    m.iteration
                )));
            }
            let fresh = self.n + j;
            for id in [m.left, m.right] {
                if id >= fresh || !live[id] {
                    return Err(Error::Structural(format!(
                        "merge {} consumes cluster {id}, which is not live",
                        j + 1
                    )));
                }
            }
            if m.left == m.right {
                return Err(Error::Structural(format!("merge {} joins a cluster with itself", j + 1)));
            }
            live[m.left] = false;
            live[m.right] = false;
            live[fresh] = true;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[MergeRecord] {
        &self.merges
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn tie_rule(&self) -> &str {
        &self.tie_rule
    }

    /// Member lists for every cluster id `0..2n-1`, members ascending.
    pub fn cluster_members(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = (0..self.n).map(|p| vec![p]).collect();
        for m in &self.merges {
            let mut u = union(&members[m.left], &members[m.right]);
            u.sort_unstable();
            members.push(u);
        }
        members
    }

    /// Serializes the merge list as `[{left, right, value, iteration}]`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.merges)?)
    }

    pub fn from_json(json: &str, method: impl Into<String>) -> Result<Self> {
        let merges: Vec<MergeRecord> = serde_json::from_str(json)?;
        Self::new(merges.len() + 1, merges, method)
    }
}

/// Replays `dg`, calling `visit(t, clusters)` with the live cluster ids after
/// `t` merges for `t = 0..=n-1`.
pub fn replay(dg: &Dendrogram, mut visit: impl FnMut(usize, &[usize])) {
    let n = dg.n();
    let mut live: Vec<usize> = (0..n).collect();
    visit(0, &live);
    for m in dg.merges() {
        live.retain(|&c| c != m.left && c != m.right);
        live.push(m.result(n));
        visit(m.iteration, &live);
    }
}

enum Cache {
    Max(Vec<f64>),
    Min(Vec<f64>),
    Sum(Vec<f64>),
    Value(Vec<f64>),
}

/// Runs the agglomerative loop with the given linkage over `d`.
pub fn run_linkage(method: &LinkageMethod, d: &DistanceMatrix) -> Result<Dendrogram> {
    let n = d.n();
    if n < 2 {
        return precondition("linkage needs at least two points");
    }
    // Slots are indexed by the smallest point of the cluster they hold.
    let mut members: Vec<Vec<usize>> = (0..n).map(|p| vec![p]).collect();
    let mut ids: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let base = d.to_dense();
    let mut cache = match method {
        LinkageMethod::Complete => Cache::Max(base),
        LinkageMethod::Single => Cache::Min(base),
        LinkageMethod::Average => Cache::Sum(base),
        _ => {
            let mut v = vec![0.0; n * n];
            for a in 0..n {
                for b in (a + 1)..n {
                    let x = linkage_unchecked(method, &members[a], &members[b], d);
                    v[a * n + b] = x;
                    v[b * n + a] = x;
                }
            }
            Cache::Value(v)
        }
    };
    let mut merges = Vec::with_capacity(n - 1);
    for iteration in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ia, &a) in active.iter().enumerate() {
            for &b in &active[ia + 1..] {
                let value = match &cache {
                    Cache::Max(v) | Cache::Min(v) | Cache::Value(v) => v[a * n + b],
                    Cache::Sum(v) => v[a * n + b] / (members[a].len() * members[b].len()) as f64,
                };
                if best.is_none_or(|(_, _, bv)| value < bv) {
                    best = Some((a, b, value));
                }
            }
        }
        let (a, b, value) = best.ok_or_else(|| Error::Internal("no candidate pair".into()))?;
        merges.push(MergeRecord { left: ids[a], right: ids[b], value, iteration });
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        ids[a] = n - 1 + iteration;
        active.retain(|&s| s != b);
        for &c in &active {
            if c == a {
                continue;
            }
            let (ac, bc) = (a * n + c, b * n + c);
            let updated = match &mut cache {
                Cache::Max(v) => v[ac].max(v[bc]),
                Cache::Min(v) => v[ac].min(v[bc]),
                Cache::Sum(v) => v[ac] + v[bc],
                Cache::Value(_) => linkage_unchecked(method, &members[a], &members[c], d),
            };
            let v = match &mut cache {
                Cache::Max(v) | Cache::Min(v) | Cache::Sum(v) | Cache::Value(v) => v,
            };
            v[ac] = updated;
            v[c * n + a] = updated;
        }
    }
    Dendrogram::new(n, merges, method.name())
}

/// The k-clustering left after `n - k` merges of `dg`.
pub fn extract_clustering(dg: &Dendrogram, k: usize) -> Result<Clustering> {
    let n = dg.n();
    if k == 0 || k > n {
        return precondition(format!("k = {k} outside 1..={n}"));
    }
    let members = dg.cluster_members();
    let mut live: Vec<usize> = (0..n).collect();
    for m in &dg.merges()[..n - k] {
        live.retain(|&c| c != m.left && c != m.right);
        live.push(m.result(n));
    }
    Clustering::new(n, live.into_iter().map(|c| members[c].clone()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotonicityClaim {
    /// The union diameter equals the largest cross distance.
    UnionDiameter,
    /// The union diameter does not decrease from one merge to the next.
    Nondecreasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub iteration: usize,
    pub claim: MonotonicityClaim,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks, for every merge `j`, that `diam(A_j ∪ B_j)` equals the largest
/// cross distance between `A_j` and `B_j`, and that it is at least the union
/// diameter of merge `j - 1`.
pub fn check_merge_monotonicity(dg: &Dendrogram, d: &DistanceMatrix) -> Vec<MonotonicityViolation> {
    let members = dg.cluster_members();
    let mut violations = Vec::new();
    let mut previous: Option<f64> = None;
    for m in dg.merges() {
        let merged = &members[m.result(dg.n())];
        let diam = diam_unchecked(merged, d);
        let cross = cross_max(&members[m.left], &members[m.right], d);
        if diam != cross {
            violations.push(MonotonicityViolation {
                iteration: m.iteration,
                claim: MonotonicityClaim::UnionDiameter,
                lhs: diam,
                rhs: cross,
            });
        }
        if let Some(prev) = previous {
            if diam < prev {
                violations.push(MonotonicityViolation {
                    iteration: m.iteration,
                    claim: MonotonicityClaim::Nondecreasing,
                    lhs: diam,
                    rhs: prev,
                });
            }
        }
        previous = Some(diam);
    }
    violations
}

/// Runs the loop that merges the pair with the smallest union diameter.
pub fn run_min_union_diameter(d: &DistanceMatrix) -> Result<Dendrogram> {
    let n = d.n();
    if n < 2 {
        return precondition("linkage needs at least two points");
    }
    let mut clusters: Vec<(usize, Vec<usize>, f64)> = (0..n).map(|p| (p, vec![p], 0.0)).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for iteration in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let (_, a, da) = &clusters[i];
                let (_, b, db) = &clusters[j];
                let value = da.max(*db).max(cross_max(a, b, d));
                if best.is_none_or(|(_, _, bv)| value < bv) {
                    best = Some((i, j, value));
                }
            }
        }
        let (i, j, value) = best.ok_or_else(|| Error::Internal("no candidate pair".into()))?;
        let (right_id, right_members, _) = clusters.remove(j);
        let (left_id, left_members, _) = &mut clusters[i];
        merges.push(MergeRecord { left: *left_id, right: right_id, value, iteration });
        left_members.extend(right_members);
        *left_id = n - 1 + iteration;
        clusters[i].2 = value;
        clusters.sort_by_key(|(_, m, _)| m.iter().copied().min());
    }
    Dendrogram::new(n, merges, "min-union-diam")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleEquivalence {
    pub equivalent: bool,
    /// First iteration at which the two merge lists differ.
    pub first_divergence: Option<usize>,
}

/// Compares complete linkage with the min-union-diameter rule merge by merge.
/// Requires pairwise distinct distances.
pub fn check_rule_equivalence(d: &DistanceMatrix) -> Result<RuleEquivalence> {
    if !d.has_distinct_distances() {
        return precondition("rule equivalence needs pairwise distinct distances");
    }
    let cl = run_linkage(&LinkageMethod::Complete, d)?;
    let mu = run_min_union_diameter(d)?;
    let first_divergence = cl
        .merges()
        .iter()
        .zip(mu.merges())
        .find(|(a, b)| (a.left, a.right) != (b.left, b.right))
        .map(|(a, _)| a.iteration);
    Ok(RuleEquivalence { equivalent: first_divergence.is_none(), first_divergence })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentCondition {
    /// `min cross <= f(A, B) <= diam(A ∪ B)`.
    Sandwich,
    /// `cost({x}) = 0`.
    SingletonCost,
    /// `cost(A ∪ B) <= max{cost(A), cost(B), f(A, B)}`.
    UnionCost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentViolation {
    pub condition: AlignmentCondition,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub pairs_checked: usize,
    pub singletons_checked: usize,
    /// Pairs where `cost(A ∪ B) = f(A, B)` held exactly.
    pub union_cost_equals_f: usize,
    pub violations: Vec<AlignmentViolation>,
}

impl AlignmentReport {
    pub fn aligned(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance used by [`check_alignment`] comparisons.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-9;

fn le_rel(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + ALIGNMENT_TOLERANCE * rhs.abs()
}

/// Samples `sample_pairs` random disjoint cluster pairs and every singleton
/// and reports each violated alignment condition.
pub fn check_alignment(
    f: &LinkageFn,
    cost: &CostFn,
    d: &DistanceMatrix,
    sample_pairs: usize,
    seed: u64,
) -> Result<AlignmentReport> {
    if sample_pairs == 0 {
        return precondition("sample_pairs must be at least 1");
    }
    let n = d.n();
    if n < 2 {
        return precondition("alignment sampling needs at least two points");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AlignmentReport::default();
    for p in 0..n {
        let c = cost(&[p], d);
        report.singletons_checked += 1;
        if c != 0.0 {
            report.violations.push(AlignmentViolation {
                condition: AlignmentCondition::SingletonCost,
                a: vec![p],
                b: vec![],
                lhs: c,
                rhs: 0.0,
            });
        }
    }
    let mut points: Vec<usize> = (0..n).collect();
    for _ in 0..sample_pairs {
        points.shuffle(&mut rng);
        let total = rng.gen_range(2..=n);
        let split = rng.gen_range(1..total);
        let mut a = points[..split].to_vec();
        let mut b = points[split..total].to_vec();
        a.sort_unstable();
        b.sort_unstable();
        let u = union(&a, &b);
        let fv = f(&a, &b, d);
        let lo = cross_min(&a, &b, d);
        let hi = diam_unchecked(&u, d);
        report.pairs_checked += 1;
        if !le_rel(lo, fv) || !le_rel(fv, hi) {
            let (lhs, rhs) = if le_rel(lo, fv) { (fv, hi) } else { (lo, fv) };
            report.violations.push(AlignmentViolation {
                condition: AlignmentCondition::Sandwich,
                a: a.clone(),
                b: b.clone(),
                lhs,
                rhs,
            });
        }
        let cu = cost(&u, d);
        let bound = cost(&a, d).max(cost(&b, d)).max(fv);
        if cu == fv {
            report.union_cost_equals_f += 1;
        }
        if !le_rel(cu, bound) {
            report.violations.push(AlignmentViolation {
                condition: AlignmentCondition::UnionCost,
                a,
                b,
                lhs: cu,
                rhs: bound,
            });
        }
    }
    Ok(report)
}

/// `f` for a built-in method, for use with [`check_alignment`].
pub fn linkage_fn(method: LinkageMethod) -> LinkageFn {
    match method {
        LinkageMethod::Custom { f, .. } => f,
        m => Arc::new(move |a, b, d| linkage_unchecked(&m, a, b, d)),
    }
}

/// `cost` for a cohesion measure, for use with [`check_alignment`].
pub fn cost_fn(measure: crate::metric::Cohesion) -> CostFn {
    Arc::new(move |a, d| crate::metric::cohesion_unchecked(measure, a, d))
}

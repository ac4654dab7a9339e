//! Finite metric spaces and the cohesion measures computed over them.
//!
//! A [`DistanceMatrix`] stores the strict lower triangle of a symmetric,
//! zero-diagonal table of nonnegative distances. Points are identified by
//! `0..n`. Clusters are passed around as slices of point ids.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

/// Default relative tolerance for triangle-inequality validation.
pub const DEFAULT_METRIC_TOLERANCE: f64 = 1e-9;

/// Symmetric table of pairwise distances over `n` points.
#[derive(Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    // d(i, j) for i > j lives at i * (i - 1) / 2 + j.
    lower: Vec<f64>,
    metric_checked: Option<bool>,
}

#[inline]
fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

impl DistanceMatrix {
    /// Builds a matrix from the row-major strict lower triangle
    /// `d(1,0), d(2,0), d(2,1), d(3,0), ...`.
    pub fn from_lower_triangle(n: usize, lower: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structural("a distance matrix needs at least one point".into()));
        }
        let expected = n * (n - 1) / 2;
        if lower.len() != expected {
            return Err(Error::Format(format!(
                "lower triangle for n = {n} must hold {expected} entries, got {}",
                lower.len()
            )));
        }
        for i in 1..n {
            for j in 0..i {
                let value = lower[tri_index(i, j)];
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::InvalidDistance { i, j, value });
                }
            }
        }
        Ok(Self { n, lower, metric_checked: None })
    }

    /// Builds a matrix from a full square table, rejecting asymmetry,
    /// negative or non-finite entries and a nonzero diagonal.
    pub fn from_full(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Structural(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(Error::NonZeroDiagonal { i, value: row[i] });
            }
        }
        let mut lower = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 1..n {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidDistance { i, j, value: a });
                }
                if a != b {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
                lower.push(a);
            }
        }
        Self::from_lower_triangle(n, lower)
    }

    /// Builds a matrix by evaluating `f(i, j)` for every `i > j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut lower = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 1..n {
            for j in 0..i {
                lower.push(f(i, j));
            }
        }
        Self::from_lower_triangle(n, lower)
    }

    /// Points on the real line under absolute difference.
    pub fn from_line(coords: &[f64]) -> Result<Self> {
        Self::from_fn(coords.len(), |i, j| (coords[i] - coords[j]).abs())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lower[tri_index(i, j)],
            std::cmp::Ordering::Less => self.lower[tri_index(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// The packed strict lower triangle, row-major.
    pub fn lower_triangle(&self) -> &[f64] {
        &self.lower
    }

    /// Dense `n x n` copy, for hot loops that index the table repeatedly.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dense[i * n + j] = self.get(i, j);
            }
        }
        dense
    }

    pub fn metric_checked(&self) -> Option<bool> {
        self.metric_checked
    }

    /// Runs [`validate_metric`] and records the outcome on the matrix.
    pub fn with_metric_check(mut self, tau: f64) -> Self {
        self.metric_checked = Some(validate_metric(&self, tau).is_empty());
        self
    }

    /// Multiplies every distance by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::from_lower_triangle(self.n, self.lower.iter().map(|v| v * lambda).collect())
    }

    /// Relabels points: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return precondition("permutation length must equal n");
        }
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    /// True when all `n(n-1)/2` distances are pairwise distinct.
    pub fn has_distinct_distances(&self) -> bool {
        let mut sorted = self.lower.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).all(|w| w[0] != w[1])
    }

    pub fn max_distance(&self) -> f64 {
        self.lower.iter().copied().fold(0.0, f64::max)
    }
}

impl fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistanceMatrix")
            .field("n", &self.n)
            .field("metric_checked", &self.metric_checked)
            .finish_non_exhaustive()
    }
}

/// Every triple `(i, j, k)` with `i < k`, `j` distinct from both, such that
/// `d(i,k) > (d(i,j) + d(j,k)) * (1 + tau)`.
pub fn validate_metric(d: &DistanceMatrix, tau: f64) -> Vec<(usize, usize, usize)> {
    let n = d.n();
    let mut violations = Vec::new();
    for i in 0..n {
        for k in (i + 1)..n {
            let direct = d.get(i, k);
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let detour = d.get(i, j) + d.get(j, k);
                if direct > detour * (1.0 + tau) {
                    violations.push((i, j, k));
                }
            }
        }
    }
    violations
}

/// Within-cluster cohesion measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cohesion {
    /// Maximum pairwise distance.
    Diam,
    /// Mean pairwise distance; zero for a singleton.
    Avg,
    /// Smallest eccentricity over centers inside the cluster; zero for a singleton.
    Radius,
}

pub(crate) fn diam_unchecked(members: &[usize], d: &DistanceMatrix) -> f64 {
    let mut best = 0.0f64;
    for (idx, &x) in members.iter().enumerate() {
        for &y in &members[idx + 1..] {
            best = best.max(d.get(x, y));
        }
    }
    best
}

fn avg_unchecked(members: &[usize], d: &DistanceMatrix) -> f64 {
    let m = members.len();
    if m < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (idx, &x) in members.iter().enumerate() {
        for &y in &members[idx + 1..] {
            sum += d.get(x, y);
        }
    }
    2.0 * sum / (m as f64 * (m as f64 - 1.0))
}

pub(crate) fn radius_unchecked(members: &[usize], d: &DistanceMatrix) -> f64 {
    if members.len() < 2 {
        return 0.0;
    }
    members
        .iter()
        .map(|&x| members.iter().map(|&y| d.get(x, y)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Cohesion of the point set `members` (which must be nonempty).
pub fn cohesion(measure: Cohesion, members: &[usize], d: &DistanceMatrix) -> Result<f64> {
    if members.is_empty() {
        return precondition("cohesion of an empty cluster is undefined");
    }
    if let Some(&bad) = members.iter().find(|&&p| p >= d.n()) {
        return Err(Error::Structural(format!("point {bad} outside 0..{}", d.n())));
    }
    Ok(cohesion_unchecked(measure, members, d))
}

pub(crate) fn cohesion_unchecked(measure: Cohesion, members: &[usize], d: &DistanceMatrix) -> f64 {
    match measure {
        Cohesion::Diam => diam_unchecked(members, d),
        Cohesion::Avg => avg_unchecked(members, d),
        Cohesion::Radius => radius_unchecked(members, d),
    }
}

/// Score of a whole clustering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusteringScore {
    MaxDiam,
    AvgDiam,
    MaxAvg,
    MaxRadius,
}

impl FromStr for ClusteringScore {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-diam" => Ok(Self::MaxDiam),
            "avg-diam" => Ok(Self::AvgDiam),
            "max-avg" => Ok(Self::MaxAvg),
            "max-radius" => Ok(Self::MaxRadius),
            other => Err(Error::Format(format!("unknown clustering score `{other}`"))),
        }
    }
}

impl fmt::Display for ClusteringScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MaxDiam => "max-diam",
            Self::AvgDiam => "avg-diam",
            Self::MaxAvg => "max-avg",
            Self::MaxRadius => "max-radius",
        })
    }
}

/// A partition of `0..n` into `k >= 1` nonempty blocks.
///
/// Blocks are kept in canonical form: members ascending, blocks ordered by
/// their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Clustering {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Clustering {
    /// Validates that `blocks` partition `0..n`.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut canonical = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::Structural("clustering contains an empty block".into()));
            }
            block.sort_unstable();
            for &p in &block {
                if p >= n {
                    return Err(Error::Structural(format!("point {p} outside 0..{n}")));
                }
                if seen[p] {
                    return Err(Error::Structural(format!("point {p} appears in two blocks")));
                }
                seen[p] = true;
            }
            canonical.push(block);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Structural(format!("point {missing} is not covered")));
        }
        if canonical.is_empty() {
            return Err(Error::Structural("clustering has no blocks".into()));
        }
        canonical.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks: canonical })
    }

    /// Builds a clustering from per-point block labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut by_label: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (p, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(p);
        }
        Self::new(labels.len(), by_label.into_values().collect())
    }

    pub fn singletons(n: usize) -> Self {
        Self { n, blocks: (0..n).map(|p| vec![p]).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block index of every point.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &p in block {
                labels[p] = b;
            }
        }
        labels
    }
}

impl TryFrom<Vec<Vec<usize>>> for Clustering {
    type Error = Error;

    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = blocks.iter().map(Vec::len).sum();
        Self::new(n, blocks)
    }
}

impl From<Clustering> for Vec<Vec<usize>> {
    fn from(c: Clustering) -> Self {
        c.blocks
    }
}

/// Scores `c` over `d`.
pub fn clustering_score(score: ClusteringScore, c: &Clustering, d: &DistanceMatrix) -> Result<f64> {
    if c.n() != d.n() {
        return Err(Error::Structural(format!(
            "clustering covers {} points but the matrix has {}",
            c.n(),
            d.n()
        )));
    }
    Ok(clustering_score_unchecked(score, c.blocks(), d))
}

pub(crate) fn clustering_score_unchecked(
    score: ClusteringScore,
    blocks: &[Vec<usize>],
    d: &DistanceMatrix,
) -> f64 {
    let per_block = |m: Cohesion| blocks.iter().map(move |b| cohesion_unchecked(m, b, d));
    match score {
        ClusteringScore::MaxDiam => per_block(Cohesion::Diam).fold(0.0, f64::max),
        ClusteringScore::AvgDiam => per_block(Cohesion::Diam).sum::<f64>() / blocks.len() as f64,
        ClusteringScore::MaxAvg => per_block(Cohesion::Avg).fold(0.0, f64::max),
        ClusteringScore::MaxRadius => per_block(Cohesion::Radius).fold(0.0, f64::max),
    }
}

/// On-disk instance: `{"n": int, "labels": [string]?, "dist": [lower triangle]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub dist: Vec<f64>,
}

impl InstanceFile {
    pub fn new(d: &DistanceMatrix, labels: Option<Vec<String>>) -> Self {
        Self { n: d.n(), labels, dist: d.lower_triangle().to_vec() }
    }

    pub fn to_matrix(&self) -> Result<DistanceMatrix> {
        if let Some(labels) = &self.labels {
            if labels.len() != self.n {
                return Err(Error::Format(format!(
                    "{} labels given for {} points",
                    labels.len(),
                    self.n
                )));
            }
        }
        DistanceMatrix::from_lower_triangle(self.n, self.dist.clone())
    }

    pub fn parse(json: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(json)?;
        file.to_matrix()?;
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(coords: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_line(coords).unwrap()
    }

    #[test]
    fn single_point_has_no_triples() {
        let d = DistanceMatrix::from_lower_triangle(1, vec![]).unwrap();
        assert!(validate_metric(&d, 0.0).is_empty());
    }

    #[test]
    fn line_metric_is_valid() {
        assert!(validate_metric(&line(&[0.0, 1.0, 10.0, 11.0]), 0.0).is_empty());
    }

    #[test]
    fn detects_triangle_violation() {
        let d = DistanceMatrix::from_full(&[
            vec![0.0, 1.0, 10.0],
            vec![1.0, 0.0, 1.0],
            vec![10.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(validate_metric(&d, 1e-9), vec![(0, 1, 2)]);
        assert_eq!(d.clone().with_metric_check(1e-9).metric_checked(), Some(false));
    }

    #[test]
    fn malformed_matrices_are_rejected() {
        let asym = DistanceMatrix::from_full(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(asym, Err(Error::Asymmetric { i: 1, j: 0, .. })));
        let diag = DistanceMatrix::from_full(&[vec![0.5, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(diag, Err(Error::NonZeroDiagonal { i: 0, .. })));
        let neg = DistanceMatrix::from_full(&[vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert!(matches!(neg, Err(Error::InvalidDistance { i: 1, j: 0, .. })));
        let short = DistanceMatrix::from_lower_triangle(3, vec![1.0, 2.0]);
        assert!(matches!(short, Err(Error::Format(_))));
    }

    #[test]
    fn cohesion_examples() {
        let d = line(&[0.0, 1.0, 10.0]);
        assert_eq!(cohesion(Cohesion::Diam, &[2], &d).unwrap(), 0.0);
        assert_eq!(cohesion(Cohesion::Avg, &[0, 1, 2], &d).unwrap(), 20.0 / 3.0);
        assert_eq!(cohesion(Cohesion::Radius, &[0, 1, 2], &d).unwrap(), 9.0);
        assert_eq!(cohesion(Cohesion::Avg, &[1], &d).unwrap(), 0.0);
        assert_eq!(cohesion(Cohesion::Radius, &[1], &d).unwrap(), 0.0);
        assert!(matches!(cohesion(Cohesion::Diam, &[], &d), Err(Error::Precondition(_))));
    }

    #[test]
    fn clustering_score_examples() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        let singles = Clustering::singletons(4);
        for s in [
            ClusteringScore::MaxDiam,
            ClusteringScore::AvgDiam,
            ClusteringScore::MaxAvg,
            ClusteringScore::MaxRadius,
        ] {
            assert_eq!(clustering_score(s, &singles, &d).unwrap(), 0.0);
        }
        let pairs = Clustering::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(clustering_score(ClusteringScore::MaxDiam, &pairs, &d).unwrap(), 1.0);
        assert_eq!(clustering_score(ClusteringScore::AvgDiam, &pairs, &d).unwrap(), 1.0);
        let lopsided = Clustering::new(4, vec![vec![0, 1, 2], vec![3]]).unwrap();
        assert_eq!(clustering_score(ClusteringScore::AvgDiam, &lopsided, &d).unwrap(), 5.0);
        assert_eq!(clustering_score(ClusteringScore::MaxDiam, &lopsided, &d).unwrap(), 10.0);
    }

    #[test]
    fn invalid_partitions_are_structural_errors() {
        assert!(matches!(Clustering::new(3, vec![vec![0, 1], vec![1, 2]]), Err(Error::Structural(_))));
        assert!(matches!(Clustering::new(3, vec![vec![0, 1]]), Err(Error::Structural(_))));
        assert!(matches!(Clustering::new(2, vec![vec![0, 1], vec![]]), Err(Error::Structural(_))));
        let d = line(&[0.0, 1.0, 2.0]);
        let wrong_n = Clustering::singletons(2);
        assert!(clustering_score(ClusteringScore::MaxDiam, &wrong_n, &d).is_err());
    }

    #[test]
    fn instance_file_rejects_wrong_triangle_length() {
        let err = InstanceFile::parse(r#"{"n": 3, "dist": [1.0, 2.0]}"#).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let ok = InstanceFile::parse(r#"{"n": 3, "dist": [1.0, 2.0, 1.5]}"#).unwrap();
        let d = ok.to_matrix().unwrap();
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(2, 1), 1.5);
        assert!(InstanceFile::parse(r#"{"n": 2, "dist": [1.0], "extra": 1}"#).is_err());
    }
}

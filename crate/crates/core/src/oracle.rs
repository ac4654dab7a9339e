//! Exhaustive optimum oracles for max-diam and avg-diam.
//!
//! Partitions are enumerated as restricted-growth strings in lexicographic
//! order, so witnesses are reproducible: the witness is the first partition in
//! that order attaining the minimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::metric::{Clustering, ClusteringScore, DistanceMatrix};

/// Largest `n` enumerated unless the caller raises the guard.
pub const DEFAULT_N_MAX: usize = 14;

/// Largest `n` accepted by [`threshold_opt_dm`].
pub const THRESHOLD_N_MAX: usize = 16;

fn guard(n: usize, k: usize, n_max: usize) -> Result<()> {
    if k == 0 || k > n {
        return precondition(format!("k = {k} outside 1..={n}"));
    }
    if n > n_max {
        return Err(Error::ResourceGuard { n, n_max });
    }
    Ok(())
}

/// Iterator over all partitions of `0..n` into exactly `k` blocks, as
/// restricted-growth strings (`rgs[i]` is the block of point `i`).
#[derive(Clone, Debug)]
pub struct KPartitions {
    n: usize,
    k: usize,
    next: Option<Vec<usize>>,
}

impl KPartitions {
    pub fn new(n: usize, k: usize, n_max: usize) -> Result<Self> {
        guard(n, k, n_max)?;
        // Lexicographically first: zeros, then 1..k-1 at the tail.
        let mut first = vec![0; n];
        for (j, slot) in first[n - k + 1..].iter_mut().enumerate() {
            *slot = j + 1;
        }
        Ok(Self { n, k, next: Some(first) })
    }

    fn successor(&self, rgs: &[usize]) -> Option<Vec<usize>> {
        let (n, k) = (self.n, self.k);
        let mut prefix_max = vec![0; n];
        let mut m = 0;
        for i in 0..n {
            m = m.max(rgs[i]);
            prefix_max[i] = m;
        }
        for i in (1..n).rev() {
            let cap = (prefix_max[i - 1] + 1).min(k - 1);
            if rgs[i] >= cap {
                continue;
            }
            let value = rgs[i] + 1;
            let used = prefix_max[i - 1].max(value) + 1;
            let remaining = n - i - 1;
            if used + remaining < k {
                continue;
            }
            let mut out = rgs[..i].to_vec();
            out.push(value);
            // Minimal completion: zeros, then the missing labels in order.
            let missing = k - used;
            out.extend(std::iter::repeat_n(0, remaining - missing));
            out.extend(used..k);
            return Some(out);
        }
        None
    }
}

impl Iterator for KPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        self.next = self.successor(&current);
        Some(current)
    }
}

/// Partitions of `0..n` into exactly `k` blocks, guarded by `n_max`.
pub fn partitions_into_k(n: usize, k: usize, n_max: usize) -> Result<KPartitions> {
    KPartitions::new(n, k, n_max)
}

/// Stirling number of the second kind, saturating.
pub fn stirling2(n: usize, k: usize) -> u128 {
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] = row[j - 1].saturating_add((j as u128).saturating_mul(row[j]));
        }
        row[0] = 0;
    }
    row[k]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub witness: Clustering,
    pub enumerated: u64,
}

/// Both optima from a single enumeration pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBoth {
    pub opt_dm: OracleResult,
    pub opt_av: OracleResult,
}

#[derive(Clone)]
struct Best {
    value: f64,
    rgs: Vec<usize>,
}

struct Search<'a> {
    n: usize,
    k: usize,
    d: &'a [f64],
    rgs: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    diams: Vec<f64>,
    dm: Option<Best>,
    av: Option<Best>,
    enumerated: u64,
}

impl<'a> Search<'a> {
    fn new(n: usize, k: usize, d: &'a [f64]) -> Self {
        Self {
            n,
            k,
            d,
            rgs: Vec::with_capacity(n),
            blocks: vec![Vec::new(); k],
            diams: vec![0.0; k],
            dm: None,
            av: None,
            enumerated: 0,
        }
    }

    fn push(&mut self, p: usize, b: usize) -> f64 {
        let saved = self.diams[b];
        let row = &self.d[p * self.n..(p + 1) * self.n];
        let grown = self.blocks[b].iter().fold(saved, |m, &q| m.max(row[q]));
        self.diams[b] = grown;
        self.blocks[b].push(p);
        self.rgs.push(b);
        saved
    }

    fn pop(&mut self, b: usize, saved: f64) {
        self.blocks[b].pop();
        self.rgs.pop();
        self.diams[b] = saved;
    }

    fn leaf(&mut self) {
        self.enumerated += 1;
        let max = self.diams.iter().copied().fold(0.0, f64::max);
        let sum: f64 = self.diams.iter().sum();
        let avg = sum / self.k as f64;
        if self.dm.as_ref().is_none_or(|b| max < b.value) {
            self.dm = Some(Best { value: max, rgs: self.rgs.clone() });
        }
        if self.av.as_ref().is_none_or(|b| avg < b.value) {
            self.av = Some(Best { value: avg, rgs: self.rgs.clone() });
        }
    }

    fn descend(&mut self, p: usize, used: usize) {
        if p == self.n {
            if used == self.k {
                self.leaf();
            }
            return;
        }
        if used + (self.n - p) < self.k {
            return;
        }
        let cap = (used + 1).min(self.k);
        for b in 0..cap {
            let saved = self.push(p, b);
            self.descend(p + 1, used.max(b + 1));
            self.pop(b, saved);
        }
    }
}

fn rgs_clustering(rgs: &[usize]) -> Result<Clustering> {
    Clustering::from_labels(rgs)
}

// Prefix length for splitting enumeration across rayon workers.
const SPLIT_DEPTH: usize = 5;

fn prefixes(n: usize, k: usize) -> Vec<(Vec<usize>, usize)> {
    let depth = SPLIT_DEPTH.min(n);
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), 0usize)];
    // Depth-first with ascending labels keeps prefixes in lexicographic order.
    while let Some((prefix, used)) = stack.pop() {
        if used + (n - prefix.len()) < k {
            continue;
        }
        if prefix.len() == depth {
            out.push((prefix, used));
            continue;
        }
        let cap = (used + 1).min(k);
        for b in (0..cap).rev() {
            let mut next = prefix.clone();
            next.push(b);
            stack.push((next, used.max(b + 1)));
        }
    }
    out
}

/// OPT_DM(k) and OPT_AV(k) from one exhaustive pass.
pub fn opt_both(d: &DistanceMatrix, k: usize, n_max: usize) -> Result<OracleBoth> {
    let n = d.n();
    guard(n, k, n_max)?;
    let dense = d.to_dense();
    let runs: Vec<Search> = prefixes(n, k)
        .into_par_iter()
        .map(|(prefix, used)| {
            let mut s = Search::new(n, k, &dense);
            for (p, &b) in prefix.iter().enumerate() {
                s.push(p, b);
            }
            s.descend(prefix.len(), used);
            s
        })
        .collect();
    let enumerated: u64 = runs.iter().map(|s| s.enumerated).sum();
    let pick = |get: &dyn Fn(&Search) -> Option<Best>| -> Result<(f64, Vec<usize>)> {
        let mut best: Option<Best> = None;
        for run in &runs {
            if let Some(b) = get(run) {
                if best.as_ref().is_none_or(|cur| b.value < cur.value) {
                    best = Some(b);
                }
            }
        }
        best.map(|b| (b.value, b.rgs))
            .ok_or_else(|| Error::Internal("enumeration produced no partition".into()))
    };
    let (dm_value, dm_rgs) = pick(&|s| s.dm.clone())?;
    let (av_value, av_rgs) = pick(&|s| s.av.clone())?;
    Ok(OracleBoth {
        opt_dm: OracleResult { value: dm_value, witness: rgs_clustering(&dm_rgs)?, enumerated },
        opt_av: OracleResult { value: av_value, witness: rgs_clustering(&av_rgs)?, enumerated },
    })
}

/// Minimum of `score` over all k-clusterings of `d`.
pub fn opt_score(
    score: ClusteringScore,
    d: &DistanceMatrix,
    k: usize,
    n_max: usize,
) -> Result<OracleResult> {
    match score {
        ClusteringScore::MaxDiam => Ok(opt_both(d, k, n_max)?.opt_dm),
        ClusteringScore::AvgDiam => Ok(opt_both(d, k, n_max)?.opt_av),
        other => precondition(format!("no oracle for score {other}")),
    }
}

/// OPT_DM(k) via thresholds: the smallest distance `t` such that the graph
/// with edges `d <= t` splits into at most `k` cliques.
pub fn threshold_opt_dm(d: &DistanceMatrix, k: usize) -> Result<f64> {
    let n = d.n();
    guard(n, k, THRESHOLD_N_MAX)?;
    let mut candidates: Vec<f64> = d.lower_triangle().to_vec();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let full = (1usize << n) - 1;
    for t in candidates {
        let mut adjacent = vec![0usize; n];
        for (i, adj) in adjacent.iter_mut().enumerate() {
            for j in 0..n {
                if i != j && d.get(i, j) <= t {
                    *adj |= 1 << j;
                }
            }
        }
        let mut clique = vec![false; full + 1];
        clique[0] = true;
        for mask in 1..=full {
            let low = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            clique[mask] = clique[rest] && (adjacent[low] & rest) == rest;
        }
        // cover[mask]: fewest cliques partitioning mask; the block holding
        // the lowest point is chosen first.
        let mut cover = vec![usize::MAX; full + 1];
        cover[0] = 0;
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            let mut sub = rest;
            loop {
                let block = sub | low;
                if clique[block] {
                    let prev = cover[mask ^ block];
                    if prev != usize::MAX {
                        cover[mask] = cover[mask].min(prev + 1);
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        if cover[full] <= k {
            return Ok(t);
        }
    }
    Err(Error::Internal("no threshold admits a clique cover".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(coords: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_line(coords).unwrap()
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partitions_into_k(3, 2, DEFAULT_N_MAX).unwrap().count(), 3);
        assert_eq!(partitions_into_k(4, 2, DEFAULT_N_MAX).unwrap().count(), 7);
        assert_eq!(partitions_into_k(5, 5, DEFAULT_N_MAX).unwrap().count(), 1);
        assert_eq!(partitions_into_k(1, 1, DEFAULT_N_MAX).unwrap().count(), 1);
        for n in 1..=9 {
            for k in 1..=n {
                let parts: Vec<_> = partitions_into_k(n, k, DEFAULT_N_MAX).unwrap().collect();
                assert_eq!(parts.len() as u128, stirling2(n, k), "S({n},{k})");
                assert!(parts.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(4, 2), 7);
        let s12: Vec<u128> = (2..=6).map(|k| stirling2(12, k)).collect();
        assert_eq!(s12, vec![2047, 86526, 611501, 1379400, 1323652]);
    }

    #[test]
    fn guard_and_range_errors() {
        assert!(matches!(
            partitions_into_k(15, 3, DEFAULT_N_MAX),
            Err(Error::ResourceGuard { n: 15, n_max: 14 })
        ));
        assert!(partitions_into_k(15, 3, 15).is_ok());
        assert!(matches!(partitions_into_k(3, 4, 14), Err(Error::Precondition(_))));
        assert!(matches!(partitions_into_k(3, 0, 14), Err(Error::Precondition(_))));
    }

    #[test]
    fn line_optima() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        let both = opt_both(&d, 2, DEFAULT_N_MAX).unwrap();
        assert_eq!(both.opt_dm.value, 1.0);
        assert_eq!(both.opt_dm.witness.blocks(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(both.opt_av.value, 1.0);
        assert_eq!(both.opt_dm.enumerated, 7);
        assert_eq!(opt_score(ClusteringScore::MaxDiam, &d, 4, 14).unwrap().value, 0.0);
        assert_eq!(threshold_opt_dm(&d, 2).unwrap(), 1.0);
        assert_eq!(threshold_opt_dm(&d, 4).unwrap(), 0.0);
        assert_eq!(threshold_opt_dm(&d, 1).unwrap(), 11.0);
    }

    #[test]
    fn search_matches_iterator_order() {
        let d = DistanceMatrix::from_fn(7, |i, j| ((i * 7 + j * 3) % 5) as f64 + 1.0).unwrap();
        for k in 1..=7 {
            let mut best_dm: Option<(f64, Vec<usize>)> = None;
            for rgs in partitions_into_k(7, k, 14).unwrap() {
                let c = Clustering::from_labels(&rgs).unwrap();
                let v = crate::metric::clustering_score(ClusteringScore::MaxDiam, &c, &d).unwrap();
                if best_dm.as_ref().is_none_or(|(b, _)| v < *b) {
                    best_dm = Some((v, rgs));
                }
            }
            let (v, rgs) = best_dm.unwrap();
            let both = opt_both(&d, k, 14).unwrap();
            assert_eq!(both.opt_dm.value, v);
            assert_eq!(both.opt_dm.witness, Clustering::from_labels(&rgs).unwrap());
        }
    }
}

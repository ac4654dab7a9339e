//! Instance generators: the single-linkage adversary, uniform Euclidean point
//! sets and shortest-path closures of random weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::metric::{validate_metric, Clustering, DistanceMatrix, DEFAULT_METRIC_TOLERANCE};

/// The adversarial instance for single linkage, with its planted target.
///
/// Point order: `a = 0`, `b = 1`, `x_2..x_{k-1} = 2..k-1`,
/// `y_1..y_{k-1} = k..2k-2`.
#[derive(Clone, Debug)]
pub struct AdversaryInstance {
    pub k: usize,
    pub b: f64,
    pub eps: f64,
    pub d: DistanceMatrix,
    pub target: Clustering,
    /// Distance from the `y` group to every other point.
    pub d_out: f64,
}

impl AdversaryInstance {
    /// `max(B, (k-2)(B-eps))`: diameter of `{a, b, x_2..x_{k-1}}`.
    pub fn big_block_diameter(&self) -> f64 {
        self.b.max((self.k as f64 - 2.0) * (self.b - self.eps))
    }

    /// `(2B + eps) / k`.
    pub fn target_avg_diam(&self) -> f64 {
        (2.0 * self.b + self.eps) / self.k as f64
    }

    /// `k * max(B, (k-2)(B-eps)) / (2B + eps)`.
    pub fn expected_ratio(&self) -> f64 {
        self.big_block_diameter() / self.target_avg_diam()
    }

    pub fn sidecar(&self) -> AdversarySidecar {
        AdversarySidecar {
            k: self.k,
            b: self.b,
            eps: self.eps,
            d_out: self.d_out,
            target: self.target.blocks().to_vec(),
        }
    }
}

/// Metadata written next to a generated adversary instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarySidecar {
    pub k: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub eps: f64,
    pub d_out: f64,
    pub target: Vec<Vec<usize>>,
}

fn adversary_with(k: usize, b: f64, eps: f64, d_out: f64) -> Result<AdversaryInstance> {
    if k < 3 {
        return precondition(format!("the adversary needs k >= 3, got {k}"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return precondition(format!("B must be positive and finite, got {b}"));
    }
    if !(eps > 0.0 && eps < b / 2.0) {
        return precondition(format!("eps must lie in (0, B/2), got {eps}"));
    }
    let n = 2 * k - 1;
    let step = b - eps;
    // Position of each non-y point along the x chain; a and b both sit at 1.
    let chain = |p: usize| if p < 2 { 1.0 } else { p as f64 };
    let is_y = |p: usize| p >= k;
    let d = DistanceMatrix::from_fn(n, |i, j| {
        let (lo, hi) = (i.min(j), i.max(j));
        match (is_y(lo), is_y(hi)) {
            (true, true) => b + eps,
            (false, true) | (true, false) => d_out,
            (false, false) if hi < 2 => b,
            (false, false) => (chain(hi) - chain(lo)) * step,
        }
    })?;
    let mut blocks = vec![vec![0, 1]];
    blocks.extend((2..k).map(|x| vec![x]));
    blocks.push((k..n).collect());
    let target = Clustering::new(n, blocks)?;
    Ok(AdversaryInstance { k, b, eps, d, target, d_out })
}

/// The adversary with `d_out` raised until the triangle inequality holds.
pub fn gen_single_link_adversary(k: usize, b: f64, eps: f64) -> Result<AdversaryInstance> {
    let half_span = ((k as f64 - 2.0) * (b - eps) / 2.0).ceil() + eps;
    let inst = adversary_with(k, b, eps, (2.0 * b).max(half_span))?;
    let violations = validate_metric(&inst.d, DEFAULT_METRIC_TOLERANCE);
    if !violations.is_empty() {
        return Err(Error::Internal(format!(
            "adversary with k = {k} violates the triangle inequality at {:?}",
            violations[0]
        )));
    }
    Ok(AdversaryInstance { d: inst.d.clone().with_metric_check(DEFAULT_METRIC_TOLERANCE), ..inst })
}

/// The adversary with `d_out = 2B` exactly; not a metric once `(k-2)(B-eps) > 4B`.
pub fn gen_literal_adversary(k: usize, b: f64, eps: f64) -> Result<AdversaryInstance> {
    adversary_with(k, b, eps, 2.0 * b)
}

/// `n` points uniform in the unit cube of dimension `dim`, Euclidean distances.
pub fn gen_random_euclidean(n: usize, dim: usize, seed: u64) -> Result<DistanceMatrix> {
    if n < 2 || dim < 1 {
        return precondition(format!("need n >= 2 and dim >= 1, got n = {n}, dim = {dim}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<f64>> =
        (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    DistanceMatrix::from_fn(n, |i, j| {
        coords[i].iter().zip(&coords[j]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    })
}

/// All-pairs shortest paths over `d`, repeated until no entry shrinks.
pub fn shortest_path_closure(d: &DistanceMatrix) -> Result<DistanceMatrix> {
    let n = d.n();
    let mut m = d.to_dense();
    loop {
        let mut changed = false;
        for via in 0..n {
            for i in 0..n {
                let di = m[i * n + via];
                for j in 0..n {
                    let through = di + m[via * n + j];
                    if through < m[i * n + j] {
                        m[i * n + j] = through;
                        changed = true;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                let low = m[i * n + j].min(m[j * n + i]);
                m[i * n + j] = low;
                m[j * n + i] = low;
            }
        }
        if !changed {
            break;
        }
    }
    DistanceMatrix::from_fn(n, |i, j| m[i * n + j])
}

/// Symmetric weights uniform in `(0, 1]`, closed under shortest paths.
pub fn gen_random_metric(n: usize, seed: u64) -> Result<DistanceMatrix> {
    if n < 2 {
        return precondition(format!("need n >= 2, got {n}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DistanceMatrix::from_fn(n, |_, _| 1.0 - rng.gen::<f64>())?;
    shortest_path_closure(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::{extract_clustering, run_linkage, LinkageMethod};
    use crate::metric::{clustering_score, ClusteringScore};

    #[test]
    fn adversary_k3() {
        let inst = gen_single_link_adversary(3, 100.0, 1.0).unwrap();
        assert_eq!(inst.d.n(), 5);
        let dg = run_linkage(&LinkageMethod::Single, &inst.d).unwrap();
        let c = extract_clustering(&dg, 3).unwrap();
        assert_eq!(c.blocks(), &[vec![0, 1, 2], vec![3], vec![4]]);
        assert_eq!(clustering_score(ClusteringScore::MaxDiam, &c, &inst.d).unwrap(), 100.0);
        assert_eq!(clustering_score(ClusteringScore::AvgDiam, &inst.target, &inst.d).unwrap(), 67.0);
    }

    #[test]
    fn adversary_k5() {
        let inst = gen_single_link_adversary(5, 100.0, 1.0).unwrap();
        let dg = run_linkage(&LinkageMethod::Single, &inst.d).unwrap();
        assert!(dg.merges()[..4].iter().all(|m| m.value == 99.0));
        let c = extract_clustering(&dg, 5).unwrap();
        assert_eq!(clustering_score(ClusteringScore::MaxDiam, &c, &inst.d).unwrap(), 297.0);
        let avg = clustering_score(ClusteringScore::AvgDiam, &inst.target, &inst.d).unwrap();
        assert!((avg - 40.2).abs() < 1e-12);
        assert!((297.0 / avg - 7.388_059_701_492_537).abs() < 1e-9);
    }

    #[test]
    fn literal_adversary_is_not_metric() {
        let inst = gen_literal_adversary(8, 100.0, 1.0).unwrap();
        let v = validate_metric(&inst.d, DEFAULT_METRIC_TOLERANCE);
        // x_2 = point 2, x_7 = point 7, routed through any y (points 8..14).
        assert!(v.contains(&(2, 8, 7)));
        assert!(gen_single_link_adversary(8, 100.0, 1.0).unwrap().d.metric_checked() == Some(true));
    }

    #[test]
    fn adversary_parameter_ranges() {
        assert!(matches!(gen_single_link_adversary(2, 100.0, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(gen_single_link_adversary(4, 100.0, 50.0), Err(Error::Precondition(_))));
        assert!(matches!(gen_single_link_adversary(4, 100.0, 0.0), Err(Error::Precondition(_))));
        assert!(matches!(gen_single_link_adversary(4, -1.0, 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn closure_examples() {
        let raw = DistanceMatrix::from_full(&[
            vec![0.0, 1.0, 10.0],
            vec![1.0, 0.0, 1.0],
            vec![10.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(shortest_path_closure(&raw).unwrap().get(0, 2), 2.0);
        let m = gen_random_metric(12, 9).unwrap();
        assert!(validate_metric(&m, 0.0).is_empty());
        assert_eq!(m, gen_random_metric(12, 9).unwrap());
    }

    #[test]
    fn euclidean_is_deterministic() {
        let a = gen_random_euclidean(12, 2, 7).unwrap();
        assert_eq!(a, gen_random_euclidean(12, 2, 7).unwrap());
        assert_ne!(a, gen_random_euclidean(12, 2, 8).unwrap());
        assert!(validate_metric(&a, 1e-12).is_empty());
        assert!(gen_random_euclidean(2, 3, 1).unwrap().get(0, 1) > 0.0);
    }
}

//! The family-forest certificate.
//!
//! Clusters of a dendrogram replay are grouped into families organised in a
//! forest. At the start of every iteration some root family holds two or more
//! clusters, and every such family has diameter at most
//! `phi_sigma * phi^(log2(3) - 1)`, which in turn is at most
//! `k^log2(3) * avg-diam(target)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::Dendrogram;
use crate::metric::{
    clustering_score_unchecked, cohesion_unchecked, diam_unchecked, Clustering, ClusteringScore,
    Cohesion, DistanceMatrix,
};
use crate::tolerance::within;

/// `log2(3)`, computed from natural logarithms.
pub fn log2_3() -> f64 {
    3f64.ln() / 2f64.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alg1Case {
    /// `|F'| = 1` and `|F| > 1`: two new families.
    #[serde(rename = "a")]
    A,
    /// Both families are singletons.
    #[serde(rename = "b-sub1")]
    BSingletons,
    /// Both clusters come from the same family.
    #[serde(rename = "b-sub2")]
    BSameFamily,
    /// Two distinct families, the smaller one regular.
    #[serde(rename = "b-sub3")]
    BDistinct,
}

impl fmt::Display for Alg1Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alg1Case::A => "a",
            Alg1Case::BSingletons => "b-sub1",
            Alg1Case::BSameFamily => "b-sub2",
            Alg1Case::BDistinct => "b-sub3",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyNode {
    pub id: usize,
    /// Cluster ids held at creation.
    pub clusters: Vec<usize>,
    pub points: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub phi: usize,
    pub phi_sigma: f64,
    pub diam: f64,
}

impl FamilyNode {
    pub fn regular(&self) -> bool {
        self.clusters.len() > 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSummary {
    pub id: usize,
    pub size: usize,
    pub phi: usize,
    pub phi_sigma: f64,
    pub diam: f64,
    pub regular: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alg1Assertions {
    /// Some root family is regular.
    pub p3: bool,
    /// Every regular root satisfies the diameter-expansion chain.
    pub p4: bool,
    /// Families created by this iteration's merge have additive phi and phi_sigma.
    pub additivity: bool,
}

impl Alg1Assertions {
    pub fn all(&self) -> bool {
        self.p3 && self.p4 && self.additivity
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Iteration {
    pub iteration: usize,
    pub case: Alg1Case,
    /// Roots at the start of the iteration.
    pub roots: Vec<RootSummary>,
    pub assertions: Alg1Assertions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Trace {
    pub k: usize,
    pub target: Clustering,
    pub target_avg_diam: f64,
    pub iterations: Vec<Alg1Iteration>,
    pub final_roots: Vec<RootSummary>,
    pub final_p4: bool,
    pub forest: Vec<FamilyNode>,
}

impl Alg1Trace {
    pub fn passed(&self) -> usize {
        self.iterations.iter().filter(|it| it.assertions.all()).count()
    }

    pub fn failed(&self) -> usize {
        self.iterations.len() - self.passed()
    }

    pub fn ok(&self) -> bool {
        self.failed() == 0 && self.final_p4
    }
}

pub(crate) fn check_target(dg: &Dendrogram, target: &Clustering) -> Result<()> {
    if dg.n() != target.n() {
        return Err(Error::Structural(format!(
            "target covers {} points but the dendrogram has {}",
            target.n(),
            dg.n()
        )));
    }
    Ok(())
}

struct Forest<'a> {
    d: &'a DistanceMatrix,
    members: Vec<Vec<usize>>,
    nodes: Vec<FamilyNode>,
    root_of: Vec<usize>,
}

impl<'a> Forest<'a> {
    fn create(&mut self, clusters: Vec<usize>, children: &[usize]) -> usize {
        let id = self.nodes.len();
        let mut points: Vec<usize> =
            clusters.iter().flat_map(|&c| self.members[c].iter().copied()).collect();
        points.sort_unstable();
        let diam = diam_unchecked(&points, self.d);
        for &c in children {
            self.nodes[c].parent = Some(id);
        }
        let (phi, phi_sigma) = if children.is_empty() {
            (1, diam)
        } else {
            self.leaf_totals(children)
        };
        for &c in &clusters {
            self.root_of[c] = id;
        }
        self.nodes.push(FamilyNode {
            id,
            clusters,
            points,
            parent: None,
            children: children.to_vec(),
            phi,
            phi_sigma,
            diam,
        });
        id
    }

    // Counts leaves by walking the subtree, independently of stored phi values.
    fn leaf_totals(&self, roots: &[usize]) -> (usize, f64) {
        let mut stack = roots.to_vec();
        let (mut phi, mut sigma) = (0, 0.0);
        while let Some(v) = stack.pop() {
            let node = &self.nodes[v];
            if node.children.is_empty() {
                phi += 1;
                sigma += node.diam;
            } else {
                stack.extend(&node.children);
            }
        }
        (phi, sigma)
    }

    fn roots(&self) -> Vec<RootSummary> {
        self.nodes
            .iter()
            .filter(|f| f.parent.is_none())
            .map(|f| RootSummary {
                id: f.id,
                size: f.clusters.len(),
                phi: f.phi,
                phi_sigma: f.phi_sigma,
                diam: f.diam,
                regular: f.regular(),
            })
            .collect()
    }
}

fn p4_holds(roots: &[RootSummary], cap: f64) -> bool {
    let p = log2_3() - 1.0;
    roots.iter().filter(|r| r.regular).all(|r| {
        let middle = r.phi_sigma * (r.phi as f64).powf(p);
        within(r.diam, middle) && within(middle, cap)
    })
}

/// Replays the first `n - k` merges of `dg` and builds the family forest,
/// recording the per-iteration assertions.
pub fn alg1_trace(d: &DistanceMatrix, dg: &Dendrogram, target: &Clustering) -> Result<Alg1Trace> {
    check_target(dg, target)?;
    if d.n() != dg.n() {
        return Err(Error::Structural("dendrogram and matrix sizes differ".into()));
    }
    let n = dg.n();
    let k = target.k();
    let target_avg_diam = clustering_score_unchecked(ClusteringScore::AvgDiam, target.blocks(), d);
    let cap = (k as f64).powf(log2_3()) * target_avg_diam;
    let mut forest = Forest {
        d,
        members: dg.cluster_members(),
        nodes: Vec::new(),
        root_of: vec![usize::MAX; 2 * n - 1],
    };
    for block in target.blocks() {
        forest.create(block.clone(), &[]);
    }
    let mut iterations = Vec::with_capacity(n - k);
    for m in &dg.merges()[..n - k] {
        let roots = forest.roots();
        let p3 = roots.iter().any(|r| r.regular);
        let p4 = p4_holds(&roots, cap);
        let merged = m.result(n);
        let (mut g, mut g2) = (m.left, m.right);
        let (mut f, mut f2) = (forest.root_of[g], forest.root_of[g2]);
        if forest.nodes[f].clusters.len() < forest.nodes[f2].clusters.len() {
            std::mem::swap(&mut f, &mut f2);
            std::mem::swap(&mut g, &mut g2);
        }
        let (size, size2) = (forest.nodes[f].clusters.len(), forest.nodes[f2].clusters.len());
        let mut additivity = true;
        let case = if size2 == 1 && size > 1 {
            let rest: Vec<usize> =
                forest.nodes[f].clusters.iter().copied().filter(|&c| c != g).collect();
            let a = forest.create(rest, &[f]);
            let b = forest.create(vec![merged], &[f2]);
            for (new, old) in [(a, f), (b, f2)] {
                additivity &= forest.nodes[new].phi == forest.nodes[old].phi
                    && (forest.nodes[new].phi_sigma - forest.nodes[old].phi_sigma).abs()
                        <= 1e-9 * forest.nodes[old].phi_sigma.abs();
            }
            Alg1Case::A
        } else {
            let mut clusters: Vec<usize> = forest.nodes[f]
                .clusters
                .iter()
                .chain(if f == f2 { [].iter() } else { forest.nodes[f2].clusters.iter() })
                .copied()
                .filter(|&c| c != g && c != g2)
                .collect();
            clusters.push(merged);
            let children: Vec<usize> = if f == f2 { vec![f] } else { vec![f, f2] };
            let new = forest.create(clusters, &children);
            let phi_sum: usize = children.iter().map(|&c| forest.nodes[c].phi).sum();
            let sigma_sum: f64 = children.iter().map(|&c| forest.nodes[c].phi_sigma).sum();
            additivity = forest.nodes[new].phi == phi_sum
                && (forest.nodes[new].phi_sigma - sigma_sum).abs() <= 1e-9 * sigma_sum.abs();
            if f == f2 {
                Alg1Case::BSameFamily
            } else if size == 1 {
                Alg1Case::BSingletons
            } else {
                Alg1Case::BDistinct
            }
        };
        iterations.push(Alg1Iteration {
            iteration: m.iteration,
            case,
            roots,
            assertions: Alg1Assertions { p3, p4, additivity },
        });
    }
    let final_roots = forest.roots();
    let final_p4 = p4_holds(&final_roots, cap);
    Ok(Alg1Trace {
        k,
        target: target.clone(),
        target_avg_diam,
        iterations,
        final_roots,
        final_p4,
        forest: forest.nodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterBoundCheck {
    pub iteration: usize,
    pub cluster: usize,
    pub cost: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Bound {
    pub cost: Cohesion,
    /// `k^log2(3) * avg-diam(target)`.
    pub bound: f64,
    /// Same bound with the rounded exponent 1.59.
    pub bound_rounded: f64,
    pub max_cost: f64,
    pub checks: Vec<ClusterBoundCheck>,
}

impl Alg1Bound {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.holds).count()
    }
}

/// Checks `cost(cluster) <= k^log2(3) * avg-diam(target)` for every cluster
/// created within the first `n - k` merges.
pub fn alg1_bound(
    trace: &Alg1Trace,
    dg: &Dendrogram,
    d: &DistanceMatrix,
    cost: Cohesion,
) -> Result<Alg1Bound> {
    check_target(dg, &trace.target)?;
    let n = dg.n();
    let k = trace.k as f64;
    let bound = k.powf(log2_3()) * trace.target_avg_diam;
    let members = dg.cluster_members();
    let checks: Vec<ClusterBoundCheck> = dg.merges()[..n - trace.k]
        .iter()
        .map(|m| {
            let cluster = m.result(n);
            let value = cohesion_unchecked(cost, &members[cluster], d);
            ClusterBoundCheck { iteration: m.iteration, cluster, cost: value, holds: within(value, bound) }
        })
        .collect();
    Ok(Alg1Bound {
        cost,
        bound,
        bound_rounded: k.powf(1.59) * trace.target_avg_diam,
        max_cost: checks.iter().map(|c| c.cost).fold(0.0, f64::max),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::{run_linkage, LinkageMethod};

    fn line_setup() -> (DistanceMatrix, Dendrogram, Clustering) {
        let d = DistanceMatrix::from_line(&[0.0, 1.0, 10.0, 11.0]).unwrap();
        let dg = run_linkage(&LinkageMethod::Complete, &d).unwrap();
        let target = Clustering::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        (d, dg, target)
    }

    #[test]
    fn line_example() {
        let (d, dg, target) = line_setup();
        let trace = alg1_trace(&d, &dg, &target).unwrap();
        assert_eq!(trace.iterations.len(), 2);
        assert!(trace.iterations.iter().all(|it| it.case == Alg1Case::BSameFamily));
        assert!(trace.iterations.iter().all(|it| it.assertions.p3));
        let created = &trace.forest[2];
        assert_eq!(created.clusters, vec![4]);
        assert_eq!((created.phi, created.phi_sigma), (1, 1.0));
        assert!(trace.ok());
        let bound = alg1_bound(&trace, &dg, &d, Cohesion::Diam).unwrap();
        assert_eq!(bound.max_cost, 1.0);
        assert!((bound.bound - 3.0).abs() < 1e-12);
        assert_eq!(bound.failures(), 0);
    }

    #[test]
    fn k_equals_n_is_empty() {
        let (d, dg, _) = line_setup();
        let trace = alg1_trace(&d, &dg, &Clustering::singletons(4)).unwrap();
        assert!(trace.iterations.is_empty());
        assert!(trace.ok());
        assert!(alg1_bound(&trace, &dg, &d, Cohesion::Diam).unwrap().checks.is_empty());
    }

    #[test]
    fn case_a_splits_families() {
        // Target {0,1,2},{3}: CL merges (0,1) then (2,3) at 1; the second merge
        // pairs a regular family with a singleton one.
        let d = DistanceMatrix::from_line(&[0.0, 1.0, 10.0, 11.0]).unwrap();
        let dg = run_linkage(&LinkageMethod::Complete, &d).unwrap();
        let target = Clustering::new(4, vec![vec![0, 1, 2], vec![3]]).unwrap();
        let trace = alg1_trace(&d, &dg, &target).unwrap();
        let cases: Vec<Alg1Case> = trace.iterations.iter().map(|it| it.case).collect();
        assert_eq!(cases, vec![Alg1Case::BSameFamily, Alg1Case::A]);
        assert!(trace.ok());
    }

    #[test]
    fn mismatched_target_is_structural() {
        let (d, dg, _) = line_setup();
        let err = alg1_trace(&d, &dg, &Clustering::singletons(3)).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }
}

//! The pure-cluster graph certificate.
//!
//! Alongside a complete-linkage replay this maintains an exclusion set of
//! clusters, a graph of families joined by cross-family merges and a forest
//! recording which family replaced which. Each family created satisfies
//! `diam(F) <= max-diam(target) * phi(F)^alpha_k`, which bounds every cluster
//! by `max-diam(target) * k^alpha_k`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::family::check_target;
use crate::linkage::Dendrogram;
use crate::metric::{
    clustering_score_unchecked, diam_unchecked, Clustering, ClusteringScore, DistanceMatrix,
};
use crate::tolerance::within;

/// The exponent `alpha_k` and the factor `k^alpha_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaK {
    pub k: usize,
    pub exponent: f64,
    pub factor: f64,
}

/// `log(6) / log(4)`.
pub fn alpha_sup_value() -> f64 {
    6f64.ln() / 4f64.ln()
}

/// `alpha_k = log_k(2k - 2)` for `k <= 4`, `log_4(6)` beyond.
pub fn alpha_k(k: usize) -> Result<AlphaK> {
    if k < 2 {
        return precondition(format!("alpha_k needs k >= 2, got {k}"));
    }
    let kf = k as f64;
    Ok(if k <= 4 {
        let two_k_minus_2 = 2.0 * kf - 2.0;
        AlphaK { k, exponent: two_k_minus_2.ln() / kf.ln(), factor: two_k_minus_2 }
    } else {
        let exponent = alpha_sup_value();
        AlphaK { k, exponent, factor: kf.powf(exponent) }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alg2Case {
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdditionSite {
    /// Every family whose pure count fell from above one to one.
    EveryFamily,
    /// The single family picked when case (b) fires.
    CaseB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Alg2Event {
    /// A merge touching the exclusion set; the union joins it.
    Absorb { cluster: usize },
    Edge { a: usize, b: usize },
    TreeEdge { a: usize, b: usize, weight: f64 },
    Exclude { cluster: usize, family: usize, site: AdditionSite },
    CaseA { families: Vec<usize> },
    CaseB { families: Vec<usize> },
    CaseC { family: usize },
    FcCreated { family: usize, clusters: Vec<usize>, diam: f64, phi: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family2 {
    pub id: usize,
    pub clusters: Vec<usize>,
    pub points: Vec<usize>,
    pub diam: f64,
    pub phi: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub created_at: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub families: Vec<usize>,
    pub pure_counts: Vec<usize>,
}

/// Tree over the families of a component, built at `F_C` creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanningTreeCert {
    pub iteration: usize,
    pub families: Vec<usize>,
    /// Weights in creation order.
    pub edge_weights: Vec<f64>,
    /// Family diameters, ascending.
    pub dm: Vec<f64>,
    pub fc_diam: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanningTreeReport {
    pub holds: bool,
    /// `(i, i-th lightest weight, its DM bound)` for each failing rank.
    pub violations: Vec<(usize, f64, f64)>,
}

/// The `i`-th lightest edge weighs at most `DM_{max(1, i-1)}`, and the tree
/// has `|C| - 1` edges.
pub fn spanning_tree_check(cert: &SpanningTreeCert) -> SpanningTreeReport {
    let mut weights = cert.edge_weights.clone();
    weights.sort_by(f64::total_cmp);
    let mut violations = Vec::new();
    for (idx, &w) in weights.iter().enumerate() {
        let i = idx + 1;
        let rank = if i == 1 { 1 } else { i - 1 };
        match cert.dm.get(rank - 1) {
            Some(&dm) if within(w, dm) => {}
            Some(&dm) => violations.push((i, w, dm)),
            None => violations.push((i, w, f64::NAN)),
        }
    }
    let shape = weights.len() + 1 == cert.families.len() && cert.dm.len() == cert.families.len();
    SpanningTreeReport { holds: shape && violations.is_empty(), violations }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcDiameterReport {
    pub diam: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `diam(F_C) <= sum_{i<=|C|} DM_i + sum_{i<=|C|-2} DM_i`.
pub fn fc_diameter_check(cert: &SpanningTreeCert, fc_diam: f64) -> FcDiameterReport {
    let c = cert.dm.len();
    let bound: f64 =
        cert.dm.iter().sum::<f64>() + cert.dm[..c.saturating_sub(2)].iter().sum::<f64>();
    FcDiameterReport { diam: fc_diam, bound, slack: bound - fc_diam, holds: within(fc_diam, bound) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alg2Assertions {
    /// Components keep two pure clusters (one family) or two families with two each.
    pub l1: bool,
    pub clusters_structure: bool,
    pub l_bound: bool,
    pub families_evol: bool,
    pub exclusive_cases: bool,
    pub fc: bool,
    pub ls_addition: bool,
    pub spanning_tree: bool,
    pub sum_diam: bool,
    pub main_bound_f: bool,
}

impl Alg2Assertions {
    fn passing() -> Self {
        Self {
            l1: true,
            clusters_structure: true,
            l_bound: true,
            families_evol: true,
            exclusive_cases: true,
            fc: true,
            ls_addition: true,
            spanning_tree: true,
            sum_diam: true,
            main_bound_f: true,
        }
    }

    pub fn all(&self) -> bool {
        *self == Self::passing()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Iteration {
    pub iteration: usize,
    pub case: Option<Alg2Case>,
    /// Exclusion set size at the start of the iteration.
    pub exclusion_set_size: usize,
    /// Components at the start of the iteration.
    pub components: Vec<ComponentSummary>,
    /// Smallest diameter among families holding two or more pure clusters
    /// at the start of the iteration.
    pub min_two_pure_diam: Option<f64>,
    pub events: Vec<Alg2Event>,
    pub assertions: Alg2Assertions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Trace {
    pub k: usize,
    pub alpha: AlphaK,
    pub target: Clustering,
    pub target_max_diam: f64,
    pub iterations: Vec<Alg2Iteration>,
    pub families: Vec<Family2>,
    pub spanning_tree_certs: Vec<SpanningTreeCert>,
    /// Clusters sent to the exclusion set by the two addition sites.
    pub additions: usize,
    /// Target blocks with two or more points.
    pub multi_point_blocks: usize,
}

impl Alg2Trace {
    pub fn passed(&self) -> usize {
        self.iterations.iter().filter(|it| it.assertions.all()).count()
    }

    pub fn failed(&self) -> usize {
        self.iterations.len() - self.passed()
    }

    pub fn ok(&self) -> bool {
        self.failed() == 0
    }
}

struct State<'a> {
    d: &'a DistanceMatrix,
    members: Vec<Vec<usize>>,
    live: Vec<usize>,
    excluded: Vec<bool>,
    pure_of: Vec<Option<usize>>,
    families: Vec<Family2>,
    in_graph: Vec<bool>,
    component: Vec<usize>,
    tree_edges: BTreeMap<usize, Vec<f64>>,
    edges: BTreeSet<(usize, usize)>,
    point_family: Vec<Option<usize>>,
    added_by: Vec<Option<AdditionSite>>,
}

impl<'a> State<'a> {
    fn create_family(&mut self, clusters: Vec<usize>, children: &[usize], t: usize) -> usize {
        let id = self.families.len();
        let mut points: Vec<usize> =
            clusters.iter().flat_map(|&c| self.members[c].iter().copied()).collect();
        points.sort_unstable();
        let diam = diam_unchecked(&points, self.d);
        for &c in children {
            self.families[c].parent = Some(id);
        }
        let phi = if children.is_empty() { 1 } else { self.leaf_count(children) };
        for &p in &points {
            self.point_family[p] = Some(id);
        }
        for &c in &clusters {
            self.pure_of[c] = Some(id);
        }
        self.families.push(Family2 {
            id,
            clusters,
            points,
            diam,
            phi,
            parent: None,
            children: children.to_vec(),
            created_at: t,
        });
        self.in_graph.push(true);
        self.component.push(id);
        self.added_by.push(None);
        self.tree_edges.insert(id, Vec::new());
        id
    }

    fn leaf_count(&self, roots: &[usize]) -> usize {
        let mut stack = roots.to_vec();
        let mut leaves = 0;
        while let Some(v) = stack.pop() {
            let f = &self.families[v];
            if f.children.is_empty() {
                leaves += 1;
            } else {
                stack.extend(&f.children);
            }
        }
        leaves
    }

    fn pure_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.families.len()];
        for &c in &self.live {
            if let (Some(f), false) = (self.pure_of[c], self.excluded[c]) {
                counts[f] += 1;
            }
        }
        counts
    }

    fn components(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for f in 0..self.families.len() {
            if self.in_graph[f] {
                comps.entry(self.component[f]).or_default().push(f);
            }
        }
        comps
    }

    fn join(&mut self, x: usize, y: usize) {
        let (keep, drop) = (x.min(y), x.max(y));
        for f in 0..self.families.len() {
            if self.in_graph[f] && self.component[f] == drop {
                self.component[f] = keep;
            }
        }
        let moved = self.tree_edges.remove(&drop).unwrap_or_default();
        self.tree_edges.entry(keep).or_default().extend(moved);
    }

    fn touching(&self, cluster: usize) -> BTreeSet<usize> {
        self.members[cluster].iter().filter_map(|&p| self.point_family[p]).collect()
    }

    fn remove_family(&mut self, f: usize) {
        self.in_graph[f] = false;
        for &p in &self.families[f].points {
            if self.point_family[p] == Some(f) {
                self.point_family[p] = None;
            }
        }
    }

    fn clusters_structure_holds(&self, comps: &BTreeMap<usize, Vec<usize>>) -> bool {
        let comp_points: Vec<BTreeSet<usize>> = comps
            .values()
            .map(|fs| fs.iter().flat_map(|&f| self.families[f].points.iter().copied()).collect())
            .collect();
        self.live.iter().all(|&h| {
            let in_e = self.excluded[h];
            let pure_live = !in_e && self.pure_of[h].is_some_and(|f| self.in_graph[f]);
            let inside = !in_e
                && self.pure_of[h].is_none()
                && comp_points
                    .iter()
                    .any(|pts| self.members[h].iter().all(|p| pts.contains(p)));
            [in_e, pure_live, inside].iter().filter(|&&x| x).count() == 1
        })
    }
}

/// Replays the first `n - k` merges of `dg` and builds the graph certificate,
/// recording every per-iteration assertion.
pub fn alg2_trace(d: &DistanceMatrix, dg: &Dendrogram, target: &Clustering) -> Result<Alg2Trace> {
    check_target(dg, target)?;
    if d.n() != dg.n() {
        return Err(Error::Structural("dendrogram and matrix sizes differ".into()));
    }
    let n = dg.n();
    let k = target.k();
    let alpha = alpha_k(k)?;
    let target_max_diam = clustering_score_unchecked(ClusteringScore::MaxDiam, target.blocks(), d);
    let members = dg.cluster_members();
    let mut st = State {
        d,
        live: (0..n).collect(),
        excluded: vec![false; members.len()],
        pure_of: vec![None; members.len()],
        members,
        families: Vec::new(),
        in_graph: Vec::new(),
        component: Vec::new(),
        tree_edges: BTreeMap::new(),
        edges: BTreeSet::new(),
        point_family: vec![None; n],
        added_by: Vec::new(),
    };
    let mut multi_point_blocks = 0;
    for block in target.blocks() {
        if block.len() > 1 {
            multi_point_blocks += 1;
            st.create_family(block.clone(), &[], 0);
        } else {
            st.excluded[block[0]] = true;
        }
    }
    let mut additions = 0usize;
    let mut iterations = Vec::with_capacity(n - k);
    let mut certs = Vec::new();

    for m in &dg.merges()[..n - k] {
        let t = m.iteration;
        let mut ok = Alg2Assertions::passing();
        let mut events = Vec::new();

        // State at the start of the iteration.
        let pure_prev = st.pure_counts();
        let comps = st.components();
        ok.l1 = !comps.is_empty()
            && comps.values().all(|fs| {
                let rich = fs.iter().filter(|&&f| pure_prev[f] >= 2).count();
                if fs.len() == 1 {
                    rich == 1
                } else {
                    rich >= 2
                }
            });
        ok.clusters_structure = st.clusters_structure_holds(&comps);
        let exclusion_set_size = st.live.iter().filter(|&&c| st.excluded[c]).count();
        ok.l_bound = additions <= k && additions <= multi_point_blocks && exclusion_set_size <= k;
        let components: Vec<ComponentSummary> = comps
            .values()
            .map(|fs| ComponentSummary {
                families: fs.clone(),
                pure_counts: fs.iter().map(|&f| pure_prev[f]).collect(),
            })
            .collect();
        let min_two_pure_diam = (0..st.families.len())
            .filter(|&f| st.in_graph[f] && pure_prev[f] >= 2)
            .map(|f| st.families[f].diam)
            .reduce(f64::min);

        // The merge.
        let (g, g2, h) = (m.left, m.right, m.result(n));
        let (pg, pg2) = (st.pure_of[g], st.pure_of[g2]);
        let absorbed = st.excluded[g] || st.excluded[g2];
        if let (Some(f), Some(f2)) = (pg, pg2) {
            let rich = |f: usize| st.in_graph[f] && pure_prev[f] >= 2;
            if rich(f) && rich(f2) && absorbed {
                ok.families_evol = false;
            }
        }
        if absorbed {
            st.excluded[h] = true;
            events.push(Alg2Event::Absorb { cluster: h });
        } else {
            let left = st.touching(g);
            let right = st.touching(g2);
            let touched: BTreeSet<usize> = left.union(&right).copied().collect();
            let mut tree_edge = None;
            'outer: for &a in &touched {
                for &b in &touched {
                    if a < b && st.component[a] != st.component[b] {
                        tree_edge = Some((a, b));
                        break 'outer;
                    }
                }
            }
            if let Some((a, b)) = tree_edge {
                let weight = diam_unchecked(&st.members[h], d);
                let (ca, cb) = (st.component[a], st.component[b]);
                st.join(ca, cb);
                st.tree_edges.entry(st.component[a]).or_default().push(weight);
                events.push(Alg2Event::TreeEdge { a, b, weight });
            }
            for &a in &left {
                for &b in &right {
                    if a != b && st.edges.insert((a.min(b), a.max(b))) {
                        events.push(Alg2Event::Edge { a: a.min(b), b: a.max(b) });
                        let (ca, cb) = (st.component[a], st.component[b]);
                        if ca != cb {
                            st.join(ca, cb);
                        }
                    }
                }
            }
            st.pure_of[h] = match (pg, pg2) {
                (Some(f), Some(f2)) if f == f2 => Some(f),
                _ => None,
            };
        }
        st.live.retain(|&c| c != g && c != g2);
        st.live.push(h);

        let pure_now = st.pure_counts();
        let mut expected = pure_prev.clone();
        let live_pure = |p: Option<usize>| p.filter(|&f| st.in_graph[f]);
        match (live_pure(pg), live_pure(pg2)) {
            (Some(f), Some(f2)) if f == f2 => expected[f] -= 1,
            (Some(f), Some(f2)) => {
                expected[f] -= 1;
                expected[f2] -= 1;
            }
            (Some(f), None) | (None, Some(f)) => expected[f] -= 1,
            (None, None) => {}
        }
        for f in 0..st.families.len() {
            if st.in_graph[f] && expected[f] != pure_now[f] {
                ok.families_evol = false;
            }
        }

        // Case dispatch over the updated graph.
        let comps = st.components();
        let mut matches: Vec<(Alg2Case, usize)> = Vec::new();
        for (&label, fs) in &comps {
            let rich = fs.iter().filter(|&&f| pure_now[f] > 1).count();
            if fs.len() > 1 && rich == 1 {
                matches.push((Alg2Case::A, label));
            } else if fs.len() > 1 && rich == 0 {
                matches.push((Alg2Case::B, label));
            } else if fs.len() == 1 && rich == 0 {
                matches.push((Alg2Case::C, label));
            }
        }
        ok.exclusive_cases = matches.len() <= 1;
        let chosen = matches.first().copied();
        let case_b = chosen.filter(|(c, _)| *c == Alg2Case::B);

        let dropped = |f: usize| st.in_graph[f] && pure_prev[f] > 1 && pure_now[f] == 1;
        let mut exclude: Vec<(usize, AdditionSite)> = Vec::new();
        match case_b {
            None => {
                for f in 0..st.families.len() {
                    if dropped(f) {
                        exclude.push((f, AdditionSite::EveryFamily));
                    }
                }
            }
            Some((_, label)) => match comps[&label].iter().copied().find(|&f| dropped(f)) {
                Some(f) => exclude.push((f, AdditionSite::CaseB)),
                None => ok.fc = false,
            },
        }
        for (f, site) in exclude {
            let cluster = st
                .live
                .iter()
                .copied()
                .find(|&c| st.pure_of[c] == Some(f) && !st.excluded[c])
                .ok_or_else(|| Error::Internal(format!("family {f} lost its pure cluster")))?;
            st.excluded[cluster] = true;
            st.pure_of[cluster] = None;
            st.added_by[f] = Some(site);
            additions += 1;
            events.push(Alg2Event::Exclude { cluster, family: f, site });
        }

        if let Some((case, label)) = chosen {
            let fs = comps[&label].clone();
            match case {
                Alg2Case::A | Alg2Case::B => {
                    events.push(if case == Alg2Case::A {
                        Alg2Event::CaseA { families: fs.clone() }
                    } else {
                        Alg2Event::CaseB { families: fs.clone() }
                    });
                    if case == Alg2Case::B {
                        let twos = fs.iter().filter(|&&f| pure_prev[f] == 2).count();
                        let rest_small =
                            fs.iter().filter(|&&f| pure_prev[f] != 2).all(|&f| pure_prev[f] <= 1);
                        ok.fc &= twos == 2 && rest_small;
                    }
                    let every = fs
                        .iter()
                        .filter(|&&f| st.added_by[f] == Some(AdditionSite::EveryFamily))
                        .count();
                    let case_b_site =
                        fs.iter().filter(|&&f| st.added_by[f] == Some(AdditionSite::CaseB)).count();
                    let c = fs.len();
                    ok.ls_addition = if case == Alg2Case::A {
                        every == c - 1 && case_b_site == 0
                    } else {
                        every == c - 2 && case_b_site == 1
                    };

                    let pts: BTreeSet<usize> =
                        fs.iter().flat_map(|&f| st.families[f].points.iter().copied()).collect();
                    let fc_clusters: Vec<usize> = st
                        .live
                        .iter()
                        .copied()
                        .filter(|&c| !st.excluded[c] && st.members[c].iter().all(|p| pts.contains(p)))
                        .collect();
                    ok.fc &= fc_clusters.len() >= 2;
                    let mut dm: Vec<f64> = fs.iter().map(|&f| st.families[f].diam).collect();
                    dm.sort_by(f64::total_cmp);
                    let edge_weights = st.tree_edges.get(&label).cloned().unwrap_or_default();
                    let phi_sum: usize = fs.iter().map(|&f| st.families[f].phi).sum();
                    for &f in &fs {
                        st.remove_family(f);
                    }
                    let new = st.create_family(fc_clusters.clone(), &fs, t);
                    let (fc_diam, phi) = (st.families[new].diam, st.families[new].phi);
                    let cert = SpanningTreeCert {
                        iteration: t,
                        families: fs.clone(),
                        edge_weights,
                        dm,
                        fc_diam,
                    };
                    ok.spanning_tree = spanning_tree_check(&cert).holds;
                    ok.sum_diam = fc_diameter_check(&cert, fc_diam).holds;
                    ok.main_bound_f = phi == phi_sum
                        && within(fc_diam, target_max_diam * (phi as f64).powf(alpha.exponent));
                    certs.push(cert);
                    events.push(Alg2Event::FcCreated { family: new, clusters: fc_clusters, diam: fc_diam, phi });
                }
                Alg2Case::C => {
                    events.push(Alg2Event::CaseC { family: fs[0] });
                    st.remove_family(fs[0]);
                }
            }
        }

        iterations.push(Alg2Iteration {
            iteration: t,
            case: chosen.map(|(c, _)| c),
            exclusion_set_size,
            components,
            min_two_pure_diam,
            events,
            assertions: ok,
        });
    }

    Ok(Alg2Trace {
        k,
        alpha,
        target: target.clone(),
        target_max_diam,
        iterations,
        families: st.families,
        spanning_tree_certs: certs,
        additions,
        multi_point_blocks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2ClusterCheck {
    pub iteration: usize,
    pub cluster: usize,
    pub diam: f64,
    /// `diam(g ∪ g') <= max(diam g, diam g', diam F)` for the smallest
    /// family `F` with two pure clusters at the start of the iteration.
    pub chain: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2FamilyCheck {
    pub family: usize,
    pub diam: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Bound {
    pub alpha: AlphaK,
    /// `max-diam(target) * k^alpha_k`.
    pub bound: f64,
    /// `max-diam(target) * k^1.30` for `k > 4`, the exact bound otherwise.
    pub bound_rounded: f64,
    pub max_diam: f64,
    pub families: Vec<Alg2FamilyCheck>,
    pub clusters: Vec<Alg2ClusterCheck>,
}

impl Alg2Bound {
    pub fn failures(&self) -> usize {
        self.families.iter().filter(|f| !f.holds).count()
            + self.clusters.iter().filter(|c| !(c.holds && c.chain)).count()
    }
}

/// Checks the family bound at every creation and the cluster bound for every
/// cluster created within the first `n - k` merges.
pub fn alg2_bound(trace: &Alg2Trace, dg: &Dendrogram, d: &DistanceMatrix) -> Result<Alg2Bound> {
    check_target(dg, &trace.target)?;
    let n = dg.n();
    let opt = trace.target_max_diam;
    let bound = opt * trace.alpha.factor;
    let families = trace
        .families
        .iter()
        .map(|f| {
            let fb = opt * (f.phi as f64).powf(trace.alpha.exponent);
            Alg2FamilyCheck { family: f.id, diam: f.diam, bound: fb, holds: within(f.diam, fb) }
        })
        .collect();
    let members = dg.cluster_members();
    let clusters: Vec<Alg2ClusterCheck> = dg.merges()[..n - trace.k]
        .iter()
        .zip(&trace.iterations)
        .map(|(m, it)| {
            let cluster = m.result(n);
            let diam = diam_unchecked(&members[cluster], d);
            let parts = diam_unchecked(&members[m.left], d).max(diam_unchecked(&members[m.right], d));
            let chain = it.min_two_pure_diam.is_some_and(|fd| within(diam, parts.max(fd)));
            Alg2ClusterCheck { iteration: m.iteration, cluster, diam, chain, holds: within(diam, bound) }
        })
        .collect();
    let bound_rounded =
        if trace.k > 4 { opt * (trace.k as f64).powf(1.30) } else { bound };
    Ok(Alg2Bound {
        alpha: trace.alpha,
        bound,
        bound_rounded,
        max_diam: clusters.iter().map(|c| c.diam).fold(0.0, f64::max),
        families,
        clusters,
    })
}

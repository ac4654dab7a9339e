//! Experiment orchestration: per-cell bound reports and parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::family::{alg1_bound, alg1_trace, log2_3, Alg1Trace};
use crate::graph_cert::{alg2_bound, alg2_trace, alpha_k, Alg2Trace};
use crate::instances::{gen_random_euclidean, gen_random_metric};
use crate::linkage::{extract_clustering, run_linkage, Dendrogram, LinkageMethod};
use crate::metric::{
    clustering_score_unchecked, Clustering, ClusteringScore, Cohesion, DistanceMatrix,
    InstanceFile,
};
use crate::oracle::{opt_both, OracleBoth};
use crate::tolerance::within;

/// Exponent printed next to the exact `log2(3)`.
pub const ROUNDED_LOG2_3: f64 = 1.59;
/// Exponent printed next to the exact `log4(6)`.
pub const ROUNDED_ALPHA: f64 = 1.30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Achieved {
    pub max_diam: f64,
    pub avg_diam: f64,
    pub max_avg: f64,
    pub max_radius: f64,
}

impl Achieved {
    pub fn of(c: &Clustering, d: &DistanceMatrix) -> Self {
        let s = |score| clustering_score_unchecked(score, c.blocks(), d);
        Self {
            max_diam: s(ClusteringScore::MaxDiam),
            avg_diam: s(ClusteringScore::AvgDiam),
            max_avg: s(ClusteringScore::MaxAvg),
            max_radius: s(ClusteringScore::MaxRadius),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValues {
    pub opt_dm: f64,
    pub opt_av: f64,
    pub enumerated: u64,
}

/// Where the certificate targets come from.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    /// OPT_AV witness for the family forest, OPT_DM witness for the graph.
    Oracle,
    /// OPT_DM witness for both certificates.
    OracleDm,
    /// OPT_AV witness for both certificates.
    OracleAv,
    /// A fixed k-clustering for both certificates.
    Given(Clustering),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub source: String,
    pub alg1_avg_diam: f64,
    pub alg2_max_diam: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Quantity that the `k^log2(3)` bound multiplies: OPT_AV, or the target's
    /// avg-diam when no oracle ran.
    pub av_reference: f64,
    /// Quantity that the `k^alpha_k` bound multiplies.
    pub dm_reference: f64,
    pub log2_3: f64,
    pub log2_3_rounded: f64,
    pub av_bound: f64,
    pub av_bound_rounded: f64,
    pub alpha_k: Option<f64>,
    pub alpha_rounded: f64,
    pub dm_factor: Option<f64>,
    pub dm_bound: Option<f64>,
    pub dm_bound_rounded: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassFail {
    pub passed: usize,
    pub failed: usize,
    /// Per-cluster bound checks that failed.
    pub bound_failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub alg1: Option<PassFail>,
    pub alg2: Option<PassFail>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub max_diam_over_opt_dm: Option<f64>,
    pub max_diam_over_opt_av: Option<f64>,
    /// The method's own cohesion score over the `k^log2(3)` reference.
    pub cohesion_over_av_reference: Option<f64>,
}

/// One (instance, method, k) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub instance: String,
    pub provenance: String,
    pub method: String,
    pub k: usize,
    pub n: usize,
    pub achieved: Achieved,
    pub target: TargetSummary,
    pub oracle: Option<OracleValues>,
    pub bounds: Bounds,
    /// Cohesion score the method is bounded in, if any.
    pub bounded_score: Option<ClusteringScore>,
    pub certificates: Certificates,
    pub ratios: Ratios,
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Full output of [`certify`].
#[derive(Clone, Debug)]
pub struct CertifyOutput {
    pub report: BoundReport,
    pub dendrogram: Dendrogram,
    pub clustering: Clustering,
    pub alg1: Option<Alg1Trace>,
    pub alg2: Option<Alg2Trace>,
}

/// The cohesion a method's k-clustering is bounded in by `k^log2(3) * OPT_AV`.
pub fn bounded_score(method: &LinkageMethod) -> Option<ClusteringScore> {
    match method {
        LinkageMethod::Complete => Some(ClusteringScore::MaxDiam),
        LinkageMethod::Average => Some(ClusteringScore::MaxAvg),
        LinkageMethod::Minimax => Some(ClusteringScore::MaxRadius),
        _ => None,
    }
}

fn cohesion_for(score: ClusteringScore) -> Cohesion {
    match score {
        ClusteringScore::MaxAvg => Cohesion::Avg,
        ClusteringScore::MaxRadius => Cohesion::Radius,
        _ => Cohesion::Diam,
    }
}

pub struct CertifyRequest<'a> {
    pub instance: &'a str,
    pub provenance: &'a str,
    pub d: &'a DistanceMatrix,
    pub method: &'a LinkageMethod,
    pub k: usize,
    pub target: TargetSpec,
    pub n_max: usize,
    /// A precomputed oracle for this (instance, k), if any.
    pub oracle: Option<&'a OracleBoth>,
    /// A precomputed dendrogram for this (instance, method), if any.
    pub dendrogram: Option<&'a Dendrogram>,
    pub certificates: bool,
}

/// Runs the method, the oracle when in reach, both certificates and every
/// applicable bound for one cell.
pub fn certify(req: CertifyRequest<'_>) -> Result<CertifyOutput> {
    let d = req.d;
    let n = d.n();
    let k = req.k;
    if k == 0 || k > n {
        return precondition(format!("k = {k} outside 1..={n}"));
    }
    let dendrogram = match req.dendrogram {
        Some(dg) => dg.clone(),
        None => run_linkage(req.method, d)?,
    };
    let clustering = extract_clustering(&dendrogram, k)?;
    let achieved = Achieved::of(&clustering, d);

    let needs_oracle = !matches!(req.target, TargetSpec::Given(_));
    let computed;
    let oracle = match req.oracle {
        Some(o) => Some(o),
        None if n <= req.n_max => {
            computed = opt_both(d, k, req.n_max)?;
            Some(&computed)
        }
        None if needs_oracle => return Err(Error::ResourceGuard { n, n_max: req.n_max }),
        None => None,
    };

    let (t1, t2, source) = match (&req.target, oracle) {
        (TargetSpec::Given(c), _) => (c.clone(), c.clone(), "file"),
        (TargetSpec::Oracle, Some(o)) => (o.opt_av.witness.clone(), o.opt_dm.witness.clone(), "oracle"),
        (TargetSpec::OracleDm, Some(o)) => (o.opt_dm.witness.clone(), o.opt_dm.witness.clone(), "oracle-dm"),
        (TargetSpec::OracleAv, Some(o)) => (o.opt_av.witness.clone(), o.opt_av.witness.clone(), "oracle-av"),
        _ => return Err(Error::Internal("oracle target without an oracle".into())),
    };
    if t1.k() != k || t1.n() != n {
        return Err(Error::Structural(format!(
            "target has {} blocks over {} points, expected {k} over {n}",
            t1.k(),
            t1.n()
        )));
    }
    let target = TargetSummary {
        source: source.into(),
        alg1_avg_diam: clustering_score_unchecked(ClusteringScore::AvgDiam, t1.blocks(), d),
        alg2_max_diam: clustering_score_unchecked(ClusteringScore::MaxDiam, t2.blocks(), d),
    };
    let oracle_values = oracle.map(|o| OracleValues {
        opt_dm: o.opt_dm.value,
        opt_av: o.opt_av.value,
        enumerated: o.opt_dm.enumerated,
    });
    let av_reference = oracle_values.map_or(target.alg1_avg_diam, |o| o.opt_av);
    let dm_reference = oracle_values.map_or(target.alg2_max_diam, |o| o.opt_dm);
    let kf = k as f64;
    let alpha = if k >= 2 { Some(alpha_k(k)?) } else { None };
    let bounds = Bounds {
        av_reference,
        dm_reference,
        log2_3: log2_3(),
        log2_3_rounded: ROUNDED_LOG2_3,
        av_bound: kf.powf(log2_3()) * av_reference,
        av_bound_rounded: kf.powf(ROUNDED_LOG2_3) * av_reference,
        alpha_k: alpha.map(|a| a.exponent),
        alpha_rounded: ROUNDED_ALPHA,
        dm_factor: alpha.map(|a| a.factor),
        dm_bound: alpha.map(|a| a.factor * dm_reference),
        dm_bound_rounded: alpha.map(|a| {
            if k > 4 {
                kf.powf(ROUNDED_ALPHA) * dm_reference
            } else {
                a.factor * dm_reference
            }
        }),
    };

    let mut violations = Vec::new();
    let score = bounded_score(req.method);
    let is_cl = *req.method == LinkageMethod::Complete;
    let own = score.map(|s| clustering_score_unchecked(s, clustering.blocks(), d));
    if let (Some(s), Some(v)) = (score, own) {
        if !within(v, bounds.av_bound) {
            violations.push(format!("{s} {v} exceeds k^log2(3) bound {}", bounds.av_bound));
        }
    }
    if is_cl {
        if let Some(b) = bounds.dm_bound {
            if !within(achieved.max_diam, b) {
                violations.push(format!("max-diam {} exceeds k^alpha_k bound {b}", achieved.max_diam));
            }
        }
    }

    let mut certificates = Certificates::default();
    let (mut alg1, mut alg2) = (None, None);
    if req.certificates {
        // The forest certificate needs only the sandwich condition, which all
        // built-in methods satisfy; the graph certificate is specific to CL.
        if !matches!(req.method, LinkageMethod::Custom { .. }) {
            let trace = alg1_trace(d, &dendrogram, &t1)?;
            let bound_failures = match score {
                Some(s) => alg1_bound(&trace, &dendrogram, d, cohesion_for(s))?.failures(),
                None => 0,
            };
            let pf = PassFail {
                passed: trace.passed(),
                failed: trace.failed() + usize::from(!trace.final_p4),
                bound_failures,
            };
            if pf.failed > 0 || pf.bound_failures > 0 {
                violations.push(format!(
                    "family forest: {} iteration failures, {} bound failures",
                    pf.failed, pf.bound_failures
                ));
            }
            certificates.alg1 = Some(pf);
            alg1 = Some(trace);
        }
        if is_cl && k >= 2 {
            let trace = alg2_trace(d, &dendrogram, &t2)?;
            let pf = PassFail {
                passed: trace.passed(),
                failed: trace.failed(),
                bound_failures: alg2_bound(&trace, &dendrogram, d)?.failures(),
            };
            if pf.failed > 0 || pf.bound_failures > 0 {
                violations.push(format!(
                    "pure-cluster graph: {} iteration failures, {} bound failures",
                    pf.failed, pf.bound_failures
                ));
            }
            certificates.alg2 = Some(pf);
            alg2 = Some(trace);
        }
    }

    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    let ratios = Ratios {
        max_diam_over_opt_dm: oracle_values.and_then(|o| ratio(achieved.max_diam, o.opt_dm)),
        max_diam_over_opt_av: oracle_values.and_then(|o| ratio(achieved.max_diam, o.opt_av)),
        cohesion_over_av_reference: own.and_then(|v| ratio(v, av_reference)),
    };

    let report = BoundReport {
        instance: req.instance.into(),
        provenance: req.provenance.into(),
        method: req.method.name().into(),
        k,
        n,
        achieved,
        target,
        oracle: oracle_values,
        bounds,
        bounded_score: score,
        certificates,
        ratios,
        violations,
    };
    Ok(CertifyOutput { report, dendrogram, clustering, alg1, alg2 })
}

/// Instance generator used by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Euclidean,
    Metric,
}

fn default_dim() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_methods() -> Vec<String> {
    ["CL", "SL", "AL", "MM"].iter().map(|s| s.to_string()).collect()
}

/// Sweep grid, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub generator: Generator,
    pub n: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub seed_start: u64,
    pub seed_count: u64,
    pub ks: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default = "default_true")]
    pub certificates: bool,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Format("n must be at least 2".into()));
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k == 0 || k > self.n) {
            return Err(Error::Format(format!("k = {k} outside 1..={}", self.n)));
        }
        for m in &self.methods {
            m.parse::<LinkageMethod>()?;
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.seed_count as usize * self.ks.len() * self.methods.len()
    }
}

pub const SWEEP_COLUMNS: [&str; 22] = [
    "instance",
    "generator",
    "n",
    "seed",
    "method",
    "k",
    "max_diam",
    "avg_diam",
    "max_avg",
    "max_radius",
    "opt_dm",
    "opt_av",
    "bounded_score",
    "bounded_value",
    "av_bound",
    "dm_bound",
    "bound_ok",
    "alg1_passed",
    "alg1_failed",
    "alg2_passed",
    "alg2_failed",
    "certificate_bound_failures",
];

/// Floats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub method_index: usize,
    pub report: BoundReport,
}

impl SweepRow {
    fn record(&self, cfg: &SweepConfig) -> Vec<String> {
        let r = &self.report;
        let own = r.bounded_score.map(|s| match s {
            ClusteringScore::MaxDiam => r.achieved.max_diam,
            ClusteringScore::MaxAvg => r.achieved.max_avg,
            ClusteringScore::MaxRadius => r.achieved.max_radius,
            ClusteringScore::AvgDiam => r.achieved.avg_diam,
        });
        let alg1 = r.certificates.alg1.unwrap_or_default();
        let alg2 = r.certificates.alg2.unwrap_or_default();
        let (bool_cell, count) = (|b: bool| b.to_string(), |x: usize| x.to_string());
        vec![
            r.instance.clone(),
            format!("{:?}", cfg.generator).to_lowercase(),
            r.n.to_string(),
            self.seed.to_string(),
            r.method.clone(),
            r.k.to_string(),
            fmt_f64(r.achieved.max_diam),
            fmt_f64(r.achieved.avg_diam),
            fmt_f64(r.achieved.max_avg),
            fmt_f64(r.achieved.max_radius),
            fmt_opt(r.oracle.map(|o| o.opt_dm)),
            fmt_opt(r.oracle.map(|o| o.opt_av)),
            r.bounded_score.map(|s| s.to_string()).unwrap_or_default(),
            fmt_opt(own),
            fmt_f64(r.bounds.av_bound),
            fmt_opt(r.bounds.dm_bound),
            bool_cell(r.ok()),
            count(alg1.passed),
            count(alg1.failed),
            count(alg2.passed),
            count(alg2.failed),
            count(alg1.bound_failures + alg2.bound_failures),
        ]
    }
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub csv: String,
}

impl SweepOutput {
    pub fn failures(&self) -> Vec<&BoundReport> {
        self.rows.iter().map(|r| &r.report).filter(|r| !r.ok()).collect()
    }
}

fn instance_id(cfg: &SweepConfig, seed: u64) -> String {
    format!("{:?}-n{}-s{seed}", cfg.generator, cfg.n).to_lowercase()
}

fn generate(cfg: &SweepConfig, seed: u64) -> Result<DistanceMatrix> {
    match cfg.generator {
        Generator::Euclidean => gen_random_euclidean(cfg.n, cfg.dim, seed),
        Generator::Metric => gen_random_metric(cfg.n, seed),
    }
}

/// Runs every (seed, method, k) cell, in parallel across instances. When
/// `out_dir` is given, instances and dendrograms are written there too.
pub fn run_sweep(cfg: &SweepConfig, n_max: usize, out_dir: Option<&Path>) -> Result<SweepOutput> {
    let methods: Vec<LinkageMethod> =
        cfg.methods.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    if cfg.oracle && cfg.n > n_max && !cfg.ks.is_empty() {
        return Err(Error::ResourceGuard { n: cfg.n, n_max });
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir.join("instances"))?;
        fs::create_dir_all(dir.join("dendrograms"))?;
    }
    let seeds: Vec<u64> = (cfg.seed_start..cfg.seed_start + cfg.seed_count).collect();
    let per_seed: Vec<Vec<SweepRow>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<SweepRow>> {
            let id = instance_id(cfg, seed);
            let d = generate(cfg, seed)?;
            let dendrograms: Vec<Dendrogram> =
                methods.iter().map(|m| run_linkage(m, &d)).collect::<Result<_>>()?;
            if let Some(dir) = out_dir {
                fs::write(
                    dir.join("instances").join(format!("{id}.json")),
                    InstanceFile::new(&d, None).to_json()?,
                )?;
                for (m, dg) in methods.iter().zip(&dendrograms) {
                    fs::write(
                        dir.join("dendrograms").join(format!("{id}-{}.json", m.name())),
                        dg.to_json()?,
                    )?;
                }
            }
            let mut rows = Vec::new();
            for &k in &cfg.ks {
                let oracle = if cfg.oracle { Some(opt_both(&d, k, n_max)?) } else { None };
                for (mi, (m, dg)) in methods.iter().zip(&dendrograms).enumerate() {
                    let target = match &oracle {
                        Some(_) => TargetSpec::Oracle,
                        None => TargetSpec::Given(extract_clustering(&dendrograms[0], k)?),
                    };
                    let out = certify(CertifyRequest {
                        instance: &id,
                        provenance: &format!("{:?}", cfg.generator).to_lowercase(),
                        d: &d,
                        method: m,
                        k,
                        target,
                        n_max,
                        oracle: oracle.as_ref(),
                        dendrogram: Some(dg),
                        certificates: cfg.certificates,
                    })?;
                    rows.push(SweepRow { seed, method_index: mi, report: out.report });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = per_seed.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.seed, r.method_index, r.report.k));

    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for row in &rows {
        w.write_record(row.record(cfg)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    let csv = String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?;
    if let Some(dir) = out_dir {
        fs::write(dir.join("sweep.csv"), &csv)?;
    }
    Ok(SweepOutput { rows, csv })
}

/// Location of `name` under `out_dir`, creating the directory.
pub fn output_path(out_dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    Ok(out_dir.join(name))
}

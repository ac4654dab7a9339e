//! Exact optima for a random metric and how each linkage compares to them.
//!
//! ```bash
//! cargo run --example oracle_bounds
//! ```

use hclust_cert::harness::{certify, CertifyRequest, TargetSpec};
use hclust_cert::instances::gen_random_metric;
use hclust_cert::oracle::DEFAULT_N_MAX;
use hclust_cert::{opt_both, threshold_opt_dm, LinkageMethod};

fn main() -> hclust_cert::Result<()> {
    let d = gen_random_metric(11, 3)?;
    for k in 2..=5 {
        let opt = opt_both(&d, k, DEFAULT_N_MAX)?;
        println!(
            "k = {k}: OPT_DM {:.6} (threshold {:.6}) OPT_AV {:.6} over {} partitions",
            opt.opt_dm.value,
            threshold_opt_dm(&d, k)?,
            opt.opt_av.value,
            opt.opt_dm.enumerated
        );
        for m in LinkageMethod::builtin() {
            let r = certify(CertifyRequest {
                instance: "metric-11",
                provenance: "gen_random_metric(11, 3)",
                d: &d,
                method: &m,
                k,
                target: TargetSpec::Oracle,
                n_max: DEFAULT_N_MAX,
                oracle: Some(&opt),
                dendrogram: None,
                certificates: false,
            })?
            .report;
            println!(
                "    {:<2} max-diam {:.6} ratio {:.4} bounded score {:<10} within {}",
                r.method,
                r.achieved.max_diam,
                r.ratios.max_diam_over_opt_dm.unwrap_or(f64::NAN),
                r.bounded_score.map_or("-".into(), |s| s.to_string()),
                r.ok()
            );
        }
    }
    Ok(())
}

//! Single versus complete linkage on the chained instance, for growing k.
//!
//! ```bash
//! cargo run --example single_link_adversary
//! ```

use hclust_cert::family::log2_3;
use hclust_cert::instances::gen_single_link_adversary;
use hclust_cert::{clustering_score, extract_clustering, run_linkage, ClusteringScore, LinkageMethod};

fn main() -> hclust_cert::Result<()> {
    let (b, eps) = (1000.0, 1.0);
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "k", "SL ratio", "formula", "CL ratio", "k^log2(3)");
    for k in [3, 5, 10, 20] {
        let inst = gen_single_link_adversary(k, b, eps)?;
        let target_avg = clustering_score(ClusteringScore::AvgDiam, &inst.target, &inst.d)?;
        let ratio = |m: LinkageMethod| -> hclust_cert::Result<f64> {
            let c = extract_clustering(&run_linkage(&m, &inst.d)?, k)?;
            Ok(clustering_score(ClusteringScore::MaxDiam, &c, &inst.d)? / target_avg)
        };
        println!(
            "{k:>3} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
            ratio(LinkageMethod::Single)?,
            inst.expected_ratio(),
            ratio(LinkageMethod::Complete)?,
            (k as f64).powf(log2_3()),
        );
    }
    Ok(())
}

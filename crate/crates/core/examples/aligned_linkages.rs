//! Alignment checks for built-in and custom linkages, including a pairing
//! that is not aligned.
//!
//! ```bash
//! cargo run --example aligned_linkages
//! ```

use std::sync::Arc;

use hclust_cert::instances::gen_random_euclidean;
use hclust_cert::linkage::{cost_fn, linkage_fn, LinkageFn};
use hclust_cert::{check_alignment, extract_clustering, run_linkage, Cohesion, LinkageMethod};

fn main() -> hclust_cert::Result<()> {
    let d = gen_random_euclidean(30, 2, 5)?;
    let pairs = [
        ("AL", LinkageMethod::Average, Cohesion::Avg),
        ("MM", LinkageMethod::Minimax, Cohesion::Radius),
        ("CL", LinkageMethod::Complete, Cohesion::Diam),
        ("SL", LinkageMethod::Single, Cohesion::Diam),
    ];
    for (name, method, cost) in pairs {
        let r = check_alignment(&linkage_fn(method), &cost_fn(cost), &d, 10_000, 7)?;
        println!(
            "{name} with {cost:?}: {} pairs, {} exact unions, {} violations",
            r.pairs_checked,
            r.union_cost_equals_f,
            r.violations.len()
        );
    }

    // Largest distance from the first cluster's first point into the other cluster.
    let f: LinkageFn = Arc::new(|a, b, d| {
        b.iter().map(|&q| d.get(a[0], q)).fold(0.0, f64::max)
    });
    let custom = LinkageMethod::custom("anchor", f);
    let c = extract_clustering(&run_linkage(&custom, &d)?, 4)?;
    println!("custom linkage at k = 4: block sizes {:?}", c.blocks().iter().map(Vec::len).collect::<Vec<_>>());
    Ok(())
}

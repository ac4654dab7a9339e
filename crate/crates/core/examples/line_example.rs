//! Complete linkage on four points of a line, cut at every k.
//!
//! ```bash
//! cargo run --example line_example
//! ```

use hclust_cert::{
    extract_clustering, run_linkage, clustering_score, ClusteringScore, DistanceMatrix,
    LinkageMethod,
};

fn main() -> hclust_cert::Result<()> {
    let d = DistanceMatrix::from_line(&[0.0, 1.0, 10.0, 11.0])?;
    let dg = run_linkage(&LinkageMethod::Complete, &d)?;

    println!("tie rule: {}", dg.tie_rule());
    for m in dg.merges() {
        println!(
            "iteration {}: {} + {} -> {} at {}",
            m.iteration,
            m.left,
            m.right,
            m.result(d.n()),
            m.value
        );
    }
    for k in 1..=d.n() {
        let c = extract_clustering(&dg, k)?;
        let diam = clustering_score(ClusteringScore::MaxDiam, &c, &d)?;
        println!("k = {k}: {:?} max-diam {diam}", c.blocks());
    }
    println!("{}", dg.to_json()?);
    Ok(())
}

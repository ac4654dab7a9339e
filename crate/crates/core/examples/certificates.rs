//! Replays a complete-linkage run through both certificate constructions,
//! against optimal targets from the exhaustive oracle.
//!
//! ```bash
//! cargo run --example certificates -- 10 3 42
//! ```

use hclust_cert::instances::gen_random_euclidean;
use hclust_cert::oracle::DEFAULT_N_MAX;
use hclust_cert::{
    alg1_bound, alg1_trace, alg2_bound, alg2_trace, opt_both, run_linkage, Cohesion, LinkageMethod,
};

fn main() -> anyhow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let (n, k, seed) = match args[..] {
        [n, k, seed] => (n, k, seed as u64),
        [] => (10, 3, 42),
        _ => anyhow::bail!("usage: certificates [n k seed]"),
    };
    let d = gen_random_euclidean(n, 2, seed)?;
    let dg = run_linkage(&LinkageMethod::Complete, &d)?;
    let opt = opt_both(&d, k, DEFAULT_N_MAX)?;

    let forest = alg1_trace(&d, &dg, &opt.opt_av.witness)?;
    for it in &forest.iterations {
        println!(
            "forest  {:>2} {:<6} roots {:>2} p3 {} p4 {}",
            it.iteration,
            it.case.to_string(),
            it.roots.len(),
            it.assertions.p3,
            it.assertions.p4
        );
    }
    let b1 = alg1_bound(&forest, &dg, &d, Cohesion::Diam)?;
    println!("forest bound {:.6} max cost {:.6} failures {}", b1.bound, b1.max_cost, b1.failures());

    let graph = alg2_trace(&d, &dg, &opt.opt_dm.witness)?;
    for it in &graph.iterations {
        let case = it.case.map_or("-".to_string(), |c| format!("{c:?}"));
        println!(
            "graph   {:>2} case {case} excluded {:>2} components {:>2} ok {}",
            it.iteration,
            it.exclusion_set_size,
            it.components.len(),
            it.assertions.all()
        );
    }
    let b2 = alg2_bound(&graph, &dg, &d)?;
    println!(
        "graph bound {:.6} (factor {:.4}) max diam {:.6} failures {}",
        b2.bound,
        b2.alpha.factor,
        b2.max_diam,
        b2.failures()
    );
    Ok(())
}

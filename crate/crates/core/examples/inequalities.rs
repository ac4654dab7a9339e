//! Samples the two auxiliary inequalities and scans the exponent ratio.
//!
//! ```bash
//! cargo run --release --example inequalities
//! ```

use hclust_cert::inequalities::{alpha_ratio, alpha_sup, sample_ineq_2, sample_ineq_avg};

fn main() -> hclust_cert::Result<()> {
    for (name, batch) in [("avg", sample_ineq_avg(100_000, 1)), ("two", sample_ineq_2(100_000, 2))] {
        let tight = batch.tightest.as_ref().map_or(f64::NAN, |s| s.relative_slack());
        println!("{name}: {} checked, {} failures, tightest relative slack {tight:.3e}", batch.checked, batch.failures.len());
    }
    for i in 2..=8 {
        println!("log(2i-2)/log(i) at i = {i}: {:.6}", alpha_ratio(i));
    }
    let sup = alpha_sup(1_000_000)?;
    println!("max at i = {} value {:.15} tail ok {}", sup.argmax, sup.value, sup.tail_ok);
    Ok(())
}

//! A small grid over random Euclidean instances, printed as CSV.
//!
//! ```bash
//! cargo run --release --example sweep
//! ```

use hclust_cert::harness::{run_sweep, SweepConfig};
use hclust_cert::oracle::DEFAULT_N_MAX;

const CONFIG: &str = r#"
generator = "euclidean"
n = 9
dim = 2
seed_start = 0
seed_count = 5
ks = [2, 3, 4]
methods = ["CL", "SL", "AL", "MM"]
"#;

fn main() -> hclust_cert::Result<()> {
    let cfg = SweepConfig::parse(CONFIG)?;
    let out = run_sweep(&cfg, DEFAULT_N_MAX, None)?;
    print!("{}", out.csv);
    eprintln!("{} cells, {} with violations", out.rows.len(), out.failures().len());
    Ok(())
}

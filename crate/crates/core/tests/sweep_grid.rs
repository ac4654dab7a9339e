use hclust_cert::harness::{run_sweep, SweepConfig};
use hclust_cert::oracle::DEFAULT_N_MAX;

#[test]
fn reference_grid_has_no_bound_violations() {
    let cfg = SweepConfig::parse(
        "generator = \"euclidean\"\nn = 12\nseed_count = 100\nks = [2, 3, 4, 5, 6]\nmethods = [\"CL\", \"SL\", \"AL\", \"MM\"]\n",
    )
    .unwrap();
    let out = run_sweep(&cfg, DEFAULT_N_MAX, None).unwrap();
    assert_eq!(out.rows.len(), 2000);
    assert_eq!(out.csv.lines().count(), 2001);
    let bad: Vec<_> = out.failures().iter().map(|r| (&r.instance, &r.method, r.k)).collect();
    assert!(bad.is_empty(), "{bad:?}");
    assert!(out.rows.iter().filter(|r| r.report.method != "SL").all(|r| r.report.bounded_score.is_some()));
}

//! Agglomerative linkage clustering with per-merge approximation certificates.
//!
//! The crate runs complete, single, average and minimax linkage (or any
//! caller-supplied cluster distance), replays the resulting dendrograms
//! through two certificate constructions that bound the diameter of every
//! cluster created, and checks those bounds against exhaustive optimum oracles.
//!
//! ```
//! use hclust_cert::{run_linkage, extract_clustering, DistanceMatrix, LinkageMethod};
//!
//! let d = DistanceMatrix::from_line(&[0.0, 1.0, 10.0, 11.0]).unwrap();
//! let dg = run_linkage(&LinkageMethod::Complete, &d).unwrap();
//! let two = extract_clustering(&dg, 2).unwrap();
//! assert_eq!(two.blocks(), &[vec![0, 1], vec![2, 3]]);
//! ```

pub mod error;
pub mod family;
pub mod graph_cert;
pub mod harness;
pub mod inequalities;
pub mod instances;
pub mod linkage;
pub mod metric;
pub mod oracle;

pub mod tolerance;

pub use error::{Error, Result};
pub use family::{alg1_bound, alg1_trace, Alg1Trace};
pub use graph_cert::{alg2_bound, alg2_trace, alpha_k, Alg2Trace, AlphaK};
pub use linkage::{
    check_alignment, check_merge_monotonicity, check_rule_equivalence, extract_clustering,
    linkage_distance, run_linkage, Dendrogram, LinkageMethod, MergeRecord,
};
pub use metric::{
    clustering_score, cohesion, validate_metric, Clustering, ClusteringScore, Cohesion,
    DistanceMatrix,
};
pub use oracle::{opt_both, opt_score, partitions_into_k, threshold_opt_dm, OracleResult};

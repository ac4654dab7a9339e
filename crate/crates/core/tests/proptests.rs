use proptest::prelude::*;

use hclust_cert::harness::Achieved;
use hclust_cert::instances::{gen_random_euclidean, gen_random_metric};
use hclust_cert::linkage::replay;
use hclust_cert::{
    alg1_trace, alg2_trace, check_merge_monotonicity, clustering_score, cohesion,
    extract_clustering, linkage_distance, opt_both, partitions_into_k, run_linkage,
    threshold_opt_dm, validate_metric, Clustering, ClusteringScore, Cohesion, Dendrogram,
    DistanceMatrix, LinkageMethod,
};

fn matrix(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
    (2..=max_n, any::<u64>(), any::<bool>()).prop_map(|(n, seed, euclid)| {
        if euclid {
            gen_random_euclidean(n, 2, seed).unwrap()
        } else {
            gen_random_metric(n, seed).unwrap()
        }
    })
}

/// Integer-valued distances in 1..=4, symmetric, not necessarily metric; lots of ties.
fn tied_matrix(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(1u8..=4, n * (n - 1) / 2)))
        .prop_map(|(n, v)| {
            DistanceMatrix::from_lower_triangle(n, v.into_iter().map(f64::from).collect()).unwrap()
        })
}

fn subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n)
}

fn methods() -> impl Strategy<Value = LinkageMethod> {
    prop::sample::select(LinkageMethod::builtin().to_vec())
}

fn is_valid_replay(dg: &Dendrogram) -> bool {
    let n = dg.n();
    let mut ok = dg.merges().len() == n - 1;
    let mut seen = vec![false; 2 * n - 1];
    replay(dg, |t, live| {
        ok &= live.len() == n - t && live.iter().all(|&c| !seen[c]);
        if let Some(m) = dg.merges().get(t) {
            ok &= m.left != m.right && live.contains(&m.left) && live.contains(&m.right);
            seen[m.left] = true;
            seen[m.right] = true;
        }
    });
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_are_metric(d in matrix(14)) {
        prop_assert!(validate_metric(&d, 1e-12).is_empty());
    }

    #[test]
    fn cohesion_ordering((d, s) in matrix(12).prop_flat_map(|d| { let n = d.n(); (Just(d), subset(n)) })) {
        let diam = cohesion(Cohesion::Diam, &s, &d).unwrap();
        let avg = cohesion(Cohesion::Avg, &s, &d).unwrap();
        let rad = cohesion(Cohesion::Radius, &s, &d).unwrap();
        prop_assert!(avg <= diam + 1e-12 && rad <= diam);
        prop_assert!(diam <= 2.0 * rad * (1.0 + 1e-12));
    }

    #[test]
    fn linkage_values_are_ordered(d in matrix(10), split in 1usize..9) {
        let n = d.n();
        let cut = split.min(n - 1);
        let (a, b): (Vec<usize>, Vec<usize>) = ((0..cut).collect(), (cut..n).collect());
        let f = |m| linkage_distance(&m, &a, &b, &d).unwrap();
        let (sl, al, cl) = (f(LinkageMethod::Single), f(LinkageMethod::Average), f(LinkageMethod::Complete));
        prop_assert!(sl <= al + 1e-12 && al <= cl + 1e-12);
    }

    #[test]
    fn dendrograms_replay(d in tied_matrix(9), m in methods()) {
        let dg = run_linkage(&m, &d).unwrap();
        prop_assert!(is_valid_replay(&dg));
        let again = run_linkage(&m, &d).unwrap();
        prop_assert_eq!(dg.merges(), again.merges());
        let back = Dendrogram::from_json(&dg.to_json().unwrap(), m.name()).unwrap();
        prop_assert_eq!(back.merges(), dg.merges());
    }

    #[test]
    fn cuts_are_nested(d in matrix(10), m in methods()) {
        let dg = run_linkage(&m, &d).unwrap();
        for k in 1..d.n() {
            let coarse = extract_clustering(&dg, k).unwrap();
            let fine = extract_clustering(&dg, k + 1).unwrap();
            prop_assert_eq!(coarse.k(), k);
            let labels = coarse.labels();
            for block in fine.blocks() {
                prop_assert!(block.iter().all(|&p| labels[p] == labels[block[0]]));
            }
        }
    }

    #[test]
    fn complete_linkage_is_monotone_on_any_dissimilarity(d in tied_matrix(10)) {
        let dg = run_linkage(&LinkageMethod::Complete, &d).unwrap();
        prop_assert!(check_merge_monotonicity(&dg, &d).is_empty());
    }

    #[test]
    fn scale_invariance(d in matrix(9), m in methods(), lambda in 0.5f64..8.0) {
        let scaled = d.scaled(lambda).unwrap();
        let a = run_linkage(&m, &d).unwrap();
        let b = run_linkage(&m, &scaled).unwrap();
        let pairs = |dg: &Dendrogram| dg.merges().iter().map(|r| (r.left, r.right)).collect::<Vec<_>>();
        prop_assert_eq!(pairs(&a), pairs(&b));
        for (x, y) in a.merges().iter().zip(b.merges()) {
            prop_assert!((x.value * lambda - y.value).abs() <= 1e-9 * y.value.abs().max(1.0));
        }
    }

    #[test]
    fn permutation_preserves_scores(d in matrix(9), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = d.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let p = d.permuted(&perm).unwrap();
        let dg = run_linkage(&LinkageMethod::Complete, &d).unwrap();
        let dp = run_linkage(&LinkageMethod::Complete, &p).unwrap();
        let values = |dg: &Dendrogram| dg.merges().iter().map(|m| m.value).collect::<Vec<_>>();
        prop_assert_eq!(values(&dg), values(&dp));
    }

    #[test]
    fn k_equals_n_scores_zero(d in matrix(10), m in methods()) {
        let c = extract_clustering(&run_linkage(&m, &d).unwrap(), d.n()).unwrap();
        prop_assert_eq!(Achieved::of(&c, &d), Achieved::default());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_is_a_lower_bound_and_sandwiched(d in matrix(8), m in methods()) {
        let n = d.n();
        let dg = run_linkage(&m, &d).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        for k in 1..=n {
            let o = opt_both(&d, k, 14).unwrap();
            let c = extract_clustering(&dg, k).unwrap();
            prop_assert!(o.opt_dm.value <= clustering_score(ClusteringScore::MaxDiam, &c, &d).unwrap());
            prop_assert!(o.opt_av.value <= clustering_score(ClusteringScore::AvgDiam, &c, &d).unwrap());
            prop_assert!(o.opt_dm.value / k as f64 <= o.opt_av.value * (1.0 + 1e-12));
            prop_assert!(o.opt_av.value <= o.opt_dm.value);
            prop_assert_eq!(o.opt_dm.value, threshold_opt_dm(&d, k).unwrap());
            if let Some((dm, av)) = prev {
                prop_assert!(o.opt_dm.value <= dm && o.opt_av.value <= av);
            }
            prev = Some((o.opt_dm.value, o.opt_av.value));
        }
    }

    #[test]
    fn oracle_witness_is_first_minimum(d in tied_matrix(7), k in 1usize..=4) {
        let k = k.min(d.n());
        let o = opt_both(&d, k, 14).unwrap();
        let first = partitions_into_k(d.n(), k, 14)
            .unwrap()
            .map(|rgs| Clustering::from_labels(&rgs).unwrap())
            .find(|c| clustering_score(ClusteringScore::MaxDiam, c, &d).unwrap() == o.opt_dm.value)
            .unwrap();
        prop_assert_eq!(first, o.opt_dm.witness);
    }

    #[test]
    fn certificates_hold_for_any_target(d in matrix(10), labels in prop::collection::vec(0usize..4, 10)) {
        let n = d.n();
        let Ok(target) = Clustering::from_labels(&labels[..n]) else { return Ok(()); };
        let dg = run_linkage(&LinkageMethod::Complete, &d).unwrap();
        let t1 = alg1_trace(&d, &dg, &target).unwrap();
        prop_assert!(t1.ok() && t1.final_p4);
        prop_assert_eq!(t1.passed() + t1.failed(), t1.iterations.len());
        if target.k() >= 2 {
            let t2 = alg2_trace(&d, &dg, &target).unwrap();
            prop_assert!(t2.ok());
            prop_assert_eq!(t2.passed() + t2.failed(), t2.iterations.len());
        }
    }
}

mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sphembed::eval::{
    clustering_metrics, kmeans, knn_classify, spearman, spherical_kmeans, ClusterConfig, Distance,
    NmiNormalization,
};

fn distinct_scores() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
        )
    })
}

fn labelings() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(0usize..5, n),
            prop::collection::vec(0usize..4, n),
        )
    })
}

fn clustered_points(seed: u64, n: usize, p: usize, unit: bool) -> Vec<Vec<f64>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..3).map(|_| common::random_unit(&mut rng, p)).collect();
    (0..n)
        .map(|i| {
            let x = common::sample_vmf(&mut rng, &centers[i % 3], 8.0);
            if unit {
                x
            } else {
                x.iter().map(|c| c * (1.0 + (i % 5) as f64)).collect()
            }
        })
        .collect()
}

/// NMI is undefined when both sides have a single group.
fn nmi_defined(assign: &[usize], labels: &[usize]) -> bool {
    assign.iter().any(|&a| a != assign[0]) || labels.iter().any(|&l| l != labels[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn spearman_ignores_monotone_transforms((xs, ys) in distinct_scores()) {
        let Ok(rho) = spearman(&xs, &ys) else { return Ok(()) };
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x + x).collect();
        let squashed: Vec<f64> = ys.iter().map(|y| (y / 50.0).tanh() * 3.0 - 1.0).collect();
        prop_assert!((spearman(&cubed, &squashed).unwrap() - rho).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
    }

    #[test]
    fn metrics_ignore_relabeling((assign, labels) in labelings(), seed in any::<u64>()) {
        prop_assume!(nmi_defined(&assign, &labels));
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut cluster_perm: Vec<usize> = (0..5).collect();
        cluster_perm.shuffle(&mut rng);
        let mut class_perm: Vec<usize> = (10..14).collect();
        class_perm.shuffle(&mut rng);
        let a2: Vec<usize> = assign.iter().map(|&a| cluster_perm[a]).collect();
        let l2: Vec<usize> = labels.iter().map(|&l| class_perm[l]).collect();
        for norm in [NmiNormalization::Geometric, NmiNormalization::Arithmetic] {
            let s1 = clustering_metrics(&assign, &labels, norm).unwrap();
            let s2 = clustering_metrics(&a2, &l2, norm).unwrap();
            prop_assert!((s1.mi - s2.mi).abs() < 1e-12);
            prop_assert!((s1.nmi - s2.nmi).abs() < 1e-12);
            prop_assert!((s1.ari - s2.ari).abs() < 1e-12);
            prop_assert!((s1.purity - s2.purity).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_ranges((assign, labels) in labelings()) {
        prop_assume!(nmi_defined(&assign, &labels));
        let s = clustering_metrics(&assign, &labels, NmiNormalization::Geometric).unwrap();
        let mut classes = labels.clone();
        classes.sort();
        classes.dedup();
        prop_assert!(s.purity >= 1.0 / classes.len() as f64 - 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s.purity));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s.nmi));
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s.ari));
        prop_assert!(s.mi >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lloyd_objectives_are_monotone(seed in any::<u64>(), k in 1usize..6) {
        let cfg = ClusterConfig { seed, ..ClusterConfig::default() };
        let raw = clustered_points(seed, 90, 5, false);
        let r = kmeans(&raw, k, &cfg).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{:?}", r.history);
        }
        prop_assert!(r.assignments.iter().all(|&a| a < k));

        let unit = clustered_points(seed, 90, 5, true);
        let s = spherical_kmeans(&unit, k, &cfg).unwrap();
        for w in s.history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{:?}", s.history);
        }
        for c in &s.centroids {
            prop_assert!((common::dot(c, c).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn knn_on_sphere_is_metric_agnostic(seed in any::<u64>(), k in 1usize..8) {
        let pts = clustered_points(seed, 120, 6, true);
        let labels: Vec<usize> = (0..pts.len()).map(|i| i % 3).collect();
        let (train, test) = pts.split_at(80);
        let e = knn_classify(train, &labels[..80], test, k, Distance::Euclidean).unwrap();
        let c = knn_classify(train, &labels[..80], test, k, Distance::Cosine).unwrap();
        prop_assert_eq!(e, c);
    }
}

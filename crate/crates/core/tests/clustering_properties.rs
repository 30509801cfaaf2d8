use crowdwrite_core::clustering::{lloyd_cosine, silhouette, sweep_k, LloydParams, SweepParams};
use crowdwrite_core::embedding::EmbeddingVector;
use proptest::prelude::*;

fn arb_vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(-1.0f64..1.0, 3)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2),
        6..14,
    )
}

fn wrap(rows: &[Vec<f64>]) -> Vec<EmbeddingVector> {
    rows.iter().map(|r| EmbeddingVector::new(r.clone()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kmeans_ignores_vector_scale(rows in arb_vectors(), scales in prop::collection::vec(0.1f64..50.0, 14), seed in 0u64..100) {
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .zip(&scales)
            .map(|(r, s)| r.iter().map(|x| x * s).collect())
            .collect();
        let a = lloyd_cosine(&wrap(&rows), 3, seed, LloydParams::default());
        let b = lloyd_cosine(&wrap(&scaled), 3, seed, LloydParams::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a.labels, &b.labels);
                prop_assert!((a.mean_silhouette - b.mean_silhouette).abs() < 1e-9);
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn silhouette_bounded_and_label_renaming_invariant(rows in arb_vectors(), raw in prop::collection::vec(0usize..3, 14)) {
        let v = wrap(&rows);
        let labels: Vec<usize> = raw[..v.len()].to_vec();
        let distinct = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
        prop_assume!(distinct >= 2);
        let s = silhouette(&v, &labels).unwrap();
        prop_assert!(s.per_sample.iter().all(|x| (-1.0 - 1e-12..=1.0 + 1e-12).contains(x)));
        let renamed: Vec<usize> = labels.iter().map(|l| (l + 1) % 3 + 10).collect();
        let t = silhouette(&v, &renamed).unwrap();
        prop_assert!((s.mean - t.mean).abs() < 1e-12);
    }

    #[test]
    fn sweep_ordering_contract(rows in arb_vectors(), seed in 0u64..20) {
        let v = wrap(&rows);
        let params = SweepParams { k_min: 2, k_max: 4, restarts: 3, seed, ..SweepParams::default() };
        if let Ok(r) = sweep_k(&v, params) {
            prop_assert!(r.runs.len() <= params.top);
            prop_assert!(r.runs.windows(2).all(|w| w[0].mean_silhouette >= w[1].mean_silhouette));
            prop_assert!(r.runs.iter().all(|c| (2..=4).contains(&c.k)));
        }
    }
}

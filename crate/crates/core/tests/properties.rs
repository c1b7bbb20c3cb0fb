mod common;

use common::*;
use proptest::prelude::*;
use tcmi::{
    build_grid, cumulative_entropy, expected_fraction, fraction_scores, hypergeometric_weight, Dataset, GridStrategy,
    Orientation, Scorer,
};

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (5usize..=30, 1usize..=3, any::<u64>()).prop_map(|(n, d, seed)| random_dataset(&mut rng(seed), n, d))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_scales_with_positive_affine_maps(
        values in prop::collection::vec(-50.0f64..50.0, 1..40),
        a in 0.01f64..100.0,
        b in -100.0f64..100.0,
    ) {
        let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        for o in Orientation::BOTH {
            let h = cumulative_entropy(&values, o).unwrap();
            let hm = cumulative_entropy(&mapped, o).unwrap();
            prop_assert!((hm - a * h).abs() <= 1e-9 * (1.0 + a * h), "{hm} vs {}", a * h);
        }
    }

    #[test]
    fn negative_scale_swaps_orientations(values in prop::collection::vec(-5.0f64..5.0, 1..40), a in 0.1f64..10.0) {
        let mapped: Vec<f64> = values.iter().map(|v| -a * v).collect();
        let fwd = cumulative_entropy(&mapped, Orientation::Forward).unwrap();
        let rev = cumulative_entropy(&values, Orientation::Reverse).unwrap();
        prop_assert!((fwd - a * rev).abs() <= 1e-9 * (1.0 + a * rev));
    }

    #[test]
    fn monotone_feature_transform_is_exact(data in dataset_strategy(), shift in -3.0f64..3.0) {
        let names = data.feature_names().to_vec();
        let base = Scorer::new(&data, GridStrategy::Sample).unwrap().score(&names).unwrap();
        let mut features: Vec<(String, Vec<f64>)> = names
            .iter()
            .enumerate()
            .map(|(k, nm)| (nm.clone(), data.feature(k).to_vec()))
            .collect();
        for (_, col) in &mut features {
            for v in col.iter_mut() {
                *v = (*v + shift).powi(3) + (*v).atan();
            }
        }
        let warped = Dataset::new("y", data.target().to_vec(), features).unwrap();
        let other = Scorer::new(&warped, GridStrategy::Sample).unwrap().score(&names).unwrap();
        prop_assert_eq!(base.pair, other.pair);
    }

    #[test]
    fn row_and_subset_order_are_irrelevant(data in dataset_strategy(), seed in any::<u64>()) {
        let names = data.feature_names().to_vec();
        let base = Scorer::new(&data, GridStrategy::Sample).unwrap().score(&names).unwrap();
        let perm = permutation(&mut rng(seed), data.n_rows());
        let rows = data.permute_rows(&perm).unwrap();
        let mut reversed = names.clone();
        reversed.reverse();
        let other = Scorer::new(&rows, GridStrategy::Sample).unwrap().score(&reversed).unwrap();
        prop_assert_eq!(base.pair, other.pair);
    }

    #[test]
    fn positive_affine_target_map(data in dataset_strategy(), a in 0.01f64..100.0, b in -10.0f64..10.0) {
        let names = data.feature_names().to_vec();
        let base = Scorer::new(&data, GridStrategy::Sample).unwrap().score(&names).unwrap();
        let mapped = data.with_target(data.target().iter().map(|v| a * v + b).collect()).unwrap();
        let other = Scorer::new(&mapped, GridStrategy::Sample).unwrap().score(&names).unwrap();
        prop_assert!(close(base.pair.d_forward, other.pair.d_forward));
        prop_assert!(close(base.pair.d_reverse, other.pair.d_reverse));
        prop_assert!(close(base.pair.baseline_forward, other.pair.baseline_forward));
        prop_assert!(close(base.pair.baseline_reverse, other.pair.baseline_reverse));
    }

    #[test]
    fn baseline_grows_along_subset_chains(n in 5usize..=40, seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, 4);
        let scorer = Scorer::new(&data, GridStrategy::Sample).unwrap();
        let order = permutation(&mut r, 4);
        let mut prev: Option<(f64, f64, f64)> = None;
        for k in 1..=4 {
            let mut s = order[..k].to_vec();
            s.sort_unstable();
            let p = scorer.score_indices(&s).unwrap().pair;
            if let Some((f, rv, bound)) = prev {
                prop_assert!(p.baseline_forward >= f - 1e-9);
                prop_assert!(p.baseline_reverse >= rv - 1e-9);
                prop_assert!(p.bound() <= bound + 1e-9);
            }
            prev = Some((p.baseline_forward, p.baseline_reverse, p.bound()));
        }
    }

    #[test]
    fn baseline_is_rank_based(data in dataset_strategy()) {
        let names = data.feature_names().to_vec();
        let grid = build_grid(&data, &names, GridStrategy::Sample).unwrap();
        let features: Vec<(String, Vec<f64>)> = names
            .iter()
            .enumerate()
            .map(|(k, nm)| (nm.clone(), data.feature(k).iter().map(|v| v.exp()).collect()))
            .collect();
        let warped = Dataset::new("y", data.target().to_vec(), features).unwrap();
        let wgrid = build_grid(&warped, &names, GridStrategy::Sample).unwrap();
        for o in Orientation::BOTH {
            prop_assert_eq!(
                expected_fraction(&data, &names, &grid, o).unwrap().value,
                expected_fraction(&warped, &names, &wgrid, o).unwrap().value
            );
        }
    }

    #[test]
    fn selection_within_half_gap_of_assessment(data in dataset_strategy()) {
        let names = data.feature_names().to_vec();
        let s = Scorer::new(&data, GridStrategy::Sample).unwrap().score(&names).unwrap();
        let half_gap = 0.5 * (s.pair.adjusted_forward() - s.pair.adjusted_reverse()).abs();
        prop_assert!(s.selection_score <= s.assessment_score + half_gap + 1e-12);
        prop_assert!(s.selection_score <= s.assessment_score + 1e-12);
    }

    #[test]
    fn hypergeometric_pmf_normalizes(r in 2usize..60, i_frac in 0.0f64..1.0, b_frac in 0.0f64..1.0) {
        let i = 1 + ((r - 1) as f64 * i_frac) as usize;
        let b = 1 + ((r - 1) as f64 * b_frac) as usize;
        let lo = (i + b).saturating_sub(r);
        let s: f64 = (lo..=i.min(b)).map(|k| hypergeometric_weight(k, i, b, r).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grids_coincide_for_one_feature(data in dataset_strategy()) {
        let name = &data.feature_names()[0];
        let full = build_grid(&data, &[name], GridStrategy::Full).unwrap();
        let sample = build_grid(&data, &[name], GridStrategy::Sample).unwrap();
        prop_assert_eq!(&full.points, &sample.points);
        prop_assert!(sample.m() <= data.n_rows());
        let f = fraction_scores(&data, &[name], &full).unwrap();
        prop_assert!(f.forward <= 1.0 && f.reverse <= 1.0);
    }
}

mod common;

use cascade_core::stats::correlation::{spearman, pearson};
use cascade_core::stats::curve::adoption_curve;
use cascade_core::stats::kde::smooth_distribution;
use cascade_core::stats::popularity::tag_popularity;
use cascade_core::{build_dataset, BuildOptions, TagId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn paired() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spearman_ignores_increasing_transforms(pairs in paired(), shift in -5.0f64..5.0) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let Ok(rho) = spearman(&x, &y) else { return Ok(()); };
        let tx: Vec<f64> = x.iter().map(|v| (v / 10.0).exp() + shift).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.powi(3) - shift).collect();
        let rho_t = spearman(&tx, &ty).unwrap();
        prop_assert!((rho - rho_t).abs() < 1e-12, "{} vs {}", rho, rho_t);
        prop_assert!((-1.0..=1.0).contains(&rho));
        // And a decreasing transform of one side flips the sign.
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((spearman(&neg, &y).unwrap() + rho).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_bounded(pairs in paired()) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn smoothed_mass_is_one(values in prop::collection::vec(0.0f64..=1.0, 2..300), bw in prop::option::of(1e-4f64..2.0)) {
        if let Ok(curve) = smooth_distribution(&values, bw) {
            prop_assert!((curve.trapezoid_mass() - 1.0).abs() <= 1e-3);
            prop_assert!(curve.density.iter().all(|&y| y >= 0.0));
            prop_assert_eq!(curve.xs.len(), 512);
        }
    }

    #[test]
    fn curves_accumulate_to_adopter_count(seed in any::<u64>(), bucket in 1i64..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, f) = common::micro_dataset(&mut rng);
        let (d, _) = build_dataset(a, f, BuildOptions::default()).unwrap();
        let users = d.counts().users as f64;
        for pop in tag_popularity(&d) {
            let curve = adoption_curve(&d, pop.tag, bucket).unwrap();
            let cum: Vec<u64> = curve.points.iter().map(|p| p.cumulative_first_usages).collect();
            prop_assert!(cum.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*cum.last().unwrap(), pop.distinct_adopters);
            let subsequent: u64 = curve.points.iter().map(|p| p.subsequent_usages).sum();
            prop_assert_eq!(pop.distinct_adopters + subsequent, pop.total_usages);
            for p in &curve.points {
                prop_assert!((p.saturation - p.cumulative_first_usages as f64 / users).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&p.saturation));
            }
        }
        prop_assert!(adoption_curve(&d, TagId(d.counts().tags as u32), 1).is_err());
    }
}

#[test]
fn constant_series_has_no_rank_correlation() {
    assert!(spearman(&[1.0, 1.0, 1.0], &[0.1, 0.2, 0.3]).is_err());
}

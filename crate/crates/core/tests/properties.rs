use pansharp::features::{extract_features, Extractor};
use pansharp::losses::{
    gm_perceptual_loss, gm_reconstruction_loss, perceptual_loss, sam_loss, SamMode,
};
use pansharp::metrics::{metric_ergas, metric_q4, metric_sam, metric_uiqi};
use pansharp::raster::{read_raster, write_raster};
use pansharp::resample::{downsample_antialias, histogram_match, upsample};
use pansharp::Raster;
use proptest::prelude::*;

fn raster(w: usize, h: usize, b: usize) -> impl Strategy<Value = Raster> {
    prop::collection::vec(0.01f64..1.0, w * h * b)
        .prop_map(move |v| Raster::new(w, h, b, v).unwrap())
}

fn pair(w: usize, h: usize, b: usize) -> impl Strategy<Value = (Raster, Raster)> {
    (raster(w, h, b), raster(w, h, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn msr_round_trip_is_bit_exact(x in raster(5, 3, 2)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.msr");
        write_raster(&x, &path).unwrap();
        let y = read_raster(&path).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn sam_is_symmetric_and_scale_invariant((a, b) in pair(6, 6, 4), c in 0.1f64..10.0) {
        let ab = metric_sam(&a, &b).unwrap();
        prop_assert!((ab - metric_sam(&b, &a).unwrap()).abs() < 1e-12);
        let scaled = a.map(|v| v * c);
        prop_assert!((metric_sam(&scaled, &b).unwrap() - ab).abs() < 1e-9);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&ab));
        prop_assert!((sam_loss(&scaled, &b, SamMode::Cosine).unwrap()
            - sam_loss(&a, &b, SamMode::Cosine).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn self_comparisons_are_ideal(a in raster(16, 16, 4)) {
        prop_assert_eq!(metric_sam(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(metric_ergas(&a, &a, 4).unwrap(), 0.0);
        prop_assert!((metric_q4(&a, &a, 8).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uiqi_is_symmetric_and_bounded((a, b) in pair(8, 8, 1)) {
        let q = metric_uiqi(&a, &b, 4).unwrap();
        prop_assert!((q - metric_uiqi(&b, &a, 4).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&q));
    }

    #[test]
    fn histogram_match_is_idempotent((src, target) in pair(7, 5, 1)) {
        let once = histogram_match(&src, &target).unwrap();
        let twice = histogram_match(&once, &target).unwrap();
        prop_assert!(once.max_abs_diff(&twice) < 1e-9);
    }

    #[test]
    fn identity_extractor_collapses_feature_losses((a, b) in pair(4, 4, 3)) {
        let id = Extractor::Identity;
        let feats = extract_features(&a, &id).unwrap();
        prop_assert_eq!(feats.as_raster(), &a);
        let gm = gm_perceptual_loss(&a, &b, &id).unwrap();
        prop_assert!((gm - gm_reconstruction_loss(&a, &b).unwrap()).abs() < 1e-12);
        let euclid = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!((perceptual_loss(&a, &b, &id).unwrap() - euclid).abs() < 1e-9);
    }

    #[test]
    fn resampling_keeps_range_and_shape(a in raster(8, 8, 2), r in 2usize..=4) {
        let up = upsample(&a, r).unwrap();
        prop_assert_eq!(up.shape_string(), format!("{}x{}x2", 8 * r, 8 * r));
        prop_assert!(up.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let down = downsample_antialias(&up, r).unwrap();
        prop_assert!(down.same_shape(&a));
        let (lo, hi) = a.data().iter().fold((1.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        prop_assert!(down.data().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }
}

mod common;

use proptest::prelude::*;
use tsprobe_core::transforms::{parse_pipeline_str, transformed_trend_value};
use tsprobe_core::{
    apply_pipeline, compute_features, fit_trend_line, stl_decompose, synthesize_dataset, Error, Interval, StlConfig,
    TimeSeries, TransformKind, TransformStep,
};

fn identity_pipeline() -> Vec<TransformStep> {
    vec![
        TransformStep::whole(TransformKind::Trend { f: 1.0, h: 1.0, m: 0.0 }),
        TransformStep::whole(TransformKind::Seasonal { k: 1.0 }),
        TransformStep::whole(TransformKind::Translate { c: 0.0 }),
        TransformStep::whole(TransformKind::Noise {
            p: 0.0,
            sigma_rel: 0.3,
            seed: 9,
        }),
    ]
}

fn fixture_series() -> Vec<TimeSeries> {
    let ds = synthesize_dataset(20, 192, 24, 5).unwrap();
    let mut out: Vec<TimeSeries> = ds.train().iter().chain(ds.test()).cloned().collect();
    out.push(TimeSeries::from_values("flat", vec![7.5; 96], 24).unwrap());
    out.push(TimeSeries::from_values("tiny", (0..72).map(|i| 1e-300 * i as f64).collect(), 24).unwrap());
    out.push(TimeSeries::from_values("huge", (0..72).map(|i| 1e12 + (i % 24) as f64).collect(), 24).unwrap());
    out
}

#[test]
fn identity_pipeline_is_bit_exact() {
    let steps = identity_pipeline();
    for s in fixture_series() {
        let out = apply_pipeline(&s, &steps, &StlConfig::default()).unwrap();
        assert_eq!(out.transformed_values, s.values(), "series {}", s.id());
    }
}

#[test]
fn scalar_trend_value() {
    // 10 + 2 * (0.5 * 4 + 2 / 2) + 0.1 * 10 * 4 = 10 + 6 + 4
    assert_eq!(transformed_trend_value(10.0, 0.5, 2.0, 4, 2.0, 2.0, 0.1), 20.0);
}

#[test]
fn trend_edit_matches_formula_on_decomposition() {
    let s = &synthesize_dataset(1, 192, 24, 3).unwrap().train()[0].clone();
    let (f, h, m) = (1.5, 2.0, 0.01);
    let step = TransformStep::on(TransformKind::Trend { f, h, m }, 50, 120);
    let out = apply_pipeline(s, &[step], &StlConfig::default()).unwrap();
    let d = stl_decompose(s, &StlConfig::default()).unwrap();
    let fit = fit_trend_line(&d.trend).unwrap();
    for i in 1..=s.len() {
        let want = if (50..=120).contains(&i) {
            fit.beta0 + f * (fit.beta1 * i as f64 + fit.deviations[i - 1] / h) + m * fit.beta0 * i as f64
        } else {
            d.trend[i - 1]
        };
        assert!((out.components.trend[i - 1] - want).abs() <= 1e-9 * want.abs().max(1.0));
    }
}

#[test]
fn level_jump_raises_trend_strength_and_slope() {
    let s = &synthesize_dataset(1, 240, 24, 8).unwrap().train()[0].clone();
    let stl = StlConfig::default();
    let before = compute_features(&stl_decompose(s, &stl).unwrap());
    let step = TransformStep::on(TransformKind::Translate { c: 40.0 }, 120, 240);
    let after = apply_pipeline(s, &[step], &stl).unwrap().features(&stl).unwrap().features;
    assert!(after.trend_strength > before.trend_strength);
    assert!(after.trend_slope > before.trend_slope);
}

#[test]
fn out_of_range_interval_names_the_step() {
    let s = &synthesize_dataset(1, 96, 24, 1).unwrap().train()[0].clone();
    let steps = vec![
        TransformStep::whole(TransformKind::Seasonal { k: 2.0 }),
        TransformStep::on(TransformKind::Translate { c: 1.0 }, 90, 97),
    ];
    let err = apply_pipeline(s, &steps, &StlConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Step { step: 1, .. }), "{err}");
}

#[test]
fn malformed_json_pipeline_is_rejected_with_index() {
    let err = parse_pipeline_str(r#"[{"kind":"seasonal","params":{"k":2}},{"kind":"translate","params":{"c":1},"interval":[5,2]}]"#)
        .unwrap_err();
    assert!(matches!(err, Error::Step { step: 1, .. }), "{err}");
    assert!(parse_pipeline_str(r#"[{"kind":"warp","params":{}}]"#).is_err());
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 96)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn edits_stay_inside_their_interval(
        x in series(),
        start in 1usize..96,
        len in 1usize..40,
        which in 0usize..4,
        amount in 0.2..3.0f64,
    ) {
        let end = (start + len).min(96);
        let kind = match which {
            0 => TransformKind::Trend { f: amount, h: 1.0 + amount, m: 0.01 },
            1 => TransformKind::Seasonal { k: amount },
            2 => TransformKind::Translate { c: amount },
            _ => TransformKind::Noise { p: 0.5, sigma_rel: amount, seed: 3 },
        };
        let s = TimeSeries::from_values("x", x.clone(), 12).unwrap();
        let out = apply_pipeline(&s, &[TransformStep::new(kind, Some(Interval::new(start, end)))], &StlConfig::default()).unwrap();
        for i in 1..=96 {
            if !(start..=end).contains(&i) {
                prop_assert_eq!(out.transformed_values[i - 1], x[i - 1], "index {} outside [{}, {}]", i, start, end);
            }
        }
    }

    #[test]
    fn noise_is_reproducible_per_seed(x in series(), seed in any::<u64>()) {
        let s = TimeSeries::from_values("x", x, 12).unwrap();
        let step = [TransformStep::whole(TransformKind::Noise { p: 0.3, sigma_rel: 0.5, seed })];
        let a = apply_pipeline(&s, &step, &StlConfig::default()).unwrap();
        let b = apply_pipeline(&s, &step, &StlConfig::default()).unwrap();
        prop_assert_eq!(a.transformed_values, b.transformed_values);
    }
}

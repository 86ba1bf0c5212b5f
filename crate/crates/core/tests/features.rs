mod common;

use proptest::prelude::*;
use tsprobe_core::{compute_features, feature_report, stl_decompose, Decomposition, StlConfig, TimeSeries};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn matches_straight_line_oracle_on_random_decompositions() {
    let mut rng = common::rng(2024);
    for case in 0..100 {
        let d = common::random_decomposition(&mut rng);
        let got = compute_features(&d).to_array();
        let want = common::oracle_features(&d.trend, &d.seasonal, &d.remainder);
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!(close(*g, *w, 1e-9), "case {case} F{}: {g} vs {w}", k + 1);
        }
    }
}

#[test]
fn flat_trend_is_flagged_not_nan() {
    let n = 48;
    let d = Decomposition::new(vec![3.0; n], vec![0.0; n], vec![0.0; n], 12).unwrap();
    let rep = feature_report(&d);
    assert!(rep.features.to_array().iter().all(|v| v.is_finite()));
    assert!(rep.degenerate.trend_strength);
    assert!(rep.degenerate.seasonal_strength);
    assert!(rep.degenerate.trend_linearity);
    assert_eq!(rep.features.trend_slope, 0.0);
}

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    (
        -20.0..20.0f64,
        -0.5..0.5f64,
        0.0..5.0f64,
        prop::collection::vec(-1.0..1.0f64, 72),
    )
        .prop_map(|(a, b, c, noise)| {
            noise
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let i = i as f64;
                    a + b * i + c * (2.0 * std::f64::consts::PI * i / 12.0).sin() + e
                })
                .collect()
        })
}

fn features_of(values: Vec<f64>) -> [f64; 4] {
    let s = TimeSeries::from_values("p", values, 12).unwrap();
    compute_features(&stl_decompose(&s, &StlConfig::default()).unwrap()).to_array()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn strengths_bounded_shift_and_scale_behave(
        x in series_strategy(),
        shift in -100.0..100.0f64,
        scale in 0.1..10.0f64,
    ) {
        let base = features_of(x.clone());
        for v in &base[..3] {
            prop_assert!((0.0..=1.0).contains(v), "strength out of range: {v}");
        }

        let shifted = features_of(x.iter().map(|v| v + shift).collect());
        for k in 0..4 {
            prop_assert!((shifted[k] - base[k]).abs() <= 1e-6, "shift F{}: {} vs {}", k + 1, shifted[k], base[k]);
        }

        let scaled = features_of(x.iter().map(|v| v * scale).collect());
        for k in 0..3 {
            prop_assert!((scaled[k] - base[k]).abs() <= 1e-6, "scale F{}: {} vs {}", k + 1, scaled[k], base[k]);
        }
        prop_assert!((scaled[3] - scale * base[3]).abs() <= 1e-9 * (1.0 + scale * base[3].abs()));
    }
}

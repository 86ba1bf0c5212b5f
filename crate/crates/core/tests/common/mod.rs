#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tsprobe_core::{synthesize, Dataset, Decomposition, DenseNetConfig, Direction, RegionSelector, SynthConfig};

/// Straight-line feature formulas, written without any crate helpers.
pub fn oracle_features(t: &[f64], s: &[f64], r: &[f64]) -> [f64; 4] {
    fn var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mut sum = 0.0;
        for x in xs {
            sum += x;
        }
        let m = sum / n;
        let mut acc = 0.0;
        for x in xs {
            acc += (x - m) * (x - m);
        }
        acc / (n - 1.0)
    }
    let n = t.len();
    let tr: Vec<f64> = (0..n).map(|i| t[i] + r[i]).collect();
    let sr: Vec<f64> = (0..n).map(|i| s[i] + r[i]).collect();
    let f1 = (1.0 - var(r) / var(&tr)).max(0.0);
    let f2 = (1.0 - var(r) / var(&sr)).max(0.0);

    // normal equations in raw sums
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (k, y) in t.iter().enumerate() {
        let x = (k + 1) as f64;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let nf = n as f64;
    let b1 = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let b0 = (sy - b1 * sx) / nf;
    let delta: Vec<f64> = (0..n).map(|k| t[k] - b0 - b1 * (k + 1) as f64).collect();
    let f3 = (1.0 - var(&delta) / var(t)).max(0.0);
    [f1, f2, f3, b1]
}

pub fn random_decomposition(rng: &mut ChaCha8Rng) -> Decomposition {
    let n = rng.random_range(48..400);
    let sp = rng.random_range(2..13);
    let level = rng.random_range(-50.0..50.0);
    let slope = rng.random_range(-1.0..1.0);
    let wiggle = rng.random_range(0.0..5.0);
    let amp = rng.random_range(0.0..10.0);
    let noise = Normal::new(0.0, rng.random_range(0.1..3.0)).unwrap();
    let t: Vec<f64> = (0..n)
        .map(|i| level + slope * i as f64 + wiggle * (i as f64 / 17.0).sin())
        .collect();
    let s: Vec<f64> = (0..n)
        .map(|i| amp * (2.0 * std::f64::consts::PI * (i % sp) as f64 / sp as f64).cos())
        .collect();
    let r: Vec<f64> = (0..n).map(|_| noise.sample(rng)).collect();
    Decomposition::new(t, s, r, sp).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Desk-scale jump-augmentation fixture: 60 clean training series of length
/// 432, 40 test series of length 192 of which the last 13 carry a level jump.
pub fn experiment_dataset() -> Dataset {
    let mut cfg = SynthConfig::new(60, 432, 24, 7);
    cfg.n_test = 40;
    cfg.test_length = 192;
    cfg.jump_test = 13;
    cfg.context_length = 168;
    cfg.horizon = 24;
    synthesize(&cfg).unwrap()
}

/// Jump series land at large component-0 values in this fixture.
pub fn experiment_selector() -> RegionSelector {
    RegionSelector {
        axis: 0,
        threshold: 1.0,
        direction: Direction::Greater,
    }
}

pub fn experiment_net() -> DenseNetConfig {
    DenseNetConfig {
        epochs: 30,
        batches_per_epoch: 20,
        batch_size: 128,
        ..DenseNetConfig::default()
    }
}

pub fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|v| v * v).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Central finite-difference gradient of `loss` at `params`.
pub fn numeric_gradient(params: &[f64], eps: f64, mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + eps;
            let up = loss(&p);
            p[k] = orig - eps;
            let down = loss(&p);
            p[k] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

//! Two-dimensional PCA embedding of feature vectors.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::series::Split;

pub const N_FEATURES: usize = 4;

/// Display cap on stored points.
pub const DEFAULT_MAX_POINTS: usize = 25_600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub id: String,
    pub split: Split,
    pub component0: f64,
    pub component1: f64,
    pub features: FeatureVector,
}

impl ProjectedPoint {
    pub fn component(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.component0
        } else {
            self.component1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpace {
    pub means: [f64; N_FEATURES],
    /// Sample standard deviations; zero for constant features.
    pub stds: [f64; N_FEATURES],
    /// Rows are the two leading principal directions.
    pub basis: [[f64; N_FEATURES]; 2],
    pub explained_variance: [f64; 2],
    /// All four eigenvalues of the standardized covariance, descending.
    pub eigenvalues: [f64; N_FEATURES],
    pub points: Vec<ProjectedPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Fit the standardization and basis on training points only.
    pub train_only: bool,
    /// Keep at most this many points (seeded subsample).
    pub max_points: Option<usize>,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            train_only: false,
            max_points: Some(DEFAULT_MAX_POINTS),
            seed: 0,
        }
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as rows.
pub fn symmetric_eigen<const N: usize>(m: [[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    let mut a = m;
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|p| (p + 1..N).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        let scale: f64 = (0..N).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let mut values = [0.0; N];
    let mut vectors = [[0.0; N]; N];
    for (rank, &i) in order.iter().enumerate() {
        values[rank] = a[i][i];
        for k in 0..N {
            vectors[rank][k] = v[k][i];
        }
    }
    (values, vectors)
}

/// Flip a direction so its largest-magnitude loading is positive.
fn fix_sign<const N: usize>(row: &mut [f64; N]) {
    let mut best = 0;
    for k in 1..N {
        if row[k].abs() > row[best].abs() {
            best = k;
        }
    }
    if row[best] < 0.0 {
        row.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn fit_pca(features: &[(String, Split, FeatureVector)], opts: &FitOptions) -> Result<InstanceSpace> {
    let fit_rows: Vec<[f64; N_FEATURES]> = features
        .iter()
        .filter(|(_, split, _)| !opts.train_only || *split == Split::Train)
        .map(|(_, _, fv)| fv.to_array())
        .collect();
    let n = fit_rows.len();
    if n < 3 {
        return Err(Error::Validation(format!(
            "instance space needs at least 3 feature vectors, got {n}"
        )));
    }
    if fit_rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("feature vectors contain non-finite values".into()));
    }

    let mut means = [0.0; N_FEATURES];
    for row in &fit_rows {
        for k in 0..N_FEATURES {
            means[k] += row[k];
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut stds = [0.0; N_FEATURES];
    for row in &fit_rows {
        for k in 0..N_FEATURES {
            stds[k] += (row[k] - means[k]).powi(2);
        }
    }
    for k in 0..N_FEATURES {
        stds[k] = (stds[k] / (n - 1) as f64).sqrt();
        // constant up to rounding
        if stds[k] <= 1e-12 * means[k].abs().max(1e-300) {
            stds[k] = 0.0;
        }
    }
    if stds.iter().all(|&s| s == 0.0) {
        return Err(Error::DegenerateFeatures);
    }

    let z: Vec<[f64; N_FEATURES]> = fit_rows.iter().map(|r| standardize(r, &means, &stds)).collect();
    let mut cov = [[0.0; N_FEATURES]; N_FEATURES];
    for row in &z {
        for i in 0..N_FEATURES {
            for j in 0..N_FEATURES {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for row in cov.iter_mut() {
        row.iter_mut().for_each(|c| *c /= (n - 1) as f64);
    }

    let (mut eigenvalues, vectors) = symmetric_eigen(cov);
    eigenvalues.iter_mut().for_each(|e| {
        if *e < 0.0 {
            *e = 0.0;
        }
    });
    let mut basis = [vectors[0], vectors[1]];
    basis.iter_mut().for_each(fix_sign);

    let mut space = InstanceSpace {
        means,
        stds,
        basis,
        explained_variance: [eigenvalues[0], eigenvalues[1]],
        eigenvalues,
        points: Vec::new(),
    };

    let keep: Vec<usize> = match opts.max_points {
        Some(cap) if features.len() > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut idx = sample(&mut rng, features.len(), cap).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..features.len()).collect(),
    };
    space.points = keep
        .into_iter()
        .map(|i| {
            let (id, split, fv) = &features[i];
            let (c0, c1) = space.project(fv);
            ProjectedPoint {
                id: id.clone(),
                split: *split,
                component0: c0,
                component1: c1,
                features: *fv,
            }
        })
        .collect();
    Ok(space)
}

fn standardize(row: &[f64; N_FEATURES], means: &[f64; N_FEATURES], stds: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
    let mut out = [0.0; N_FEATURES];
    for k in 0..N_FEATURES {
        out[k] = if stds[k] > 0.0 {
            (row[k] - means[k]) / stds[k]
        } else {
            0.0
        };
    }
    out
}

impl InstanceSpace {
    /// `((fv - means) / stds) . basis^T`, constant features contributing 0.
    pub fn project(&self, fv: &FeatureVector) -> (f64, f64) {
        let z = standardize(&fv.to_array(), &self.means, &self.stds);
        let dot = |row: &[f64; N_FEATURES]| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        (dot(&self.basis[0]), dot(&self.basis[1]))
    }

    pub fn point(&self, split: Split, id: &str) -> Option<&ProjectedPoint> {
        self.points.iter().find(|p| p.split == split && p.id == id)
    }

    pub fn points_in(&self, split: Split) -> impl Iterator<Item = &ProjectedPoint> {
        self.points.iter().filter(move |p| p.split == split)
    }
}

pub fn project(space: &InstanceSpace, fv: &FeatureVector) -> (f64, f64) {
    space.project(fv)
}

/// Quantity binned by [`histogram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramAxis {
    Component(usize),
    Feature(usize),
}

impl Default for HistogramAxis {
    fn default() -> Self {
        HistogramAxis::Component(0)
    }
}

impl std::str::FromStr for HistogramAxis {
    type Err = Error;

    /// Accepts `c0`, `c1`, `0`, `1` and `F1`..`F4`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "c0" | "component0" => Ok(HistogramAxis::Component(0)),
            "1" | "c1" | "component1" => Ok(HistogramAxis::Component(1)),
            "F1" | "f1" => Ok(HistogramAxis::Feature(0)),
            "F2" | "f2" => Ok(HistogramAxis::Feature(1)),
            "F3" | "f3" => Ok(HistogramAxis::Feature(2)),
            "F4" | "f4" => Ok(HistogramAxis::Feature(3)),
            other => Err(Error::Validation(format!("unknown histogram axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub train: usize,
    pub test: usize,
}

impl HistogramBin {
    pub fn total(&self) -> usize {
        self.train + self.test
    }
}

/// Equal-width bins over the observed range of the chosen quantity.
pub fn histogram(space: &InstanceSpace, axis: HistogramAxis, bins: usize) -> Result<Vec<HistogramBin>> {
    let value = |p: &ProjectedPoint| -> Result<f64> {
        match axis {
            HistogramAxis::Component(c @ 0..=1) => Ok(p.component(c)),
            HistogramAxis::Feature(f @ 0..=3) => Ok(p.features.to_array()[f]),
            other => Err(Error::Validation(format!("invalid histogram axis {other:?}"))),
        }
    };
    if bins == 0 {
        return Err(Error::Validation("histogram needs at least one bin".into()));
    }
    let values: Vec<(f64, Split)> = space
        .points
        .iter()
        .map(|p| value(p).map(|v| (v, p.split)))
        .collect::<Result<_>>()?;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
    let (lo, hi) = if values.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            low: lo + width * b as f64,
            high: if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 },
            train: 0,
            test: 0,
        })
        .collect();
    for (v, split) in values {
        let b = if width > 0.0 {
            (((v - lo) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        match split {
            Split::Train => out[b].train += 1,
            Split::Test => out[b].test += 1,
        }
    }
    Ok(out)
}

//! Additive corruption: outliers are appended, clean samples are untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    /// `X_bad = Σ yᵢxᵢ / (α·n_bad)`, `y_bad = −β`.
    RidgeAlphaBeta,
    /// Copies of a cluster center carrying the opposite label.
    LabelFlipCluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    /// Outliers added, as a fraction of the clean size.
    pub eps: f64,
    pub kind: AttackKind,
    pub alpha: f64,
    pub beta: f64,
    /// Per-outlier Gaussian perturbation; `None` means 1% of the median
    /// feature standard deviation.
    pub noise_scale: Option<f64>,
    pub cluster_center: Option<Vec<f64>>,
    pub seed: u64,
}

impl AttackSpec {
    pub fn ridge(eps: f64, alpha: f64, beta: f64, seed: u64) -> Self {
        Self {
            eps,
            kind: AttackKind::RidgeAlphaBeta,
            alpha,
            beta,
            noise_scale: None,
            cluster_center: None,
            seed,
        }
    }

    pub fn label_flip(eps: f64, cluster_center: Option<Vec<f64>>, seed: u64) -> Self {
        Self {
            eps,
            kind: AttackKind::LabelFlipCluster,
            alpha: 1.0,
            beta: 1.0,
            noise_scale: None,
            cluster_center,
            seed,
        }
    }

    pub fn with_noise(mut self, noise_scale: f64) -> Self {
        self.noise_scale = Some(noise_scale);
        self
    }
}

/// Corrupted training set plus ground truth.
///
/// Defenses receive only `data`; `is_outlier` is for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    pub data: Dataset,
    pub is_outlier: Vec<bool>,
}

impl Corrupted {
    /// Uncorrupted data with all-false flags.
    pub fn clean(data: Dataset) -> Self {
        let is_outlier = vec![false; data.len()];
        Self { data, is_outlier }
    }

    pub fn outlier_count(&self) -> usize {
        self.is_outlier.iter().filter(|b| **b).count()
    }

    /// `(good, bad)` counts among `ids`.
    pub fn split_counts(&self, ids: &[usize]) -> (usize, usize) {
        let bad = ids.iter().filter(|&&i| self.is_outlier[i]).count();
        (ids.len() - bad, bad)
    }
}

fn outlier_count(eps: f64, n: usize) -> Result<usize> {
    if !(eps > 0.0 && eps <= 0.3) {
        return Err(Error::InvalidArgument(format!(
            "eps must be in (0, 0.3], got {eps}"
        )));
    }
    let k = (eps * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::AttackBudgetEmpty);
    }
    Ok(k)
}

/// Median over columns of the per-column standard deviation.
pub fn median_feature_scale(x: &Matrix) -> f64 {
    let n = x.rows();
    if n < 2 {
        return 1.0;
    }
    let mut sds: Vec<f64> = (0..x.cols())
        .map(|j| {
            let mean = (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64;
            ((0..n).map(|i| (x.get(i, j) - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        })
        .collect();
    if sds.is_empty() {
        return 1.0;
    }
    sds.sort_by(f64::total_cmp);
    sds[sds.len() / 2]
}

fn noisy_copies(
    center: &[f64],
    k: usize,
    noise: f64,
    seed: u64,
) -> Result<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = center.len();
    let mut out = Vec::with_capacity(k * d);
    for _ in 0..k {
        out.extend(center.iter().map(|c| {
            let g: f64 = StandardNormal.sample(&mut rng);
            c + noise * g
        }));
    }
    Matrix::from_vec(k, d, out)
}

fn append(data: &Dataset, x: &Matrix, y: &[f64]) -> Result<Corrupted> {
    let n = data.len();
    let out = data.append(x, y)?;
    let mut is_outlier = vec![false; out.len()];
    is_outlier[n..].iter_mut().for_each(|b| *b = true);
    Ok(Corrupted {
        data: out,
        is_outlier,
    })
}

/// Appends `round(eps·n)` copies of `Σ yᵢxᵢ / (α·n_bad)` labelled `−β`.
///
/// With `α == β` and no noise, `w = 0` zeroes the unregularized least-squares
/// gradient over the corrupted set.
pub fn attack_ridge(data: &Dataset, spec: &AttackSpec) -> Result<Corrupted> {
    if spec.kind != AttackKind::RidgeAlphaBeta {
        return Err(Error::InvalidArgument("expected ridge_alpha_beta spec".into()));
    }
    if !(spec.alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be > 0".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = outlier_count(spec.eps, data.len())?;
    let mut center = data.features().tmul_vec(data.labels());
    let c = 1.0 / (spec.alpha * k as f64);
    center.iter_mut().for_each(|v| *v *= c);
    let noise = spec
        .noise_scale
        .unwrap_or_else(|| 0.01 * median_feature_scale(data.features()));
    let x = noisy_copies(&center, k, noise, spec.seed)?;
    append(data, &x, &vec![-spec.beta; k])
}

/// Mean feature vector of the class with label `label`.
pub fn class_mean(data: &Dataset, label: f64) -> Option<Vec<f64>> {
    let mut mu = vec![0.0; data.dim()];
    let mut count = 0usize;
    for i in 0..data.len() {
        let s = data.sample(i);
        if s.y == label {
            axpy(1.0, s.x, &mut mu);
            count += 1;
        }
    }
    (count > 0).then(|| mu.into_iter().map(|v| v / count as f64).collect())
}

/// Label of the smaller class (positive on ties).
pub fn minority_label(data: &Dataset) -> f64 {
    let plus = data.labels().iter().filter(|&&y| y > 0.0).count();
    if plus <= data.len() - plus {
        1.0
    } else {
        -1.0
    }
}

/// `shift·m + radius·q` where `m` is the minority class mean and `q` a seeded
/// unit vector orthogonal to `m`.
pub fn offset_cluster_center(data: &Dataset, shift: f64, radius: f64, seed: u64) -> Result<Vec<f64>> {
    data.check_binary()?;
    let m = class_mean(data, minority_label(data)).ok_or(Error::EmptyInput)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..m.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mm = crate::linalg::dot(&m, &m);
    if mm > 0.0 {
        let c = crate::linalg::dot(&q, &m) / mm;
        axpy(-c, &m, &mut q);
    }
    let qn = crate::linalg::norm(&q);
    if qn > 0.0 {
        q.iter_mut().for_each(|v| *v /= qn);
    }
    Ok(m.iter().zip(&q).map(|(a, b)| shift * a + radius * b).collect())
}

/// Appends `round(eps·n)` noisy copies of a cluster center, all carrying the
/// label opposite to the minority class. The default center is the minority
/// class mean.
pub fn attack_label_flip(data: &Dataset, spec: &AttackSpec) -> Result<Corrupted> {
    if spec.kind != AttackKind::LabelFlipCluster {
        return Err(Error::InvalidArgument("expected label_flip_cluster spec".into()));
    }
    data.check_binary()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = outlier_count(spec.eps, data.len())?;
    let minority = minority_label(data);
    let center = match &spec.cluster_center {
        Some(c) if c.len() == data.dim() => c.clone(),
        Some(c) => {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: c.len(),
            })
        }
        None => class_mean(data, minority).ok_or(Error::EmptyInput)?,
    };
    let noise = spec
        .noise_scale
        .unwrap_or_else(|| 0.01 * median_feature_scale(data.features()));
    let x = noisy_copies(&center, k, noise, spec.seed)?;
    append(data, &x, &vec![-minority; k])
}

/// Dispatches on `spec.kind`.
pub fn apply_attack(data: &Dataset, spec: &AttackSpec) -> Result<Corrupted> {
    match spec.kind {
        AttackKind::RidgeAlphaBeta => attack_ridge(data, spec),
        AttackKind::LabelFlipCluster => attack_label_flip(data, spec),
    }
}

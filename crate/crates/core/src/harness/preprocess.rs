//! Robust centering and per-coordinate scaling, fitted on training data only.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::filter::{robust_mean, FilterConfig};
use crate::linalg::Matrix;

const MAD_TO_SD: f64 = 1.4826;
const SCALE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub train: Dataset,
    pub test: Dataset,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `1.4826·MAD` of column `j`.
fn robust_sd(x: &Matrix, j: usize) -> f64 {
    let mut col: Vec<f64> = (0..x.rows()).map(|i| x.get(i, j)).collect();
    let m = median(&mut col);
    let mut dev: Vec<f64> = col.iter().map(|v| (v - m).abs()).collect();
    MAD_TO_SD * median(&mut dev)
}

fn transform(data: &Dataset, center: &[f64], scale: &[f64]) -> Result<Dataset> {
    let x = data.features();
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for r in x.row_iter() {
        out.extend(r.iter().zip(center).zip(scale).map(|((v, c), s)| (v - c) / s));
    }
    let mut d = Dataset::new(Matrix::from_vec(x.rows(), x.cols(), out)?, data.labels().to_vec())?;
    d.set_active(data.active_mask().to_vec())?;
    Ok(d)
}

/// Shifts both splits by a robust mean of the active training features and,
/// with `do_scale`, divides each coordinate by its robust spread (MAD·1.4826,
/// floored at 1e-12). Test data never feeds the statistics.
pub fn robust_center_scale(
    train: &Dataset,
    test: &Dataset,
    eps: f64,
    do_scale: bool,
    seed: u64,
) -> Result<Preprocessed> {
    let x = train.active_features();
    let d = x.cols();
    let center = if x.rows() >= 2 {
        let mut sds: Vec<f64> = (0..d).map(|j| robust_sd(&x, j)).collect();
        let sigma = median(&mut sds).max(SCALE_FLOOR);
        let cfg = FilterConfig {
            seed,
            ..Default::default()
        };
        robust_mean(&x, sigma, eps.clamp(0.0, 0.3), &cfg)?.mean
    } else {
        crate::linalg::mean_rows(&x)?
    };
    let scale = if do_scale {
        let centered = crate::linalg::center_rows(&x, &center)?;
        (0..d).map(|j| robust_sd(&centered, j).max(SCALE_FLOOR)).collect()
    } else {
        vec![1.0; d]
    };
    Ok(Preprocessed {
        train: transform(train, &center, &scale)?,
        test: transform(test, &center, &scale)?,
        center,
        scale,
    })
}

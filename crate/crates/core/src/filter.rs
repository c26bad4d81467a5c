//! Spectral outlier scores and the filters built on them.
//!
//! Scores are squared projections of the centered rows onto the top right
//! singular vector of the centered matrix. The randomized filter removes each
//! point with probability proportional to its score unless the mean score is
//! already below `threshold_mult·σ²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    center_rows, dot, mean_rows, top_right_singular_vector, Matrix, DEFAULT_POWER_ITERS,
    DEFAULT_POWER_TOL,
};
use crate::seed::derive_seed;

/// Per-sample outlier scores plus the direction they were measured along.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    /// Sample ids, aligned with `scores`.
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    /// Unit direction. Arbitrary for non-spectral scores.
    pub direction: Vec<f64>,
    /// Top singular value of the centered matrix over `sqrt(rows)`.
    pub sigma_hat: f64,
    pub degenerate: bool,
}

impl ScoreReport {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn mean_score(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.scores.iter().sum::<f64>() / self.scores.len() as f64
        }
    }

    /// Concatenates reports computed on disjoint groups. The direction and
    /// `sigma_hat` of the group with the largest `sigma_hat` are kept.
    pub fn merge(parts: Vec<ScoreReport>) -> Option<ScoreReport> {
        let lead = parts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.sigma_hat.total_cmp(&b.1.sigma_hat))?
            .0;
        let mut out = ScoreReport {
            indices: Vec::new(),
            scores: Vec::new(),
            direction: parts[lead].direction.clone(),
            sigma_hat: parts[lead].sigma_hat,
            degenerate: parts.iter().all(|p| p.degenerate),
        };
        for p in parts {
            out.indices.extend(p.indices);
            out.scores.extend(p.scores);
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Randomized,
    TopP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub sigma: f64,
    pub threshold_mult: f64,
    pub mode: FilterMode,
    pub p_fraction: f64,
    pub seed: u64,
}

pub const DEFAULT_THRESHOLD_MULT: f64 = 12.0;

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            threshold_mult: DEFAULT_THRESHOLD_MULT,
            mode: FilterMode::Randomized,
            p_fraction: 0.0,
            seed: 0,
        }
    }
}

/// Ids partitioned by a filter.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilterDecision {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
}

/// Spectral scores of `rows`; `ids[j]` names row `j`.
pub fn compute_scores(rows: &Matrix, ids: &[usize], seed: u64) -> Result<ScoreReport> {
    if rows.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if ids.len() != rows.rows() {
        return Err(Error::DimensionMismatch {
            expected: rows.rows(),
            got: ids.len(),
        });
    }
    let mu = mean_rows(rows)?;
    let centered = center_rows(rows, &mu)?;
    let sv = top_right_singular_vector(&centered, DEFAULT_POWER_TOL, DEFAULT_POWER_ITERS, seed)?;
    let scores = if sv.degenerate {
        vec![0.0; rows.rows()]
    } else {
        centered
            .row_iter()
            .map(|r| dot(r, &sv.vector).powi(2))
            .collect()
    };
    Ok(ScoreReport {
        indices: ids.to_vec(),
        scores,
        direction: sv.vector,
        sigma_hat: sv.value / (rows.rows() as f64).sqrt(),
        degenerate: sv.degenerate,
    })
}

/// [`compute_scores`] with ids `0..rows`.
pub fn compute_scores_indexed(rows: &Matrix, seed: u64) -> Result<ScoreReport> {
    let ids: Vec<usize> = (0..rows.rows()).collect();
    compute_scores(rows, &ids, seed)
}

/// True when the report is already a fixed point of the randomized filter.
pub fn below_threshold(report: &ScoreReport, sigma: f64, threshold_mult: f64) -> bool {
    report.mean_score() <= threshold_mult * sigma * sigma
}

/// Removes every id whose score exceeds `T ~ U[0, max score)`, unless the mean
/// score is at most `threshold_mult·σ²`.
pub fn randomized_filter(report: &ScoreReport, cfg: &FilterConfig) -> Result<FilterDecision> {
    if report.is_empty() {
        return Err(Error::EmptyInput);
    }
    if below_threshold(report, cfg.sigma, cfg.threshold_mult) {
        return Ok(FilterDecision {
            kept: report.indices.clone(),
            removed: Vec::new(),
        });
    }
    let max = report.scores.iter().copied().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = rng.random::<f64>() * max;
    let mut out = FilterDecision::default();
    for (&id, &s) in report.indices.iter().zip(&report.scores) {
        if s > t {
            out.removed.push(id);
        } else {
            out.kept.push(id);
        }
    }
    Ok(out)
}

/// Number of points a top-p pass removes from `count` points.
pub fn top_p_count(p_fraction: f64, count: usize) -> usize {
    // slack absorbs products like 0.1·30 = 3.0000000000000004
    ((p_fraction * count as f64 - 1e-9).ceil().max(0.0) as usize).min(count)
}

/// Removes the `ceil(p·count)` highest scores; ties go to the lower id.
pub fn top_p_filter(report: &ScoreReport, p_fraction: f64) -> Result<FilterDecision> {
    if !(0.0..1.0).contains(&p_fraction) {
        return Err(Error::InvalidArgument(format!(
            "p_fraction must be in [0, 1), got {p_fraction}"
        )));
    }
    let k = top_p_count(p_fraction, report.len());
    let mut order: Vec<usize> = (0..report.len()).collect();
    order.sort_by(|&a, &b| {
        report.scores[b]
            .total_cmp(&report.scores[a])
            .then(report.indices[a].cmp(&report.indices[b]))
    });
    let mut drop = vec![false; report.len()];
    for &j in &order[..k] {
        drop[j] = true;
    }
    let mut out = FilterDecision::default();
    for (j, &id) in report.indices.iter().enumerate() {
        if drop[j] {
            out.removed.push(id);
        } else {
            out.kept.push(id);
        }
    }
    Ok(out)
}

/// Dispatches on `cfg.mode`.
pub fn apply_filter(report: &ScoreReport, cfg: &FilterConfig) -> Result<FilterDecision> {
    match cfg.mode {
        FilterMode::Randomized => randomized_filter(report, cfg),
        FilterMode::TopP => top_p_filter(report, cfg.p_fraction),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustMean {
    pub mean: Vec<f64>,
    pub budget_exceeded: bool,
    pub removed: usize,
    pub rounds: usize,
}

/// Filtered mean of the rows of `points`.
///
/// Repeats score + randomized filter until a fixed point, or until the total
/// removal would exceed `3·eps_budget·n`, in which case the survivors before
/// that step are averaged and `budget_exceeded` is set.
pub fn robust_mean(
    points: &Matrix,
    sigma: f64,
    eps_budget: f64,
    cfg: &FilterConfig,
) -> Result<RobustMean> {
    let n = points.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "robust_mean needs at least 2 points".into(),
        ));
    }
    if !(0.0..=0.3).contains(&eps_budget) {
        return Err(Error::InvalidArgument(format!(
            "eps_budget must be in [0, 0.3], got {eps_budget}"
        )));
    }
    let budget = 3.0 * eps_budget * n as f64;
    let mut alive: Vec<usize> = (0..n).collect();
    let mut removed = 0usize;
    let mut rounds = 0usize;
    let mut budget_exceeded = false;
    let fcfg = FilterConfig {
        sigma,
        mode: FilterMode::Randomized,
        ..cfg.clone()
    };
    loop {
        rounds += 1;
        let sub = points.select_rows(&alive);
        let report = compute_scores(&sub, &alive, derive_seed(cfg.seed, &[rounds as u64, 0]))?;
        let step_cfg = FilterConfig {
            seed: derive_seed(cfg.seed, &[rounds as u64, 1]),
            ..fcfg.clone()
        };
        let dec = randomized_filter(&report, &step_cfg)?;
        if dec.removed.is_empty() {
            break;
        }
        if (removed + dec.removed.len()) as f64 > budget || dec.kept.is_empty() {
            budget_exceeded = true;
            break;
        }
        removed += dec.removed.len();
        alive = dec.kept;
    }
    let mean = mean_rows(&points.select_rows(&alive))?;
    Ok(RobustMean {
        mean,
        budget_exceeded,
        removed,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use rand_distr::{Distribution, StandardNormal};

    fn report(scores: &[f64]) -> ScoreReport {
        ScoreReport {
            indices: (0..scores.len()).collect(),
            scores: scores.to_vec(),
            direction: vec![1.0],
            sigma_hat: 0.0,
            degenerate: false,
        }
    }

    #[test]
    fn identical_rows_score_zero() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        let r = compute_scores_indexed(&m, 0).unwrap();
        assert_eq!(r.scores, vec![0.0, 0.0]);
        assert!(r.degenerate);
    }

    #[test]
    fn symmetric_configuration() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]]).unwrap();
        let r = compute_scores_indexed(&m, 0).unwrap();
        assert!((r.direction[0].abs() - 1.0).abs() < 1e-9);
        for (got, want) in r.scores.iter().zip([1.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!((norm(&r.direction) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scores_match_grid_search_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<f64> = (0..18).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = Matrix::from_vec(6, 3, data).unwrap();
        let r = compute_scores_indexed(&m, 4).unwrap();

        let c = center_rows(&m, &mean_rows(&m).unwrap()).unwrap();
        let energy = |u: &[f64]| c.row_iter().map(|row| dot(row, u).powi(2)).sum::<f64>();
        // coarse grid over the sphere, then local refinement
        let mut best = (f64::MIN, vec![0.0; 3]);
        let steps = 200;
        for i in 0..=steps {
            let theta = std::f64::consts::PI * i as f64 / steps as f64;
            for j in 0..(2 * steps) {
                let phi = std::f64::consts::PI * j as f64 / steps as f64;
                let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                let e = energy(&u);
                if e > best.0 {
                    best = (e, u.to_vec());
                }
            }
        }
        let mut h = 0.01;
        while h > 1e-9 {
            let mut improved = false;
            for k in 0..3 {
                for sgn in [-1.0, 1.0] {
                    let mut u = best.1.clone();
                    u[k] += sgn * h;
                    let nu = norm(&u);
                    u.iter_mut().for_each(|v| *v /= nu);
                    let e = energy(&u);
                    if e > best.0 {
                        best = (e, u);
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        for (j, row) in c.row_iter().enumerate() {
            let oracle = dot(row, &best.1).powi(2);
            assert!((oracle - r.scores[j]).abs() < 1e-4, "{oracle} vs {}", r.scores[j]);
        }
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<f64> = (0..40).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = Matrix::from_vec(10, 4, data).unwrap();
        let a = compute_scores_indexed(&m, 1).unwrap();
        let b = compute_scores_indexed(&m.scaled(3.0), 1).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((9.0 * x - y).abs() <= 1e-8 * y.abs().max(1e-12));
        }
        assert!(dot(&a.direction, &b.direction).abs() > 1.0 - 1e-6);
    }

    #[test]
    fn randomized_filter_fixed_point() {
        let cfg = FilterConfig {
            sigma: 0.0,
            ..Default::default()
        };
        let d = randomized_filter(&report(&[0.0, 0.0, 0.0]), &cfg).unwrap();
        assert_eq!(d.kept, vec![0, 1, 2]);
        assert!(d.removed.is_empty());
        assert!(randomized_filter(&report(&[]), &cfg).is_err());
    }

    #[test]
    fn randomized_filter_removes_dominant_point() {
        let cfg = FilterConfig {
            sigma: 0.1,
            ..Default::default()
        };
        for seed in 0..200 {
            let d = randomized_filter(&report(&[100.0, 0.0, 0.0]), &FilterConfig { seed, ..cfg.clone() })
                .unwrap();
            assert_eq!(d.removed, vec![0]);
        }
    }

    #[test]
    fn fixed_point_iff_mean_below_threshold() {
        let cfg = FilterConfig {
            sigma: 1.0,
            threshold_mult: 2.0,
            ..Default::default()
        };
        // mean 2 == threshold → fixed point; mean 2.01 → not
        let d = randomized_filter(&report(&[4.0, 0.0]), &cfg).unwrap();
        assert!(d.removed.is_empty());
        let d = randomized_filter(&report(&[4.02, 0.0]), &cfg).unwrap();
        assert_eq!(d.removed, vec![0]);
    }

    #[test]
    fn top_p_examples() {
        let d = top_p_filter(&report(&[5.0, 1.0, 3.0]), 0.0).unwrap();
        assert!(d.removed.is_empty());
        let d = top_p_filter(&report(&[5.0, 1.0, 3.0]), 1.0 / 3.0).unwrap();
        assert_eq!(d.removed, vec![0]);
        let d = top_p_filter(&report(&[2.0, 2.0, 2.0, 2.0]), 0.5).unwrap();
        assert_eq!(d.removed, vec![0, 1]);
        assert_eq!(d.kept, vec![2, 3]);
        assert!(top_p_filter(&report(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn top_p_count_is_robust_to_rounding() {
        assert_eq!(top_p_count(0.1, 30), 3);
        assert_eq!(top_p_count(0.05, 1100), 55);
        assert_eq!(top_p_count(0.011, 100), 2);
    }

    #[test]
    fn robust_mean_identical_points() {
        let m = Matrix::from_rows(&[[2.0, -1.0]; 5]).unwrap();
        let r = robust_mean(&m, 1.0, 0.1, &FilterConfig::default()).unwrap();
        assert_eq!(r.mean, vec![2.0, -1.0]);
        assert!(!r.budget_exceeded);
    }

    #[test]
    fn robust_mean_clean_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let data: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = Matrix::from_vec(500, 10, data).unwrap();
        let r = robust_mean(&m, 1.0, 0.1, &FilterConfig::default()).unwrap();
        let clean = mean_rows(&m).unwrap();
        assert!(norm(&r.mean) < 0.3);
        assert!(norm(&crate::linalg::sub(&r.mean, &clean)) < 0.3);
    }

    #[test]
    fn robust_mean_budget_flag() {
        let mut rows = vec![vec![0.0, 0.0]; 20];
        for r in rows.iter_mut().take(10) {
            r[0] = 100.0;
        }
        let m = Matrix::from_rows(&rows).unwrap();
        let r = robust_mean(&m, 0.01, 0.0, &FilterConfig::default()).unwrap();
        assert!(r.budget_exceeded);
        assert_eq!(r.mean, vec![50.0, 0.0]);
    }
}

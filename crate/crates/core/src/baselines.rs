//! Comparison defenses: the same remove-and-refit loop with simpler scores,
//! plus RANSAC.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::ScoreReport;
use crate::learners::{achieved_gamma, Learner};
use crate::linalg::{center_rows, dot, mean_rows, Matrix};
use crate::losses::LossModel;
use crate::seed::derive_seed;
use crate::sever::{filter_loop, SeverConfig, SeverOutcome, SeverVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    NoDefense,
    /// Distance of the features from their mean.
    L2,
    /// Loss at the fitted parameters.
    Loss,
    /// Gradient norm.
    Gradient,
    /// Distance of the gradient from the mean gradient.
    GradientCentered,
    Ransac,
}

fn row_sq_norms(m: &Matrix) -> Vec<f64> {
    m.row_iter().map(|r| dot(r, r)).collect()
}

/// Scores for the active ids `ids` at parameters `w`. All are squared norms
/// (or losses), so larger means more suspicious.
pub fn baseline_scores(
    kind: BaselineKind,
    model: &LossModel,
    w: &[f64],
    data: &Dataset,
    ids: &[usize],
) -> Result<ScoreReport> {
    if ids.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scores = match kind {
        BaselineKind::L2 => {
            let x = data.features().select_rows(ids);
            let mu = mean_rows(&x)?;
            row_sq_norms(&center_rows(&x, &mu)?)
        }
        BaselineKind::Loss => ids
            .iter()
            .map(|&i| model.loss(w, data.sample(i)))
            .collect::<Result<_>>()?,
        BaselineKind::Gradient => row_sq_norms(&model.grad_rows(w, data, ids)?),
        BaselineKind::GradientCentered => {
            let g = model.grad_rows(w, data, ids)?;
            let mu = mean_rows(&g)?;
            row_sq_norms(&center_rows(&g, &mu)?)
        }
        BaselineKind::NoDefense | BaselineKind::Ransac => {
            return Err(Error::InvalidArgument(format!(
                "{kind:?} has no per-sample score"
            )))
        }
    };
    let mut direction = vec![0.0; data.dim()];
    if let Some(first) = direction.first_mut() {
        *first = 1.0;
    }
    Ok(ScoreReport {
        indices: ids.to_vec(),
        scores,
        direction,
        sigma_hat: 0.0,
        degenerate: true,
    })
}

/// Practical-mode filter loop with a baseline score. `NoDefense` fits once.
pub fn run_baseline(
    kind: BaselineKind,
    model: &LossModel,
    data: &Dataset,
    learner: &dyn Learner,
    cfg: &SeverConfig,
) -> Result<SeverOutcome> {
    match kind {
        BaselineKind::NoDefense => {
            let fit = learner.fit(model, data, None)?;
            Ok(SeverOutcome {
                achieved_gamma: achieved_gamma(model, data, &fit.w, learner.domain_radius()),
                w: fit.w,
                removed_per_round: Vec::new(),
                rounds_run: 0,
                learner_calls: 1,
                final_score_report: None,
                round_scores: Vec::new(),
                budget_hits: 0,
                retained: data.active_mask().to_vec(),
            })
        }
        BaselineKind::Ransac => Err(Error::InvalidArgument(
            "use run_ransac for RANSAC".into(),
        )),
        _ => {
            let cfg = SeverConfig {
                variant: SeverVariant::Practical,
                ..cfg.clone()
            };
            let scorer = move |d: &Dataset, w: &[f64], ids: &[usize], _seed: u64| {
                baseline_scores(kind, model, w, d, ids)
            };
            filter_loop(model, data, learner, &cfg, &scorer)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RansacSelection {
    /// Best test error among the candidate fits. Peeks at the test set.
    OracleTest,
    /// Lowest median per-sample training loss.
    MedianTrainLoss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacConfig {
    pub subsample_size: usize,
    pub num_rounds: usize,
    pub selection: RansacSelection,
    pub seed: u64,
}

impl RansacConfig {
    /// Subsample of `d + 5` points, 100 rounds.
    pub fn for_dim(d: usize) -> Self {
        Self {
            subsample_size: d + 5,
            num_rounds: 100,
            selection: RansacSelection::OracleTest,
            seed: 0,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits on uniform random subsamples and keeps one fit by `cfg.selection`.
pub fn run_ransac(
    model: &LossModel,
    data: &Dataset,
    learner: &dyn Learner,
    cfg: &RansacConfig,
    test: Option<&Dataset>,
) -> Result<SeverOutcome> {
    let active = data.active_indices();
    if cfg.subsample_size == 0 || cfg.subsample_size > active.len() {
        return Err(Error::InvalidArgument(format!(
            "subsample_size {} not in 1..={}",
            cfg.subsample_size,
            active.len()
        )));
    }
    if cfg.num_rounds == 0 {
        return Err(Error::InvalidArgument("num_rounds must be >= 1".into()));
    }
    let test = match (cfg.selection, test) {
        (RansacSelection::OracleTest, None) => return Err(Error::MissingTestData),
        (_, t) => t,
    };

    let candidates: Vec<Result<(f64, Vec<f64>)>> = (0..cfg.num_rounds)
        .into_par_iter()
        .map(|round| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[round as u64]));
            let mut pick: Vec<usize> =
                rand::seq::index::sample(&mut rng, active.len(), cfg.subsample_size)
                    .into_iter()
                    .map(|j| active[j])
                    .collect();
            pick.sort_unstable();
            let mut mask = vec![false; data.len()];
            pick.iter().for_each(|&i| mask[i] = true);
            let mut sub = data.clone();
            sub.set_active(mask)?;
            let fit = learner.fit(model, &sub, None)?;
            let score = match cfg.selection {
                RansacSelection::OracleTest => model.test_error(&fit.w, test.expect("checked")),
                RansacSelection::MedianTrainLoss => median(
                    active
                        .iter()
                        .map(|&i| model.loss(&fit.w, data.sample(i)))
                        .collect::<Result<_>>()?,
                ),
            };
            Ok((score, fit.w))
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in candidates {
        let (score, w) = c?;
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, w));
        }
    }
    let (_, w) = best.expect("num_rounds >= 1");
    Ok(SeverOutcome {
        achieved_gamma: achieved_gamma(model, data, &w, learner.domain_radius()),
        w,
        removed_per_round: Vec::new(),
        rounds_run: cfg.num_rounds,
        learner_calls: cfg.num_rounds,
        final_score_report: None,
        round_scores: Vec::new(),
        budget_hits: 0,
        retained: data.active_mask().to_vec(),
    })
}

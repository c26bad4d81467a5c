//! The filter-and-refit meta-algorithm and the per-step robust-gradient variant.
//!
//! Each round fits the base learner on the surviving samples, builds the
//! per-sample gradient matrix at the fitted point, scores samples spectrally
//! and filters. The theoretical variant filters randomly until a fixed point;
//! the practical variant removes the top `p` fraction for `r` rounds and then
//! refits once more on what is left.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::{
    compute_scores, randomized_filter, robust_mean, top_p_filter, FilterConfig, FilterMode,
    ScoreReport, DEFAULT_THRESHOLD_MULT,
};
use crate::learners::{achieved_gamma, gamma_of, project, Learner, LearnerConfig, ParamVector};
use crate::linalg::{axpy, norm};
use crate::losses::LossModel;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverVariant {
    /// Randomized filter with known `sigma`, repeated to a fixed point.
    Theoretical,
    /// Top-`p` removal for a fixed number of rounds.
    Practical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeverConfig {
    pub variant: SeverVariant,
    pub sigma: f64,
    pub threshold_mult: f64,
    pub p_fraction: f64,
    pub num_rounds: usize,
    /// Score and filter each label class separately.
    pub per_class: bool,
    /// Start each refit from the previous round's parameters.
    pub warm_start: bool,
    /// Removal budget handed to the robust mean in [`run_robust_gd`].
    pub eps_budget: f64,
    pub seed: u64,
}

impl SeverConfig {
    pub fn practical(p_fraction: f64, num_rounds: usize) -> Self {
        Self {
            variant: SeverVariant::Practical,
            sigma: 0.0,
            threshold_mult: DEFAULT_THRESHOLD_MULT,
            p_fraction,
            num_rounds,
            per_class: false,
            warm_start: false,
            eps_budget: 0.1,
            seed: 0,
        }
    }

    pub fn theoretical(sigma: f64) -> Self {
        Self {
            variant: SeverVariant::Theoretical,
            sigma,
            ..Self::practical(0.0, 1)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_per_class(mut self, per_class: bool) -> Self {
        self.per_class = per_class;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.variant {
            SeverVariant::Practical => {
                if self.num_rounds < 1 {
                    return Err(Error::InvalidArgument("num_rounds must be >= 1".into()));
                }
                if !(self.p_fraction > 0.0 && self.p_fraction < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "p_fraction must be in (0, 1), got {}",
                        self.p_fraction
                    )));
                }
            }
            SeverVariant::Theoretical => {
                if !(self.sigma > 0.0) {
                    return Err(Error::InvalidArgument("sigma must be > 0".into()));
                }
            }
        }
        if !(self.threshold_mult > 0.0) {
            return Err(Error::InvalidArgument("threshold_mult must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of a defense run, with its audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct SeverOutcome {
    pub w: ParamVector,
    /// Ids removed in each filtering round; disjoint.
    pub removed_per_round: Vec<Vec<usize>>,
    pub rounds_run: usize,
    pub learner_calls: usize,
    /// Measured on the retained samples.
    pub achieved_gamma: f64,
    pub final_score_report: Option<ScoreReport>,
    /// Scores from every round, for histogram dumps.
    pub round_scores: Vec<ScoreReport>,
    /// Robust-gradient steps whose robust mean hit its removal budget.
    pub budget_hits: usize,
    /// Active mask after filtering.
    pub retained: Vec<bool>,
}

impl SeverOutcome {
    pub fn removed_ids(&self) -> Vec<usize> {
        self.removed_per_round.iter().flatten().copied().collect()
    }

    pub fn removed_count(&self) -> usize {
        self.removed_per_round.iter().map(Vec::len).sum()
    }
}

/// Scores for one group of active ids at parameters `w`.
pub(crate) type Scorer<'a> = dyn Fn(&Dataset, &[f64], &[usize], u64) -> Result<ScoreReport> + 'a;

fn spectral_scorer(model: &LossModel) -> impl Fn(&Dataset, &[f64], &[usize], u64) -> Result<ScoreReport> + '_ {
    move |data, w, ids, seed| {
        let rows = model.grad_rows(w, data, ids)?;
        compute_scores(&rows, ids, seed)
    }
}

/// Shared remove-and-refit loop.
pub(crate) fn filter_loop(
    model: &LossModel,
    data: &Dataset,
    learner: &dyn Learner,
    cfg: &SeverConfig,
    scorer: &Scorer<'_>,
) -> Result<SeverOutcome> {
    cfg.validate()?;
    let mut data = data.clone();
    if data.active_count() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 active samples".into(),
        ));
    }
    if cfg.per_class {
        data.check_binary()?;
    }
    let initial = data.active_count();
    let mut removed_per_round = Vec::new();
    let mut round_scores = Vec::new();
    let mut learner_calls = 0;
    let mut warm: Option<Vec<f64>> = None;
    let mut round = 0usize;

    let (w, last_report) = loop {
        let fit = learner.fit(model, &data, warm.as_deref())?;
        learner_calls += 1;
        if cfg.variant == SeverVariant::Practical && round == cfg.num_rounds {
            break (fit.w, round_scores.last().cloned());
        }

        let groups = if cfg.per_class {
            data.active_by_class()
        } else {
            vec![data.active_indices()]
        };
        let mut reports = Vec::with_capacity(groups.len());
        let mut removed = Vec::new();
        for (g, ids) in groups.iter().enumerate() {
            let report = scorer(&data, &fit.w, ids, derive_seed(cfg.seed, &[round as u64, g as u64, 0]))?;
            let decision = match cfg.variant {
                SeverVariant::Theoretical => randomized_filter(
                    &report,
                    &FilterConfig {
                        sigma: cfg.sigma,
                        threshold_mult: cfg.threshold_mult,
                        mode: FilterMode::Randomized,
                        p_fraction: 0.0,
                        seed: derive_seed(cfg.seed, &[round as u64, g as u64, 1]),
                    },
                )?,
                SeverVariant::Practical => top_p_filter(&report, cfg.p_fraction)?,
            };
            removed.extend(decision.removed);
            reports.push(report);
        }
        removed.sort_unstable();
        round_scores.push(ScoreReport::merge(reports).expect("at least one group"));
        round += 1;

        if cfg.variant == SeverVariant::Theoretical && removed.is_empty() {
            break (fit.w, round_scores.last().cloned());
        }
        data.deactivate(&removed);
        removed_per_round.push(removed);
        if data.active_count() < 2 {
            return Err(Error::FilteredEverything);
        }
        if cfg.warm_start {
            warm = Some(fit.w);
        }
        // each non-final theoretical round removes at least one point
        debug_assert!(round <= initial);
    };

    let achieved = achieved_gamma(model, &data, &w, learner.domain_radius());
    Ok(SeverOutcome {
        w,
        removed_per_round,
        rounds_run: round,
        learner_calls,
        achieved_gamma: achieved,
        final_score_report: last_report,
        round_scores,
        budget_hits: 0,
        retained: data.active_mask().to_vec(),
    })
}

/// Runs the spectral filter-and-refit loop around `learner`.
pub fn run_sever(
    model: &LossModel,
    data: &Dataset,
    learner: &dyn Learner,
    cfg: &SeverConfig,
) -> Result<SeverOutcome> {
    let scorer = spectral_scorer(model);
    filter_loop(model, data, learner, cfg, &scorer)
}

/// Runs [`run_sever`] `k` times with derived seeds and keeps the run with the
/// smallest achieved γ (first one on ties).
pub fn run_sever_best_of(
    k: usize,
    model: &LossModel,
    data: &Dataset,
    learner: &dyn Learner,
    cfg: &SeverConfig,
) -> Result<SeverOutcome> {
    let mut best: Option<SeverOutcome> = None;
    for i in 0..k.max(1) {
        let run_cfg = SeverConfig {
            seed: derive_seed(cfg.seed, &[i as u64]),
            ..cfg.clone()
        };
        let out = run_sever(model, data, learner, &run_cfg)?;
        if best.as_ref().is_none_or(|b| out.achieved_gamma < b.achieved_gamma) {
            best = Some(out);
        }
    }
    Ok(best.expect("k >= 1"))
}

/// Filtered mean of the per-sample gradients at `w`, plus the regularizer.
/// Returns the gradient and whether the robust mean hit its budget.
pub fn robust_gradient(
    model: &LossModel,
    w: &[f64],
    data: &Dataset,
    cfg: &SeverConfig,
    seed: u64,
) -> Result<(Vec<f64>, bool)> {
    let rows = model.grad_matrix(w, data)?;
    let fcfg = FilterConfig {
        sigma: cfg.sigma,
        threshold_mult: cfg.threshold_mult,
        mode: FilterMode::Randomized,
        p_fraction: 0.0,
        seed,
    };
    let rm = robust_mean(&rows, cfg.sigma, cfg.eps_budget, &fcfg)?;
    let mut g = rm.mean;
    axpy(model.lambda, w, &mut g);
    Ok((g, rm.budget_exceeded))
}

/// Projected gradient descent where every step uses a robust mean of the
/// per-sample gradients. Nothing is removed permanently.
pub fn run_robust_gd(
    model: &LossModel,
    data: &Dataset,
    cfg: &SeverConfig,
    learner_cfg: &LearnerConfig,
) -> Result<SeverOutcome> {
    learner_cfg.validate()?;
    if !(cfg.sigma > 0.0) {
        return Err(Error::InvalidArgument("sigma must be > 0".into()));
    }
    if data.active_count() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 active samples".into(),
        ));
    }
    let radius = learner_cfg.domain_radius;
    let mut w = vec![0.0; data.dim()];
    let mut budget_hits = 0;
    let mut epochs = 0;
    let mut g0: Option<f64> = None;
    let mut gamma = f64::INFINITY;
    while epochs < learner_cfg.max_epochs {
        let (g, hit) = robust_gradient(model, &w, data, cfg, derive_seed(cfg.seed, &[epochs as u64]))?;
        epochs += 1;
        budget_hits += usize::from(hit);
        let gn = norm(&g);
        let base = *g0.get_or_insert(gn.max(1e-12));
        if !gn.is_finite() || gn > 1e6 * base {
            return Err(Error::Diverged);
        }
        gamma = gamma_of(&g, &w, radius);
        if gamma <= learner_cfg.gamma_target {
            break;
        }
        axpy(-learner_cfg.step_size, &g, &mut w);
        project(&mut w, radius);
    }
    Ok(SeverOutcome {
        w,
        removed_per_round: Vec::new(),
        rounds_run: epochs,
        learner_calls: 0,
        achieved_gamma: gamma,
        final_score_report: None,
        round_scores: Vec::new(),
        budget_hits,
        retained: data.active_mask().to_vec(),
    })
}

//! Approximate base learners: closed-form ridge and projected (sub)gradient descent.
//!
//! A learner returns a point whose mean regularized gradient over the active
//! samples is small; [`achieved_gamma`] measures that independently.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, solve_spd};
use crate::losses::{LossKind, LossModel};

/// Model parameters `w`.
pub type ParamVector = Vec<f64>;

/// Output of a learner call.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub w: ParamVector,
    /// Achieved critical-point tolerance, as measured by [`achieved_gamma`].
    pub gamma: f64,
    pub epochs: usize,
    pub converged: bool,
}

/// Black-box learner contract.
pub trait Learner: Send + Sync {
    /// Fits on the active samples of `data`. `init` is a warm-start hint;
    /// learners without iterative state ignore it.
    fn fit(&self, model: &LossModel, data: &Dataset, init: Option<&[f64]>) -> Result<Fit>;

    fn name(&self) -> &'static str;

    /// Domain ball radius the learner projects onto, if any.
    fn domain_radius(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub gamma_target: f64,
    pub max_epochs: usize,
    pub step_size: f64,
    pub domain_radius: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma_target: 1e-6,
            max_epochs: 2000,
            step_size: 0.5,
            domain_radius: None,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidArgument("step_size must be > 0".into()));
        }
        if !(self.gamma_target > 0.0) {
            return Err(Error::InvalidArgument("gamma_target must be > 0".into()));
        }
        if let Some(r) = self.domain_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument("domain_radius must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Solves `(XᵀX/n + λI)w = Xᵀy/n` over the active samples.
pub fn fit_ridge_closed_form(data: &Dataset, lambda: f64) -> Result<ParamVector> {
    let ids = data.active_indices();
    if ids.is_empty() {
        return Err(Error::EmptyInput);
    }
    let x = data.features().select_rows(&ids);
    let y: Vec<f64> = ids.iter().map(|&i| data.labels()[i]).collect();
    let inv = 1.0 / ids.len() as f64;
    let mut a = x.gram().scaled(inv);
    let d = a.rows();
    for i in 0..d {
        a.set(i, i, a.get(i, i) + lambda);
    }
    let b: Vec<f64> = x.tmul_vec(&y).into_iter().map(|v| v * inv).collect();
    let w = solve_spd(&a, &b)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(w)
}

pub(crate) fn project(w: &mut [f64], radius: Option<f64>) {
    if let Some(r) = radius {
        let n = norm(w);
        if n > r {
            let c = r / n;
            w.iter_mut().for_each(|v| *v *= c);
        }
    }
}

/// Critical-point tolerance of `g` at `w` for the ball of `radius`.
///
/// In the interior this is `‖g‖`. On the boundary a descent direction that
/// points outward is infeasible, so its radial part is discarded.
pub(crate) fn gamma_of(g: &[f64], w: &[f64], radius: Option<f64>) -> f64 {
    if let Some(r) = radius {
        let wn = norm(w);
        if wn >= r - 1e-9 && wn > 0.0 {
            let radial = dot(g, w) / wn;
            // −g points outward iff g·ŵ < 0
            if radial < 0.0 {
                let mut t = g.to_vec();
                axpy(-radial / wn, w, &mut t);
                return norm(&t);
            }
        }
    }
    norm(g)
}

/// How close `w` is to a critical point of the regularized mean objective.
pub fn achieved_gamma(
    model: &LossModel,
    data: &Dataset,
    w: &[f64],
    domain_radius: Option<f64>,
) -> f64 {
    match model.objective_and_grad(w, data) {
        Ok((_, g)) => gamma_of(&g, w, domain_radius),
        Err(_) => f64::INFINITY,
    }
}

/// Epochs per step-size check in [`fit_subgradient`].
pub const HALVING_BLOCK: usize = 25;

/// Full-batch projected (sub)gradient descent on `mean loss + λ‖w‖²/2`.
///
/// Constant step within blocks of [`HALVING_BLOCK`] epochs. When a block ends
/// without improving on the objective it started from, the step is halved and
/// descent resumes from the best iterate. Stops as soon as the achieved γ
/// reaches `gamma_target`; otherwise returns the lowest-objective iterate.
pub fn fit_subgradient(
    model: &LossModel,
    data: &Dataset,
    cfg: &LearnerConfig,
    init: Option<&[f64]>,
) -> Result<Fit> {
    cfg.validate()?;
    if data.active_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let d = data.dim();
    let mut w = match init {
        Some(w0) if w0.len() == d => w0.to_vec(),
        Some(w0) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: w0.len(),
            })
        }
        None => vec![0.0; d],
    };
    project(&mut w, cfg.domain_radius);
    let (obj, mut g) = model.objective_and_grad(&w, data)?;
    let g0 = norm(&g).max(1e-12);
    let mut best = (obj, w.clone(), g.clone());
    let mut block_start = obj;
    let mut step = cfg.step_size;

    for epoch in 0..cfg.max_epochs {
        let gamma = gamma_of(&g, &w, cfg.domain_radius);
        if gamma <= cfg.gamma_target {
            return Ok(Fit {
                w,
                gamma,
                epochs: epoch,
                converged: true,
            });
        }
        axpy(-step, &g, &mut w);
        project(&mut w, cfg.domain_radius);
        let (o, gn) = model
            .objective_and_grad(&w, data)
            .map_err(|_| Error::Diverged)?;
        if norm(&gn) > 1e6 * g0 {
            return Err(Error::Diverged);
        }
        g = gn;
        if o < best.0 {
            best = (o, w.clone(), g.clone());
        }
        if (epoch + 1) % HALVING_BLOCK == 0 {
            if best.0 >= block_start {
                step *= 0.5;
                w.clone_from(&best.1);
                g.clone_from(&best.2);
            }
            block_start = best.0;
            if step < 1e-12 * cfg.step_size {
                break;
            }
        }
    }
    let w = best.1;
    let gamma = achieved_gamma(model, data, &w, cfg.domain_radius);
    Ok(Fit {
        converged: gamma <= cfg.gamma_target,
        w,
        gamma,
        epochs: cfg.max_epochs,
    })
}

/// Closed-form ridge regression; uses the model's `lambda`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RidgeLearner;

impl Learner for RidgeLearner {
    fn fit(&self, model: &LossModel, data: &Dataset, _init: Option<&[f64]>) -> Result<Fit> {
        if model.kind != LossKind::Squared {
            return Err(Error::InvalidArgument(
                "ridge learner requires squared loss".into(),
            ));
        }
        let w = fit_ridge_closed_form(data, model.lambda)?;
        let gamma = achieved_gamma(model, data, &w, None);
        Ok(Fit {
            w,
            gamma,
            epochs: 1,
            converged: true,
        })
    }

    fn name(&self) -> &'static str {
        "ridge"
    }
}

/// Projected subgradient descent for any [`LossKind`].
#[derive(Debug, Clone, Default)]
pub struct SubgradientLearner {
    pub cfg: LearnerConfig,
}

impl SubgradientLearner {
    pub fn new(cfg: LearnerConfig) -> Self {
        Self { cfg }
    }
}

impl Learner for SubgradientLearner {
    fn fit(&self, model: &LossModel, data: &Dataset, init: Option<&[f64]>) -> Result<Fit> {
        fit_subgradient(model, data, &self.cfg, init)
    }

    fn name(&self) -> &'static str {
        "subgradient"
    }

    fn domain_radius(&self) -> Option<f64> {
        self.cfg.domain_radius
    }
}

/// Builds a dataset from literal rows; used by tests across the crate.
#[cfg(test)]
pub(crate) fn toy_dataset(rows: &[&[f64]], y: &[f64]) -> Dataset {
    Dataset::new(crate::linalg::Matrix::from_rows(rows).unwrap(), y.to_vec()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::losses::sigmoid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ridge_diagonal_case() {
        let d = toy_dataset(&[&[1.0, 0.0], &[0.0, 1.0]], &[2.0, -3.0]);
        let w = fit_ridge_closed_form(&d, 0.0).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-12 && (w[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_zero_response_gives_zero() {
        let d = toy_dataset(&[&[1.0, 2.0], &[3.0, -1.0], &[0.5, 0.5]], &[0.0, 0.0, 0.0]);
        assert_eq!(fit_ridge_closed_form(&d, 0.3).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn ridge_matches_cramer_oracle() {
        let rows: [&[f64]; 3] = [&[1.0, 2.0], &[-0.5, 1.5], &[2.0, -1.0]];
        let y = [1.0, -2.0, 0.5];
        let lambda = 0.1;
        let d = toy_dataset(&rows, &y);
        let w = fit_ridge_closed_form(&d, lambda).unwrap();
        // Cramer's rule on the 2×2 normal equations
        let n = 3.0;
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (r, yi) in rows.iter().zip(y) {
            a11 += r[0] * r[0] / n;
            a12 += r[0] * r[1] / n;
            a22 += r[1] * r[1] / n;
            b1 += r[0] * yi / n;
            b2 += r[1] * yi / n;
        }
        a11 += lambda;
        a22 += lambda;
        let det = a11 * a22 - a12 * a12;
        let w1 = (b1 * a22 - a12 * b2) / det;
        let w2 = (a11 * b2 - a12 * b1) / det;
        assert!((w[0] - w1).abs() < 1e-10 && (w[1] - w2).abs() < 1e-10);
    }

    #[test]
    fn ridge_singular_without_regularization() {
        let d = toy_dataset(&[&[1.0, 1.0], &[2.0, 2.0]], &[1.0, 2.0]);
        assert!(matches!(fit_ridge_closed_form(&d, 0.0), Err(Error::Singular)));
    }

    #[test]
    fn ridge_residual_small_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), y.clone()).unwrap();
        let w = fit_ridge_closed_form(&d, 0.05).unwrap();
        let model = LossModel::squared(0.05);
        assert!(achieved_gamma(&model, &d, &w, None) <= 1e-8);

        let perm: Vec<usize> = (0..30).rev().collect();
        let w2 = fit_ridge_closed_form(&d.subset(&perm), 0.05).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn achieved_gamma_examples() {
        // Xᵀy/n = (1, 0)
        let d = toy_dataset(&[&[1.0, 0.0], &[1.0, 0.0]], &[1.0, 1.0]);
        let g = achieved_gamma(&LossModel::squared(0.0), &d, &[0.0, 0.0], None);
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn achieved_gamma_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), y.clone()).unwrap();
        let w = [0.3, -0.2, 0.9];
        let lambda = 0.2;
        let mut g = [0.0; 3];
        for (r, yi) in rows.iter().zip(&y) {
            let res = r[0] * w[0] + r[1] * w[1] + r[2] * w[2] - yi;
            for j in 0..3 {
                g[j] += r[j] * res / 5.0;
            }
        }
        for j in 0..3 {
            g[j] += lambda * w[j];
        }
        let oracle = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let got = achieved_gamma(&LossModel::squared(lambda), &d, &w, None);
        assert!((got - oracle).abs() < 1e-14);
    }

    #[test]
    fn boundary_gamma_drops_outward_component() {
        // gradient at w=(1,0) is (-1,0): descent points outward of the unit ball
        let d = toy_dataset(&[&[1.0, 0.0]], &[2.0]);
        let g = achieved_gamma(&LossModel::squared(0.0), &d, &[1.0, 0.0], Some(1.0));
        assert!(g < 1e-12);
        let g = achieved_gamma(&LossModel::squared(0.0), &d, &[1.0, 0.0], None);
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subgradient_fits_exact_squared_problem() {
        let d = toy_dataset(&[&[1.0, 0.0], &[0.0, 2.0]], &[1.0, -2.0]);
        let cfg = LearnerConfig {
            gamma_target: 1e-8,
            step_size: 0.5,
            ..Default::default()
        };
        let fit = fit_subgradient(&LossModel::squared(0.0), &d, &cfg, None).unwrap();
        assert!(fit.converged);
        assert!(fit.gamma <= 1e-8);
        assert!(achieved_gamma(&LossModel::squared(0.0), &d, &fit.w, None) <= fit.gamma + 1e-9);
    }

    #[test]
    fn subgradient_separates_hinge_data() {
        // separable with margin > 1 at w = (2, 2), ‖w‖ ≈ 2.83 < radius
        let d = toy_dataset(
            &[&[1.0, 1.0], &[2.0, 0.5], &[-1.0, -1.0], &[-0.5, -2.0]],
            &[1.0, 1.0, -1.0, -1.0],
        );
        let oracle_w = [2.0, 2.0];
        for i in 0..4 {
            let s = d.sample(i);
            assert!(s.y * dot(&oracle_w, s.x) > 1.0);
        }
        let cfg = LearnerConfig {
            domain_radius: Some(5.0),
            max_epochs: 5000,
            ..Default::default()
        };
        let model = LossModel::hinge(0.0);
        let fit = fit_subgradient(&model, &d, &cfg, None).unwrap();
        let mean_loss: f64 = (0..4).map(|i| model.loss(&fit.w, d.sample(i)).unwrap()).sum::<f64>() / 4.0;
        assert_eq!(mean_loss, 0.0);
        assert!(norm(&fit.w) <= 5.0 + 1e-12);
    }

    #[test]
    fn subgradient_logistic_matches_bisection() {
        let d = toy_dataset(&[&[1.0, 0.0]], &[1.0]);
        let model = LossModel::logistic(0.5);
        let cfg = LearnerConfig {
            gamma_target: 1e-9,
            max_epochs: 20000,
            step_size: 1.0,
            domain_radius: None,
        };
        let fit = fit_subgradient(&model, &d, &cfg, None).unwrap();
        // root of ½(φ(t) − φ(−t) − 1) + 0.5t on [0, 2]
        let h = |t: f64| 0.5 * (sigmoid(t) - sigmoid(-t) - 1.0) + 0.5 * t;
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((fit.w[0] - lo).abs() < 1e-4, "{} vs {}", fit.w[0], lo);
        assert!(fit.w[1].abs() < 1e-9);
    }

    #[test]
    fn objective_non_increasing_with_small_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), y).unwrap();
        let max_row = rows.iter().map(|r| dot(r, r)).fold(0.0, f64::max);
        let model = LossModel::squared(0.0);
        let step = 1.0 / (2.0 * max_row);
        let mut w = vec![0.0; 3];
        let mut prev = model.objective(&w, &d).unwrap();
        for epochs in 1..30 {
            let cfg = LearnerConfig {
                gamma_target: 1e-14,
                max_epochs: epochs,
                step_size: step,
                domain_radius: None,
            };
            w = fit_subgradient(&model, &d, &cfg, None).unwrap().w;
            let obj = model.objective(&w, &d).unwrap();
            assert!(obj <= prev + 1e-15);
            prev = obj;
        }
    }

    #[test]
    fn divergence_is_reported() {
        let d = toy_dataset(&[&[100.0]], &[1.0]);
        let cfg = LearnerConfig {
            step_size: 10.0,
            max_epochs: 100,
            ..Default::default()
        };
        // growth of 2e4 per epoch trips the guard before the first halving
        assert!(matches!(
            fit_subgradient(&LossModel::squared(0.0), &d, &cfg, None),
            Err(Error::Diverged)
        ));
    }

    #[test]
    fn hinge_optimum_at_the_kink() {
        // max(0, 1 − w) + 0.05·w² has its minimum at w = 1
        let d = toy_dataset(&[&[1.0], &[-1.0]], &[1.0, -1.0]);
        let fit = fit_subgradient(&LossModel::hinge(0.1), &d, &LearnerConfig::default(), None).unwrap();
        assert!((fit.w[0] - 1.0).abs() < 1e-4, "{:?}", fit.w);
    }
}

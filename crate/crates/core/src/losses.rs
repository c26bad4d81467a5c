//! Per-sample losses and (sub)gradients for the linear models.
//!
//! Regularization is not part of the per-sample quantities; the learner
//! objective is `mean loss + λ‖w‖²/2`.

use crate::dataset::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `½(w·x − y)²`
    Squared,
    /// `max{0, 1 − y(w·x)}`
    Hinge,
    /// `½(−ln(φ(w·x)φ(−w·x)) − y(w·x))`
    Logistic,
}

impl LossKind {
    pub fn is_classification(self) -> bool {
        !matches!(self, LossKind::Squared)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub kind: LossKind,
    pub lambda: f64,
}

/// Logistic function, branch-stable for large `|t|`.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eᵗ)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn check_dims(w: &[f64], x: &[f64]) -> Result<()> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    Ok(())
}

impl LossModel {
    pub fn new(kind: LossKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(Self { kind, lambda })
    }

    pub fn squared(lambda: f64) -> Self {
        Self {
            kind: LossKind::Squared,
            lambda,
        }
    }

    pub fn hinge(lambda: f64) -> Self {
        Self {
            kind: LossKind::Hinge,
            lambda,
        }
    }

    pub fn logistic(lambda: f64) -> Self {
        Self {
            kind: LossKind::Logistic,
            lambda,
        }
    }

    fn loss_at(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Squared => 0.5 * (t - y).powi(2),
            LossKind::Hinge => (1.0 - y * t).max(0.0),
            LossKind::Logistic => 0.5 * (softplus(t) + softplus(-t) - y * t),
        }
    }

    /// Derivative of the loss with respect to the margin `t = w·x`.
    fn slope_at(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Squared => t - y,
            // subgradient 0 at the kink
            LossKind::Hinge => {
                if y * t < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Logistic => 0.5 * (sigmoid(t) - sigmoid(-t) - y),
        }
    }

    /// Per-sample loss, without regularization.
    pub fn loss(&self, w: &[f64], s: LabeledSample<'_>) -> Result<f64> {
        check_dims(w, s.x)?;
        let v = self.loss_at(dot(w, s.x), s.y);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{:?} loss", self.kind)));
        }
        Ok(v)
    }

    /// Per-sample (sub)gradient, without regularization.
    pub fn grad(&self, w: &[f64], s: LabeledSample<'_>) -> Result<Vec<f64>> {
        check_dims(w, s.x)?;
        let c = self.slope_at(dot(w, s.x), s.y);
        Ok(s.x.iter().map(|xi| c * xi).collect())
    }

    /// Rows `∇f_j(w)` for the given sample ids, in order.
    pub fn grad_rows(&self, w: &[f64], data: &Dataset, ids: &[usize]) -> Result<Matrix> {
        if ids.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_dims(w, data.sample(ids[0]).x)?;
        let d = w.len();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            let s = data.sample(i);
            let c = self.slope_at(dot(w, s.x), s.y);
            out.extend(s.x.iter().map(|xi| c * xi));
        }
        Matrix::from_vec(ids.len(), d, out)
    }

    /// Gradient matrix over the active samples, in mask order.
    pub fn grad_matrix(&self, w: &[f64], data: &Dataset) -> Result<Matrix> {
        self.grad_rows(w, data, &data.active_indices())
    }

    /// Regularized mean objective and its (sub)gradient over active samples.
    pub fn objective_and_grad(&self, w: &[f64], data: &Dataset) -> Result<(f64, Vec<f64>)> {
        let ids = data.active_indices();
        if ids.is_empty() {
            return Err(Error::EmptyInput);
        }
        if w.len() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: w.len(),
            });
        }
        let mut g = vec![0.0; w.len()];
        let mut total = 0.0;
        for &i in &ids {
            let s = data.sample(i);
            let t = dot(w, s.x);
            total += self.loss_at(t, s.y);
            axpy(self.slope_at(t, s.y), s.x, &mut g);
        }
        let inv = 1.0 / ids.len() as f64;
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi = *gi * inv + self.lambda * wi;
        }
        let obj = total * inv + 0.5 * self.lambda * dot(w, w);
        if !obj.is_finite() {
            return Err(Error::NonFinite("objective".into()));
        }
        Ok((obj, g))
    }

    pub fn objective(&self, w: &[f64], data: &Dataset) -> Result<f64> {
        Ok(self.objective_and_grad(w, data)?.0)
    }

    /// Mean squared error (squared loss) or 0/1 error (classification) over
    /// all samples of `data`, ignoring the mask.
    pub fn test_error(&self, w: &[f64], data: &Dataset) -> f64 {
        let n = data.len();
        if n == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..n {
            let s = data.sample(i);
            let t = dot(w, s.x);
            total += match self.kind {
                LossKind::Squared => (t - s.y).powi(2),
                _ => {
                    let pred = if t >= 0.0 { 1.0 } else { -1.0 };
                    if pred == s.y {
                        0.0
                    } else {
                        1.0
                    }
                }
            };
        }
        total / n as f64
    }
}

//! Training/test sets with an active-sample mask.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One `(x, y)` pair borrowed from a [`Dataset`].
#[derive(Debug, Clone, Copy)]
pub struct LabeledSample<'a> {
    pub x: &'a [f64],
    pub y: f64,
}

/// Feature matrix, responses and the mask of samples still in play.
///
/// Ground-truth outlier flags are deliberately not stored here; see
/// [`crate::attacks::Corrupted`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    active: Vec<bool>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response {bad}")));
        }
        let active = vec![true; y.len()];
        Ok(Self { x, y, active })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn sample(&self, i: usize) -> LabeledSample<'_> {
        LabeledSample {
            x: self.x.row(i),
            y: self.y[i],
        }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn deactivate(&mut self, ids: &[usize]) {
        for &i in ids {
            self.active[i] = false;
        }
    }

    pub fn activate_all(&mut self) {
        self.active.iter_mut().for_each(|a| *a = true);
    }

    /// Replaces the mask. Length must equal `len()`.
    pub fn set_active(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: mask.len(),
            });
        }
        self.active = mask;
        Ok(())
    }

    /// New all-active dataset holding rows `ids` in that order.
    pub fn subset(&self, ids: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(ids),
            y: ids.iter().map(|&i| self.y[i]).collect(),
            active: vec![true; ids.len()],
        }
    }

    /// Appends extra rows (active). Existing rows keep their ids.
    pub fn append(&self, x: &Matrix, y: &[f64]) -> Result<Dataset> {
        let mut out = Dataset::new(self.x.vstack(x)?, [self.y.as_slice(), y].concat())?;
        out.active[..self.len()].copy_from_slice(&self.active);
        Ok(out)
    }

    /// Active feature rows.
    pub fn active_features(&self) -> Matrix {
        self.x.select_rows(&self.active_indices())
    }

    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Fails with [`Error::InvalidLabels`] on the first label outside {−1, +1}.
    pub fn check_binary(&self) -> Result<()> {
        match self.y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            Some(&v) => Err(Error::InvalidLabels(v)),
            None => Ok(()),
        }
    }

    /// `(n₊, n₋)` over active samples.
    pub fn class_counts(&self) -> (usize, usize) {
        let mut plus = 0;
        let mut minus = 0;
        for i in self.active_indices() {
            if self.y[i] > 0.0 {
                plus += 1;
            } else {
                minus += 1;
            }
        }
        (plus, minus)
    }

    /// Active ids grouped by label sign: `[positive, negative]`, empty groups dropped.
    pub fn active_by_class(&self) -> Vec<Vec<usize>> {
        let (pos, neg): (Vec<usize>, Vec<usize>) =
            self.active_indices().into_iter().partition(|&i| self.y[i] > 0.0);
        [pos, neg].into_iter().filter(|g| !g.is_empty()).collect()
    }
}

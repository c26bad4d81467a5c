//! Synthetic Gaussian regression and classification data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::ParamVector;
use crate::linalg::{dot, norm, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub train: Dataset,
    pub test: Dataset,
    pub w_star: ParamVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    Classification,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::InvalidArgument(format!("unknown task `{other}`"))),
        }
    }
}

fn sample(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `x ~ N(0, I_d)`, `w*` uniform on the unit sphere, `t = x·w* + noise·z`.
/// Regression responses are `t`; classification labels are `sign(t)` with
/// `sign(0) = +1`.
pub fn generate(
    task: Task,
    n_train: usize,
    n_test: usize,
    d: usize,
    noise: f64,
    seed: u64,
) -> Result<Synthetic> {
    if n_train == 0 || d == 0 {
        return Err(Error::InvalidArgument("n and d must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| sample(&mut rng)).collect();
    let wn = norm(&w);
    let w_star: Vec<f64> = w.into_iter().map(|v| v / wn).collect();

    let mut draw = |n: usize| -> Result<Dataset> {
        let x: Vec<f64> = (0..n * d).map(|_| sample(&mut rng)).collect();
        let x = Matrix::from_vec(n, d, x)?;
        let y = (0..n)
            .map(|i| {
                let t = dot(x.row(i), &w_star) + noise * sample(&mut rng);
                match task {
                    Task::Regression => t,
                    Task::Classification => {
                        if t >= 0.0 {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                }
            })
            .collect();
        Dataset::new(x, y)
    };
    let train = draw(n_train)?;
    let test = draw(n_test)?;
    Ok(Synthetic {
        train,
        test,
        w_star,
    })
}

pub fn gen_regression(n_train: usize, n_test: usize, d: usize, noise: f64, seed: u64) -> Result<Synthetic> {
    generate(Task::Regression, n_train, n_test, d, noise, seed)
}

pub fn gen_classification(n_train: usize, n_test: usize, d: usize, noise: f64, seed: u64) -> Result<Synthetic> {
    generate(Task::Classification, n_train, n_test, d, noise, seed)
}

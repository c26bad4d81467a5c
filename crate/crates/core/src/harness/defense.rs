//! Name-based dispatch over learners and defenses, shared by the CLI and the sweep.

use std::str::FromStr;

use crate::baselines::{run_baseline, run_ransac, BaselineKind, RansacConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerConfig, RidgeLearner, SubgradientLearner};
use crate::losses::LossModel;
use crate::sever::{run_robust_gd, run_sever, SeverConfig, SeverOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Ridge,
    Svm,
    Logistic,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ridge => "ridge",
            LearnerKind::Svm => "svm",
            LearnerKind::Logistic => "logistic",
        }
    }

    pub fn is_classification(self) -> bool {
        self != LearnerKind::Ridge
    }

    pub fn loss_model(self, lambda: f64) -> Result<LossModel> {
        match self {
            LearnerKind::Ridge => LossModel::new(crate::losses::LossKind::Squared, lambda),
            LearnerKind::Svm => LossModel::new(crate::losses::LossKind::Hinge, lambda),
            LearnerKind::Logistic => LossModel::new(crate::losses::LossKind::Logistic, lambda),
        }
    }

    pub fn learner(self, cfg: &LearnerConfig) -> Box<dyn Learner> {
        match self {
            LearnerKind::Ridge => Box::new(RidgeLearner),
            _ => Box::new(SubgradientLearner::new(cfg.clone())),
        }
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(LearnerKind::Ridge),
            "svm" => Ok(LearnerKind::Svm),
            "logistic" => Ok(LearnerKind::Logistic),
            other => Err(Error::InvalidArgument(format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Defense {
    /// Learner on the uncorrupted training set (reference only).
    Clean,
    NoDefense,
    Sever,
    L2,
    Loss,
    Gradient,
    GradientCentered,
    Ransac,
    /// Per-step robust gradient descent.
    RobustGd,
}

impl Defense {
    pub fn name(self) -> &'static str {
        match self {
            Defense::Clean => "clean",
            Defense::NoDefense => "none",
            Defense::Sever => "sever",
            Defense::L2 => "l2",
            Defense::Loss => "loss",
            Defense::Gradient => "gradient",
            Defense::GradientCentered => "gradientCentered",
            Defense::Ransac => "ransac",
            Defense::RobustGd => "robustGd",
        }
    }
}

impl FromStr for Defense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "clean" => Defense::Clean,
            "none" | "noDefense" => Defense::NoDefense,
            "sever" => Defense::Sever,
            "l2" => Defense::L2,
            "loss" => Defense::Loss,
            "gradient" => Defense::Gradient,
            "gradientCentered" => Defense::GradientCentered,
            "ransac" => Defense::Ransac,
            "robustGd" => Defense::RobustGd,
            other => return Err(Error::InvalidArgument(format!("unknown defense `{other}`"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct DefenseParams {
    pub sever: SeverConfig,
    pub ransac: RansacConfig,
    pub learner: LearnerConfig,
}

/// Runs one defense on `train`. [`Defense::Clean`] is treated as no defense;
/// callers pass it the uncorrupted data.
pub fn run_defense(
    defense: Defense,
    model: &LossModel,
    train: &Dataset,
    learner: &dyn Learner,
    params: &DefenseParams,
    test: Option<&Dataset>,
) -> Result<SeverOutcome> {
    let baseline = |k| run_baseline(k, model, train, learner, &params.sever);
    match defense {
        Defense::Clean | Defense::NoDefense => baseline(BaselineKind::NoDefense),
        Defense::Sever => run_sever(model, train, learner, &params.sever),
        Defense::L2 => baseline(BaselineKind::L2),
        Defense::Loss => baseline(BaselineKind::Loss),
        Defense::Gradient => baseline(BaselineKind::Gradient),
        Defense::GradientCentered => baseline(BaselineKind::GradientCentered),
        Defense::Ransac => run_ransac(model, train, learner, &params.ransac, test),
        Defense::RobustGd => run_robust_gd(model, train, &params.sever, &params.learner),
    }
}

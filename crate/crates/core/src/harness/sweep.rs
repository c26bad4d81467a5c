//! ε-sweep runner: data × attack grid × defense × trial.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use super::config::Ini;
use super::csvio::{fmt_f64, save_results, ExperimentRecord, Trial};
use super::defense::{run_defense, Defense, DefenseParams, LearnerKind};
use super::generators::{generate, Synthetic, Task};
use super::preprocess::robust_center_scale;
use crate::attacks::{apply_attack, offset_cluster_center, AttackSpec, Corrupted};
use crate::baselines::{RansacConfig, RansacSelection};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::LearnerConfig;
use crate::seed::derive_seed;
use crate::sever::{SeverConfig, SeverOutcome};

/// Upper bound on the per-round removal fraction returned by [`compute_p`].
pub const P_CAP: f64 = 0.45;

/// `(n₊ + n₋)/min(n₊, n₋) · ε/r`, capped at [`P_CAP`].
pub fn compute_p(n_plus: usize, n_minus: usize, eps: f64, r: usize) -> f64 {
    let small = n_plus.min(n_minus).max(1) as f64;
    let p = (n_plus + n_minus) as f64 / small * eps / r.max(1) as f64;
    if p > P_CAP {
        warn!("p = {p} exceeds cap; using {P_CAP}");
        P_CAP
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PRule {
    Fixed(f64),
    /// `ε/2`.
    HalfEps,
    /// [`compute_p`] on the corrupted training labels.
    Formula,
}

impl std::str::FromStr for PRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps/2" => Ok(PRule::HalfEps),
            "formula" => Ok(PRule::Formula),
            v => v
                .parse()
                .map(PRule::Fixed)
                .map_err(|_| Error::InvalidArgument(format!("bad p `{v}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSetting {
    Ridge { alpha: f64, beta: f64 },
    /// Cluster at `shift·m + radius·q`; see [`offset_cluster_center`].
    LabelFlip { shift: f64, radius: f64 },
}

impl AttackSetting {
    pub fn label(&self) -> String {
        match self {
            AttackSetting::Ridge { alpha, beta } => format!("ridge:a={alpha}:b={beta}"),
            AttackSetting::LabelFlip { shift, radius } => format!("flip:s={shift}:r={radius}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub task: Task,
    pub seed: u64,
    pub trials: usize,
    pub eps: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub noise: f64,
    pub center: bool,
    pub scale: bool,
    pub per_class: bool,
    pub learner: LearnerKind,
    pub lambda: f64,
    pub learner_cfg: LearnerConfig,
    pub attacks: Vec<AttackSetting>,
    pub attack_noise: Option<f64>,
    pub defenses: Vec<Defense>,
    pub p: PRule,
    pub rounds: usize,
    /// Switches Sever to the randomized fixed-point variant.
    pub sigma: Option<f64>,
    pub ransac_rounds: usize,
    pub ransac_subsample: Option<usize>,
    pub ransac_selection: RansacSelection,
}

impl SweepConfig {
    pub fn regression_default() -> Self {
        Self {
            task: Task::Regression,
            seed: 0,
            trials: 3,
            eps: vec![0.02, 0.04, 0.06, 0.08, 0.1],
            n_train: 1000,
            n_test: 200,
            d: 20,
            noise: 0.1,
            center: false,
            scale: false,
            per_class: false,
            learner: LearnerKind::Ridge,
            lambda: 0.01,
            learner_cfg: LearnerConfig::default(),
            attacks: vec![AttackSetting::Ridge { alpha: 1.0, beta: 1.0 }],
            attack_noise: None,
            defenses: vec![Defense::Clean, Defense::NoDefense, Defense::Sever],
            p: PRule::HalfEps,
            rounds: 4,
            sigma: None,
            ransac_rounds: 100,
            ransac_subsample: None,
            ransac_selection: RansacSelection::OracleTest,
        }
    }

    pub fn classification_default() -> Self {
        Self {
            task: Task::Classification,
            eps: vec![0.005, 0.01, 0.02, 0.03],
            per_class: true,
            learner: LearnerKind::Svm,
            lambda: 1e-3,
            attacks: vec![AttackSetting::LabelFlip { shift: 1.0, radius: 0.0 }],
            p: PRule::Formula,
            rounds: 2,
            ..Self::regression_default()
        }
    }

    pub fn from_ini(ini: &Ini) -> Result<Self> {
        for s in ini.section_names() {
            if !["experiment", "learner", "attack", "defense"].contains(&s) {
                return Err(Error::Config {
                    key: s.to_string(),
                    msg: "unknown section".into(),
                });
            }
        }
        ini.check_keys(
            "experiment",
            &[
                "task", "seed", "trials", "eps", "n_train", "n_test", "d", "noise", "center", "scale",
                "per_class",
            ],
        )?;
        ini.check_keys("learner", &["kind", "lambda", "max_epochs", "step_size", "gamma"])?;
        ini.check_keys("attack", &["method", "alpha", "beta", "noise_scale", "shift", "radius"])?;
        ini.check_keys(
            "defense",
            &["names", "p", "rounds", "sigma", "ransac_rounds", "ransac_subsample", "ransac_selection"],
        )?;

        let task: Task = ini.get_or("experiment", "task", Task::Regression)?;
        let mut c = match task {
            Task::Regression => Self::regression_default(),
            Task::Classification => Self::classification_default(),
        };
        c.seed = ini.get_or("experiment", "seed", c.seed)?;
        c.trials = ini.get_or("experiment", "trials", c.trials)?;
        if let Some(e) = ini.get_list("experiment", "eps")? {
            c.eps = e;
        }
        c.n_train = ini.get_or("experiment", "n_train", c.n_train)?;
        c.n_test = ini.get_or("experiment", "n_test", c.n_test)?;
        c.d = ini.get_or("experiment", "d", c.d)?;
        c.noise = ini.get_or("experiment", "noise", c.noise)?;
        c.center = ini.get_or("experiment", "center", c.center)?;
        c.scale = ini.get_or("experiment", "scale", c.scale)?;
        c.per_class = ini.get_or("experiment", "per_class", c.per_class)?;

        c.learner = ini.get_or("learner", "kind", c.learner)?;
        c.lambda = ini.get_or("learner", "lambda", c.lambda)?;
        c.learner_cfg.max_epochs = ini.get_or("learner", "max_epochs", c.learner_cfg.max_epochs)?;
        c.learner_cfg.step_size = ini.get_or("learner", "step_size", c.learner_cfg.step_size)?;
        c.learner_cfg.gamma_target = ini.get_or("learner", "gamma", c.learner_cfg.gamma_target)?;

        let method: String = ini.get_or(
            "attack",
            "method",
            match task {
                Task::Regression => "ridge-alpha-beta".to_string(),
                Task::Classification => "label-flip".to_string(),
            },
        )?;
        c.attack_noise = ini.get("attack", "noise_scale")?;
        c.attacks = match method.as_str() {
            "ridge-alpha-beta" => {
                let alphas: Vec<f64> = ini.get_list("attack", "alpha")?.unwrap_or(vec![1.0]);
                match ini.raw("attack", "beta") {
                    None | Some("alpha") => alphas
                        .iter()
                        .map(|&a| AttackSetting::Ridge { alpha: a, beta: a })
                        .collect(),
                    Some(_) => {
                        let betas: Vec<f64> = ini.get_list("attack", "beta")?.unwrap_or_default();
                        alphas
                            .iter()
                            .flat_map(|&a| betas.iter().map(move |&b| AttackSetting::Ridge { alpha: a, beta: b }))
                            .collect()
                    }
                }
            }
            "label-flip" => {
                let shifts: Vec<f64> = ini.get_list("attack", "shift")?.unwrap_or(vec![1.0]);
                let radii: Vec<f64> = ini.get_list("attack", "radius")?.unwrap_or(vec![0.0]);
                shifts
                    .iter()
                    .flat_map(|&s| radii.iter().map(move |&r| AttackSetting::LabelFlip { shift: s, radius: r }))
                    .collect()
            }
            other => {
                return Err(Error::Config {
                    key: "attack.method".into(),
                    msg: format!("unknown method `{other}`"),
                })
            }
        };

        if let Some(names) = ini.get_list::<String>("defense", "names")? {
            c.defenses = names
                .iter()
                .map(|n| {
                    n.parse().map_err(|_| Error::Config {
                        key: "defense.names".into(),
                        msg: format!("unknown defense `{n}`"),
                    })
                })
                .collect::<Result<_>>()?;
        }
        c.p = ini.get_or("defense", "p", c.p)?;
        c.rounds = ini.get_or("defense", "rounds", c.rounds)?;
        c.sigma = ini.get("defense", "sigma")?;
        c.ransac_rounds = ini.get_or("defense", "ransac_rounds", c.ransac_rounds)?;
        c.ransac_subsample = ini.get("defense", "ransac_subsample")?;
        if let Some(sel) = ini.raw("defense", "ransac_selection") {
            c.ransac_selection = match sel {
                "oracle_test" => RansacSelection::OracleTest,
                "median_train_loss" => RansacSelection::MedianTrainLoss,
                other => {
                    return Err(Error::Config {
                        key: "defense.ransac_selection".into(),
                        msg: format!("unknown selection `{other}`"),
                    })
                }
            };
        }
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_ini(&Ini::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| {
            Err(Error::Config {
                key: key.into(),
                msg: msg.into(),
            })
        };
        if self.trials == 0 {
            return bad("experiment.trials", "must be >= 1");
        }
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(0.0..=0.3).contains(&e)) {
            return bad("experiment.eps", "each value must be in [0, 0.3]");
        }
        if self.n_train == 0 || self.n_test == 0 || self.d == 0 {
            return bad("experiment.n_train", "sizes must be >= 1");
        }
        if self.learner == LearnerKind::Ridge && self.task == Task::Classification
            || self.learner != LearnerKind::Ridge && self.task == Task::Regression
        {
            return bad("learner.kind", "does not match experiment.task");
        }
        if !(self.lambda >= 0.0) {
            return bad("learner.lambda", "must be >= 0");
        }
        if self.rounds == 0 {
            return bad("defense.rounds", "must be >= 1");
        }
        if self.attacks.is_empty() {
            return bad("attack.alpha", "empty attack grid");
        }
        if self.defenses.is_empty() {
            return bad("defense.names", "no defenses");
        }
        if let PRule::Fixed(p) = self.p {
            if !(0.0..1.0).contains(&p) {
                return bad("defense.p", "must be in [0, 1)");
            }
        }
        self.learner_cfg.validate()
    }

    fn defense_name(&self, d: Defense) -> String {
        match (d, self.ransac_selection) {
            (Defense::Ransac, RansacSelection::OracleTest) => "ransac-oracle".into(),
            _ => d.name().into(),
        }
    }
}

/// Failure of one (eps, attack, defense, trial) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    pub eps: f64,
    pub attack: String,
    pub defense: String,
    pub trial: usize,
    pub message: String,
}

/// Worst median test error over the attack grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub eps: f64,
    pub defense: String,
    pub learner: String,
    pub worst_test_error: f64,
    pub worst_attack: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    /// Per-trial rows, each group followed by its median row when trials > 1.
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SummaryRow>,
    pub errors: Vec<CellError>,
}

impl SweepOutput {
    /// Median row (or the single trial row) for one cell.
    pub fn median(&self, eps: f64, attack: &str, defense: &str) -> Option<&ExperimentRecord> {
        let mut rows = self
            .records
            .iter()
            .filter(|r| r.eps == eps && r.attack == attack && r.defense == defense);
        let all: Vec<_> = rows.by_ref().collect();
        all.iter()
            .find(|r| r.trial == Trial::Median)
            .or_else(|| (all.len() == 1).then(|| &all[0]))
            .copied()
    }

    pub fn summary_for(&self, eps: f64, defense: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.eps == eps && s.defense == defense)
    }
}

type CellResult = std::result::Result<(f64, SeverOutcome), String>;

struct Job {
    ei: usize,
    ai: usize,
    trial: usize,
}

fn p_for(cfg: &SweepConfig, eps: f64, data: &Dataset) -> f64 {
    match cfg.p {
        PRule::Fixed(p) => p,
        PRule::HalfEps => eps / 2.0,
        PRule::Formula => {
            let (np, nm) = data.class_counts();
            if np == 0 || nm == 0 {
                eps / cfg.rounds as f64
            } else {
                compute_p(np, nm, eps, cfg.rounds)
            }
        }
    }
}

fn corrupt(cfg: &SweepConfig, clean: &Dataset, eps: f64, setting: &AttackSetting, seed: u64) -> Result<Corrupted> {
    if eps == 0.0 {
        return Ok(Corrupted::clean(clean.clone()));
    }
    let mut spec = match setting {
        AttackSetting::Ridge { alpha, beta } => AttackSpec::ridge(eps, *alpha, *beta, seed),
        AttackSetting::LabelFlip { shift, radius } => {
            let c = offset_cluster_center(clean, *shift, *radius, derive_seed(seed, &[1]))?;
            AttackSpec::label_flip(eps, Some(c), seed)
        }
    };
    spec.noise_scale = cfg.attack_noise;
    apply_attack(clean, &spec)
}

fn run_cell(
    cfg: &SweepConfig,
    defense: Defense,
    train: &Dataset,
    test: &Dataset,
    eps: f64,
    seed: u64,
) -> Result<(f64, SeverOutcome)> {
    let model = cfg.learner.loss_model(cfg.lambda)?;
    let learner = cfg.learner.learner(&cfg.learner_cfg);
    let p = p_for(cfg, eps, train);
    let sever = match cfg.sigma {
        Some(s) => SeverConfig::theoretical(s),
        None => SeverConfig::practical(p, cfg.rounds),
    }
    .with_seed(seed)
    .with_per_class(cfg.per_class);
    let mut ransac = RansacConfig::for_dim(cfg.d);
    ransac.num_rounds = cfg.ransac_rounds;
    ransac.selection = cfg.ransac_selection;
    ransac.seed = derive_seed(seed, &[1]);
    if let Some(k) = cfg.ransac_subsample {
        ransac.subsample_size = k;
    }
    ransac.subsample_size = ransac.subsample_size.min(train.active_count());
    let params = DefenseParams {
        sever: SeverConfig {
            eps_budget: eps.max(0.01),
            ..sever
        },
        ransac,
        learner: cfg.learner_cfg.clone(),
    };
    let filters = !matches!(defense, Defense::Clean | Defense::NoDefense | Defense::Ransac);
    let defense = if filters && cfg.sigma.is_none() && p <= 0.0 {
        Defense::NoDefense
    } else {
        defense
    };
    let out = run_defense(defense, &model, train, learner.as_ref(), &params, Some(test))?;
    Ok((model.test_error(&out.w, test), out))
}

fn prepare(cfg: &SweepConfig, train: &Dataset, test: &Dataset, eps: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if cfg.center || cfg.scale {
        let p = robust_center_scale(train, test, eps, cfg.scale, seed)?;
        Ok((p.train, p.test))
    } else {
        Ok((train.clone(), test.clone()))
    }
}

fn median_row(rows: &[ExperimentRecord]) -> ExperimentRecord {
    let mut sorted: Vec<&ExperimentRecord> = rows.iter().collect();
    sorted.sort_by(|a, b| a.test_error.total_cmp(&b.test_error));
    let mid = sorted[(sorted.len() - 1) / 2];
    ExperimentRecord {
        trial: Trial::Median,
        ..mid.clone()
    }
}

/// Runs the full grid. Cells run in parallel; output order depends only on
/// the config.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let data: Vec<Synthetic> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| generate(cfg.task, cfg.n_train, cfg.n_test, cfg.d, cfg.noise, derive_seed(cfg.seed, &[0, t as u64])))
        .collect::<Result<_>>()?;

    let jobs: Vec<Job> = (0..cfg.eps.len())
        .flat_map(|ei| {
            let attacks = if cfg.eps[ei] == 0.0 { 1 } else { cfg.attacks.len() };
            (0..attacks).flat_map(move |ai| (0..cfg.trials).map(move |trial| Job { ei, ai, trial }))
        })
        .collect();

    let attacked: Vec<Vec<CellResult>> = jobs
        .par_iter()
        .map(|job| {
            let eps = cfg.eps[job.ei];
            let syn = &data[job.trial];
            let coords = [job.ei as u64, job.ai as u64, job.trial as u64];
            let prepared = corrupt(cfg, &syn.train, eps, &cfg.attacks[job.ai], derive_seed(cfg.seed, &[1, coords[0], coords[1], coords[2]]))
                .and_then(|c| prepare(cfg, &c.data, &syn.test, eps, derive_seed(cfg.seed, &[2, coords[0], coords[1], coords[2]])));
            cfg.defenses
                .par_iter()
                .enumerate()
                .map(|(di, &def)| {
                    let (tr, te) = prepared.as_ref().map_err(|e| e.to_string())?;
                    let seed = derive_seed(cfg.seed, &[3, coords[0], coords[1], coords[2], di as u64]);
                    let res = if def == Defense::Clean {
                        prepare(cfg, &syn.train, &syn.test, 0.0, derive_seed(cfg.seed, &[4, coords[2]]))
                            .and_then(|(ctr, cte)| run_cell(cfg, def, &ctr, &cte, 0.0, seed))
                    } else {
                        run_cell(cfg, def, tr, te, eps, seed)
                    };
                    res.map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let mut out = SweepOutput::default();
    let mut job_idx = 0;
    for (ei, &eps) in cfg.eps.iter().enumerate() {
        let attacks = if eps == 0.0 { 1 } else { cfg.attacks.len() };
        for ai in 0..attacks {
            let label = if eps == 0.0 { "none".to_string() } else { cfg.attacks[ai].label() };
            let cells = &attacked[job_idx..job_idx + cfg.trials];
            let first = &jobs[job_idx];
            debug_assert!(first.ei == ei && first.ai == ai);
            for (di, &def) in cfg.defenses.iter().enumerate() {
                let name = cfg.defense_name(def);
                let mut rows = Vec::new();
                for (t, cell) in cells.iter().enumerate() {
                    match &cell[di] {
                        Ok((err, o)) => {
                            let syn = &data[t];
                            let outliers: Vec<bool> = (0..o.retained.len()).map(|i| i >= syn.train.len()).collect();
                            let removed = o.removed_ids();
                            let bad = removed.iter().filter(|&&i| outliers.get(i).copied().unwrap_or(false)).count();
                            rows.push(ExperimentRecord {
                                eps,
                                attack: if def == Defense::Clean { "none".into() } else { label.clone() },
                                defense: name.clone(),
                                learner: cfg.learner.name().into(),
                                trial: Trial::Index(t),
                                test_error: *err,
                                rounds: o.rounds_run,
                                removed_good: removed.len() - bad,
                                removed_bad: bad,
                            });
                        }
                        Err(msg) => out.errors.push(CellError {
                            eps,
                            attack: label.clone(),
                            defense: name.clone(),
                            trial: t,
                            message: msg.clone(),
                        }),
                    }
                }
                if def == Defense::Clean && ai > 0 {
                    continue;
                }
                let med = (cfg.trials > 1 && rows.len() == cfg.trials).then(|| median_row(&rows));
                out.records.extend(rows);
                out.records.extend(med);
            }
            job_idx += cfg.trials;
        }
    }
    out.summary = summarize(cfg, &out);
    Ok(out)
}

fn summarize(cfg: &SweepConfig, out: &SweepOutput) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        for &def in &cfg.defenses {
            let name = cfg.defense_name(def);
            let worst = out
                .records
                .iter()
                .filter(|r| r.eps == eps && r.defense == name)
                .filter(|r| cfg.trials == 1 || r.trial == Trial::Median)
                .max_by(|a, b| a.test_error.total_cmp(&b.test_error));
            if let Some(w) = worst {
                rows.push(SummaryRow {
                    eps,
                    defense: name,
                    learner: cfg.learner.name().into(),
                    worst_test_error: w.test_error,
                    worst_attack: w.attack.clone(),
                });
            }
        }
    }
    rows
}

pub fn write_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::from("eps,defense,learner,worst_test_error,worst_attack\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.eps, r.defense, r.learner, fmt_f64(r.worst_test_error), r.worst_attack);
    }
    s
}

pub fn write_errors(errors: &[CellError]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["eps", "attack", "defense", "trial", "error"]);
    for e in errors {
        let _ = w.write_record([e.eps.to_string(), e.attack.clone(), e.defense.clone(), e.trial.to_string(), e.message.clone()]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

/// Writes `results.csv`, `summary.csv` and, when any cell failed, `errors.csv`.
pub fn write_outputs(out: &SweepOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    save_results(&out.records, dir.join("results.csv"))?;
    fs::write(dir.join("summary.csv"), write_summary(&out.summary))?;
    if !out.errors.is_empty() {
        fs::write(dir.join("errors.csv"), write_errors(&out.errors))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compute_p_examples() {
        assert!((compute_p(500, 500, 0.02, 2) - 0.02).abs() < 1e-15);
        assert!((compute_p(100, 50, 0.03, 2) - 0.045).abs() < 1e-15);
        assert_eq!(compute_p(1000, 10, 0.05, 2), P_CAP);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = SweepConfig::parse("[experiment]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("experiment.bogus"), "{e}");
        let e = SweepConfig::parse("[defense]\nnames = sever, nope\n").unwrap_err();
        assert!(e.to_string().contains("defense.names"), "{e}");
        let e = SweepConfig::parse("[weird]\n").unwrap_err();
        assert!(e.to_string().contains("weird"), "{e}");
    }

    #[test]
    fn beta_defaults_to_alpha() {
        let c = SweepConfig::parse("[attack]\nalpha = 1, 4\n").unwrap();
        assert_eq!(
            c.attacks,
            vec![AttackSetting::Ridge { alpha: 1.0, beta: 1.0 }, AttackSetting::Ridge { alpha: 4.0, beta: 4.0 }]
        );
        let c = SweepConfig::parse("[attack]\nalpha = 1, 4\nbeta = 2\n").unwrap();
        assert_eq!(c.attacks.len(), 2);
    }

    #[test]
    fn eps_zero_no_defense_is_the_clean_fit() {
        let c = SweepConfig::parse(
            "[experiment]\ntrials = 1\neps = 0\nn_train = 200\nn_test = 50\nd = 5\n[defense]\nnames = none\n",
        )
        .unwrap();
        let out = run_sweep(&c).unwrap();
        assert_eq!(out.records.len(), 1);
        let syn = generate(Task::Regression, 200, 50, 5, 0.1, derive_seed(0, &[0, 0])).unwrap();
        let w = crate::learners::fit_ridge_closed_form(&syn.train, 0.01).unwrap();
        let want = crate::losses::LossModel::squared(0.01).test_error(&w, &syn.test);
        assert_eq!(out.records[0].test_error, want);
    }

    #[test]
    fn median_row_is_the_middle_trial() {
        let c = SweepConfig::parse(
            "[experiment]\ntrials = 3\neps = 0.1\nn_train = 200\nn_test = 50\nd = 5\n[defense]\nnames = none\n",
        )
        .unwrap();
        let out = run_sweep(&c).unwrap();
        assert_eq!(out.records.len(), 4);
        let mut errs: Vec<f64> = out.records[..3].iter().map(|r| r.test_error).collect();
        errs.sort_by(f64::total_cmp);
        assert_eq!(out.records[3].trial, Trial::Median);
        assert_eq!(out.records[3].test_error, errs[1]);
    }
}

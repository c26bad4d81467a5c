use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use sever_core::attacks::{apply_attack, offset_cluster_center, AttackSpec};
use sever_core::baselines::{RansacConfig, RansacSelection};
use sever_core::harness::csvio::{
    load_csv, load_provenance, save_csv, save_provenance, save_results, save_scores, ExperimentRecord, Trial,
};
use sever_core::harness::defense::{run_defense, Defense, DefenseParams, LearnerKind};
use sever_core::harness::generators::{generate, Task};
use sever_core::harness::sweep::{compute_p, run_sweep, write_outputs, SweepConfig};
use sever_core::{Error, LearnerConfig, Result, SeverConfig};

#[derive(Parser)]
#[command(name = "sever", version, about = "Robust learning by gradient-space outlier filtering")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic train/test pair.
    Gen(GenArgs),
    /// Append outliers to a dataset.
    Attack(AttackArgs),
    /// Run one defense and report test error.
    Run(RunArgs),
    /// Run an experiment grid from a config file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    task: Task,
    /// Training samples.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    n_test: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training CSV.
    #[arg(long)]
    out: PathBuf,
    /// Test CSV; defaults to `<out stem>.test.csv`.
    #[arg(long)]
    test_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    RidgeAlphaBeta,
    LabelFlip,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    method: Method,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Defaults to alpha.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Label-flip cluster at `shift·m + radius·q` (m: minority class mean).
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out stem>.provenance.csv`.
    #[arg(long)]
    provenance: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    OracleTest,
    MedianTrainLoss,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "sever")]
    defense: Defense,
    #[arg(long, default_value = "ridge")]
    learner: LearnerKind,
    /// Regularization; defaults to 0.01 for ridge and 1e-3 otherwise.
    #[arg(long)]
    lambda: Option<f64>,
    /// Per-round removal fraction. Defaults to eps/2 for ridge, the
    /// class-balance formula otherwise, when --eps is known.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 4)]
    rounds: usize,
    /// Assumed outlier fraction, used for default p.
    #[arg(long)]
    eps: Option<f64>,
    /// Use the randomized fixed-point variant with this sigma.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    per_class: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    step_size: f64,
    #[arg(long, value_enum, default_value_t = Selection::MedianTrainLoss)]
    ransac_selection: Selection,
    #[arg(long, default_value_t = 100)]
    ransac_rounds: usize,
    /// Ground-truth flags, used only for reporting removed counts.
    #[arg(long)]
    provenance: Option<PathBuf>,
    #[arg(long)]
    scores_out: Option<PathBuf>,
    #[arg(long)]
    weights_out: Option<PathBuf>,
    /// Results CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn gen(a: GenArgs) -> Result<()> {
    let s = generate(a.task, a.n, a.n_test, a.d, a.noise, a.seed)?;
    let test_out = a.test_out.unwrap_or_else(|| sibling(&a.out, "test"));
    save_csv(&s.train, &a.out)?;
    save_csv(&s.test, &test_out)?;
    info!("wrote {} and {}", a.out.display(), test_out.display());
    Ok(())
}

fn attack(a: AttackArgs) -> Result<()> {
    let data = load_csv(&a.input)?;
    let mut spec = match a.method {
        Method::RidgeAlphaBeta => AttackSpec::ridge(a.eps, a.alpha, a.beta.unwrap_or(a.alpha), a.seed),
        Method::LabelFlip => {
            let c = offset_cluster_center(&data, a.shift, a.radius, a.seed.wrapping_add(1))?;
            AttackSpec::label_flip(a.eps, Some(c), a.seed)
        }
    };
    spec.noise_scale = a.noise_scale;
    let out = apply_attack(&data, &spec)?;
    save_csv(&out.data, &a.out)?;
    save_provenance(&out.is_outlier, a.provenance.unwrap_or_else(|| sibling(&a.out, "provenance")))?;
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let train = load_csv(&a.train)?;
    let test = load_csv(&a.test)?;
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: test.dim(),
        });
    }
    let provenance = a.provenance.as_deref().map(load_provenance).transpose()?;
    if let Some(p) = &provenance {
        if p.len() != train.len() {
            return Err(Error::DimensionMismatch {
                expected: train.len(),
                got: p.len(),
            });
        }
    }
    let lambda = a.lambda.unwrap_or(if a.learner == LearnerKind::Ridge { 0.01 } else { 1e-3 });
    let model = a.learner.loss_model(lambda)?;
    let learner_cfg = LearnerConfig {
        max_epochs: a.max_epochs,
        step_size: a.step_size,
        ..LearnerConfig::default()
    };
    learner_cfg.validate()?;
    let learner = a.learner.learner(&learner_cfg);

    let eps = a.eps.or_else(|| {
        provenance.as_ref().map(|p| {
            let bad = p.iter().filter(|&&b| b).count();
            bad as f64 / (p.len() - bad).max(1) as f64
        })
    });
    let p = match (a.p, eps) {
        (Some(p), _) => p,
        (None, Some(e)) if a.learner.is_classification() => {
            let (np, nm) = train.class_counts();
            compute_p(np.max(1), nm.max(1), e, a.rounds)
        }
        (None, Some(e)) => e / 2.0,
        (None, None) => 0.05,
    };
    let sever = match a.sigma {
        Some(s) => SeverConfig::theoretical(s),
        None => SeverConfig::practical(p, a.rounds),
    }
    .with_seed(a.seed)
    .with_per_class(a.per_class);
    let mut ransac = RansacConfig::for_dim(train.dim());
    ransac.num_rounds = a.ransac_rounds;
    ransac.seed = a.seed;
    ransac.selection = match a.ransac_selection {
        Selection::OracleTest => RansacSelection::OracleTest,
        Selection::MedianTrainLoss => RansacSelection::MedianTrainLoss,
    };
    ransac.subsample_size = ransac.subsample_size.min(train.len());
    let selection = ransac.selection;
    let params = DefenseParams {
        sever,
        ransac,
        learner: learner_cfg,
    };
    let out = run_defense(a.defense, &model, &train, learner.as_ref(), &params, Some(&test))?;
    let test_error = model.test_error(&out.w, &test);

    let removed = out.removed_ids();
    let bad = provenance
        .as_ref()
        .map_or(0, |p| removed.iter().filter(|&&i| p[i]).count());
    let rec = ExperimentRecord {
        eps: eps.unwrap_or(0.0),
        attack: if provenance.is_some() { "file".into() } else { "unknown".into() },
        defense: match (a.defense, selection) {
            (Defense::Ransac, RansacSelection::OracleTest) => "ransac-oracle".into(),
            (d, _) => d.name().into(),
        },
        learner: a.learner.name().into(),
        trial: Trial::Index(0),
        test_error,
        rounds: out.rounds_run,
        removed_good: removed.len() - bad,
        removed_bad: bad,
    };
    match &a.out {
        Some(path) => save_results(std::slice::from_ref(&rec), path)?,
        None => sever_core::harness::csvio::write_results(std::slice::from_ref(&rec), std::io::stdout())?,
    }
    if let Some(path) = &a.scores_out {
        save_scores(&out.round_scores, provenance.as_deref(), path)?;
    }
    if let Some(path) = &a.weights_out {
        let text: String = out
            .w
            .iter()
            .map(|v| sever_core::harness::csvio::fmt_f64(*v) + "\n")
            .collect();
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = SweepConfig::load(&a.config)?;
    let out = run_sweep(&cfg)?;
    write_outputs(&out, &a.out_dir)?;
    if !out.errors.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} cell(s) failed; see errors.csv",
            out.errors.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Attack(a) => attack(a),
        Cmd::Run(a) => run(a),
        Cmd::Sweep(a) => sweep(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config { key, msg }) => {
            eprintln!("error: config key `{key}`: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

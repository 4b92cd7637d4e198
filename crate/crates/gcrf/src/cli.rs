//! Command implementations behind the `gcrf` binary: data generation,
//! training, prediction, evaluation, benchmarking and landmark feature
//! preparation.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 solver non-convergence
//! (outputs are still written in that case).

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::datagen::{sample_dataset, sample_ground_truth};
use crate::error::Error;
use crate::eval::{compare_solvers, roc_auc, standard_suite, suite_stats, SuiteCell};
use crate::io::{
    read_matrix_csv, read_model_json, write_matrix_csv, write_model_json, write_trace_csv,
};
use crate::landmarks::{build_feature_matrix, load_landmark_csv, mean_reference, LandmarkFrame};
use crate::model::{compute_stats, predict, Dataset};
use crate::solver::{admm::fit_admm, gd::fit_gd, FitResult, SolverConfig};

/// Failure modes mapped to process exit codes by `main`.
#[derive(Debug)]
pub enum CliError {
    /// Usage, parse or I/O problem: exit code 1.
    Usage(String),
    /// A solver finished without meeting its convergence criteria: exit 2.
    NonConvergence(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::NonConvergence(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NonConvergence(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gcrf",
    about = "Gaussian conditional random field toolkit: generate, train, predict, eval, bench",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground-truth model
    Generate(GenerateArgs),
    /// Fit a model to X/Y data CSVs
    Train(TrainArgs),
    /// Apply a trained model to inputs
    Predict(PredictArgs),
    /// Area under the ROC curve for scores against binary labels
    Eval(EvalArgs),
    /// Paired solver comparison over a synthetic suite
    Bench(BenchArgs),
    /// Align a landmark CSV and emit a feature matrix
    Features(FeaturesArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Input dimension
    #[arg(long)]
    n: usize,
    /// Output dimension
    #[arg(long)]
    p: usize,
    /// Number of samples
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for X.csv, Y.csv and truth.model.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    diag_dominance: f64,
    #[arg(long, default_value_t = 0.5)]
    theta_density: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Gd,
    Admm,
}

#[derive(Args)]
struct TrainArgs {
    /// Inputs CSV (m×n)
    #[arg(long)]
    x: PathBuf,
    /// Outputs CSV (m×p)
    #[arg(long)]
    y: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverKind::Admm)]
    solver: SolverKind,
    /// Model JSON output path
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Trace CSV output path
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
    /// Subtract column means before computing statistics
    #[arg(long)]
    center: bool,
    /// L1 penalty weight
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    /// Iteration cap; defaults to 10000 for gd and 5000 for admm
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    armijo_c: f64,
    #[arg(long, default_value_t = 0.5)]
    backtrack_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    initial_step: f64,
    #[arg(long, default_value_t = 1e-2)]
    mu0: f64,
    #[arg(long, default_value_t = 1.1)]
    beta: f64,
    #[arg(long, default_value_t = 20.0)]
    mu_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    primal_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    dual_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON
    #[arg(long)]
    model: PathBuf,
    /// Inputs CSV (m×n)
    #[arg(long)]
    x: PathBuf,
    /// Predictions CSV output path (m×p)
    #[arg(long, default_value = "predictions.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Scores CSV
    #[arg(long)]
    scores: PathBuf,
    /// Labels CSV; entries must be 0/1 unless --binarize-at is given
    #[arg(long)]
    labels: PathBuf,
    /// Column of the scores file to use
    #[arg(long, default_value_t = 0)]
    score_col: usize,
    /// Column of the labels file to use
    #[arg(long, default_value_t = 0)]
    label_col: usize,
    /// Threshold turning a continuous label column into 0/1 (label = value > t)
    #[arg(long)]
    binarize_at: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of suite seeds
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Report CSV output path
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Gradient tolerance for both solvers (tight, so final parameters agree)
    #[arg(long, default_value_t = 1e-7)]
    grad_tol: f64,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Landmark CSV (frame_id, x1, y1, ...)
    #[arg(long)]
    landmarks: PathBuf,
    /// Feature matrix output path
    #[arg(long, default_value = "features.csv")]
    out: PathBuf,
    /// Optional reference landmark CSV (first frame is used); defaults to
    /// the sequence mean shape
    #[arg(long)]
    reference: Option<PathBuf>,
}

impl Cli {
    pub fn run(self) -> Result<(), CliError> {
        match self.command {
            Command::Generate(args) => cmd_generate(args),
            Command::Train(args) => cmd_train(args),
            Command::Predict(args) => cmd_predict(args),
            Command::Eval(args) => cmd_eval(args),
            Command::Bench(args) => cmd_bench(args),
            Command::Features(args) => cmd_features(args),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    if args.m == 0 {
        return Err(usage("--m must be at least 1"));
    }
    if args.n == 0 || args.p == 0 {
        return Err(usage("--n and --p must be at least 1"));
    }
    let gt = sample_ground_truth(
        args.n,
        args.p,
        args.diag_dominance,
        args.theta_density,
        args.seed,
    )?;
    let data = sample_dataset(&gt, args.m, args.seed)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| usage(format!("{}: {e}", args.out.display())))?;
    write_matrix_csv(args.out.join("X.csv"), data.x())?;
    write_matrix_csv(args.out.join("Y.csv"), data.y())?;
    write_model_json(args.out.join("truth.model.json"), &gt.params)?;
    println!(
        "wrote X.csv ({}x{}), Y.csv ({}x{}), truth.model.json (seed {})",
        data.x().nrows(),
        data.x().ncols(),
        data.y().nrows(),
        data.y().ncols(),
        args.seed
    );
    Ok(())
}

fn train_config(args: &TrainArgs) -> SolverConfig {
    SolverConfig {
        max_iter: args.max_iter.unwrap_or(match args.solver {
            SolverKind::Gd => 10_000,
            SolverKind::Admm => 5_000,
        }),
        grad_tol: args.grad_tol,
        armijo_c: args.armijo_c,
        backtrack_factor: args.backtrack_factor,
        initial_step: args.initial_step,
        l1_weight: args.l1,
        mu0: args.mu0,
        beta: args.beta,
        mu_max: args.mu_max,
        primal_tol: args.primal_tol,
        dual_tol: args.dual_tol,
        seed: args.seed,
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let x = read_matrix_csv(&args.x)?;
    let y = read_matrix_csv(&args.y)?;
    let mut data = Dataset::new(x, y)?;
    if args.center {
        data = data.centered();
    }
    let stats = compute_stats(&data)?;
    let config = train_config(&args);
    let fit: FitResult = match args.solver {
        SolverKind::Gd => fit_gd(&stats, &config, None)?,
        SolverKind::Admm => fit_admm(&stats, &config, None)?,
    };
    write_model_json(&args.out, &fit.params)?;
    write_trace_csv(&args.trace, &fit.trace)?;
    println!(
        "{:?} solver: {} iterations, objective {:.6}, wrote {} and {}",
        args.solver,
        fit.iterations,
        fit.final_objective(),
        args.out.display(),
        args.trace.display()
    );
    if !fit.converged {
        return Err(CliError::NonConvergence(format!(
            "solver did not converge within {} iterations (outputs were written)",
            config.max_iter
        )));
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let params = read_model_json(&args.model)?;
    let x = read_matrix_csv(&args.x)?;
    if x.ncols() != params.input_dim() {
        return Err(usage(format!(
            "model expects {} input columns but {} has {}",
            params.input_dim(),
            args.x.display(),
            x.ncols()
        )));
    }
    let mut out = DMatrix::zeros(x.nrows(), params.output_dim());
    for i in 0..x.nrows() {
        let xi = x.row(i).transpose();
        let yi = predict(&params, &xi)?;
        out.row_mut(i).copy_from(&yi.transpose());
    }
    write_matrix_csv(&args.out, &out)?;
    println!(
        "wrote {} ({}x{})",
        args.out.display(),
        out.nrows(),
        out.ncols()
    );
    Ok(())
}

fn column(matrix: &DMatrix<f64>, col: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if col >= matrix.ncols() {
        return Err(usage(format!(
            "{what} column {col} out of range (file has {} columns)",
            matrix.ncols()
        )));
    }
    Ok(matrix.column(col).iter().cloned().collect())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let scores_m = read_matrix_csv(&args.scores)?;
    let labels_m = read_matrix_csv(&args.labels)?;
    let scores = column(&scores_m, args.score_col, "score")?;
    let raw_labels = column(&labels_m, args.label_col, "label")?;
    let labels: Vec<bool> = match args.binarize_at {
        Some(t) => raw_labels.iter().map(|v| *v > t).collect(),
        None => raw_labels
            .iter()
            .map(|v| {
                if *v == 0.0 {
                    Ok(false)
                } else if *v == 1.0 {
                    Ok(true)
                } else {
                    Err(usage(format!(
                        "label {v} is not 0/1; use --binarize-at for continuous labels"
                    )))
                }
            })
            .collect::<Result<_, _>>()?,
    };
    let auc = roc_auc(&scores, &labels)?;
    println!("auc = {auc}");
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let config = SolverConfig {
        grad_tol: args.grad_tol,
        primal_tol: 1e-8,
        dual_tol: 1e-8,
        ..SolverConfig::default()
    };

    let cells: Vec<SuiteCell> = standard_suite(args.seeds)
        .into_iter()
        .map(|c| SuiteCell {
            n: args.n,
            p: args.p,
            m: args.m,
            ..c
        })
        .collect();

    let mut report = String::from("seed,n,p,m,gd_iters,admm_iters,f_star,agree\n");
    let mut summary = String::new();
    for cell in &cells {
        let stats = suite_stats(cell)?;
        let cmp = compare_solvers(&stats, &config)?;
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            report,
            "{},{},{},{},{},{},{},{}",
            cell.seed,
            cell.n,
            cell.p,
            cell.m,
            opt(cmp.gd_iters),
            opt(cmp.admm_iters),
            cmp.f_star,
            cmp.agree
        );
        let _ = writeln!(
            summary,
            "seed {}: gd {:>5} iters, admm {:>5} iters, f* = {:.6}, agree = {}",
            cell.seed,
            opt(cmp.gd_iters),
            opt(cmp.admm_iters),
            cmp.f_star,
            cmp.agree
        );
    }
    std::fs::write(&args.out, report).map_err(|e| usage(format!("{}: {e}", args.out.display())))?;
    print!("{summary}");
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<(), CliError> {
    let frames = load_landmark_csv(&args.landmarks)?;
    if frames.is_empty() {
        return Err(usage(format!(
            "{}: no frames to align",
            args.landmarks.display()
        )));
    }
    let reference: LandmarkFrame = match &args.reference {
        Some(path) => {
            let ref_frames = load_landmark_csv(path)?;
            ref_frames
                .into_iter()
                .next()
                .ok_or_else(|| usage(format!("{}: empty reference file", path.display())))?
        }
        None => mean_reference(&frames)?,
    };
    let features = build_feature_matrix(&frames, &reference)?;
    write_matrix_csv(&args.out, &features)?;
    println!(
        "wrote {} ({} frames x {} features)",
        args.out.display(),
        features.nrows(),
        features.ncols()
    );
    Ok(())
}

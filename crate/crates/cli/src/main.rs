//! `slce` command-line tool. Models travel between subcommands as JSON files;
//! stdout carries human-readable summaries only.
//!
//! Exit codes: 0 success, 1 bad flags or data, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use slce_core::baselines::BairOptions;
use slce_core::harness::{
    emit_accuracy_curves, emit_embedding, emit_spectrum_diagnostics, run_experiment_with_data, EmbeddingTable,
    LdaConfig,
};
use slce_core::{
    fit_method, knn, load_csv, CsvOptions, Error, ExperimentConfig, FitSettings, LabeledDataset, LinearReducer, Method,
    SolverOptions, SolverPath,
};

#[derive(Debug, Parser)]
#[command(
    name = "slce",
    version,
    about = "Supervised linear centroid-encoder and linear baselines",
    after_help = "Exit status: 0 on success, 1 on invalid flags or data, 2 on numerical failure."
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a linear reducer on a labeled CSV and save it as JSON.
    Fit(FitArgs),
    /// Project a CSV through a saved model and write the coordinates as CSV.
    Transform(TransformArgs),
    /// Score a saved model with k-NN: fit neighbors on --train, predict --test.
    Eval(EvalArgs),
    /// Run the repeated split, fit, project and k-NN benchmark from a config file.
    Bench(BenchArgs),
    /// Write the leading eigenvalues and per-direction costs of a dataset.
    Spectrum(SpectrumArgs),
    /// Write a train/test embedding table and an optional SVG scatter.
    Embed(EmbedArgs),
}

#[derive(Debug, Args)]
struct CsvArgs {
    /// Label column: `last`, a zero-based index, or a header name.
    #[arg(long = "label-col", default_value = "last", value_name = "COL")]
    label_column: String,

    /// Whether the first row is a header.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    header: bool,
}

impl CsvArgs {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.header,
            label_column: self.label_column.parse().expect("label column parsing is infallible"),
        }
    }

    fn load(&self, path: &Path) -> Result<LabeledDataset, Failure> {
        load_csv(path, &self.options()).map_err(|e| Failure::from(e).context(path))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Supervised linear centroid-encoder.
    Slce,
    /// Principal components.
    Pca,
    /// Shrinkage LDA; at most classes - 1 directions.
    Lda,
    /// Supervised PCA on features screened by univariate regression.
    #[value(name = "bair_spca")]
    BairSpca,
    /// Supervised PCA with a delta label kernel.
    #[value(name = "hsic_spca")]
    HsicSpca,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Slce => Method::Slce,
            MethodArg::Pca => Method::Pca,
            MethodArg::Lda => Method::Lda,
            MethodArg::BairSpca => Method::BairSpca,
            MethodArg::HsicSpca => Method::HsicSpca,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    /// Reduced solver when features exceed twice the samples.
    Auto,
    /// Eigendecomposition of the full d × d system matrix.
    Dense,
    /// Eigendecomposition restricted to the span of the data.
    Reduced,
}

impl From<SolverArg> for SolverOptions {
    fn from(s: SolverArg) -> Self {
        SolverOptions {
            path: match s {
                SolverArg::Auto => SolverPath::Auto,
                SolverArg::Dense => SolverPath::Dense,
                SolverArg::Reduced => SolverPath::Reduced,
            },
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "slce")]
    method: MethodArg,

    /// Training CSV, one sample per row.
    #[arg(long, value_name = "CSV")]
    data: PathBuf,

    /// Embedding dimension k (k ≥ 1).
    #[arg(long, value_name = "K")]
    dim: usize,

    /// Output model JSON.
    #[arg(long, value_name = "JSON")]
    out: PathBuf,

    /// Seed for the cross-validation folds of bair_spca.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// LDA shrinkage γ in [0, 1].
    #[arg(long, default_value_t = slce_core::baselines::DEFAULT_LDA_SHRINKAGE)]
    shrinkage: f64,

    /// Comma-separated feature fractions tried by bair_spca.
    #[arg(long, value_delimiter = ',', value_name = "FRACTIONS")]
    bair_grid: Option<Vec<f64>>,

    /// Z-score features with training statistics; the model stores them.
    #[arg(long)]
    standardize: bool,

    #[arg(long, value_enum, default_value = "auto")]
    solver: SolverArg,

    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// Model JSON written by `fit`.
    #[arg(long, value_name = "JSON")]
    model: PathBuf,

    /// CSV to project; its label column is carried through.
    #[arg(long, value_name = "CSV")]
    data: PathBuf,

    /// Output CSV: coord_1..coord_k,label,partition.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,

    /// Keep only the first DIM coordinates (default: all).
    #[arg(long)]
    dim: Option<usize>,

    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Model JSON written by `fit`.
    #[arg(long, value_name = "JSON")]
    model: PathBuf,

    /// Reference points for the classifier.
    #[arg(long, value_name = "CSV")]
    train: PathBuf,

    /// Points to classify; labels must occur in --train.
    #[arg(long, value_name = "CSV")]
    test: PathBuf,

    /// Number of neighbors.
    #[arg(long, default_value_t = 5)]
    knn: usize,

    /// Use only the first DIM coordinates (default: all).
    #[arg(long)]
    dim: Option<usize>,

    /// Also write the result as JSON.
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,

    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Output report JSON.
    #[arg(long, value_name = "JSON")]
    out: PathBuf,

    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Long-format accuracy CSV.
    #[arg(long, value_name = "CSV")]
    csv: Option<PathBuf>,

    /// Accuracy-versus-dimension SVG chart (needs --csv).
    #[arg(long, value_name = "SVG", requires = "csv")]
    svg: Option<PathBuf>,

    /// Worker threads for repetitions; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long, value_name = "CSV")]
    data: PathBuf,

    /// Output CSV of eigenvalues and one-direction costs.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,

    /// Rows to write (default: min(d, 2M + 5)).
    #[arg(long)]
    count: Option<usize>,

    #[arg(long, value_enum, default_value = "auto")]
    solver: SolverArg,

    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// Model JSON written by `fit`.
    #[arg(long, value_name = "JSON")]
    model: PathBuf,

    /// Points tagged `train`.
    #[arg(long, value_name = "CSV")]
    train: PathBuf,

    /// Points tagged `test`.
    #[arg(long, value_name = "CSV")]
    test: Option<PathBuf>,

    /// Coordinates to keep (default: 2, or k if smaller).
    #[arg(long)]
    dim: Option<usize>,

    /// Output CSV: coord_1..coord_dim,label,partition.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,

    /// SVG scatter, for dim 2 or 3.
    #[arg(long, value_name = "SVG")]
    svg: Option<PathBuf>,

    #[command(flatten)]
    csv: CsvArgs,
}

/// A reportable failure and its exit status.
#[derive(Debug)]
struct Failure {
    message: String,
    numerical: bool,
}

impl Failure {
    fn user(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            numerical: false,
        }
    }

    fn context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }

    fn code(&self) -> u8 {
        if self.numerical {
            2
        } else {
            1
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            numerical: e.is_numerical(),
            message: e.to_string(),
        }
    }
}

fn load_model(path: &Path) -> Result<LinearReducer, Failure> {
    LinearReducer::load(path).map_err(|e| Failure::from(e).context(path))
}

fn pick_dim(requested: Option<usize>, model: &LinearReducer) -> Result<usize, Failure> {
    match requested {
        Some(0) => Err(Failure::user("--dim must satisfy k ≥ 1")),
        Some(d) if d > model.k() => Err(Failure::user(format!(
            "--dim {d} exceeds the model's {} components",
            model.k()
        ))),
        Some(d) => Ok(d),
        None => Ok(model.k()),
    }
}

fn fit(args: FitArgs) -> Result<(), Failure> {
    if args.dim == 0 {
        return Err(Failure::user("--dim must satisfy k ≥ 1"));
    }
    let method = Method::from(args.method);
    let train = args.csv.load(&args.data)?;
    let mut bair = BairOptions {
        seed: args.seed,
        ..BairOptions::default()
    };
    if let Some(grid) = args.bair_grid {
        bair.threshold_grid = grid;
    }
    let settings = FitSettings {
        lda: LdaConfig {
            shrinkage: args.shrinkage,
        },
        bair,
        solver: args.solver.into(),
        standardize: args.standardize,
    };
    let model = fit_method(method, &train, args.dim, &settings)?;
    model.save(&args.out).map_err(|e| Failure::from(e).context(&args.out))?;
    println!(
        "fitted {method}: {} features -> {} components on {} samples ({} classes)",
        model.d(),
        model.k(),
        train.n_samples(),
        train.n_classes()
    );
    let shown: Vec<String> = model.spectrum.iter().take(8).map(|v| format!("{v:.6e}")).collect();
    println!("leading eigenvalues: {}", shown.join(", "));
    if let Some(p) = model.aux.positive_count {
        println!("positive eigenvalues: {p}");
        if method == Method::Slce && model.k() > p {
            println!("note: components beyond {p} do not lower the centroid reconstruction loss");
        }
    }
    println!("model written to {}", args.out.display());
    Ok(())
}

fn transform(args: TransformArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let dim = pick_dim(args.dim, &model)?;
    let ds = args.csv.load(&args.data)?;
    let table = EmbeddingTable::build(&model, &ds, None, dim)?;
    std::fs::write(&args.out, table.to_csv()?).map_err(|e| Failure::from(Error::from(e)).context(&args.out))?;
    println!(
        "projected {} samples to {dim} coordinates; wrote {}",
        table.len(),
        args.out.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    if args.knn == 0 {
        return Err(Failure::user("--knn must be at least 1"));
    }
    let model = load_model(&args.model)?;
    let dim = pick_dim(args.dim, &model)?;
    let train = args.csv.load(&args.train)?;
    let test = args
        .csv
        .load(&args.test)?
        .aligned_to(train.class_names())
        .map_err(|e| Failure::from(e).context(&args.test))?;
    let tr = model.transform_dim(train.data(), dim)?;
    let te = model.transform_dim(test.data(), dim)?;
    let result = knn::evaluate(&tr, train.labels(), &te, test.labels(), args.knn)?;
    let correct = (result.accuracy * test.n_samples() as f64).round() as usize;
    println!(
        "{}-NN accuracy of {} at dim {dim}: {:.4} ({correct}/{} test samples)",
        args.knn,
        model.method,
        result.accuracy,
        test.n_samples()
    );
    if let Some(out) = &args.out {
        let doc = serde_json::json!({
            "method": model.method,
            "dim": dim,
            "knn": args.knn,
            "accuracy": result.accuracy,
            "n_test": test.n_samples(),
        });
        let doc = serde_json::to_string_pretty(&doc).expect("plain JSON value") + "\n";
        std::fs::write(out, doc).map_err(|e| Failure::from(Error::from(e)).context(out))?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    if args.jobs == 0 {
        return Err(Failure::user("--jobs must be at least 1"));
    }
    let mut config = ExperimentConfig::from_path(&args.config).map_err(|e| Failure::from(e).context(&args.config))?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    let (source, test) = config.load_data()?;
    let report = run_experiment_with_data(&config, &source, test.as_ref(), args.jobs)?;
    report
        .save(&args.out)
        .map_err(|e| Failure::from(e).context(&args.out))?;
    println!(
        "{} repetitions, base seed {}, {}-NN",
        config.repetitions, config.base_seed, config.knn_k
    );
    println!(
        "{:<10} {:>4} {:>9} {:>8} {:>6}",
        "method", "dim", "mean", "std", "failed"
    );
    for cell in &report.cells {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:<10} {:>4} {:>9} {:>8} {:>6}",
            cell.method.as_str(),
            cell.dim,
            fmt(cell.mean),
            fmt(cell.std),
            cell.n_failed
        );
    }
    for row in &report.reference {
        println!(
            "reference {} ({}): {:.2} ± {:.2} at dim {}",
            row.method, row.source, row.mean, row.std, row.dim
        );
    }
    if let Some(csv) = &args.csv {
        emit_accuracy_curves(&report, csv, args.svg.as_deref())?;
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn spectrum(args: SpectrumArgs) -> Result<(), Failure> {
    if args.count == Some(0) {
        return Err(Failure::user("--count must be at least 1"));
    }
    let ds = args.csv.load(&args.data)?;
    let diag = emit_spectrum_diagnostics(&ds, &args.out, args.count, &args.solver.into())?;
    println!(
        "{} classes, trace(C̃ᵀC̃) = {:.6e}, {} positive system eigenvalues",
        diag.n_classes, diag.trace_ctc, diag.positive_count
    );
    println!("{:>5} {:>14} {:>14} {:>14}", "index", "cross", "system", "cost_1d");
    for r in &diag.rows {
        println!(
            "{:>5} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.index, r.cross_eigenvalue, r.system_eigenvalue, r.cost_1d
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn embed(args: EmbedArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let dim = pick_dim(Some(args.dim.unwrap_or(2.min(model.k()))), &model)?;
    let train = args.csv.load(&args.train)?;
    let test = args.test.as_deref().map(|p| args.csv.load(p)).transpose()?;
    if args.svg.is_some() && !(2..=3).contains(&dim) {
        return Err(Failure::user(format!("--svg needs dim 2 or 3, got {dim}")));
    }
    let table = emit_embedding(&model, &train, test.as_ref(), dim, &args.out, args.svg.as_deref())?;
    let sep = |p| {
        table
            .centroid_separation(p)
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|_| "-".into())
    };
    println!(
        "embedded {} points with {} at dim {dim}; centroid separation {} (train {}, test {})",
        table.len(),
        model.method,
        sep(None),
        sep(Some(slce_core::harness::Partition::Train)),
        sep(Some(slce_core::harness::Partition::Test)),
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Transform(a) => transform(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Embed(a) => embed(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code())
        }
    }
}

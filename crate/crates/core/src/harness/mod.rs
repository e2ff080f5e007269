//! Repeated split → fit → project → k-NN benchmark across methods and
//! embedding dimensions, plus the CSV/SVG emitters for embeddings, accuracy
//! curves and spectra.

mod emit;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, BairOptions, DEFAULT_LDA_SHRINKAGE};
use crate::dataset::{load_csv, split, standardize, CsvOptions, LabeledDataset};
use crate::error::{invalid, Error, Result};
use crate::knn;
use crate::linalg::SolverOptions;
use crate::reducer::{LinearReducer, Method};
use crate::slce;

pub use emit::{
    emit_accuracy_curves, emit_embedding, emit_spectrum_diagnostics, spectrum_diagnostics, EmbeddingTable, Partition,
    SpectrumDiagnostics, SpectrumRow,
};

/// Version of every file this module writes.
pub const SCHEMA_VERSION: u32 = 1;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_label_column() -> String {
    "last".into()
}
fn default_true() -> bool {
    true
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_dims() -> Vec<usize> {
    vec![2, 3, 5, 10, 15, 20]
}
fn default_ratio() -> f64 {
    0.8
}
fn default_reps() -> usize {
    25
}
fn default_knn() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfig {
    #[serde(default = "default_shrinkage")]
    pub shrinkage: f64,
}

fn default_shrinkage() -> f64 {
    DEFAULT_LDA_SHRINKAGE
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            shrinkage: DEFAULT_LDA_SHRINKAGE,
        }
    }
}

/// Declarative benchmark description, read from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    /// Row-per-sample CSV; relative paths resolve against the config file.
    pub dataset: PathBuf,
    /// Fixed test set. When present, every repetition trains on all of
    /// `dataset` and evaluates on this file instead of resplitting.
    #[serde(default)]
    pub test_dataset: Option<PathBuf>,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_ratio")]
    pub split_ratio: f64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_knn")]
    pub knn_k: usize,
    /// Per-feature z-scoring with training statistics.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub lda: LdaConfig,
    /// The `seed` field is replaced by each repetition's seed.
    #[serde(default)]
    pub bair: BairOptions,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Benchmark name whose published reference rows are attached.
    #[serde(default)]
    pub reference: Option<String>,
    /// Stores wall-clock seconds in the report, which makes it run-dependent.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Defaults for everything except the dataset.
    pub fn for_dataset(dataset: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: dataset.into(),
            test_dataset: None,
            label_column: default_label_column(),
            header: true,
            methods: default_methods(),
            dims: default_dims(),
            split_ratio: default_ratio(),
            repetitions: default_reps(),
            base_seed: 0,
            knn_k: default_knn(),
            standardize: false,
            lda: LdaConfig::default(),
            bair: BairOptions::default(),
            solver: SolverOptions::default(),
            reference: None,
            record_timing: false,
        }
    }

    /// Parses `.json` as JSON and anything else as TOML, then resolves
    /// dataset paths relative to the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset = base.join(&cfg.dataset);
        cfg.test_dataset = cfg.test_dataset.map(|p| base.join(p));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "unsupported config schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.methods.is_empty() {
            return invalid("config lists no methods");
        }
        if self.dims.is_empty() || self.dims[0] == 0 || self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("dims {:?} must be positive and strictly ascending", self.dims));
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1");
        }
        if self.test_dataset.is_none() && !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return invalid(format!(
                "split_ratio {} must lie strictly between 0 and 1",
                self.split_ratio
            ));
        }
        if self.knn_k == 0 {
            return invalid("knn_k must be at least 1");
        }
        Ok(())
    }

    fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.header,
            label_column: self.label_column.parse().expect("label column parsing is infallible"),
        }
    }

    /// Loads the training source and, if configured, the aligned fixed test set.
    pub fn load_data(&self) -> Result<(LabeledDataset, Option<LabeledDataset>)> {
        let opts = self.csv_options();
        let source = load_csv(&self.dataset, &opts)?;
        let test = match &self.test_dataset {
            Some(p) => Some(load_csv(p, &opts)?.aligned_to(source.class_names())?),
            None => None,
        };
        Ok((source, test))
    }
}

/// Method hyperparameters for a single fit outside the benchmark loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitSettings {
    pub lda: LdaConfig,
    pub bair: BairOptions,
    pub solver: SolverOptions,
    /// Fit on z-scored training data and fold the scaling into the model.
    pub standardize: bool,
}

/// Fits `method` with `k` components on `train`.
pub fn fit_method(method: Method, train: &LabeledDataset, k: usize, settings: &FitSettings) -> Result<LinearReducer> {
    let (data, standardization) = if settings.standardize {
        let (z, mean, scale) = standardize(train);
        (z, Some((mean, scale)))
    } else {
        (train.clone(), None)
    };
    let model = match method {
        Method::Slce => slce::fit_with(&data, k, &settings.solver)?.to_reducer(),
        Method::Pca => baselines::fit_pca_with(&data, k, &settings.solver)?,
        Method::HsicSpca => baselines::fit_hsic_spca_with(&data, k, &settings.solver)?,
        Method::Lda => baselines::fit_lda_with(&data, k, settings.lda.shrinkage, &settings.solver)?,
        Method::BairSpca => baselines::fit_bair_spca(&data, k, &settings.bair)?,
    };
    Ok(match standardization {
        Some((mean, scale)) => model.with_standardization(mean, scale),
        None => model,
    })
}

/// Results of one `(method, dim)` combination across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub dim: usize,
    /// Components actually used; below `dim` only for LDA's `M − 1` cap.
    pub effective_dim: usize,
    /// Per-repetition test accuracy, `None` where the repetition failed.
    pub accuracies: Vec<Option<f64>>,
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` with fewer than two successes.
    pub std: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub status: CellStatus,
    /// Distinct failure messages.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Partial,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Partial => "partial",
            CellStatus::Failed => "failed",
        }
    }
}

/// Mean and sample standard deviation of the successful entries.
pub fn aggregate(accuracies: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let ok: Vec<f64> = accuracies.iter().flatten().copied().collect();
    if ok.is_empty() {
        return (None, None);
    }
    let n = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let std = (ok.len() >= 2).then(|| (ok.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

/// A published accuracy quoted for comparison, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub dataset: String,
    pub method: String,
    pub dim: usize,
    pub mean: f64,
    pub std: f64,
    pub source: String,
}

const REFERENCE_TABLE: [(&str, [(f64, f64); 3]); 3] = [
    ("colon", [(83.08, 7.22), (80.80, 10.40), (80.80, 12.50)]),
    ("ionosphere", [(86.03, 4.36), (83.90, 4.20), (85.90, 2.60)]),
    ("arcene", [(83.41, 6.51), (80.67, 11.20), (81.00, 8.40)]),
];

/// Published two-dimensional 5-NN accuracies for the named benchmark: the
/// centroid-encoder figure and two LRPCA variants that are not reimplemented.
pub fn reference_rows(dataset: &str) -> Option<Vec<ReferenceRow>> {
    let key = dataset.to_ascii_lowercase();
    let (name, values) = REFERENCE_TABLE.iter().find(|(n, _)| *n == key)?;
    let methods = [("slce", "published"), ("lrpca_cv", "quoted"), ("lrpca_mle", "quoted")];
    Some(
        methods
            .iter()
            .zip(values)
            .map(|(&(method, source), &(mean, std))| ReferenceRow {
                dataset: name.to_string(),
                method: method.into(),
                dim: 2,
                mean,
                std,
                source: source.into(),
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seeds: Vec<u64>,
    pub centered: bool,
    pub stratified: bool,
    pub fixed_test_set: bool,
    pub standardized: bool,
    pub split_ratio: Option<f64>,
    pub knn_k: usize,
    pub std_convention: String,
    pub lda_shrinkage: f64,
    pub bair: BairOptions,
    pub solver: SolverOptions,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: String,
    pub n_features: usize,
    pub n_samples: usize,
    pub class_names: Vec<String>,
    pub methods: Vec<Method>,
    pub dims: Vec<usize>,
    pub repetitions: usize,
    pub metadata: ReportMetadata,
    pub cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference: Vec<ReferenceRow>,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, dim: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.dim == dim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Loads the configured data and runs the benchmark on one thread.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_parallel(config, 1)
}

/// As [`run_experiment`], spreading repetitions over `jobs` threads. The
/// report does not depend on `jobs`.
pub fn run_experiment_parallel(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let (source, test) = config.load_data()?;
    run_experiment_with_data(config, &source, test.as_ref(), jobs)
}

type RepOutcome = Vec<Vec<std::result::Result<f64, String>>>;

/// Runs the benchmark on in-memory data. With `fixed_test`, each repetition
/// trains on all of `source`.
pub fn run_experiment_with_data(
    config: &ExperimentConfig,
    source: &LabeledDataset,
    fixed_test: Option<&LabeledDataset>,
    jobs: usize,
) -> Result<ExperimentReport> {
    config.validate()?;
    source.ensure_populated()?;
    if let Some(t) = fixed_test {
        if t.n_features() != source.n_features() {
            return Err(Error::Shape(format!(
                "test set has {} features, training set {}",
                t.n_features(),
                source.n_features()
            )));
        }
    }
    let started = Instant::now();
    let seeds: Vec<u64> = (0..config.repetitions as u64).map(|r| config.base_seed + r).collect();
    let jobs = jobs.clamp(1, seeds.len());

    let mut outcomes: Vec<(usize, Result<RepOutcome>)> = if jobs == 1 {
        seeds
            .iter()
            .enumerate()
            .map(|(r, &seed)| (r, run_repetition(config, source, fixed_test, seed)))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|worker| {
                    let seeds = &seeds;
                    scope.spawn(move || {
                        (worker..seeds.len())
                            .step_by(jobs)
                            .map(|r| (r, run_repetition(config, source, fixed_test, seeds[r])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("repetition worker panicked"))
                .collect()
        })
    };
    outcomes.sort_by_key(|(r, _)| *r);

    let n_classes = source.populated_classes();
    let lda_cap = n_classes.saturating_sub(1);
    let mut notes = Vec::new();
    notes.push("all methods are fitted on globally mean-centered training data".to_string());
    if fixed_test.is_none() {
        notes.push("splits are stratified per class; ceil(ratio * class size) samples train".into());
    }
    if config.methods.contains(&Method::Lda) && config.dims.iter().any(|&p| p > lda_cap) {
        notes.push(format!(
            "lda dims above M - 1 = {lda_cap} are capped at {lda_cap} components (see effective_dim)"
        ));
    }
    if config.methods.contains(&Method::BairSpca) {
        notes.push("bair_spca cross-validation seed equals the repetition seed".into());
    }

    let mut cells = Vec::with_capacity(config.methods.len() * config.dims.len());
    for (mi, &method) in config.methods.iter().enumerate() {
        for (di, &dim) in config.dims.iter().enumerate() {
            let mut accuracies = Vec::with_capacity(outcomes.len());
            let mut errors: Vec<String> = Vec::new();
            for (_, outcome) in &outcomes {
                let result = match outcome {
                    Ok(table) => table[mi][di].clone(),
                    Err(e) => Err(e.to_string()),
                };
                match result {
                    Ok(a) => accuracies.push(Some(a)),
                    Err(msg) => {
                        if !errors.contains(&msg) {
                            errors.push(msg);
                        }
                        accuracies.push(None);
                    }
                }
            }
            let (mean, std) = aggregate(&accuracies);
            let n_ok = accuracies.iter().flatten().count();
            let n_failed = accuracies.len() - n_ok;
            let status = match (n_ok, n_failed) {
                (_, 0) => CellStatus::Ok,
                (0, _) => CellStatus::Failed,
                _ => CellStatus::Partial,
            };
            if n_failed > 0 {
                notes.push(format!(
                    "{method} at dim {dim}: {n_failed} of {} repetitions failed and are excluded from the mean",
                    accuracies.len()
                ));
            }
            cells.push(Cell {
                method,
                dim,
                effective_dim: if method == Method::Lda { dim.min(lda_cap) } else { dim },
                accuracies,
                mean,
                std,
                n_ok,
                n_failed,
                status,
                errors,
            });
        }
    }

    let reference = match &config.reference {
        Some(name) => reference_rows(name)
            .ok_or_else(|| Error::InvalidInput(format!("no reference rows for benchmark {name:?}")))?,
        None => Vec::new(),
    };

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        // File name only, so reports do not depend on where the data lives.
        dataset: config.dataset.file_name().map_or_else(
            || config.dataset.display().to_string(),
            |f| f.to_string_lossy().into_owned(),
        ),
        n_features: source.n_features(),
        n_samples: source.n_samples() + fixed_test.map_or(0, |t| t.n_samples()),
        class_names: source.class_names().to_vec(),
        methods: config.methods.clone(),
        dims: config.dims.clone(),
        repetitions: config.repetitions,
        metadata: ReportMetadata {
            seeds,
            centered: true,
            stratified: fixed_test.is_none(),
            fixed_test_set: fixed_test.is_some(),
            standardized: config.standardize,
            split_ratio: fixed_test.is_none().then_some(config.split_ratio),
            knn_k: config.knn_k,
            std_convention: "sample (n - 1)".into(),
            lda_shrinkage: config.lda.shrinkage,
            bair: config.bair.clone(),
            solver: config.solver,
            notes,
            wall_clock_seconds: config.record_timing.then(|| started.elapsed().as_secs_f64()),
        },
        cells,
        reference,
    })
}

/// Fits every configured method once per repetition and scores each dim.
fn run_repetition(
    config: &ExperimentConfig,
    source: &LabeledDataset,
    fixed_test: Option<&LabeledDataset>,
    seed: u64,
) -> Result<RepOutcome> {
    let (train, test) = match fixed_test {
        Some(t) => (source.clone(), t.clone()),
        None => {
            let pair = split(source, config.split_ratio, seed)?;
            (pair.train, pair.test)
        }
    };
    let (fit_train, standardization) = if config.standardize {
        let (z, mean, scale) = standardize(&train);
        (z, Some((mean, scale)))
    } else {
        (train.clone(), None)
    };
    let finish = |model: LinearReducer| match &standardization {
        Some((mean, scale)) => model.with_standardization(mean.clone(), scale.clone()),
        None => model,
    };

    let score = |model: &LinearReducer, dim: usize| -> std::result::Result<f64, String> {
        let eval = || -> Result<f64> {
            let tr = model.transform_dim(train.data(), dim)?;
            let te = model.transform_dim(test.data(), dim)?;
            Ok(knn::evaluate(&tr, train.labels(), &te, test.labels(), config.knn_k)?.accuracy)
        };
        eval().map_err(|e| e.to_string())
    };

    let d = train.n_features();
    let n = train.n_samples();
    let max_dim = *config.dims.last().expect("validated non-empty");
    let lda_cap = train.populated_classes().saturating_sub(1);

    let mut table = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        // Components needed per dim, and the largest single fit covering them.
        let (limit, need): (usize, Box<dyn Fn(usize) -> usize>) = match method {
            Method::Slce => (d, Box::new(|p| p)),
            Method::Pca | Method::HsicSpca => (d.min(n), Box::new(|p| p)),
            Method::Lda => (lda_cap, Box::new(move |p: usize| p.min(lda_cap))),
            Method::BairSpca => (usize::MAX, Box::new(|p| p)),
        };
        let out_of_range = |p: usize| -> std::result::Result<f64, String> {
            Err(format!(
                "{method} cannot produce {p} components (limit {limit} for {d} features, {n} training samples)"
            ))
        };

        let row: Vec<std::result::Result<f64, String>> = if method == Method::BairSpca {
            let opts = BairOptions {
                seed,
                ..config.bair.clone()
            };
            config
                .dims
                .iter()
                .map(|&p| {
                    baselines::fit_bair_spca(&fit_train, p, &opts)
                        .map_err(|e| e.to_string())
                        .and_then(|m| score(&finish(m), p))
                })
                .collect()
        } else {
            let k_fit = need(max_dim).min(limit);
            let fitted: Result<LinearReducer> = if k_fit == 0 {
                Err(Error::InvalidInput(format!("{method} has no usable components")))
            } else {
                match method {
                    Method::Slce => slce::fit_with(&fit_train, k_fit, &config.solver).map(|m| m.to_reducer()),
                    Method::Pca => baselines::fit_pca_with(&fit_train, k_fit, &config.solver),
                    Method::HsicSpca => baselines::fit_hsic_spca_with(&fit_train, k_fit, &config.solver),
                    Method::Lda => baselines::fit_lda_with(&fit_train, k_fit, config.lda.shrinkage, &config.solver),
                    Method::BairSpca => unreachable!(),
                }
            };
            match fitted {
                Ok(model) => {
                    let model = finish(model);
                    config
                        .dims
                        .iter()
                        .map(|&p| {
                            if need(p) > k_fit {
                                out_of_range(p)
                            } else {
                                score(&model, need(p))
                            }
                        })
                        .collect()
                }
                Err(e) => {
                    if e.is_numerical() {
                        log::warn!("{method} failed for seed {seed}: {e}");
                    }
                    config.dims.iter().map(|_| Err(e.to_string())).collect()
                }
            }
        };
        table.push(row);
    }
    Ok(table)
}

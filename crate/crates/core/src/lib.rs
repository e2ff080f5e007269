//! Supervised linear centroid-encoder (SLCE): a closed-form linear embedding
//! that maps each sample onto its class centroid, plus reference linear
//! reducers, a k-NN evaluator and an experiment harness.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod knn;
pub mod linalg;
pub mod reducer;
pub mod slce;
pub mod synthetic;

pub use dataset::{load_csv, split, CsvOptions, LabelColumn, LabeledDataset, SplitPair};
pub use error::{Error, Result};
pub use harness::{fit_method, run_experiment, ExperimentConfig, ExperimentReport, FitSettings};
pub use linalg::{SolverOptions, SolverPath};
pub use reducer::{LinearReducer, Method};
pub use slce::SlceModel;

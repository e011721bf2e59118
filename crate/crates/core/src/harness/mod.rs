//! Configuration, persistence, corpora, the end-to-end pipeline and the
//! repeated-split evaluation protocol.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::ClassifierError;

pub mod config;
pub mod corpus;
pub mod evaluation;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use config::PipelineConfig;
pub use corpus::{ingest, Corpus, CorpusClass};
pub use evaluation::{
    build_dataset, evaluate_dataset, plot_csv, run_evaluation, stratified_split, Dataset, EvaluationReport,
    TrialPlan,
};
pub use pipeline::{process_mask, run_pipeline, PipelineArtifacts, PipelineError, Stage};
pub use synth::{synth_corpus, ShapeFamily, SynthSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },
    #[error("{}: cannot decode image: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("{}: invalid JSON: {message}", path.display())]
    Json { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: no class directories", .0.display())]
    NoClasses(PathBuf),
    #[error("class {0:?} has no readable masks")]
    ClassEmpty(String),
    #[error("invalid synthesis spec: {0}")]
    BadSpec(String),
    #[error("class {class:?} has {usable} usable sample(s); cannot split into train and test")]
    SplitInfeasible { class: String, usable: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            err: source,
        }
    }

    /// A bug rather than bad input.
    pub fn is_invariant(&self) -> bool {
        match self {
            HarnessError::Invariant(_) => true,
            HarnessError::Pipeline(e) => e.is_invariant(),
            _ => false,
        }
    }
}

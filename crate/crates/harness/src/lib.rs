//! Experiment harness: bound sweeps, the Gaussian sensor network and the
//! image-sequence experiment, all reporting to a common CSV format.

pub mod bound;
pub mod config;
pub mod images;
pub mod report;
pub mod sensor;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use corrnet_core::bounds::BoundsError;
use corrnet_core::coding::CodingError;
use corrnet_core::decode::DecodeError;
use corrnet_core::gf::GfError;
use corrnet_core::model::ModelError;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, MatrixMode, PriorMode};
pub use report::{emit_csv, psnr_db, read_csv, write_csv, Metric, ResultRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("field: {0}")]
    Field(#[from] GfError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("coding: {0}")]
    Coding(#[from] CodingError),
    #[error("decoding: {0}")]
    Decode(#[from] DecodeError),
    #[error("bounds: {0}")]
    Bounds(#[from] BoundsError),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Write(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{0}")]
    Invalid(String),
}

impl HarnessError {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        HarnessError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

/// Runs the experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::BoundSweep => bound::run_bound_sweep(cfg),
        ExperimentKind::Sensor => sensor::run_sensor_experiment(cfg),
        ExperimentKind::Images => images::run_image_experiment(cfg),
    }
}

/// Runs `work` on a pool of `workers` threads (0 = one per core).
pub(crate) fn with_workers<T: Send>(
    workers: usize,
    work: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(work))
}

/// Independent generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream carrying the source draw of Monte Carlo trial `trial`.
pub fn source_stream(trial: usize) -> u64 {
    2 * trial as u64 + 1
}

/// Stream carrying the coding matrix of trial `trial`.
pub fn matrix_stream(trial: usize) -> u64 {
    2 * trial as u64 + 2
}

/// Formats a float for a param string.
pub(crate) fn fmt_param(x: f64) -> String {
    format!("{x}")
}

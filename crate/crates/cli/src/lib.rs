//! Experiment runner for flexible-mesh Bernstein collocation: single runs,
//! degree and flexibility sweeps, and re-assessment of saved solutions.

pub mod config;
pub mod emit;
pub mod runner;

use flexcolloc_core::assessment::AssessmentError;
use flexcolloc_core::quadrature::QuadratureError;
use flexcolloc_core::transcription::TranscriptionError;
use thiserror::Error;

pub use config::{ConfigFile, ExperimentConfig, Format, SweepAxis};
pub use runner::{run, sweep, ResultRecord, RunOutput, SavedSolution};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("solver failed on every attempt: {0}")]
    Solver(String),
    #[error("all {0} sweep points failed")]
    AllFailed(usize),
    #[error(transparent)]
    Transcription(#[from] TranscriptionError),
    #[error(transparent)]
    Assessment(#[from] AssessmentError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

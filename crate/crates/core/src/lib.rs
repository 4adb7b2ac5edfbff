//! Boundary approximate controllability under positivity constraints for
//! transport and heat equations on directed networks.
//!
//! The crate evaluates frequency-domain cone criteria numerically: generators
//! of the form `D_mu (Gamma D_mu)^n K e_l` are assembled from Dirichlet
//! operators and transfer matrices, and their conic hull is compared with the
//! whole space or with the positive orthant using a small dense simplex solver
//! that also returns Farkas certificates. Time-domain simulators for both
//! network models are provided to cross-check verdicts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appendix;
pub mod cli;
pub mod cone;
pub mod controllability;
pub mod graph;
pub mod grid;
pub mod heat;
pub mod matrix;
pub mod scenario;
pub mod transport;

pub use cone::{ConeReport, Certificate};
pub use controllability::{Decision, FrequencyProbe, Mode, Verdict};
pub use graph::{Edge, NetworkGraph};
pub use grid::{ControlSignal, GridFunction};
pub use heat::{HeatNetwork, SpectralBasis};
pub use matrix::PositiveMatrix;
pub use scenario::Scenario;
pub use transport::{KineticKernel, TransportSystem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix has a negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("linear program did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("time step incompatible with the grid: {0}")]
    Cfl(String),
    #[error("wrong topology: {0}")]
    Topology(String),
    #[error("scenario error at `{path}`: {message}")]
    Scenario { path: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

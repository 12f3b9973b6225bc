//! Sketch-based influence maximization under the Independent Cascade model.
//!
//! The pipeline works on a CSR graph with per-edge diffusion probabilities.
//! Edge presence in each of the `J` concurrent simulations is decided on the
//! fly from a precomputed Murmur3 edge hash XOR'ed with a per-simulation salt
//! (fused sampling), so sampled subgraphs are never materialized. Per-vertex
//! Flajolet-Martin registers, one 8-bit register per simulation, converge
//! through a pull-based diffusion kernel and yield reach-set cardinality
//! estimates. Greedy seed selection reads those estimates and rebuilds the
//! sketches adaptively when the observed estimation error crosses a
//! threshold. An independent Mersenne-Twister Monte-Carlo oracle provides
//! ground-truth influence scores.

pub mod diffusion;
pub mod graph;
pub mod hashing;
pub mod oracle;
pub mod seeder;
pub mod sketch;

use std::io;

use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// How the diffusion kernel schedules its iterations.
///
/// `Strict` separates iterations with a barrier and reads only
/// previous-iteration register values, so results are identical across
/// thread counts. `Relaxed` lets workers observe in-flight updates of the
/// current iteration; updates are monotone maxima, so stale reads only delay
/// convergence. With an early-exit ratio of zero both modes reach the same
/// fixpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Strict,
    Relaxed,
}

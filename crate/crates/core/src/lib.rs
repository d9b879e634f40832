//! Locate the hidden origin of information cascades on a diffusion network.
//!
//! A cascade is one propagation trace: the set of infected nodes with their
//! infection timestamps inside an observation window. Given a directed
//! network whose edges carry exponential transmission rates, the crate
//! provides the full pipeline for recovering the node (and start time) that
//! initiated a set of cascades when only a subset of the infected nodes was
//! observed:
//!
//! * [`simulate`] — generate ground-truth cascades under the continuous-time
//!   independent cascade model and derive partial observations.
//! * [`netrate`] — infer per-edge transmission rates from fully observed
//!   historical cascades by maximizing a survival-analysis likelihood.
//! * [`paths`] — estimate expected infection times between hidden candidates
//!   and observed nodes by Monte-Carlo sampling of edge delays and
//!   reversed-edge Dijkstra sweeps.
//! * [`localize`] — estimate each candidate's per-cascade start time in
//!   closed form and rank candidates by a squared-error objective.
//! * [`evaluate`] — a seeded, reproducible experiment harness computing
//!   success probability and top-k success probability.

pub mod evaluate;
pub mod localize;
pub mod model;
pub mod netrate;
pub mod paths;
pub mod simulate;
mod util;

pub use model::{Cascade, Edge, Network, NodeId, PartialObservation, TransmissionModel};
pub use util::derive_seed;

/// Errors reported by the library.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid cascade: {0}")]
    InvalidCascade(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    /// Argument outside the mathematical domain of a density primitive.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A cascade contains no node that may legally be reported as observed.
    #[error("no observable nodes: {0}")]
    NoObservableNodes(String),

    /// The log-likelihood is -inf at the requested point, so its gradient
    /// is undefined there.
    #[error("degenerate likelihood: {0}")]
    DegenerateLikelihood(String),

    /// Every node of the network is observed in some cascade, leaving no
    /// candidate sources to rank.
    #[error("empty candidate set: every node is observed in some cascade")]
    NoCandidates,

    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

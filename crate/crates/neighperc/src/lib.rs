//! Directed neighbor percolation on the square lattice and its relatives.
//!
//! Each vertex picks its open out-edges from a per-vertex law ([`models`]).
//! The rest of the crate studies the resulting forward sets: through the
//! planar dual exploration ([`explore`]), pattern-constrained bond
//! percolation ([`constrained`]) and its enhanced two-parameter version
//! ([`enhance`]), Monte Carlo estimates ([`estimate`]) and exact enumeration
//! ([`oracle`]). [`cli`] holds the command-line surface and the renderers.

pub mod cli;
pub mod constrained;
pub mod enhance;
pub mod estimate;
pub mod explore;
pub mod lattice;
pub mod models;
pub mod oracle;
pub mod rng;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("conditioning event has probability zero")]
    ZeroProbability,
    #[error("initial interval [{lo}, {hi}] does not bracket the criterion (survival {s_lo} and {s_hi})")]
    NonBracketing { lo: f64, hi: f64, s_lo: f64, s_hi: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

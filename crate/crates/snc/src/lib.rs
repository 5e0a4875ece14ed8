//! Sparse network coding workbench.
//!
//! End-to-end tooling for studying partial decoding in sparse network coding
//! (SNC) over GF(2), GF(2^4) and GF(2^8):
//!
//! - [`gf`]: finite-field arithmetic backing all codec linear algebra
//! - [`codec`]: sparse encoder (fully random or fixed-weight rows) and an
//!   incremental Gauss-Jordan decoder that reports rank and per-source decoding
//! - [`model`]: analytical rank distribution and closed-form approximations for
//!   the probability of decoding `x` of `n` source packets after `m` transmissions
//! - [`tuning`]: average decoding delay (ADD) metrics and per-transmission
//!   density schedules that trade early partial decoding against completion time
//! - [`sim`]: reproducible Monte Carlo campaigns and model-vs-simulation
//!   deviation reports
//!
//! The `examples/` directory contains one runnable example per capability; the
//! `snc` binary wires the same operations into CSV-producing subcommands.

pub mod cli;
pub mod codec;
pub mod gf;
pub mod model;
pub mod rng;
pub mod sim;
pub mod tuning;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field order {0}; supported: 2, 16, 256")]
    BadFieldOrder(u16),
    #[error("reduction polynomial {poly:#x} is not irreducible over GF(2)")]
    ReduciblePolynomial { poly: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{0}")]
    BadParams(String),
    #[error("coding vector has length {got}, decoder expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("gamma binomial pole at ({a}, {b})")]
    GammaPole { a: f64, b: f64 },
    #[error("expected-decoded curve never reaches {target} within {m_max} transmissions")]
    UnboundedHorizon { target: f64, m_max: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

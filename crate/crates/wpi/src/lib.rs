//! Convergence-rate bounds for Markov chains from weak and super Poincaré inequalities.
//!
//! The library turns inequality data `beta(s)` — the coefficient in
//! `||f||^2 <= s * E(T, f) + beta(s) * Phi(f)` for a Dirichlet form `E` and a regularizing
//! functional `Phi` — into explicit, computable decay bounds `||P^n f||^2 <= Phi(f) * Finv(n)`.
//! Around that pipeline it provides:
//!
//! - [`beta`]: the `BetaFn` family (indicator, polynomial, stretched-exponential, lognormal-tail,
//!   tabulated, callable), the dual `AlphaFn` description, and conversions between the two.
//! - [`rate`]: the convex-conjugate machinery `K*`, the rate integral `F` and its inverse,
//!   rescaling identities, stretched-exponential envelopes, and an alternative fixed-point rate
//!   for side-by-side comparison.
//! - [`comparison`]: the chaining calculus that transports `beta` across kernels — strong-constant
//!   chaining, two-inequality composition, spectral-gap correction, Dirichlet-domination terms,
//!   and limit diagnostics for families of inequalities.
//! - [`kernels`]: independence Metropolis–Hastings and pseudo-marginal kernels — closed-form and
//!   Monte Carlo `beta` terms, rate pipelines, samplers, and decay estimation with replica errors.
//! - [`weights`]: weight-model bounds for pseudo-marginal chains — averaged weights, ABC-style
//!   binomial weights, products of averages, lognormal weights with Lambert-W rates, mixing-time
//!   and budget planning, and asymptotic-variance bounds.
//! - [`oracle`]: exact finite-state verification — sharp `beta` extraction, spectral decay,
//!   necessity constructions, and a battery check of the main bound.
//! - [`config`]: the text-config form of `BetaFn` used by tooling on top of the library.
//!
//! Everything is deterministic: samplers take explicit seeds and replica streams are split by
//! stream index, so repeated runs reproduce bit-identical output.

pub mod beta;
pub mod comparison;
pub mod config;
pub mod kernels;
pub mod numeric;
pub mod oracle;
pub mod rate;
pub mod weights;

pub use beta::{AlphaFn, BetaFn};
pub use rate::{PhiFunctional, RateBound};

/// Errors reported by constructors and evaluators.
///
/// Domain errors signal arguments outside an operation's mathematical domain; validation errors
/// signal malformed inputs (non-monotone tables, mismatched dimensions, invalid stochastic
/// matrices); the remaining variants flag unsupported evaluation modes and divergent quantities.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Structurally invalid input.
    #[error("validation error: {0}")]
    Validation(String),
    /// Requested evaluation mode is not available for this input.
    #[error("unsupported mode: {0}")]
    Unsupported(String),
    /// A series or integral required to be finite diverges.
    #[error("divergent: {0}")]
    Divergent(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub(crate) fn divergent(msg: impl Into<String>) -> Self {
        Error::Divergent(msg.into())
    }
}

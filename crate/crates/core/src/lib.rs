//! Numerical spectral and scattering theory for the one-dimensional discrete
//! Schrödinger operator `H = -Δ + q` on the integer lattice, together with the
//! nonlinear machinery needed to study asymptotic stability of lattice
//! solitons: Jost solutions, transmission/reflection coefficients, resolvent
//! and spectral projections, the dispersive propagator `e^{itH}P_c` with its
//! `t^{-1/3}` decay, standing-wave branches of the focusing septic lattice NLS,
//! and modulation diagnostics along split-step trajectories.
//!
//! Conventions used throughout the crate:
//!
//! * `(Δu)(n) = u(n+1) + u(n-1) - 2u(n)`, so `-Δ` has symbol `2 - 2cosθ` and
//!   spectrum `[0, 4]`.
//! * Spectral parameter: `z = 2(1 - cosθ)` with `θ` in the closed lower
//!   half-strip `{ -π ≤ Re θ ≤ π, Im θ ≤ 0 }`.
//! * Jost solutions: `f±(n,θ) = e^{∓inθ} m±(n,θ)` with `m± → 1` as `n → ±∞`.
//! * Time evolution: `i ∂_t u = H u - |u|^6 u`; a standing wave evolves as
//!   `u(t) = e^{iωt} φ_ω`, and the linear flow is `e^{-itH}`.
//! * Weighted norms: `‖u‖_{ℓ^{p,σ}}^p = Σ ⟨n⟩^{pσ} |u(n)|^p` with
//!   `⟨n⟩ = (1 + n²)^{1/2}` (sup form for `p = ∞`).

pub mod bessel;
pub mod dynamics;
pub mod jost;
pub mod lattice;
pub mod oracles;
pub mod propagator;
pub mod scattering;
pub mod spectral;
pub mod standing_wave;
pub mod tridiag;

use thiserror::Error;

/// Crate-wide error type. Most numerical routines are infallible by
/// construction; errors surface structural misuse (window mismatches,
/// out-of-window sites) or genuine numerical breakdown.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice window [{n_min}, {n_max}]: must satisfy n_min < 0 < n_max")]
    BadWindow { n_min: i64, n_max: i64 },

    #[error("window mismatch between operands ({left} vs {right})")]
    WindowMismatch { left: String, right: String },

    #[error("site {n} lies outside window {window}")]
    OutOfWindow { n: i64, window: String },

    #[error("non-finite value produced at site {site} during {context}")]
    NonFinite { site: i64, context: &'static str },

    #[error("spectral point lies on the band edge; {what} is undefined there")]
    EdgeUndefined { what: String },

    #[error("energy {z} is not admissible here relative to the continuous band [0, 4]")]
    OffBand { z: num_complex::Complex64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("iteration failed to converge: {context} (residual {residual:.3e} after {iterations} steps)")]
    NoConvergence {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("quadrature under-resolved: {context} (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    QuadratureUnderResolved {
        context: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

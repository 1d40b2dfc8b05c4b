//! Fractional powers of linearized Monge–Ampère operators.
//!
//! The crate works on sections `S_φ(x0, R) = {δ_φ(x0, ·) < R}` of a convex
//! potential `φ` in one or two dimensions and computes
//!
//! - the discrete nondivergence operator `L_φ = −tr((D²φ)⁻¹D²·)` and its
//!   divergence-form partner `ℒ_φ = −div(A_φ∇·)` ([`discrete_ops`]),
//! - fractional powers `L_φ^s` and `L_φ^{−s}` by spectral calculus and by a
//!   heat-semigroup Bochner integral ([`fractional`]),
//! - Bessel-profiled solutions of the degenerate extension problems together
//!   with their Neumann traces and energies ([`extension`]),
//! - quasi-metric geometry of sections and of the tensor potential
//!   `Φ(x, z) = φ(x) + h_s(z)` ([`sections`]),
//! - empirical checks of Harnack, Hölder, Poincaré and energy inequalities
//!   ([`verification`]).
//!
//! The `fracma` binary drives batch experiments from a TOML config ([`cli`]).

pub mod cli;
pub mod discrete_ops;
pub mod error;
pub mod extension;
pub mod fractional;
pub mod linalg;
pub mod potentials;
pub mod quadrature;
pub mod report;
pub mod sections;
pub mod special_fn;
pub mod verification;

pub use error::{Error, Result};

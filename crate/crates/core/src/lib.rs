//! Nonlinear master-equation dynamics that drive bipartite quantum states
//! toward the product of their marginals, optionally with Lagrange-multiplier
//! constraints that keep both marginals frozen.
//!
//! The generator is `Ω(Θ) = −Θρ − ρΘ + 2⟨Θ⟩ρ`, which suppresses `⟨Θ⟩`.
//! Choosing `Θ = γ log ρ` maximizes entropy (disentanglement), choosing the
//! free-energy operator `Θ = γ(H + β⁻¹ log ρ)` thermalizes.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod config;
pub mod error;
pub mod dynamics;
pub mod hermitian;
pub mod maxent;
pub mod random;
pub mod scenarios;
pub mod stochastic;

pub use error::{Error, Result};

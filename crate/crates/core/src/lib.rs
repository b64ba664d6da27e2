//! Simulation and reference pricing for the rough Heston model
//!
//! ```text
//! dS_t = S_t √V_t dB_t
//! V_t  = V0 + ∫_0^t K(t - s) (θ(s) - λ V_s) ds + ∫_0^t K(t - s) ν √V_s dW_s
//! ```
//!
//! with `B = ρ W + √(1 - ρ²) W⊥` and a completely monotone kernel such as
//! `K(t) = t^(H - 1/2) / Γ(H + 1/2)`.
//!
//! Two Euler schemes are provided. [`scheme_v`] discretizes the variance
//! equation directly. [`scheme_x`] discretizes the integrated variance
//! `X_t = ∫_0^t V_s ds`, which stays non-decreasing by construction. Both feed
//! the Monte-Carlo engine in [`monte_carlo`]. The [`reference`] module prices
//! the same contracts from the Riccati-Volterra characteristic function.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod increments;
pub mod kernels;
pub mod monte_carlo;
pub mod params;
pub mod payoffs;
pub mod quad;
pub mod reference;
pub mod scheme_v;
pub mod scheme_x;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use increments::IncrementStream;
pub use kernels::{Kernel, KernelWeights};
pub use monte_carlo::{McConfig, McEstimate, SchemeKind, Workers};
pub use params::ModelParams;
pub use payoffs::Payoff;

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/monte_carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

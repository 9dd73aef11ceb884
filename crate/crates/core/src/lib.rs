#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Pathwise information–estimation identities for Gaussian channels.
//!
//! Every identity is computed two ways on the same simulated path: as an
//! information density minus half an integrated squared estimation error, and
//! as a stochastic integral of the estimation error against the channel noise.
//! With left-endpoint sums throughout, the two sides agree to rounding error.

pub mod catalogue;
pub mod channel;
pub mod couplings;
pub mod densities;
pub mod error;
pub mod filters;
pub mod identities;
pub mod montecarlo;
pub mod priors;
pub mod quadrature;
pub mod stochastic;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/paths.md")]
    struct Paths;
    #[doc = include_str!("../../../book/src/couplings.md")]
    struct Couplings;
    #[doc = include_str!("../../../book/src/filters.md")]
    struct Filters;
    #[doc = include_str!("../../../book/src/reversal.md")]
    struct Reversal;
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    struct MonteCarlo;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}

//! Quantum probability from projections alone.
//!
//! Events are orthogonal projections ([`logic::Projection`]), and
//! conditioning and reflection are the maps `U_e x = exe` and
//! `S_e x = (2e − I) x (2e − I)` from [`probability`]. The remaining modules
//! build on those: [`assumptions`] checks structural identities on random
//! pairs, [`grover`] and [`teleport`] run the two protocols, and [`annex`]
//! audits the 4×4 recursion behind the Grover formula.
//!
//! ```
//! use qcond::grover::{build_instance, success_prob};
//! use qcond::operator::Tolerance;
//!
//! let inst = build_instance(4, 2, 1, Tolerance::default()).unwrap();
//! assert!((success_prob(&inst, 1).unwrap() - 1.0).abs() < 1e-12);
//! ```
//!
//! The guide in `book/` walks through each module.

pub mod annex;
pub mod assumptions;
pub mod error;
pub mod grover;
pub mod logic;
pub mod operator;
pub mod probability;
pub mod random;
pub mod teleport;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/events.md")]
    pub mod events {}
    #[doc = include_str!("../../../book/src/conditioning.md")]
    pub mod conditioning {}
    #[doc = include_str!("../../../book/src/assumptions.md")]
    pub mod assumptions {}
    #[doc = include_str!("../../../book/src/grover.md")]
    pub mod grover {}
    #[doc = include_str!("../../../book/src/teleport.md")]
    pub mod teleport {}
    #[doc = include_str!("../../../book/src/annex.md")]
    pub mod annex {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

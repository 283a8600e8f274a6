//! CSS codes over prime fields, their error exponents, and classical
//! simulation of BB84-type key distribution built on them.
//!
//! - [`gfvec`]: words, linear codes, duals and syndromes over F_d.
//! - [`typesys`]: distributions, empirical types, entropy and divergence.
//! - [`csscode`]: CSS codes, transversals, balanced-code search, key map.
//! - [`qudit`]: Weyl operators, Kraus channels and their Pauli distributions.
//! - [`exponents`]: error exponents, bounds and achievable rates.
//! - [`protocol`]: BB84 and modified-BB84 session simulation.
//! - [`oracle`]: brute-force checks at tiny sizes.

pub mod csscode;
pub mod error;
pub mod exponents;
pub mod gfvec;
pub mod oracle;
pub mod protocol;
pub mod qudit;
pub mod typesys;

pub use error::{Error, Result};

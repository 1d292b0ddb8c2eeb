//! Exact analysis of random joint choice rules over two agents.
//!
//! Rules, orders and measures live in [`model`] and [`measure`]; Block-Marschak
//! polynomials and the axiom checks in [`moebius`]; lattice flow graphs and the
//! uniqueness test in [`graphs`]; the constructive decompositions in
//! [`decompose`]; independent LP and brute-force checks in [`oracle`].

pub mod corpus;
pub mod decompose;
pub mod error;
pub mod exec;
pub mod graphs;
pub mod io;
pub mod measure;
pub mod model;
pub mod moebius;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod subset;

pub use error::{Error, Result};
pub use exec::Execution;
pub use rational::Rational;
pub use subset::Subset;

//! Incremental, modular, context-sensitive abstract interpretation of
//! Constrained Horn Clause programs.
//!
//! The crate is layered: [`ir`] parses and normalizes modular programs,
//! [`domain`] provides the abstract domains, [`analyzer`] is the
//! single-unit fixpoint analyzer with its graph algebra, [`engine`] runs the
//! incremental modular algorithm over global and local graphs, and
//! [`bench`] replays one-clause-at-a-time experiments.

pub mod analyzer;
pub mod bench;
pub mod domain;
pub mod engine;
mod error;
pub mod ir;
pub mod par;
pub mod parity;

pub use error::{Error, Result};

//! Simulation engine for a creator market hit by a generative-AI supply shock.
//!
//! Layers, bottom up: [`econ`] closed forms, [`static_eq`] two-good market,
//! [`meanfield`] skill-density gradient flow, [`abm`] agent-based market,
//! [`calibrate`] GA search, [`policy`] tax and welfare analysis, [`io`] for
//! configs, tables, manifests and plots, [`runner`] for the command
//! pipelines and [`suite`] for the acceptance checks.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod calibrate;
pub mod econ;
pub mod error;
pub mod io;
pub mod meanfield;
pub mod numeric;
pub mod par;
pub mod policy;
pub mod runner;
pub mod static_eq;
pub mod suite;

pub use error::{Error, Result};

//! Probabilistic graph circuits: tractable generative models over
//! node- and edge-labelled graphs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod config;
pub mod error;
pub mod evalmetrics;
pub mod graphdata;
pub mod numeric;
pub mod oracle;
pub mod ordering;
pub mod pgcmodel;
pub mod regiongraph;
pub mod synthetic;
pub mod training;

pub use error::{PgcError, Result};

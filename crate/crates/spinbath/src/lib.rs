//! Command-line front end, file formats and run configuration for the
//! spin-bath decoherence toolkit. The models themselves live in
//! `spinbath-core`, re-exported here as [`core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use spinbath_core as core;

pub mod cli;
pub mod config;
pub mod error;
pub mod files;
pub mod report;
pub mod runner;
pub mod scenarios;

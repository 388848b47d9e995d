//! Config-driven runs of the `amopt` pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod golden;

#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Regression-adjusted Shewhart monitoring for wind turbine SCADA data.
//!
//! The pipeline: ingest and filter SCADA records, find an in-control
//! baseline period, fit regression models on it, then chart the residuals.

pub mod baseline;
pub mod chart;
pub mod field;
pub mod ingest;
pub mod regress;
pub mod simulate;
pub mod turbine;

pub use field::Field;

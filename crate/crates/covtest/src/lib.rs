//! Tests for linear hypotheses about covariance matrices in multi-group
//! multivariate designs.
//!
//! The null hypotheses have the form `H0: C v = zeta`, where `v` stacks the
//! half-vectorized group covariance matrices. Three quadratic-form statistics
//! (ATS, WTS, MATS) are provided, calibrated by parametric or wild bootstrap,
//! by Monte-Carlo sampling from the weighted-chi-square limit, or (WTS) by
//! the asymptotic chi-square law. See the [`engine`] module for the test
//! runner, [`hypothesis`] for the catalog of built-in hypotheses, and
//! [`simulate`] for the type-I-error / power study harness.

pub mod cli;
pub mod engine;
pub mod estimate;
pub mod hypothesis;
pub mod matview;
pub mod rng;
pub mod simulate;

//! Dynamic panel-data econometrics toolkit.
//!
//! Implements the estimation cascade commonly applied to bank-profitability
//! panels: pooled OLS, fixed effects (within), random effects (Swamy–Arora),
//! iterated FGLS, and one-step Arellano–Bond difference GMM, together with the
//! diagnostic battery used to choose between them (poolability F, Breusch–Pagan
//! LM, Hausman, Wooldridge serial correlation, groupwise heteroskedasticity,
//! Durbin–Wu–Hausman endogeneity, Fisher-type panel unit-root tests, Sargan
//! overidentification and Arellano–Bond serial-correlation tests).
//!
//! A seeded data-generating process and Monte Carlo harness support size/power
//! verification of every estimator and test; CSV ingestion, ratio construction,
//! and deterministic report rendering back the `panelgmm` CLI.

pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod gmm;
pub mod io;
pub mod linalg;
pub mod model;
pub mod panel;
pub mod report;
pub mod sim;

pub use error::{Error, Result};

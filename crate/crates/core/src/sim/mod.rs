//! Seeded synthetic dynamic-panel generation and a Monte Carlo harness.
//!
//! The generator produces panels from the model
//! `y_it = a_i + omega * y_{i,t-1} + theta' x_it + eps_it` with optional
//! entity effects loaded on the regressors, regressor/error correlation,
//! groupwise heteroskedasticity, and AR(1) errors.
//!
//! # Reproducibility
//!
//! All randomness comes from ChaCha20. One key is derived from the
//! configured seed with `ChaCha20Rng::seed_from_u64`; entity `i` reads
//! stream `i` of that key, so every entity's draw sequence depends only on
//! `(seed, i)` and results never depend on generation or scheduling order.
//!
//! Normal variates use the Box-Muller transform, spelled out so another
//! implementation can replicate the streams exactly: from two raw 64-bit
//! words, `u1 = ((w1 >> 11) + 1) * 2^-53` in (0, 1] and
//! `u2 = (w2 >> 11) * 2^-53` in [0, 1); the pair of variates is
//! `sqrt(-2 ln u1) * cos(2 pi u2)` (returned first) and
//! `sqrt(-2 ln u1) * sin(2 pi u2)` (returned on the following call).
//!
//! Monte Carlo replication `r` regenerates the panel with seed
//! `base_seed XOR r`; the summary reduction runs in replication order, so
//! summaries are identical no matter how many worker threads run.

mod dgp;
mod mc;

pub use dgp::{simulate_dynamic_panel, DgpConfig};
pub use mc::{
    monte_carlo, CoefDraw, CoefficientSummary, MonteCarloSummary, ReplicationFailure,
    ReplicationOutcome, TestDraw, TestRateSummary,
};

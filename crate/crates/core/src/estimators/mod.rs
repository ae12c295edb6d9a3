//! The static estimation cascade: pooled OLS, fixed effects (within),
//! random effects (Swamy–Arora), iterated FGLS, and the pooled-vs-FE F-test.

pub mod design;
pub mod fe;
pub mod fgls;
pub mod pols;
pub mod re;

pub use design::Design;
pub use fe::{entity_intercepts, f_test_pooled_vs_fe, fixed_effects};
pub use fgls::{fgls, fgls_full, FglsDetails, FglsErrorModel, FglsOptions};
pub use pols::pooled_ols;
pub use re::random_effects;

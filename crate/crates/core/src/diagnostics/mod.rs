//! Assumption battery run before (and around) estimation: serial
//! correlation, heteroskedasticity, random-effect presence, specification
//! choice, regressor endogeneity, and panel unit roots.
//!
//! Every test returns a [`crate::model::TestResult`] carrying its reference
//! distribution, so the report layer can re-derive decisions at any
//! significance level.

mod effects;
mod endogeneity;
mod het;
mod serial;
mod unitroot;

pub use effects::{bp_lm_re_test, hausman_test};
pub use endogeneity::dwh_endogeneity_test;
pub use het::{breusch_pagan_het_test, modified_wald_groupwise_het};
pub use serial::wooldridge_autocorr_test;
pub use unitroot::{
    adf_test, choi_combine, fisher_unit_root, mackinnon_p, AdfOptions, Deterministic,
    EntityAdf, UnitRootDecisionPolicy, UnitRootReport,
};

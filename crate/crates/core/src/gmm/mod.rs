//! First-differenced GMM: instrument-directive grammar, instrument-matrix
//! assembly, the one-step Arellano–Bond estimator, and its validity tests
//! (Sargan, serial-correlation m-statistics, difference-in-Sargan).

pub mod directive;
pub mod estimator;
pub mod instruments;

pub use directive::{canonical_spec_string, parse_instrument_spec, InstrumentDirective};
pub use estimator::{
    difference_in_sargan, estimate_one_step, estimate_with_plan, GmmFit, SubsetSelector,
};
pub use instruments::{
    build_instrument_matrix, first_difference, DepthOption, InstrumentPlan, PlanOptions,
};

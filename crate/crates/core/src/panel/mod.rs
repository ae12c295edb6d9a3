//! Panel-data container, financial-ratio construction, and screening
//! statistics (descriptives, correlation matrix, variance inflation factors).

pub mod dataset;
pub mod ratios;
pub mod screen;

pub use dataset::PanelDataset;
pub use ratios::{compute_ratios, MacroRecord, RatioBuild, RawBankRecord};
pub use screen::{correlation_matrix, describe, regulatory_flags, vif, CorrelationMatrix,
                 DescriptiveRow, VifRow};

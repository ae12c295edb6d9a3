//! File ingestion and configuration: CSV readers for raw bank statements,
//! macro series, and prebuilt ratio panels; a CSV exporter; and the
//! pipeline configuration file.

mod config;
mod csv_data;

pub use config::{ModelConfig, OutputFormat, PipelineConfig};
pub use csv_data::{
    read_bank_csv, read_bank_records, read_macro_csv, read_macro_records, read_panel,
    read_panel_csv, write_panel, write_panel_csv,
};

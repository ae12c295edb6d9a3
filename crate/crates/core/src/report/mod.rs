//! Deterministic report assembly and rendering.
//!
//! A [`Report`] is an ordered list of sections, each carrying a table of
//! typed cells plus notes and an optional recorded stage error. The same
//! report renders as fixed-layout text (paper-style tables: starred
//! coefficients with parenthesized statistics, validity rows under GMM
//! columns), as JSON (full precision, round-trips to an equal value), or as
//! flat CSV (one line per cell, carrying section provenance and full
//! numeric precision).
//!
//! Conventions: 7 significant digits for numbers in text tables; p-values
//! with four decimals, printing `0.0000` below 5e-5; stars `***`/`**`/`*`
//! at the three configured significance levels (1%/5%/10% by default).

mod builder;
mod pipeline;
mod render;

use serde::{Deserialize, Serialize};

pub use builder::{
    battery_section, correlation_section, describe_section, dwh_section, estimation_section,
    gmm_section, model_selection, specification_section, unitroot_section, vif_section,
};
pub use pipeline::{report_exit_code, run_pipeline};
pub use render::{format_p, format_sig, render, render_csv, render_text, stars};

/// One typed table cell; rendering decisions stay in the renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Empty,
    Text { text: String },
    Integer { value: i64 },
    Number { value: f64 },
    /// A p-value; renders with four decimals, `0.0000` below 5e-5.
    PValue { value: f64 },
    /// A coefficient that renders with significance stars from `p`.
    Starred { value: f64, p: f64 },
    /// A statistic that renders in parentheses beneath its coefficient.
    Paren { value: f64 },
}

impl Cell {
    /// Plain text cell.
    pub fn text(t: impl Into<String>) -> Self {
        Cell::Text { text: t.into() }
    }

    /// Numeric cell; non-finite values degrade to a text marker so reports
    /// always serialize and compare cleanly.
    pub fn num(value: f64) -> Self {
        if value.is_finite() {
            Cell::Number { value }
        } else {
            Cell::text("undefined")
        }
    }

    pub fn int(value: usize) -> Self {
        Cell::Integer {
            value: value as i64,
        }
    }

    pub fn pval(value: f64) -> Self {
        if value.is_finite() {
            Cell::PValue { value }
        } else {
            Cell::text("undefined")
        }
    }

    pub fn starred(value: f64, p: f64) -> Self {
        if value.is_finite() {
            Cell::Starred { value, p }
        } else {
            Cell::text("undefined")
        }
    }

    pub fn paren(value: f64) -> Self {
        if value.is_finite() {
            Cell::Paren { value }
        } else {
            Cell::text("(undefined)")
        }
    }

    /// The full-precision numeric payload, if any.
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Integer { value } => Some(*value as f64),
            Cell::Number { value } | Cell::PValue { value } | Cell::Paren { value } => {
                Some(*value)
            }
            Cell::Starred { value, .. } => Some(*value),
            Cell::Empty | Cell::Text { .. } => None,
        }
    }
}

/// A rectangular table with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// How severe a recorded stage error is; decides the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageErrorKind {
    Validation,
    Numerical,
}

/// An error recorded against a report section instead of aborting the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub kind: StageErrorKind,
    pub message: String,
}

impl StageError {
    pub fn from_error(e: &crate::error::Error) -> Self {
        StageError {
            kind: if matches!(e, crate::error::Error::Numerical(_)) {
                StageErrorKind::Numerical
            } else {
                StageErrorKind::Validation
            },
            message: e.to_string(),
        }
    }
}

/// One report section: a titled table with provenance, notes, and an
/// optional recorded error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    /// Stable machine identifier, e.g. `profitability:estimation`.
    pub id: String,
    pub title: String,
    /// Which operation produced the section's numbers.
    pub provenance: String,
    pub table: Option<Table>,
    pub notes: Vec<String>,
    pub error: Option<StageError>,
}

impl Section {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        provenance: impl Into<String>,
    ) -> Self {
        Section {
            id: id.into(),
            title: title.into(),
            provenance: provenance.into(),
            table: None,
            notes: Vec::new(),
            error: None,
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_error(mut self, error: StageError) -> Self {
        self.error = Some(error);
        self
    }
}

/// An assembled report, ready to render in any format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    /// Ascending star/decision thresholds (three levels).
    pub significance_levels: Vec<f64>,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(title: impl Into<String>, significance_levels: Vec<f64>) -> Self {
        Report {
            title: title.into(),
            significance_levels,
            sections: Vec::new(),
        }
    }
}

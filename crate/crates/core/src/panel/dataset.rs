//! The panel-data rectangle: entities × contiguous periods × named series.
//!
//! Cells are `Option<f64>`; unbalanced coverage and in-span gaps are both
//! represented as missing cells, never dropped rows. Series names resolve
//! case-insensitively so that "roa" in a model spec finds the stored "ROA".

use crate::error::{Error, Result};

/// Immutable panel dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    entities: Vec<String>,
    /// Ascending, contiguous integer periods (years in the bank application;
    /// 0-based indices for simulated panels).
    periods: Vec<i32>,
    series_names: Vec<String>,
    /// One column per series; each column holds entities × periods cells in
    /// entity-major order.
    columns: Vec<Vec<Option<f64>>>,
}

impl PanelDataset {
    /// Empty dataset over the given entities and a contiguous period range.
    pub fn new(entities: Vec<String>, first_period: i32, n_periods: usize) -> Result<Self> {
        if entities.is_empty() {
            return Err(Error::validation("panel needs at least one entity"));
        }
        if n_periods == 0 {
            return Err(Error::validation("panel needs at least one period"));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &entities {
            if !seen.insert(e.clone()) {
                return Err(Error::validation(format!("duplicate entity id '{e}'")));
            }
        }
        let periods = (0..n_periods as i32).map(|k| first_period + k).collect();
        Ok(PanelDataset {
            entities,
            periods,
            series_names: Vec::new(),
            columns: Vec::new(),
        })
    }

    /// Add a series column; `values` is entity-major (entity 0's periods
    /// first). Series names must be unique after case-folding.
    pub fn add_series(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        let want = self.n_entities() * self.n_periods();
        if values.len() != want {
            return Err(Error::validation(format!(
                "series '{name}' has {} cells, expected {want}",
                values.len()
            )));
        }
        let folded = name.to_ascii_lowercase();
        if self
            .series_names
            .iter()
            .any(|s| s.to_ascii_lowercase() == folded)
        {
            return Err(Error::validation(format!(
                "series '{name}' already exists (names are case-insensitive)"
            )));
        }
        self.series_names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn periods(&self) -> &[i32] {
        &self.periods
    }

    pub fn series_names(&self) -> &[String] {
        &self.series_names
    }

    /// Case-insensitive series lookup.
    pub fn series_index(&self, name: &str) -> Result<usize> {
        let want = name.to_ascii_lowercase();
        self.series_names
            .iter()
            .position(|s| s.to_ascii_lowercase() == want)
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown series '{name}'; available: {}",
                    self.series_names.join(", ")
                ))
            })
    }

    /// Cell value by series/entity/period indices.
    pub fn value(&self, series: usize, entity: usize, period: usize) -> Option<f64> {
        self.columns[series][entity * self.n_periods() + period]
    }

    /// Cell value `lag` periods before `period`, or `None` when the lag
    /// leaves the sample.
    pub fn lagged(&self, series: usize, entity: usize, period: usize, lag: usize) -> Option<f64> {
        if period < lag {
            None
        } else {
            self.value(series, entity, period - lag)
        }
    }

    /// All non-missing values of a series, entity-major order.
    pub fn series_values(&self, series: usize) -> Vec<f64> {
        self.columns[series].iter().filter_map(|v| *v).collect()
    }

    /// Number of observed periods for one entity in one series.
    pub fn entity_obs(&self, series: usize, entity: usize) -> usize {
        let t = self.n_periods();
        self.columns[series][entity * t..(entity + 1) * t]
            .iter()
            .filter(|v| v.is_some())
            .count()
    }

    /// Rows where every listed series is present, as (entity, period) index
    /// pairs in entity-major, period-ascending order.
    pub fn complete_rows(&self, series: &[usize]) -> Vec<(usize, usize)> {
        let mut rows = Vec::new();
        for i in 0..self.n_entities() {
            for t in 0..self.n_periods() {
                if series.iter().all(|&s| self.value(s, i, t).is_some()) {
                    rows.push((i, t));
                }
            }
        }
        rows
    }

    /// Replace one cell (construction-time helper for ratio building).
    pub(crate) fn set_value(&mut self, series: usize, entity: usize, period: usize, v: Option<f64>) {
        let t = self.n_periods();
        self.columns[series][entity * t + period] = v;
    }
}

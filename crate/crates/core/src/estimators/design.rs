//! Complete-case design-matrix assembly shared by every estimator.
//!
//! A row (entity, period) enters the design when the dependent, all its
//! requested lags, and every regressor are present. Column order is fixed:
//! intercept, dependent lags (deepest last), regressors in spec order, then
//! optional period indicators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::panel::PanelDataset;

/// Prefix marking period-indicator columns; the report layer and the Hausman
/// comparison exclude columns carrying it.
pub const PERIOD_DUMMY_PREFIX: &str = "period_";

/// Assembled regression data for one spec on one panel.
#[derive(Debug, Clone)]
pub struct Design {
    /// (entity index, period index) per row, entity-major and ascending.
    pub rows: Vec<(usize, usize)>,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    /// Column names aligned with `x`.
    pub names: Vec<String>,
    /// True when column 0 is the intercept.
    pub intercept: bool,
    /// Entity index per row (parallel to `rows`).
    pub entity_of_row: Vec<usize>,
    /// Distinct entities present in `rows`.
    pub entities_used: Vec<usize>,
    /// Warnings generated during assembly (dropped entities and the like).
    pub notes: Vec<String>,
}

impl Design {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Number of non-intercept columns.
    pub fn k_slopes(&self) -> usize {
        self.k() - usize::from(self.intercept)
    }

    /// Row indices belonging to each used entity, in entity order.
    pub fn rows_by_entity(&self) -> Vec<Vec<usize>> {
        let mut map = std::collections::BTreeMap::new();
        for (r, &e) in self.entity_of_row.iter().enumerate() {
            map.entry(e).or_insert_with(Vec::new).push(r);
        }
        map.into_values().collect()
    }
}

/// Options controlling assembly beyond the spec itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct DesignOptions {
    /// Add period indicator columns (first present period is the base).
    pub period_dummies: bool,
    /// Drop entities with fewer complete rows than this (0 keeps all).
    pub min_entity_obs: usize,
}

/// Build the design for `spec` on `panel`.
pub fn build_design(
    panel: &PanelDataset,
    spec: &ModelSpec,
    options: DesignOptions,
) -> Result<Design> {
    spec.validate()?;
    let dep = panel.series_index(&spec.dependent)?;
    let reg_idx: Vec<usize> = spec
        .regressors
        .iter()
        .map(|r| panel.series_index(r))
        .collect::<Result<_>>()?;

    let mut notes = Vec::new();
    // Complete-case rows: dependent, its lags, and all regressors present.
    let mut rows = Vec::new();
    for i in 0..panel.n_entities() {
        for t in 0..panel.n_periods() {
            let ok = panel.value(dep, i, t).is_some()
                && (1..=spec.dep_lag_order).all(|l| panel.lagged(dep, i, t, l).is_some())
                && reg_idx.iter().all(|&s| panel.value(s, i, t).is_some());
            if ok {
                rows.push((i, t));
            }
        }
    }
    if options.min_entity_obs > 0 {
        let mut counts = std::collections::BTreeMap::new();
        for &(i, _) in &rows {
            *counts.entry(i).or_insert(0usize) += 1;
        }
        let dropped: Vec<usize> = counts
            .iter()
            .filter(|(_, &c)| c < options.min_entity_obs)
            .map(|(&i, _)| i)
            .collect();
        if !dropped.is_empty() {
            for &i in &dropped {
                notes.push(format!(
                    "entity '{}' dropped: fewer than {} usable observations",
                    panel.entities()[i],
                    options.min_entity_obs
                ));
            }
            rows.retain(|&(i, _)| !dropped.contains(&i));
        }
    }
    if rows.is_empty() {
        return Err(Error::validation(
            "no usable observations after applying the model specification",
        ));
    }

    let mut names = Vec::new();
    if spec.include_intercept {
        names.push("const".to_string());
    }
    let dep_name = panel.series_names()[dep].clone();
    for l in 1..=spec.dep_lag_order {
        if l == 1 {
            names.push(format!("L.{dep_name}"));
        } else {
            names.push(format!("L{l}.{dep_name}"));
        }
    }
    for &s in &reg_idx {
        names.push(panel.series_names()[s].clone());
    }

    // Period dummies cover the periods actually present, skipping the first
    // as the base category.
    let mut dummy_periods: Vec<usize> = Vec::new();
    if options.period_dummies {
        let mut present: Vec<usize> = rows.iter().map(|&(_, t)| t).collect();
        present.sort_unstable();
        present.dedup();
        dummy_periods = present.into_iter().skip(1).collect();
        for &t in &dummy_periods {
            names.push(format!("{PERIOD_DUMMY_PREFIX}{}", panel.periods()[t]));
        }
    }

    let n = rows.len();
    let k = names.len();
    if n <= k {
        return Err(Error::validation(format!(
            "{n} usable observations cannot identify {k} coefficients"
        )));
    }
    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    for (r, &(i, t)) in rows.iter().enumerate() {
        y[r] = panel.value(dep, i, t).expect("complete row");
        let mut c = 0;
        if spec.include_intercept {
            x[(r, c)] = 1.0;
            c += 1;
        }
        for l in 1..=spec.dep_lag_order {
            x[(r, c)] = panel.lagged(dep, i, t, l).expect("complete row");
            c += 1;
        }
        for &s in &reg_idx {
            x[(r, c)] = panel.value(s, i, t).expect("complete row");
            c += 1;
        }
        for &dt in &dummy_periods {
            x[(r, c)] = if t == dt { 1.0 } else { 0.0 };
            c += 1;
        }
    }

    let entity_of_row: Vec<usize> = rows.iter().map(|&(i, _)| i).collect();
    let mut entities_used: Vec<usize> = entity_of_row.clone();
    entities_used.dedup();

    Ok(Design {
        rows,
        y,
        x,
        names,
        intercept: spec.include_intercept,
        entity_of_row,
        entities_used,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel() -> PanelDataset {
        let mut p = PanelDataset::new(vec!["a".into(), "b".into()], 0, 4).unwrap();
        p.add_series(
            "Y",
            vec![
                Some(1.0),
                Some(2.0),
                Some(3.0),
                Some(4.0),
                Some(2.0),
                None,
                Some(6.0),
                Some(8.0),
            ],
        )
        .unwrap();
        p.add_series(
            "X",
            vec![
                Some(0.5),
                Some(1.5),
                Some(2.5),
                Some(3.5),
                Some(1.0),
                Some(2.0),
                Some(3.0),
                Some(4.0),
            ],
        )
        .unwrap();
        p
    }

    #[test]
    fn static_design_uses_complete_cases() {
        let p = panel();
        let spec = ModelSpec::static_spec("y", &["x"]);
        let d = build_design(&p, &spec, DesignOptions::default()).unwrap();
        // Entity b period 1 has missing Y.
        assert_eq!(d.n(), 7);
        assert_eq!(d.names, vec!["const", "X"]);
        assert!(d.intercept);
    }

    #[test]
    fn dynamic_design_needs_lag_present() {
        let p = panel();
        let mut spec = ModelSpec::static_spec("y", &["x"]);
        spec.dep_lag_order = 1;
        let d = build_design(&p, &spec, DesignOptions::default()).unwrap();
        // Entity a: t=1,2,3 usable; entity b: t needs y_t and y_{t-1}:
        // t=1 missing y, t=2 missing lag, t=3 ok.
        assert_eq!(d.rows, vec![(0, 1), (0, 2), (0, 3), (1, 3)]);
        assert_eq!(d.names, vec!["const", "L.Y", "X"]);
    }

    #[test]
    fn min_entity_obs_drops_with_note() {
        // Entity b ends up with a single usable row and falls below the floor.
        let mut p = PanelDataset::new(vec!["a".into(), "b".into()], 0, 6).unwrap();
        let ya = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].map(Some).to_vec();
        let yb = vec![Some(2.0), None, Some(6.0), Some(8.0), None, None];
        p.add_series("Y", [ya, yb].concat()).unwrap();
        p.add_series("X", (0..12).map(|v| Some(v as f64)).collect())
            .unwrap();
        let mut spec = ModelSpec::static_spec("y", &["x"]);
        spec.dep_lag_order = 1;
        let d = build_design(
            &p,
            &spec,
            DesignOptions {
                period_dummies: false,
                min_entity_obs: 2,
            },
        )
        .unwrap();
        assert_eq!(d.entities_used, vec![0]);
        assert_eq!(d.n(), 5);
        assert!(d.notes[0].contains("dropped"));
    }

    #[test]
    fn period_dummies_skip_base() {
        let p = panel();
        let spec = ModelSpec::static_spec("y", &["x"]);
        let d = build_design(
            &p,
            &spec,
            DesignOptions {
                period_dummies: true,
                min_entity_obs: 0,
            },
        )
        .unwrap();
        assert_eq!(
            d.names,
            vec!["const", "X", "period_1", "period_2", "period_3"]
        );
        // Dummy sums: period 1 appears once (entity b's t=1 dropped).
        let col = d.names.iter().position(|n| n == "period_1").unwrap();
        let sum: f64 = (0..d.n()).map(|r| d.x[(r, col)]).sum();
        assert_eq!(sum, 1.0);
    }
}

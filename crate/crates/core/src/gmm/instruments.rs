//! Assembly of the instrument matrix for the first-differenced equation.
//!
//! gmm-style directives expand into one column per (equation period, block
//! lag) cell — or one column per block lag when collapsed — holding lagged
//! *levels* of the base series, zero-filled where a lag is unavailable.
//! iv-style directives contribute a single column each and exclude any row
//! on which their value is missing. The estimation sample (which differenced
//! rows enter) is decided here so the estimator and the instrument matrix
//! always agree row for row.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::panel::PanelDataset;

use super::directive::InstrumentDirective;

/// Cap on the block-lag depth of gmm-style instrument blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthOption {
    /// Largest depth keeping the instrument count at or below the group
    /// count; depth 1 when even that exceeds it.
    Auto,
    /// No cap: every available lag enters.
    Unbounded,
    /// Fixed cap on the deepest block lag.
    Fixed(usize),
}

/// Options controlling instrument assembly.
#[derive(Debug, Clone, Copy)]
pub struct PlanOptions {
    /// Depth cap applied to every gmm-style block, including the automatic
    /// dependent-variable block.
    pub max_gmm_lag_depth: DepthOption,
    /// Collapse the automatic dependent-variable block.
    pub collapse_default: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            max_gmm_lag_depth: DepthOption::Auto,
            collapse_default: false,
        }
    }
}

/// Realized instrument matrix plus the sample it is aligned to.
#[derive(Debug, Clone)]
pub struct InstrumentPlan {
    /// Effective directives, including the automatic dependent-variable
    /// block when one was added.
    pub directives: Vec<InstrumentDirective>,
    /// True when the dependent-variable block was added automatically.
    pub auto_added: bool,
    /// Instrument matrix, rows aligned with `rows`.
    pub z: DMatrix<f64>,
    /// One label per Z column, e.g. "D.L2.roa" or "y:L2@t2015".
    pub column_labels: Vec<String>,
    /// Column indices contributed by each directive, in directive order.
    pub directive_columns: Vec<Vec<usize>>,
    /// (entity, period) of each differenced observation in the sample.
    pub rows: Vec<(usize, usize)>,
    /// Candidate differenced rows dropped for missing values.
    pub rows_lost: usize,
    /// Entities contributing at least one sample row.
    pub group_count: usize,
    /// Depth chosen under [`DepthOption::Auto`].
    pub auto_depth: Option<usize>,
    /// True when the instrument count exceeds the group count.
    pub exceeds_group_rule: bool,
    pub notes: Vec<String>,
}

impl InstrumentPlan {
    pub fn column_count(&self) -> usize {
        self.z.ncols()
    }
}

/// First-difference the listed series into a new panel with the same shape.
/// Each entity's first period becomes missing; a missing cell poisons both
/// differences that would use it, so gaps are never bridged.
pub fn first_difference(panel: &PanelDataset, variables: &[&str]) -> Result<PanelDataset> {
    let mut out = PanelDataset::new(
        panel.entities().to_vec(),
        panel.periods()[0],
        panel.n_periods(),
    )?;
    for name in variables {
        let s = panel.series_index(name)?;
        let canonical = panel.series_names()[s].clone();
        let mut vals = Vec::with_capacity(panel.n_entities() * panel.n_periods());
        for i in 0..panel.n_entities() {
            for t in 0..panel.n_periods() {
                let v = if t == 0 {
                    None
                } else {
                    match (panel.value(s, i, t), panel.value(s, i, t - 1)) {
                        (Some(a), Some(b)) => Some(a - b),
                        _ => None,
                    }
                };
                vals.push(v);
            }
        }
        out.add_series(canonical, vals)?;
    }
    Ok(out)
}

struct Resolved {
    directive: InstrumentDirective,
    series: usize,
}

/// Value of an iv-style instrument on the differenced row (entity, t), or
/// `None` when any required cell is missing.
fn iv_value(
    panel: &PanelDataset,
    series: usize,
    entity: usize,
    t: usize,
    inner: usize,
    differenced: bool,
) -> Option<f64> {
    let slot = t as i64 - inner as i64;
    if slot < 0 {
        return None;
    }
    let cur = panel.value(series, entity, slot as usize)?;
    if differenced {
        if slot < 1 {
            return None;
        }
        let prev = panel.value(series, entity, slot as usize - 1)?;
        Some(cur - prev)
    } else {
        Some(cur)
    }
}

fn effective_hi(avail: i64, to: Option<usize>, cap: Option<usize>) -> i64 {
    let mut hi = avail;
    if let Some(t) = to {
        hi = hi.min(t as i64);
    }
    if let Some(c) = cap {
        hi = hi.min(c as i64);
    }
    hi
}

/// (equation period, block lag) cells realized by an uncollapsed gmm
/// directive, period-major then lag-ascending.
fn gmm_cells(
    inner: usize,
    from: usize,
    to: Option<usize>,
    cap: Option<usize>,
    periods: &BTreeSet<usize>,
) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for &t in periods {
        let hi = effective_hi(t as i64 - inner as i64, to, cap);
        let mut l = from as i64;
        while l <= hi {
            cells.push((t, l as usize));
            l += 1;
        }
    }
    cells
}

/// Block lags realized by a collapsed gmm directive.
fn gmm_collapsed_lags(
    inner: usize,
    from: usize,
    to: Option<usize>,
    cap: Option<usize>,
    periods: &BTreeSet<usize>,
) -> Vec<usize> {
    let max_avail = periods
        .iter()
        .map(|&t| t as i64 - inner as i64)
        .max()
        .unwrap_or(-1);
    let hi = effective_hi(max_avail, to, cap);
    let mut lags = Vec::new();
    let mut l = from as i64;
    while l <= hi {
        lags.push(l as usize);
        l += 1;
    }
    lags
}

fn column_count_at(resolved: &[Resolved], periods: &BTreeSet<usize>, cap: Option<usize>) -> usize {
    let mut count = 0;
    for rd in resolved {
        match &rd.directive {
            InstrumentDirective::Iv { .. } => count += 1,
            InstrumentDirective::Gmm {
                inner_lag,
                lag_from,
                lag_to,
                collapsed,
                ..
            } => {
                count += if *collapsed {
                    gmm_collapsed_lags(*inner_lag, *lag_from, *lag_to, cap, periods).len()
                } else {
                    gmm_cells(*inner_lag, *lag_from, *lag_to, cap, periods).len()
                };
            }
        }
    }
    count
}

fn iv_label(base: &str, inner: usize, differenced: bool) -> String {
    let prefix = match inner {
        0 => String::new(),
        1 => "L.".to_string(),
        n => format!("L{n}."),
    };
    if differenced {
        format!("D.{prefix}{base}")
    } else {
        format!("{prefix}{base}")
    }
}

/// Build the instrument matrix and the differenced estimation sample.
///
/// A differenced row (entity, t) is usable when the dependent variable is
/// present at t down to t − lag order − 1, every regressor is present at t
/// and t − 1, and every iv-style instrument has a value; dropped candidates
/// are counted in `rows_lost`. Unless a directive already covers the
/// dependent variable, an automatic gmm-style block of its lagged levels is
/// appended (levels dated t − 2 and deeper, up to the depth cap).
pub fn build_instrument_matrix(
    panel: &PanelDataset,
    spec: &ModelSpec,
    options: &PlanOptions,
) -> Result<InstrumentPlan> {
    spec.validate()?;
    if spec.dep_lag_order == 0 {
        return Err(Error::validation(
            "instrument assembly requires a dynamic model (dependent lag order >= 1)",
        ));
    }
    let dep_series = panel.series_index(&spec.dependent)?;
    let reg_series: Vec<usize> = spec
        .regressors
        .iter()
        .map(|r| panel.series_index(r))
        .collect::<Result<_>>()?;

    let dep_folded = spec.dependent.to_ascii_lowercase();
    let mut directives = spec.instrument_directives.clone();
    // A directive "covers" the dependent variable when it supplies level
    // instruments for its lag: a gmm-style block on it, or an undifferenced
    // iv lag of it. A differenced iv column of the dependent is an ordinary
    // control and does not replace the automatic block.
    let auto_added = !directives.iter().any(|d| {
        d.base().to_ascii_lowercase() == dep_folded
            && match d {
                InstrumentDirective::Gmm { .. } => true,
                InstrumentDirective::Iv { differenced, .. } => !differenced,
            }
    });
    if auto_added {
        directives.push(InstrumentDirective::Gmm {
            base: spec.dependent.clone(),
            inner_lag: 1,
            lag_from: 1,
            lag_to: None,
            collapsed: options.collapse_default,
        });
    }
    let resolved: Vec<Resolved> = directives
        .iter()
        .map(|d| {
            Ok(Resolved {
                directive: d.clone(),
                series: panel.series_index(d.base())?,
            })
        })
        .collect::<Result<_>>()?;

    // Sample selection: listwise over dependent lags, differenced
    // regressors, and iv instruments.
    let p = spec.dep_lag_order;
    let mut rows: Vec<(usize, usize)> = Vec::new();
    let mut candidates = 0usize;
    for i in 0..panel.n_entities() {
        for t in (p + 1)..panel.n_periods() {
            candidates += 1;
            let dep_ok = (0..=p + 1).all(|back| panel.value(dep_series, i, t - back).is_some());
            if !dep_ok {
                continue;
            }
            let regs_ok = reg_series
                .iter()
                .all(|&s| panel.value(s, i, t).is_some() && panel.value(s, i, t - 1).is_some());
            if !regs_ok {
                continue;
            }
            let ivs_ok = resolved.iter().all(|rd| match &rd.directive {
                InstrumentDirective::Iv {
                    inner_lag,
                    differenced,
                    ..
                } => iv_value(panel, rd.series, i, t, *inner_lag, *differenced).is_some(),
                InstrumentDirective::Gmm { .. } => true,
            });
            if ivs_ok {
                rows.push((i, t));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::validation(
            "no usable differenced observations: every candidate row has missing values",
        ));
    }
    let rows_lost = candidates - rows.len();
    let group_count = {
        let mut ents = BTreeSet::new();
        for &(i, _) in &rows {
            ents.insert(i);
        }
        ents.len()
    };
    let periods: BTreeSet<usize> = rows.iter().map(|&(_, t)| t).collect();

    // Resolve the depth cap. Auto searches downward for the deepest cap
    // whose realized count respects the group-count rule.
    let mut auto_depth = None;
    let cap: Option<usize> = match options.max_gmm_lag_depth {
        DepthOption::Unbounded => None,
        DepthOption::Fixed(d) => Some(d),
        DepthOption::Auto => {
            let has_gmm = resolved.iter().any(|rd| rd.directive.is_gmm());
            if !has_gmm {
                None
            } else {
                let t_max = *periods.iter().max().expect("rows nonempty") as i64;
                let d_max = resolved
                    .iter()
                    .filter_map(|rd| match &rd.directive {
                        InstrumentDirective::Gmm { inner_lag, .. } => {
                            Some(t_max - *inner_lag as i64)
                        }
                        _ => None,
                    })
                    .max()
                    .unwrap_or(1)
                    .max(1) as usize;
                let mut chosen = 1;
                for d in (1..=d_max).rev() {
                    if column_count_at(&resolved, &periods, Some(d)) <= group_count {
                        chosen = d;
                        break;
                    }
                }
                auto_depth = Some(chosen);
                Some(chosen)
            }
        }
    };

    // Materialize the columns in directive order.
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut column_labels: Vec<String> = Vec::new();
    let mut directive_columns: Vec<Vec<usize>> = Vec::new();
    for rd in &resolved {
        let mut mine = Vec::new();
        match &rd.directive {
            InstrumentDirective::Iv {
                base,
                inner_lag,
                differenced,
            } => {
                let col = rows
                    .iter()
                    .map(|&(i, t)| {
                        iv_value(panel, rd.series, i, t, *inner_lag, *differenced)
                            .expect("iv presence checked during row selection")
                    })
                    .collect();
                mine.push(cols.len());
                column_labels.push(iv_label(base, *inner_lag, *differenced));
                cols.push(col);
            }
            InstrumentDirective::Gmm {
                base,
                inner_lag,
                lag_from,
                lag_to,
                collapsed,
            } => {
                if *collapsed {
                    for l in gmm_collapsed_lags(*inner_lag, *lag_from, *lag_to, cap, &periods) {
                        let mut col = vec![0.0; rows.len()];
                        for (r, &(i, t)) in rows.iter().enumerate() {
                            if l as i64 <= t as i64 - *inner_lag as i64 {
                                col[r] = panel
                                    .value(rd.series, i, t - inner_lag - l)
                                    .unwrap_or(0.0);
                            }
                        }
                        mine.push(cols.len());
                        column_labels.push(format!("{base}:L{}", inner_lag + l));
                        cols.push(col);
                    }
                } else {
                    for (tc, l) in gmm_cells(*inner_lag, *lag_from, *lag_to, cap, &periods) {
                        let mut col = vec![0.0; rows.len()];
                        for (r, &(i, t)) in rows.iter().enumerate() {
                            if t == tc {
                                col[r] = panel
                                    .value(rd.series, i, t - inner_lag - l)
                                    .unwrap_or(0.0);
                            }
                        }
                        mine.push(cols.len());
                        column_labels.push(format!(
                            "{base}:L{}@t{}",
                            inner_lag + l,
                            panel.periods()[tc]
                        ));
                        cols.push(col);
                    }
                }
            }
        }
        directive_columns.push(mine);
    }

    let n_cols = cols.len();
    let k = p + spec.regressors.len();
    if n_cols < k {
        return Err(Error::validation(format!(
            "under-identified: {n_cols} instrument columns for {k} parameters; \
             add directives or deepen the gmm lag range"
        )));
    }

    let mut notes = Vec::new();
    if rows_lost > 0 {
        notes.push(format!(
            "{rows_lost} candidate differenced rows dropped for missing dependent lags, \
             regressors, or iv instruments"
        ));
    }
    if let Some(d) = auto_depth {
        if n_cols <= group_count {
            notes.push(format!(
                "automatic gmm lag depth {d}: deepest cap keeping the instrument count \
                 ({n_cols}) within the group count ({group_count})"
            ));
        } else {
            notes.push(format!(
                "automatic gmm lag depth {d}: even the shallowest cap leaves the \
                 instrument count ({n_cols}) above the group count ({group_count})"
            ));
        }
    }
    let exceeds_group_rule = n_cols > group_count;
    if exceeds_group_rule {
        notes.push(format!(
            "instrument count ({n_cols}) exceeds the number of groups ({group_count}): \
             the instrument count should be less than or equal to the number of groups"
        ));
    }

    let z = DMatrix::from_fn(rows.len(), n_cols, |r, c| cols[c][r]);
    Ok(InstrumentPlan {
        directives,
        auto_added,
        z,
        column_labels,
        directive_columns,
        rows,
        rows_lost,
        group_count,
        auto_depth,
        exceeds_group_rule,
        notes,
    })
}

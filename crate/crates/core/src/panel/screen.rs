//! Screening statistics: descriptives, correlation matrix, VIF, and the
//! regulatory threshold flags for loan quality and capital adequacy.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::lstsq;
use crate::panel::PanelDataset;

/// Descriptive statistics for one variable over its non-missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveRow {
    pub variable: String,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub n_obs: usize,
}

/// Pearson correlation matrix on pairwise-complete observations.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// `None` marks an undefined correlation (a zero-variance variable).
    pub values: Vec<Vec<Option<f64>>>,
    /// (row, col, r) for every off-diagonal pair with |r| > 0.80.
    pub high_pairs: Vec<(usize, usize, f64)>,
}

/// Variance-inflation factor for one regressor.
#[derive(Debug, Clone)]
pub struct VifRow {
    pub variable: String,
    /// `f64::INFINITY` marks perfect collinearity.
    pub vif: f64,
    /// 1/VIF, zero under perfect collinearity.
    pub reciprocal: f64,
}

/// Per-variable mean/sd/min/max/count using two-pass moments.
pub fn describe(panel: &PanelDataset, variables: &[&str]) -> Result<Vec<DescriptiveRow>> {
    let mut out = Vec::with_capacity(variables.len());
    for &name in variables {
        let s = panel.series_index(name)?;
        let vals = panel.series_values(s);
        let n = vals.len();
        if n == 0 {
            out.push(DescriptiveRow {
                variable: panel.series_names()[s].clone(),
                mean: f64::NAN,
                std_dev: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                n_obs: 0,
            });
            continue;
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.push(DescriptiveRow {
            variable: panel.series_names()[s].clone(),
            mean,
            std_dev: var.sqrt(),
            min,
            max,
            n_obs: n,
        });
    }
    Ok(out)
}

/// Pearson correlations on pairwise-complete cells; zero-variance variables
/// yield undefined (flagged) entries rather than NaNs.
pub fn correlation_matrix(panel: &PanelDataset, variables: &[&str]) -> Result<CorrelationMatrix> {
    let idx: Vec<usize> = variables
        .iter()
        .map(|v| panel.series_index(v))
        .collect::<Result<_>>()?;
    let names: Vec<String> = idx
        .iter()
        .map(|&s| panel.series_names()[s].clone())
        .collect();
    let k = idx.len();
    let mut values = vec![vec![None; k]; k];
    let mut high_pairs = Vec::new();
    for a in 0..k {
        values[a][a] = Some(1.0);
        for b in (a + 1)..k {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for i in 0..panel.n_entities() {
                for t in 0..panel.n_periods() {
                    if let (Some(x), Some(y)) =
                        (panel.value(idx[a], i, t), panel.value(idx[b], i, t))
                    {
                        xs.push(x);
                        ys.push(y);
                    }
                }
            }
            let r = pearson(&xs, &ys);
            values[a][b] = r;
            values[b][a] = r;
            if let Some(r) = r {
                if r.abs() > 0.80 {
                    high_pairs.push((a, b, r));
                }
            }
        }
    }
    Ok(CorrelationMatrix {
        names,
        values,
        high_pairs,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Variance-inflation factors on complete-case rows, with the mean VIF.
///
/// Each VIF comes from the auxiliary regression of that regressor on all the
/// others plus an intercept; an auxiliary R-squared at 1 (within tolerance)
/// produces an infinity sentinel instead of an error.
pub fn vif(panel: &PanelDataset, regressors: &[&str]) -> Result<(Vec<VifRow>, f64)> {
    if regressors.len() < 2 {
        return Err(crate::error::Error::validation(
            "vif needs at least two regressors",
        ));
    }
    let idx: Vec<usize> = regressors
        .iter()
        .map(|v| panel.series_index(v))
        .collect::<Result<_>>()?;
    let rows = panel.complete_rows(&idx);
    let n = rows.len();
    let k = idx.len();
    if n < k + 2 {
        return Err(crate::error::Error::validation(format!(
            "vif needs more complete rows ({n}) than regressors plus intercept"
        )));
    }
    let data: Vec<Vec<f64>> = idx
        .iter()
        .map(|&s| {
            rows.iter()
                .map(|&(i, t)| panel.value(s, i, t).expect("complete row"))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut x = DMatrix::zeros(n, k);
        for r in 0..n {
            x[(r, 0)] = 1.0;
            let mut c = 1;
            for (jj, col) in data.iter().enumerate() {
                if jj != j {
                    x[(r, c)] = col[r];
                    c += 1;
                }
            }
        }
        let y = DVector::from_iterator(n, data[j].iter().cloned());
        let aux_fit = lstsq(&x, &y)?;
        let resid = &y - &x * &aux_fit.beta;
        let ssr: f64 = resid.iter().map(|e| e * e).sum();
        let my = y.iter().sum::<f64>() / n as f64;
        let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
        let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
        let vif = if r2 >= 1.0 - 1e-12 {
            f64::INFINITY
        } else {
            1.0 / (1.0 - r2)
        };
        out.push(VifRow {
            variable: panel.series_names()[idx[j]].clone(),
            vif,
            reciprocal: if vif.is_finite() { 1.0 / vif } else { 0.0 },
        });
    }
    let finite: Vec<f64> = out.iter().map(|r| r.vif).filter(|v| v.is_finite()).collect();
    let mean = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok((out, mean))
}

/// Threshold warnings: loan-quality ratio above 3 (percent) and capital
/// adequacy below 9 (percent), per entity-period cell.
pub fn regulatory_flags(panel: &PanelDataset) -> Vec<String> {
    let mut flags = Vec::new();
    if let Ok(nplr) = panel.series_index("NPLR") {
        for i in 0..panel.n_entities() {
            for t in 0..panel.n_periods() {
                if let Some(v) = panel.value(nplr, i, t) {
                    if v > 3.0 {
                        flags.push(format!(
                            "NPLR {v:.2} exceeds the 3% supervisory threshold (entity {}, period {})",
                            panel.entities()[i],
                            panel.periods()[t]
                        ));
                    }
                }
            }
        }
    }
    if let Ok(car) = panel.series_index("CAR") {
        for i in 0..panel.n_entities() {
            for t in 0..panel.n_periods() {
                if let Some(v) = panel.value(car, i, t) {
                    if v < 9.0 {
                        flags.push(format!(
                            "CAR {v:.2} is below the 9% minimum requirement (entity {}, period {})",
                            panel.entities()[i],
                            panel.periods()[t]
                        ));
                    }
                }
            }
        }
    }
    flags
}

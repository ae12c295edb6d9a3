//! Regressor-endogeneity testing via the residual-augmented regression.

use nalgebra::{DMatrix, DVector};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{ModelSpec, TestResult};
use crate::panel::PanelDataset;

/// Exogeneity test of one suspected regressor given outside instruments.
///
/// First stage: regress the suspected regressor on the instruments plus the
/// remaining (exogenous) regressors; keep the residuals. Second stage:
/// re-fit the structural equation augmented with those residuals. Returns
/// the score-form statistic D = n (RSS_r - RSS_u) / RSS_r ~ chi-square(1)
/// and the F-form W = (RSS_r - RSS_u) / (RSS_u / (n - k - 1)) ~ F(1, n-k-1),
/// where RSS_r and RSS_u are the restricted and augmented residual sums of
/// squares and k counts the structural coefficients.
///
/// Static specifications only; identification requires the instruments to
/// explain variation in the suspected regressor beyond the exogenous
/// regressors (partial R-squared above numerical zero).
pub fn dwh_endogeneity_test(
    panel: &PanelDataset,
    spec: &ModelSpec,
    suspected: &str,
    instruments: &[&str],
) -> Result<(TestResult, TestResult)> {
    spec.validate()?;
    if spec.dep_lag_order != 0 {
        return Err(Error::validation(
            "the exogeneity test supports static specifications only",
        ));
    }
    let sus_lower = suspected.to_ascii_lowercase();
    if !spec
        .regressors
        .iter()
        .any(|r| r.to_ascii_lowercase() == sus_lower)
    {
        return Err(Error::validation(format!(
            "suspected regressor '{suspected}' is not in the specification"
        )));
    }
    if instruments.is_empty() {
        return Err(Error::validation(
            "the exogeneity test needs at least one instrument",
        ));
    }
    for inst in instruments {
        let low = inst.to_ascii_lowercase();
        if low == sus_lower {
            return Err(Error::validation(format!(
                "instrument '{inst}' is the suspected regressor itself"
            )));
        }
        if spec
            .regressors
            .iter()
            .any(|r| r.to_ascii_lowercase() == low)
        {
            return Err(Error::validation(format!(
                "instrument '{inst}' already appears among the regressors; \
                 instruments must be excluded from the structural equation"
            )));
        }
        if low == spec.dependent.to_ascii_lowercase() {
            return Err(Error::validation(format!(
                "instrument '{inst}' is the dependent variable"
            )));
        }
    }

    let dep = panel.series_index(&spec.dependent)?;
    let sus = panel.series_index(suspected)?;
    let reg_idx: Vec<usize> = spec
        .regressors
        .iter()
        .map(|r| panel.series_index(r))
        .collect::<Result<_>>()?;
    let exog_idx: Vec<usize> = reg_idx.iter().copied().filter(|&s| s != sus).collect();
    let inst_idx: Vec<usize> = instruments
        .iter()
        .map(|r| panel.series_index(r))
        .collect::<Result<_>>()?;

    let mut all = vec![dep];
    all.extend(&reg_idx);
    all.extend(&inst_idx);
    let rows = panel.complete_rows(&all);
    let n = rows.len();
    let icpt = usize::from(spec.include_intercept);
    let k = icpt + reg_idx.len();
    if n <= k + 1 + inst_idx.len() {
        return Err(Error::validation(
            "too few complete observations for the exogeneity test",
        ));
    }

    let fill = |cols: &[usize], with_const: bool| -> DMatrix<f64> {
        let kk = usize::from(with_const) + cols.len();
        let mut m = DMatrix::zeros(n, kk);
        for (r, &(i, t)) in rows.iter().enumerate() {
            let mut c = 0;
            if with_const {
                m[(r, c)] = 1.0;
                c += 1;
            }
            for &s in cols {
                m[(r, c)] = panel.value(s, i, t).expect("complete row");
                c += 1;
            }
        }
        m
    };
    let vector_of = |s: usize| -> DVector<f64> {
        DVector::from_iterator(
            n,
            rows.iter().map(|&(i, t)| panel.value(s, i, t).expect("complete row")),
        )
    };

    let ssr_of = |x: &DMatrix<f64>, y: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let sol = lstsq(x, y)?;
        let resid = y - x * &sol.beta;
        Ok((resid.iter().map(|e| e * e).sum(), resid))
    };

    // First stage and its exogenous-only restriction, for the partial R^2.
    let xsus = vector_of(sus);
    let mut w1_cols = exog_idx.clone();
    w1_cols.extend(&inst_idx);
    let (ssr1, vhat) = ssr_of(&fill(&w1_cols, spec.include_intercept), &xsus)?;
    let (ssr0, _) = ssr_of(&fill(&exog_idx, spec.include_intercept), &xsus)?;
    if ssr0 <= 0.0 {
        return Err(Error::validation(
            "the suspected regressor is already explained exactly by the \
             exogenous regressors; nothing to instrument",
        ));
    }
    let partial_r2 = 1.0 - ssr1 / ssr0;
    if partial_r2 < 1e-10 {
        return Err(Error::validation(
            "the first stage does not identify the suspected regressor: the \
             instruments add no explanatory power beyond the exogenous regressors",
        ));
    }

    // Restricted structural fit and the residual-augmented fit.
    let y = vector_of(dep);
    let xr = fill(&reg_idx, spec.include_intercept);
    let (rss_r, _) = ssr_of(&xr, &y)?;
    if rss_r <= 0.0 {
        return Err(Error::validation(
            "the structural regression fits exactly; the exogeneity test is \
             undefined",
        ));
    }
    let mut xu = DMatrix::zeros(n, k + 1);
    for r in 0..n {
        for c in 0..k {
            xu[(r, c)] = xr[(r, c)];
        }
        xu[(r, k)] = vhat[r];
    }
    let (rss_u, _) = ssr_of(&xu, &y)?;
    let drop = (rss_r - rss_u).max(0.0);

    let durbin = n as f64 * drop / rss_r;
    let df2 = (n - k - 1) as f64;
    if df2 <= 0.0 {
        return Err(Error::validation(
            "no residual degrees of freedom for the F-form statistic",
        ));
    }
    if rss_u <= 0.0 {
        return Err(Error::numerical(
            "the augmented regression fits exactly; the F-form statistic is \
             unbounded",
        ));
    }
    let wu_hausman = drop / (rss_u / df2);

    let h0 = format!("'{suspected}' is exogenous");
    Ok((
        TestResult::upper_tail(
            format!("Durbin score test of exogeneity for '{suspected}'"),
            durbin,
            Distribution::ChiSquare { df: 1.0 },
            h0.clone(),
            0.05,
        ),
        TestResult::upper_tail(
            format!("Wu-Hausman F test of exogeneity for '{suspected}'"),
            wu_hausman,
            Distribution::F { df1: 1.0, df2 },
            h0,
            0.05,
        ),
    ))
}

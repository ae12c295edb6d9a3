//! Pooled OLS with classical inference.

use crate::dist::{f_sf, Distribution};
use crate::error::{Error, Result};
use crate::estimators::design::{build_design, Design, DesignOptions};
use crate::linalg::{inv_spd, lstsq, symmetrize};
use crate::model::{
    Auxiliary, CoefInference, EstimationResult, FStat, FitStats, Method, ModelSpec,
};
use crate::panel::PanelDataset;

/// Pooled OLS on complete-case rows.
///
/// Coefficients come from an SVD least-squares solve; the covariance is the
/// classical sigma-squared (X'X)^-1 with sigma-squared = SSR/(n-k). A
/// rank-deficient design is an error naming the dependent column set.
pub fn pooled_ols(panel: &PanelDataset, spec: &ModelSpec) -> Result<EstimationResult> {
    let design = build_design(panel, spec, DesignOptions::default())?;
    ols_on_design(&design, Method::PooledOls)
}

/// OLS machinery shared with the LSDV path and internal regressions.
pub(crate) fn ols_on_design(design: &Design, method: Method) -> Result<EstimationResult> {
    let n = design.n();
    let k = design.k();
    let sol = lstsq(&design.x, &design.y)?;
    if sol.rank < k {
        let cols: Vec<&str> = sol
            .dependent_cols
            .iter()
            .map(|&j| design.names[j].as_str())
            .collect();
        return Err(Error::validation(format!(
            "design matrix is rank-deficient; linearly dependent columns: {}",
            cols.join(", ")
        )));
    }
    let fitted = &design.x * &sol.beta;
    let resid = &design.y - &fitted;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let dof = (n - k) as f64;
    let sigma2 = ssr / dof;
    let xtx = design.x.transpose() * &design.x;
    let mut cov = inv_spd(&xtx, "X'X")? * sigma2;
    symmetrize(&mut cov);

    // R-squared: centered when an intercept is present, uncentered otherwise.
    let sst = if design.intercept {
        let my = design.y.iter().sum::<f64>() / n as f64;
        design.y.iter().map(|v| (v - my).powi(2)).sum::<f64>()
    } else {
        design.y.iter().map(|v| v * v).sum::<f64>()
    };
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };

    // Joint slope F-test against the intercept-only model.
    let k_s = design.k_slopes();
    let f_stat = if design.intercept && k_s > 0 {
        let f = ((sst - ssr).max(0.0) / k_s as f64) / (ssr / dof);
        Some(FStat {
            stat: f,
            df1: k_s as f64,
            df2: dof,
            p: f_sf(f, k_s as f64, dof),
        })
    } else {
        None
    };

    let mut result = EstimationResult {
        method,
        coef_names: design.names.clone(),
        coefficients: sol.beta,
        covariance: cov,
        std_errors: vec![],
        stats: vec![],
        p_values: vec![],
        n_obs: n,
        n_entities: design.entities_used.len(),
        fit: FitStats {
            r_squared: Some(r2),
            f_stat,
            wald_chi2: None,
        },
        rows: design.rows.clone(),
        residuals: resid.iter().cloned().collect(),
        fitted: fitted.iter().cloned().collect(),
        ssr,
        auxiliary: Auxiliary::None,
        notes: design.notes.clone(),
    };
    result.compute_inference(CoefInference::T { dof });
    Ok(result)
}

/// Overall Wald chi-square on the slope coefficients of a fitted result.
pub(crate) fn slope_wald(result: &EstimationResult, has_intercept: bool) -> Option<(f64, f64)> {
    let k = result.coefficients.len();
    let start = usize::from(has_intercept);
    // Period dummies are excluded from the headline Wald.
    let keep: Vec<usize> = (start..k)
        .filter(|&j| {
            !result.coef_names[j].starts_with(crate::estimators::design::PERIOD_DUMMY_PREFIX)
        })
        .collect();
    if keep.is_empty() {
        return None;
    }
    let b = nalgebra::DVector::from_iterator(
        keep.len(),
        keep.iter().map(|&j| result.coefficients[j]),
    );
    let mut v = nalgebra::DMatrix::zeros(keep.len(), keep.len());
    for (a, &ja) in keep.iter().enumerate() {
        for (bq, &jb) in keep.iter().enumerate() {
            v[(a, bq)] = result.covariance[(ja, jb)];
        }
    }
    let vinv = inv_spd(&v, "slope covariance").ok()?;
    let w = (b.transpose() * vinv * &b)[(0, 0)];
    Some((w, keep.len() as f64))
}

/// Attach an overall Wald chi-square to a result (RE/FGLS/GMM convention).
pub(crate) fn attach_wald(result: &mut EstimationResult) {
    if let Some((w, df)) = slope_wald(result, result.coef_names.first().map(String::as_str) == Some("const"))
    {
        result.fit.wald_chi2 = Some(crate::model::WaldStat {
            stat: w,
            df,
            p: Distribution::ChiSquare { df }.sf(w),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_panel() -> PanelDataset {
        // y = 1 + 2 x exactly, 8 rows over 2 entities.
        let mut p = PanelDataset::new(vec!["a".into(), "b".into()], 0, 4).unwrap();
        let xs: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        p.add_series("Y", ys.into_iter().map(Some).collect()).unwrap();
        p.add_series("X", xs.into_iter().map(Some).collect()).unwrap();
        p
    }

    #[test]
    fn perfect_fit_recovers_line() {
        let p = line_panel();
        let r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        assert!((r.coefficients[0] - 1.0).abs() < 1e-10);
        assert!((r.coefficients[1] - 2.0).abs() < 1e-10);
        assert!((r.fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let mut p = line_panel();
        let x2: Vec<Option<f64>> = (0..8).map(|i| Some(i as f64)).collect();
        p.add_series("X2", x2).unwrap();
        // X2 = 2*X, exactly collinear.
        let err = pooled_ols(&p, &ModelSpec::static_spec("y", &["x", "x2"])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rank-deficient"), "{msg}");
        assert!(msg.contains('X'), "{msg}");
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let mut p = PanelDataset::new(vec!["a".into()], 0, 30).unwrap();
        // Deterministic, irregular but fixed values.
        let xs: Vec<f64> = (0..30).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 0.7 + 1.3 * x + ((i * 13 % 7) as f64 - 3.0) * 0.25)
            .collect();
        p.add_series("Y", ys.into_iter().map(Some).collect()).unwrap();
        p.add_series("X", xs.into_iter().map(Some).collect()).unwrap();
        let r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        // X'e = 0 (scaled).
        let scale: f64 = r.residuals.iter().map(|e| e * e).sum::<f64>().sqrt() + 1.0;
        let dot_const: f64 = r.residuals.iter().sum();
        let xvals = p.series_values(p.series_index("x").unwrap());
        let dot_x: f64 = r
            .residuals
            .iter()
            .zip(&xvals)
            .map(|(e, x)| e * x)
            .sum();
        assert!(dot_const.abs() / scale < 1e-8);
        assert!(dot_x.abs() / scale < 1e-8);
    }
}

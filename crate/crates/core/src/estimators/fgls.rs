//! Iterated feasible GLS with groupwise heteroskedasticity and an optional
//! common AR(1) error process.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::design::{build_design, Design, DesignOptions};
use crate::estimators::pols::attach_wald;
use crate::linalg::{inv_spd, lstsq, symmetrize};
use crate::model::{
    Auxiliary, CoefInference, EstimationResult, FitStats, Method, ModelSpec,
};
use crate::panel::PanelDataset;

/// Error covariance structure assumed by FGLS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FglsErrorModel {
    /// Entity-specific variances, no serial correlation.
    GroupwiseHet,
    /// Entity-specific variances plus one common AR(1) coefficient.
    GroupwiseHetAr1,
}

/// Iteration controls; the defaults implement the documented contract.
#[derive(Debug, Clone, Copy)]
pub struct FglsOptions {
    pub error_model: FglsErrorModel,
    pub max_iterations: usize,
    /// Relative coefficient-change threshold declaring convergence.
    pub tol: f64,
}

impl FglsOptions {
    pub fn new(error_model: FglsErrorModel) -> Self {
        FglsOptions {
            error_model,
            max_iterations: 50,
            tol: 1e-8,
        }
    }
}

/// Converged weighting details, exposed for oracle verification.
#[derive(Debug, Clone)]
pub struct FglsDetails {
    /// Entity-specific variance used in the final GLS solve, one per used
    /// entity in entity order.
    pub sigma_i2: Vec<f64>,
    pub rho: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Iterated FGLS with default iteration controls.
pub fn fgls(
    panel: &PanelDataset,
    spec: &ModelSpec,
    error_model: FglsErrorModel,
) -> Result<EstimationResult> {
    fgls_full(panel, spec, FglsOptions::new(error_model)).map(|(r, _)| r)
}

/// Iterated FGLS returning both the result and the final weighting details.
pub fn fgls_full(
    panel: &PanelDataset,
    spec: &ModelSpec,
    options: FglsOptions,
) -> Result<(EstimationResult, FglsDetails)> {
    let design = build_design(panel, spec, DesignOptions::default())?;
    let groups = design.rows_by_entity();

    if options.error_model == FglsErrorModel::GroupwiseHetAr1 {
        let small: Vec<String> = groups
            .iter()
            .filter(|rows| rows.len() < 3)
            .map(|rows| panel.entities()[design.entity_of_row[rows[0]]].clone())
            .collect();
        if !small.is_empty() {
            return Err(Error::validation(format!(
                "AR(1) error model needs at least 3 observations per entity; too few for: {}",
                small.join(", ")
            )));
        }
    }

    // Start from pooled OLS.
    let start = lstsq(&design.x, &design.y)?;
    if start.rank < design.k() {
        let cols: Vec<&str> = start
            .dependent_cols
            .iter()
            .map(|&j| design.names[j].as_str())
            .collect();
        return Err(Error::validation(format!(
            "design matrix is rank-deficient; linearly dependent columns: {}",
            cols.join(", ")
        )));
    }
    let mut beta = start.beta;
    let mut notes = design.notes.clone();
    let mut converged = false;
    let mut iterations = 0;
    let mut sigma_i2: Vec<f64> = vec![1.0; groups.len()];
    let mut rho: Option<f64> = None;
    let mut rho_clamped = false;

    for iter in 1..=options.max_iterations {
        iterations = iter;
        let resid = &design.y - &design.x * &beta;
        // Entity variances from current residuals.
        let overall: f64 =
            resid.iter().map(|e| e * e).sum::<f64>() / design.n() as f64;
        for (g, rows) in groups.iter().enumerate() {
            let s: f64 =
                rows.iter().map(|&r| resid[r] * resid[r]).sum::<f64>() / rows.len() as f64;
            // Floor protects against a perfectly fitted entity producing a
            // singular weight.
            sigma_i2[g] = s.max(overall * 1e-12).max(1e-300);
        }
        // Common AR(1) coefficient from consecutive-period residual pairs.
        if options.error_model == FglsErrorModel::GroupwiseHetAr1 {
            let mut num = 0.0;
            let mut den = 0.0;
            for rows in &groups {
                for w in rows.windows(2) {
                    let (r0, r1) = (w[0], w[1]);
                    let gap = design.rows[r1].1 as i64 - design.rows[r0].1 as i64;
                    if gap == 1 {
                        num += resid[r1] * resid[r0];
                        den += resid[r0] * resid[r0];
                    }
                }
            }
            let mut r = if den > 0.0 { num / den } else { 0.0 };
            if r.abs() >= 1.0 {
                r = r.signum() * 0.99;
                rho_clamped = true;
            }
            rho = Some(r);
        }

        let (new_beta, _cov) = gls_solve(&design, &groups, &sigma_i2, rho)?;
        let max_change = (0..new_beta.len())
            .map(|j| (new_beta[j] - beta[j]).abs() / (1.0 + beta[j].abs()))
            .fold(0.0_f64, f64::max);
        beta = new_beta;
        if max_change < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        notes.push(format!(
            "FGLS did not converge within {} iterations",
            options.max_iterations
        ));
    }
    if rho_clamped {
        notes.push("AR(1) coefficient estimate reached |rho| >= 1 and was clamped to 0.99".into());
    }

    let (beta, cov) = gls_solve(&design, &groups, &sigma_i2, rho)?;
    let fitted = &design.x * &beta;
    let resid: Vec<f64> = (0..design.n()).map(|r| design.y[r] - fitted[r]).collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();

    let mut result = EstimationResult {
        method: Method::Fgls,
        coef_names: design.names.clone(),
        coefficients: beta,
        covariance: cov,
        std_errors: vec![],
        stats: vec![],
        p_values: vec![],
        n_obs: design.n(),
        n_entities: groups.len(),
        fit: FitStats::default(),
        rows: design.rows.clone(),
        residuals: resid,
        fitted: fitted.iter().cloned().collect(),
        ssr,
        auxiliary: Auxiliary::Fgls {
            converged,
            iterations,
            rho,
        },
        notes,
    };
    result.compute_inference(CoefInference::Z);
    attach_wald(&mut result);
    Ok((
        result,
        FglsDetails {
            sigma_i2,
            rho,
            converged,
            iterations,
        },
    ))
}

/// One GLS solve for given entity variances and optional AR(1) coefficient.
///
/// The AR(1) correlation between two rows of the same entity is
/// rho^|period gap|, so panels with interior gaps are handled by distance,
/// not adjacency. Exposed within the crate as the injection point for
/// oracle tests.
pub(crate) fn gls_solve(
    design: &Design,
    groups: &[Vec<usize>],
    sigma_i2: &[f64],
    rho: Option<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = design.k();
    let mut m = DMatrix::zeros(k, k);
    let mut v = DVector::zeros(k);
    for (g, rows) in groups.iter().enumerate() {
        let t_i = rows.len();
        let mut omega = DMatrix::zeros(t_i, t_i);
        for a in 0..t_i {
            for b in 0..t_i {
                let corr = match rho {
                    Some(r) => {
                        let gap = (design.rows[rows[a]].1 as i64
                            - design.rows[rows[b]].1 as i64)
                            .unsigned_abs() as i32;
                        r.powi(gap)
                    }
                    None => {
                        if a == b {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                omega[(a, b)] = sigma_i2[g] * corr;
            }
        }
        let omega_inv = inv_spd(&omega, "entity error covariance")?;
        let mut xi = DMatrix::zeros(t_i, k);
        let mut yi = DVector::zeros(t_i);
        for (a, &r) in rows.iter().enumerate() {
            yi[a] = design.y[r];
            for c in 0..k {
                xi[(a, c)] = design.x[(r, c)];
            }
        }
        let xo = xi.transpose() * &omega_inv;
        m += &xo * &xi;
        v += &xo * &yi;
    }
    let minv = inv_spd(&m, "GLS normal matrix")?;
    let beta = &minv * v;
    let mut cov = minv;
    symmetrize(&mut cov);
    Ok((beta, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::pols::pooled_ols;

    fn noisy_panel() -> PanelDataset {
        let mut p = PanelDataset::new(
            (0..4).map(|i| format!("e{i}")).collect(),
            0,
            7,
        )
        .unwrap();
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for i in 0..4 {
            for t in 0..7 {
                let x = t as f64 * 0.4 + ((i * 7 + t) * 11 % 13) as f64 * 0.3;
                let noise = (((i * 7 + t) * 29 % 23) as f64 - 11.0) * 0.07;
                xs.push(Some(x));
                ys.push(Some(2.0 - 0.6 * x + noise));
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        p
    }

    #[test]
    fn equal_injected_variances_reproduce_ols() {
        let p = noisy_panel();
        let spec = ModelSpec::static_spec("y", &["x"]);
        let design = build_design(&p, &spec, DesignOptions::default()).unwrap();
        let groups = design.rows_by_entity();
        let sigma = vec![3.7; groups.len()];
        let (beta, _) = gls_solve(&design, &groups, &sigma, None).unwrap();
        let pols = pooled_ols(&p, &spec).unwrap();
        for j in 0..2 {
            assert!((beta[j] - pols.coefficients[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn het_weights_match_scaled_ols() {
        let p = noisy_panel();
        let spec = ModelSpec::static_spec("y", &["x"]);
        let (result, details) = fgls_full(
            &p,
            &spec,
            FglsOptions::new(FglsErrorModel::GroupwiseHet),
        )
        .unwrap();
        assert!(details.converged);
        // Independent weighted regression: scale each row by 1/sigma_i.
        let design = build_design(&p, &spec, DesignOptions::default()).unwrap();
        let groups = design.rows_by_entity();
        let mut xs = design.x.clone();
        let mut ys = design.y.clone();
        for (g, rows) in groups.iter().enumerate() {
            let w = 1.0 / details.sigma_i2[g].sqrt();
            for &r in rows {
                ys[r] *= w;
                for c in 0..design.k() {
                    xs[(r, c)] *= w;
                }
            }
        }
        let oracle = lstsq(&xs, &ys).unwrap();
        for j in 0..2 {
            assert!(
                (result.coefficients[j] - oracle.beta[j]).abs() < 1e-9,
                "coefficient {j}"
            );
        }
    }

    #[test]
    fn ar1_needs_three_obs_per_entity() {
        let mut p = PanelDataset::new(vec!["a".into(), "b".into()], 0, 4).unwrap();
        p.add_series(
            "Y",
            vec![
                Some(1.0),
                Some(2.0),
                Some(3.0),
                Some(4.0),
                Some(1.0),
                Some(2.0),
                None,
                None,
            ],
        )
        .unwrap();
        p.add_series("X", vec![Some(1.0); 8].into_iter().map(|v| v).collect())
            .unwrap();
        let spec = ModelSpec {
            dependent: "y".into(),
            dep_lag_order: 0,
            regressors: vec![],
            include_intercept: true,
            instrument_directives: vec![],
        };
        let err = fgls(&p, &spec, FglsErrorModel::GroupwiseHetAr1).unwrap_err();
        assert!(err.to_string().contains("at least 3"), "{err}");
        let _ = spec;
    }

    #[test]
    fn ar1_model_estimates_rho() {
        // Strongly autocorrelated residual pattern.
        let mut p = PanelDataset::new(
            (0..3).map(|i| format!("e{i}")).collect(),
            0,
            10,
        )
        .unwrap();
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for i in 0..3 {
            let mut e = 0.0;
            for t in 0..10 {
                let shock = (((i * 10 + t) * 17 % 19) as f64 - 9.0) / 9.0;
                e = 0.8 * e + shock * 0.2;
                let x = t as f64 * 0.3 + i as f64;
                xs.push(Some(x));
                ys.push(Some(1.0 + 0.5 * x + e));
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        let (result, details) = fgls_full(
            &p,
            &ModelSpec::static_spec("y", &["x"]),
            FglsOptions::new(FglsErrorModel::GroupwiseHetAr1),
        )
        .unwrap();
        let rho = details.rho.unwrap();
        assert!(rho > 0.2, "expected positive serial correlation, got {rho}");
        assert!(rho.abs() <= 0.99);
        assert!(result.fit.wald_chi2.is_some());
    }
}

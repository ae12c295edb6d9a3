//! Random-effects GLS with Swamy–Arora variance components.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::design::{build_design, Design, DesignOptions};
use crate::estimators::pols::attach_wald;
use crate::linalg::{inv_spd, lstsq, symmetrize};
use crate::model::{
    Auxiliary, CoefInference, EstimationResult, FitStats, Method, ModelSpec,
};
use crate::panel::PanelDataset;

/// Quasi-demeaning weight for an entity observed `t_i` periods:
/// theta_i = 1 - sqrt(sigma_e2 / (t_i * sigma_v2 + sigma_e2)).
pub(crate) fn theta_weight(sigma_e2: f64, sigma_v2: f64, t_i: usize) -> f64 {
    1.0 - (sigma_e2 / (t_i as f64 * sigma_v2 + sigma_e2)).sqrt()
}

/// GLS on quasi-demeaned data for given variance components.
///
/// Returns coefficients, covariance sigma_e2 (X*'X*)^-1, per-row residuals on
/// the ORIGINAL scale (y - X b), fitted values, and the transformed-scale SSR.
pub(crate) fn gls_with_components(
    design: &Design,
    sigma_e2: f64,
    sigma_v2: f64,
) -> Result<(DVector<f64>, DMatrix<f64>, Vec<f64>, Vec<f64>, f64)> {
    let n = design.n();
    let k = design.k();
    let groups = design.rows_by_entity();
    let mut ys = design.y.clone();
    let mut xs = design.x.clone();
    for rows in &groups {
        let t_i = rows.len();
        let theta = theta_weight(sigma_e2, sigma_v2, t_i);
        let m = t_i as f64;
        let ymean: f64 = rows.iter().map(|&r| design.y[r]).sum::<f64>() / m;
        for &r in rows {
            ys[r] -= theta * ymean;
        }
        for c in 0..k {
            let xmean: f64 = rows.iter().map(|&r| design.x[(r, c)]).sum::<f64>() / m;
            for &r in rows {
                xs[(r, c)] -= theta * xmean;
            }
        }
    }
    let sol = lstsq(&xs, &ys)?;
    if sol.rank < k {
        let cols: Vec<&str> = sol
            .dependent_cols
            .iter()
            .map(|&j| design.names[j].as_str())
            .collect();
        return Err(Error::validation(format!(
            "quasi-demeaned design is rank-deficient; dependent columns: {}",
            cols.join(", ")
        )));
    }
    let resid_t = &ys - &xs * &sol.beta;
    let ssr_t: f64 = resid_t.iter().map(|e| e * e).sum();
    let xtx = xs.transpose() * &xs;
    let mut cov = inv_spd(&xtx, "transformed X'X")? * sigma_e2;
    symmetrize(&mut cov);
    let fitted = &design.x * &sol.beta;
    let resid: Vec<f64> = (0..n).map(|r| design.y[r] - fitted[r]).collect();
    Ok((
        sol.beta,
        cov,
        resid,
        fitted.iter().cloned().collect(),
        ssr_t,
    ))
}

/// Swamy–Arora random-effects estimator.
///
/// sigma_e2 comes from the within regression; sigma_v2 backs out of the
/// between regression using the harmonic mean of entity sizes and is floored
/// at zero (with a note) when the estimate turns negative.
pub fn random_effects(panel: &PanelDataset, spec: &ModelSpec) -> Result<EstimationResult> {
    if !spec.include_intercept {
        return Err(Error::validation(
            "random effects requires an intercept in the specification",
        ));
    }
    let design = build_design(
        panel,
        spec,
        DesignOptions {
            period_dummies: false,
            min_entity_obs: 2,
        },
    )?;
    let n = design.n();
    let k = design.k();
    let k_slopes = design.k_slopes();
    let n_ent = design.entities_used.len();
    let groups = design.rows_by_entity();

    // Within stage for sigma_e2 (intercept column demeans to zero; use the
    // slope columns only).
    let dof_within = n as f64 - n_ent as f64 - k_slopes as f64;
    if dof_within <= 0.0 {
        return Err(Error::validation(
            "not enough observations for the within variance component",
        ));
    }
    let mut yd = design.y.clone();
    let mut xd = DMatrix::zeros(n, k_slopes);
    for (c, src) in (1..k).enumerate() {
        for r in 0..n {
            xd[(r, c)] = design.x[(r, src)];
        }
    }
    for rows in &groups {
        let m = rows.len() as f64;
        let ymean: f64 = rows.iter().map(|&r| design.y[r]).sum::<f64>() / m;
        for &r in rows {
            yd[r] -= ymean;
        }
        for c in 0..k_slopes {
            let xmean: f64 = rows.iter().map(|&r| xd[(r, c)]).sum::<f64>() / m;
            for &r in rows {
                xd[(r, c)] -= xmean;
            }
        }
    }
    let wsol = lstsq(&xd, &yd)?;
    let wres = &yd - &xd * &wsol.beta;
    let ssr_w: f64 = wres.iter().map(|e| e * e).sum();
    let sigma_e2 = ssr_w / dof_within;

    // Between stage on entity means.
    if n_ent as f64 - k as f64 <= 0.0 {
        return Err(Error::validation(
            "not enough entities for the between variance component",
        ));
    }
    let mut yb = DVector::zeros(n_ent);
    let mut xb = DMatrix::zeros(n_ent, k);
    let mut t_sizes = Vec::with_capacity(n_ent);
    for (g, rows) in groups.iter().enumerate() {
        let m = rows.len() as f64;
        t_sizes.push(rows.len());
        yb[g] = rows.iter().map(|&r| design.y[r]).sum::<f64>() / m;
        for c in 0..k {
            xb[(g, c)] = rows.iter().map(|&r| design.x[(r, c)]).sum::<f64>() / m;
        }
    }
    let bsol = lstsq(&xb, &yb)?;
    let bres = &yb - &xb * &bsol.beta;
    let ssr_b: f64 = bres.iter().map(|e| e * e).sum();
    let t_harmonic = n_ent as f64 / t_sizes.iter().map(|&t| 1.0 / t as f64).sum::<f64>();
    let between_var = ssr_b / (n_ent as f64 - k as f64);
    let raw_v2 = between_var - sigma_e2 / t_harmonic;
    let floored = raw_v2 < 0.0;
    let sigma_v2 = raw_v2.max(0.0);

    let (beta, cov, resid, fitted, ssr_t) = gls_with_components(&design, sigma_e2, sigma_v2)?;

    let thetas: Vec<f64> = t_sizes
        .iter()
        .map(|&t| theta_weight(sigma_e2, sigma_v2, t))
        .collect();
    let theta_range = (
        thetas.iter().cloned().fold(f64::INFINITY, f64::min),
        thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );

    let mut notes = design.notes.clone();
    if floored {
        notes.push(
            "between variance component was negative and has been floored at zero; \
             random effects coincides with pooled OLS"
                .to_string(),
        );
    }

    let mut result = EstimationResult {
        method: Method::RandomEffects,
        coef_names: design.names.clone(),
        coefficients: beta,
        covariance: cov,
        std_errors: vec![],
        stats: vec![],
        p_values: vec![],
        n_obs: n,
        n_entities: n_ent,
        fit: FitStats::default(),
        rows: design.rows.clone(),
        residuals: resid,
        fitted,
        ssr: ssr_t,
        auxiliary: Auxiliary::RandomEffects {
            sigma_e2,
            sigma_v2,
            theta_range,
            floored,
        },
        notes,
    };
    result.compute_inference(CoefInference::Z);
    attach_wald(&mut result);
    Ok(result)
}

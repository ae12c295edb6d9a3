//! Fixed-effects (within) estimator and the pooled-vs-FE poolability F-test.

use nalgebra::DMatrix;

use crate::dist::{f_sf, Distribution};
use crate::error::{Error, Result};
use crate::estimators::design::{build_design, Design, DesignOptions};
use crate::linalg::{inv_spd, lstsq, symmetrize};
use crate::model::{
    Auxiliary, CoefInference, EstimationResult, FStat, FitStats, Method, ModelSpec, TestResult,
};
use crate::panel::PanelDataset;

/// Entity-demeaned (within) regression.
///
/// Degrees of freedom are n - N - k. Entities with fewer than two usable
/// rows are dropped with a warning; `period_fixed` adds period indicator
/// columns (base period omitted). The reported R-squared is the within
/// R-squared of the demeaned regression.
pub fn fixed_effects(
    panel: &PanelDataset,
    spec: &ModelSpec,
    period_fixed: bool,
) -> Result<EstimationResult> {
    if spec.include_intercept {
        // The intercept is absorbed by the entity means; build the design
        // without it so the demeaned matrix keeps full rank.
        let mut s = spec.clone();
        s.include_intercept = false;
        return fixed_effects(panel, &s, period_fixed);
    }
    let design = build_design(
        panel,
        spec,
        DesignOptions {
            period_dummies: period_fixed,
            min_entity_obs: 2,
        },
    )?;
    within_on_design(&design)
}

fn within_on_design(design: &Design) -> Result<EstimationResult> {
    let n = design.n();
    let k = design.k();
    let n_ent = design.entities_used.len();
    if n <= n_ent + k {
        return Err(Error::validation(format!(
            "{n} observations cannot support {n_ent} entity effects and {k} coefficients"
        )));
    }

    // Demean y and X by entity.
    let groups = design.rows_by_entity();
    let mut yd = design.y.clone();
    let mut xd = design.x.clone();
    for rows in &groups {
        let m = rows.len() as f64;
        let ymean: f64 = rows.iter().map(|&r| design.y[r]).sum::<f64>() / m;
        for &r in rows {
            yd[r] -= ymean;
        }
        for c in 0..k {
            let xmean: f64 = rows.iter().map(|&r| design.x[(r, c)]).sum::<f64>() / m;
            for &r in rows {
                xd[(r, c)] -= xmean;
            }
        }
    }

    let sol = lstsq(&xd, &yd)?;
    if sol.rank < k {
        let cols: Vec<&str> = sol
            .dependent_cols
            .iter()
            .map(|&j| design.names[j].as_str())
            .collect();
        return Err(Error::validation(format!(
            "within-transformed design is rank-deficient; dependent columns: {}",
            cols.join(", ")
        )));
    }
    let fitted_w = &xd * &sol.beta;
    let resid = &yd - &fitted_w;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let dof = (n - n_ent - k) as f64;
    let sigma2 = ssr / dof;
    let xtx = xd.transpose() * &xd;
    let mut cov = inv_spd(&xtx, "within X'X")? * sigma2;
    symmetrize(&mut cov);

    // Within R-squared.
    let sst: f64 = yd.iter().map(|v| v * v).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };

    let f_stat = if k > 0 && sst > 0.0 {
        let f = ((sst - ssr).max(0.0) / k as f64) / (ssr / dof);
        Some(FStat {
            stat: f,
            df1: k as f64,
            df2: dof,
            p: f_sf(f, k as f64, dof),
        })
    } else {
        None
    };

    let mut result = EstimationResult {
        method: Method::FixedEffects,
        coef_names: design.names.clone(),
        coefficients: sol.beta,
        covariance: cov,
        std_errors: vec![],
        stats: vec![],
        p_values: vec![],
        n_obs: n,
        n_entities: n_ent,
        fit: FitStats {
            r_squared: Some(r2),
            f_stat,
            wald_chi2: None,
        },
        rows: design.rows.clone(),
        residuals: resid.iter().cloned().collect(),
        fitted: fitted_w.iter().cloned().collect(),
        ssr,
        auxiliary: Auxiliary::None,
        notes: design.notes.clone(),
    };
    result.compute_inference(CoefInference::T { dof });
    Ok(result)
}

/// Per-entity intercepts implied by a fitted within regression:
/// alpha_i = mean(y_i) - mean(x_i)' beta.
pub fn entity_intercepts(
    panel: &PanelDataset,
    spec: &ModelSpec,
    result: &EstimationResult,
) -> Result<Vec<(String, f64)>> {
    let mut s = spec.clone();
    s.include_intercept = false;
    let design = build_design(
        panel,
        &s,
        DesignOptions {
            // Reproduce the estimation sample: the same dummies and drops.
            period_dummies: result
                .coef_names
                .iter()
                .any(|n| n.starts_with(crate::estimators::design::PERIOD_DUMMY_PREFIX)),
            min_entity_obs: 2,
        },
    )?;
    if design.rows != result.rows {
        return Err(Error::validation(
            "estimation sample does not match the supplied panel/spec",
        ));
    }
    let groups = design.rows_by_entity();
    let mut out = Vec::with_capacity(groups.len());
    for (gi, rows) in groups.iter().enumerate() {
        let m = rows.len() as f64;
        let ymean: f64 = rows.iter().map(|&r| design.y[r]).sum::<f64>() / m;
        let mut xb = 0.0;
        for c in 0..design.k() {
            let xmean: f64 = rows.iter().map(|&r| design.x[(r, c)]).sum::<f64>() / m;
            xb += xmean * result.coefficients[c];
        }
        let entity = design.entities_used[gi];
        out.push((panel.entities()[entity].clone(), ymean - xb));
    }
    Ok(out)
}

/// Poolability F-test of pooled OLS against fixed effects:
/// F = ((SSR_pols - SSR_fe)/(N-1)) / (SSR_fe/(n-N-k)), F(N-1, n-N-k).
///
/// Both results must come from the identical specification and sample.
pub fn f_test_pooled_vs_fe(
    pols: &EstimationResult,
    fe: &EstimationResult,
) -> Result<TestResult> {
    if pols.method != Method::PooledOls || fe.method != Method::FixedEffects {
        return Err(Error::validation(
            "f_test_pooled_vs_fe needs a pooled OLS result and a fixed-effects result",
        ));
    }
    if pols.rows != fe.rows {
        return Err(Error::validation(
            "pooled and fixed-effects results were estimated on different samples",
        ));
    }
    let n = fe.n_obs as f64;
    let n_ent = fe.n_entities as f64;
    // Slopes in the FE regression (no intercept there); the pooled model has
    // the same slopes plus an intercept.
    let k = fe.coefficients.len() as f64;
    let df1 = n_ent - 1.0;
    let df2 = n - n_ent - k;
    if df1 <= 0.0 || df2 <= 0.0 {
        return Err(Error::validation("not enough entities/observations for the F-test"));
    }
    let num = ((pols.ssr - fe.ssr).max(0.0)) / df1;
    let den = fe.ssr / df2;
    let f = if den > 0.0 { num / den } else { 0.0 };
    Ok(TestResult::upper_tail(
        "F test of entity effects (pooled OLS vs fixed effects)",
        f,
        Distribution::F { df1, df2 },
        "all entity intercepts are equal (no heterogeneity)",
        0.01,
    ))
}

/// LSDV estimate used as an oracle in tests: pooled OLS on entity dummies.
/// Exposed for integration tests; not part of the user-facing cascade.
pub fn lsdv(
    panel: &PanelDataset,
    spec: &ModelSpec,
) -> Result<EstimationResult> {
    let mut s = spec.clone();
    s.include_intercept = false;
    let design = build_design(
        panel,
        &s,
        DesignOptions {
            period_dummies: false,
            min_entity_obs: 2,
        },
    )?;
    let n = design.n();
    let k = design.k();
    let n_ent = design.entities_used.len();
    let mut x = DMatrix::zeros(n, k + n_ent);
    let mut names = Vec::with_capacity(k + n_ent);
    for c in 0..k {
        for r in 0..n {
            x[(r, c)] = design.x[(r, c)];
        }
        names.push(design.names[c].clone());
    }
    for (gi, rows) in design.rows_by_entity().iter().enumerate() {
        for &r in rows {
            x[(r, k + gi)] = 1.0;
        }
        names.push(format!("entity_{gi}"));
    }
    let sol = lstsq(&x, &design.y)?;
    let fitted = &x * &sol.beta;
    let resid = &design.y - &fitted;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let dof = (n - k - n_ent) as f64;
    let sigma2 = ssr / dof;
    let xtx = x.transpose() * &x;
    let mut cov = inv_spd(&xtx, "LSDV X'X")? * sigma2;
    symmetrize(&mut cov);
    let mut result = EstimationResult {
        method: Method::FixedEffects,
        coef_names: names,
        coefficients: sol.beta,
        covariance: cov,
        std_errors: vec![],
        stats: vec![],
        p_values: vec![],
        n_obs: n,
        n_entities: n_ent,
        fit: FitStats::default(),
        rows: design.rows.clone(),
        residuals: resid.iter().cloned().collect(),
        fitted: fitted.iter().cloned().collect(),
        ssr,
        auxiliary: Auxiliary::None,
        notes: vec![],
    };
    result.compute_inference(CoefInference::T { dof });
    Ok(result)
}

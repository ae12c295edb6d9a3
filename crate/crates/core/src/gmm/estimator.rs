//! One-step difference GMM and its validity tests.
//!
//! The estimator works on the first-differenced equation with the fixed
//! tridiagonal weighting H (2 on the diagonal, −1 between observations one
//! period apart): A = (Σ_i Z_i'H_iZ_i)⁻¹ and
//! β̂ = (X'ZAZ'X)⁻¹ X'ZAZ'Δy. The attached tests are the Sargan
//! over-identification statistic, the Arellano–Bond serial-correlation
//! m-statistic, and the difference-in-Sargan comparison for instrument
//! subsets.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::estimators::pols::attach_wald;
use crate::linalg::{dependent_columns, symmetrize};
use crate::model::{
    Auxiliary, CoefInference, EstimationResult, FitStats, Method, ModelSpec, TestResult,
};
use crate::panel::PanelDataset;

use super::instruments::{build_instrument_matrix, DepthOption, InstrumentPlan, PlanOptions};

/// Which instrument directives a difference-in-Sargan comparison removes.
#[derive(Debug, Clone)]
pub enum SubsetSelector {
    /// Every iv-style directive marked differenced (the "D.(...)" group).
    DifferencedIv,
    /// Explicit positions within the plan's effective directive list.
    Indices(Vec<usize>),
}

/// A fitted one-step difference GMM model plus the pieces its tests reuse.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub result: EstimationResult,
    pub plan: InstrumentPlan,
    pub spec: ModelSpec,
    pub options: PlanOptions,
    pub robust: bool,
    /// Stacked differenced regressors, dependent lags first.
    pub x: DMatrix<f64>,
    /// Stacked differenced dependent variable.
    pub y: DVector<f64>,
    /// Differenced residuals, aligned with `plan.rows`.
    pub residuals: DVector<f64>,
    /// One-step weighting matrix (Σ_i Z_i'H_iZ_i)⁻¹.
    pub a: DMatrix<f64>,
    /// (X'ZAZ'X)⁻¹.
    pub m_inv: DMatrix<f64>,
    /// X'Z, kept for the serial-correlation variance terms.
    pub xz: DMatrix<f64>,
    /// Residual variance estimate Δε̂'Δε̂ / (2(n − k)).
    pub sigma2: f64,
    /// (entity, start, end) half-open row ranges into the stacked sample.
    pub entity_ranges: Vec<(usize, usize, usize)>,
}

/// First-difference weighting matrix for one entity's differenced periods:
/// 2 on the diagonal, −1 where two observations are one period apart, 0
/// across gaps. Symmetric, tridiagonal (in period order), positive definite.
pub(crate) fn h_matrix(periods: &[usize]) -> DMatrix<f64> {
    let m = periods.len();
    DMatrix::from_fn(m, m, |a, b| {
        if a == b {
            2.0
        } else if periods[a].abs_diff(periods[b]) == 1 {
            -1.0
        } else {
            0.0
        }
    })
}

fn entity_ranges(rows: &[(usize, usize)]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for r in 1..=rows.len() {
        if r == rows.len() || rows[r].0 != rows[start].0 {
            out.push((rows[start].0, start, r));
            start = r;
        }
    }
    out
}

/// Invert a moment matrix, naming the dependent columns on failure.
fn invert_moment(m: &DMatrix<f64>, labels: &[String], what: &str) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.inverse());
    }
    if let Some(inv) = m.clone().try_inverse() {
        return Ok(inv);
    }
    let deps = dependent_columns(m);
    let names: Vec<&str> = deps
        .iter()
        .filter_map(|&j| labels.get(j).map(String::as_str))
        .collect();
    Err(Error::numerical(format!(
        "{what} is singular (dependent columns: {}); consider collapsing instrument \
         blocks or reducing the maximum lag depth",
        names.join(", ")
    )))
}

/// Build the instrument plan and estimate in one call.
pub fn estimate_one_step(
    panel: &PanelDataset,
    spec: &ModelSpec,
    options: &PlanOptions,
    robust: bool,
) -> Result<GmmFit> {
    let plan = build_instrument_matrix(panel, spec, options)?;
    estimate_with_plan(panel, spec, plan, options, robust)
}

/// Estimate the one-step difference GMM model on an already-built plan.
pub fn estimate_with_plan(
    panel: &PanelDataset,
    spec: &ModelSpec,
    plan: InstrumentPlan,
    options: &PlanOptions,
    robust: bool,
) -> Result<GmmFit> {
    let dep = panel.series_index(&spec.dependent)?;
    let regs: Vec<usize> = spec
        .regressors
        .iter()
        .map(|r| panel.series_index(r))
        .collect::<Result<_>>()?;
    let p = spec.dep_lag_order;
    let n = plan.rows.len();
    let k = p + regs.len();
    if n <= k {
        return Err(Error::validation(format!(
            "degrees of freedom exhausted: {n} differenced observations for {k} parameters"
        )));
    }

    let mut names = Vec::with_capacity(k);
    for j in 1..=p {
        names.push(if j == 1 {
            format!("L.{}", spec.dependent)
        } else {
            format!("L{j}.{}", spec.dependent)
        });
    }
    names.extend(spec.regressors.iter().cloned());

    let need = |s: usize, i: usize, t: usize| -> Result<f64> {
        panel.value(s, i, t).ok_or_else(|| {
            Error::validation(
                "instrument plan does not align with the panel: a required cell is missing",
            )
        })
    };
    let mut x = DMatrix::zeros(n, k);
    let mut yv = DVector::zeros(n);
    for (r, &(i, t)) in plan.rows.iter().enumerate() {
        yv[r] = need(dep, i, t)? - need(dep, i, t - 1)?;
        for j in 1..=p {
            x[(r, j - 1)] = need(dep, i, t - j)? - need(dep, i, t - j - 1)?;
        }
        for (c, &s) in regs.iter().enumerate() {
            x[(r, p + c)] = need(s, i, t)? - need(s, i, t - 1)?;
        }
    }

    let ranges = entity_ranges(&plan.rows);
    let l = plan.z.ncols();
    let mut s_zhz = DMatrix::zeros(l, l);
    for &(_, a, b) in &ranges {
        let zi = plan.z.rows(a, b - a);
        let periods: Vec<usize> = plan.rows[a..b].iter().map(|&(_, t)| t).collect();
        let h = h_matrix(&periods);
        s_zhz += zi.transpose() * h * zi;
    }
    symmetrize(&mut s_zhz);
    let a_mat = invert_moment(&s_zhz, &plan.column_labels, "the instrument moment matrix Z'HZ")?;

    let xz = x.transpose() * &plan.z;
    let zy = plan.z.transpose() * &yv;
    let mut m_mat = &xz * &a_mat * xz.transpose();
    symmetrize(&mut m_mat);
    let m_inv = invert_moment(&m_mat, &names, "the GMM moment matrix X'ZAZ'X")?;
    let beta = &m_inv * (&xz * (&a_mat * &zy));

    let fitted = &x * &beta;
    let resid = &yv - &fitted;
    let ssr = resid.dot(&resid);
    let sigma2 = ssr / (2.0 * (n - k) as f64);

    let mut cov = if robust {
        let mut b_mat = DMatrix::zeros(l, l);
        for &(_, a, b) in &ranges {
            let zi = plan.z.rows(a, b - a);
            let ei = resid.rows(a, b - a);
            let zie = zi.transpose() * ei;
            b_mat += &zie * zie.transpose();
        }
        &m_inv * (&xz * &a_mat * b_mat * &a_mat * xz.transpose()) * &m_inv
    } else {
        &m_inv * sigma2
    };
    symmetrize(&mut cov);

    let mut result = EstimationResult {
        method: Method::DiffGmm,
        coef_names: names,
        coefficients: beta,
        covariance: cov,
        std_errors: Vec::new(),
        stats: Vec::new(),
        p_values: Vec::new(),
        n_obs: n,
        n_entities: plan.group_count,
        fit: FitStats::default(),
        rows: plan.rows.clone(),
        residuals: resid.iter().cloned().collect(),
        fitted: fitted.iter().cloned().collect(),
        ssr,
        auxiliary: Auxiliary::Gmm {
            instrument_count: l,
            group_count: plan.group_count,
            robust,
        },
        notes: plan.notes.clone(),
    };
    result.compute_inference(CoefInference::Z);
    attach_wald(&mut result);

    Ok(GmmFit {
        result,
        plan,
        spec: spec.clone(),
        options: *options,
        robust,
        x,
        y: yv,
        residuals: resid,
        a: a_mat,
        m_inv,
        xz,
        sigma2,
        entity_ranges: ranges,
    })
}

fn undefined_test(
    name: impl Into<String>,
    distribution: Distribution,
    h0: impl Into<String>,
    reason: &str,
) -> TestResult {
    TestResult {
        name: name.into(),
        statistic: f64::NAN,
        distribution,
        p_value: f64::NAN,
        h0: h0.into(),
        decision: format!("undefined: {reason}"),
        notes: Vec::new(),
    }
}

impl GmmFit {
    fn sargan_value(&self) -> f64 {
        let ze = self.plan.z.transpose() * &self.residuals;
        (ze.transpose() * &self.a * &ze)[(0, 0)] / self.sigma2
    }

    fn sargan_df(&self) -> usize {
        self.plan.column_count() - self.x.ncols()
    }

    /// Sargan over-identification test from the non-robust one-step fit.
    pub fn sargan(&self) -> TestResult {
        let name = "Sargan test of overidentifying restrictions";
        let h0 = "the instruments are valid (uncorrelated with the differenced error)";
        if self.sargan_df() == 0 {
            return undefined_test(
                name,
                Distribution::ChiSquare { df: 0.0 },
                h0,
                "exactly identified model (instrument count equals parameter count)",
            );
        }
        let df = self.sargan_df() as f64;
        TestResult::upper_tail(
            name,
            self.sargan_value(),
            Distribution::ChiSquare { df },
            h0,
            0.05,
        )
    }

    /// Arellano–Bond m-statistic for residual autocorrelation of the given
    /// order in first differences, asymptotically standard normal.
    pub fn ar_test(&self, order: usize) -> TestResult {
        let name = format!("Arellano-Bond test for AR({order}) in first differences");
        let h0 = format!("no order-{order} autocorrelation in the differenced residuals");
        let n = self.plan.rows.len();
        let index: HashMap<(usize, usize), usize> = self
            .plan
            .rows
            .iter()
            .enumerate()
            .map(|(r, &key)| (key, r))
            .collect();
        let mut w = DVector::zeros(n);
        let mut overlap = 0usize;
        for (r, &(i, t)) in self.plan.rows.iter().enumerate() {
            if t >= order {
                if let Some(&rl) = index.get(&(i, t - order)) {
                    w[r] = self.residuals[rl];
                    overlap += 1;
                }
            }
        }
        if overlap == 0 {
            return undefined_test(
                &name,
                Distribution::Normal,
                &h0,
                "no overlapping residual pairs at this lag order",
            );
        }
        let num = w.dot(&self.residuals);
        // Variance: own term, projection cross-term, coefficient-covariance term.
        let l = self.plan.column_count();
        let mut s1 = 0.0;
        let mut zew = DVector::zeros(l);
        for &(_, a, b) in &self.entity_ranges {
            let wi = w.rows(a, b - a);
            let ei = self.residuals.rows(a, b - a);
            let wie = wi.dot(&ei);
            s1 += wie * wie;
            let zi = self.plan.z.rows(a, b - a);
            zew += zi.transpose() * ei * wie;
        }
        let xw = self.x.transpose() * &w;
        let s2 = (xw.transpose() * &self.m_inv * &self.xz * &self.a * &zew)[(0, 0)];
        let s3 = (xw.transpose() * &self.result.covariance * &xw)[(0, 0)];
        let var = s1 - 2.0 * s2 + s3;
        if var <= 0.0 || !var.is_finite() {
            return undefined_test(
                &name,
                Distribution::Normal,
                &h0,
                "non-positive variance estimate for the m-statistic",
            );
        }
        TestResult::two_sided_z(name, num / var.sqrt(), h0, 0.05)
    }
}

/// Compare the full model against a re-estimation without the selected
/// instrument subset: returns (Sargan excluding the subset, difference test).
///
/// The re-estimation freezes the realized lag depth of the full model so the
/// retained instrument set is exactly the full set minus the subset. With
/// the excluded model exactly identified (df 0) the excluding-group test is
/// reported as statistic 0 with p = 1.
pub fn difference_in_sargan(
    panel: &PanelDataset,
    fit: &GmmFit,
    selector: &SubsetSelector,
) -> Result<(TestResult, TestResult)> {
    let excl_name = "Sargan test excluding the selected instrument group";
    let diff_name = "Difference-in-Sargan test of the selected instrument group";
    let h0_excl = "the retained instruments are valid";
    let h0_diff = "the selected instrument subset is exogenous";

    let selected: Vec<usize> = match selector {
        SubsetSelector::DifferencedIv => fit
            .plan
            .directives
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_differenced_iv())
            .map(|(j, _)| j)
            .collect(),
        SubsetSelector::Indices(v) => {
            let mut v = v.clone();
            v.sort_unstable();
            v.dedup();
            if let Some(&bad) = v.iter().find(|&&j| j >= fit.plan.directives.len()) {
                return Err(Error::validation(format!(
                    "instrument subset index {bad} is out of range ({} directives)",
                    fit.plan.directives.len()
                )));
            }
            v
        }
    };

    if fit.sargan_df() == 0 {
        return Err(Error::validation(
            "difference-in-Sargan needs an over-identified full model",
        ));
    }
    let s_full = fit.sargan_value();
    let df_full = fit.sargan_df();

    if selected.is_empty() {
        let excl = TestResult::upper_tail(
            excl_name,
            s_full,
            Distribution::ChiSquare { df: df_full as f64 },
            h0_excl,
            0.05,
        );
        let diff = TestResult::with_p(
            diff_name,
            0.0,
            Distribution::ChiSquare { df: 0.0 },
            1.0,
            h0_diff,
            0.05,
        );
        return Ok((excl, diff));
    }

    let mut spec2 = fit.spec.clone();
    spec2.instrument_directives = fit
        .plan
        .directives
        .iter()
        .enumerate()
        .filter(|(j, _)| !selected.contains(j))
        .map(|(_, d)| d.clone())
        .collect();
    let mut options2 = fit.options;
    if let Some(d) = fit.plan.auto_depth {
        options2.max_gmm_lag_depth = DepthOption::Fixed(d);
    }
    let reduced = estimate_one_step(panel, &spec2, &options2, false)?;

    let df_excl = reduced.sargan_df();
    let (s_excl, excl) = if df_excl == 0 {
        let excl = TestResult::with_p(
            excl_name,
            0.0,
            Distribution::ChiSquare { df: 0.0 },
            1.0,
            h0_excl,
            0.05,
        );
        (0.0, excl)
    } else {
        let s = reduced.sargan_value();
        let excl = TestResult::upper_tail(
            excl_name,
            s,
            Distribution::ChiSquare { df: df_excl as f64 },
            h0_excl,
            0.05,
        );
        (s, excl)
    };

    let d_stat = s_full - s_excl;
    let df_d = df_full.saturating_sub(df_excl);
    let diff = if df_d == 0 {
        TestResult::with_p(
            diff_name,
            d_stat,
            Distribution::ChiSquare { df: 0.0 },
            1.0,
            h0_diff,
            0.05,
        )
    } else {
        TestResult::upper_tail(
            diff_name,
            d_stat,
            Distribution::ChiSquare { df: df_d as f64 },
            h0_diff,
            0.05,
        )
    };
    Ok((excl, diff))
}

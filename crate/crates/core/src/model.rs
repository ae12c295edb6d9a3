//! Shared model-specification and estimation-result types.
//!
//! Every estimator consumes a [`ModelSpec`] and produces an
//! [`EstimationResult`]; every diagnostic produces a [`TestResult`]. Keeping
//! these in one place lets the report layer render any estimator or test
//! without knowing which module produced it.

use nalgebra::{DMatrix, DVector};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::gmm::directive::InstrumentDirective;

/// Estimation method attached to a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    PooledOls,
    FixedEffects,
    RandomEffects,
    Fgls,
    DiffGmm,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::PooledOls => "Pooled OLS",
            Method::FixedEffects => "Fixed Effects",
            Method::RandomEffects => "Random Effects",
            Method::Fgls => "FGLS",
            Method::DiffGmm => "Difference GMM",
        };
        f.write_str(s)
    }
}

/// What to estimate: dependent, its lag order, regressors, intercept, and
/// (for GMM) the instrument directives.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub dependent: String,
    /// 0 for static models; >= 1 introduces lagged-dependent regressors.
    pub dep_lag_order: usize,
    pub regressors: Vec<String>,
    pub include_intercept: bool,
    pub instrument_directives: Vec<InstrumentDirective>,
}

impl ModelSpec {
    /// Static specification with intercept and no instruments.
    pub fn static_spec(dependent: impl Into<String>, regressors: &[&str]) -> Self {
        ModelSpec {
            dependent: dependent.into(),
            dep_lag_order: 0,
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            include_intercept: true,
            instrument_directives: Vec::new(),
        }
    }

    /// Dynamic specification with one dependent lag (the usual GMM setup).
    pub fn dynamic_spec(
        dependent: impl Into<String>,
        regressors: &[&str],
        directives: Vec<InstrumentDirective>,
    ) -> Self {
        ModelSpec {
            dependent: dependent.into(),
            dep_lag_order: 1,
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            include_intercept: false,
            instrument_directives: directives,
        }
    }

    /// Structural validation that does not need the panel: name clashes and
    /// lag-order requirements.
    pub fn validate(&self) -> Result<()> {
        let dep = self.dependent.to_ascii_lowercase();
        if self
            .regressors
            .iter()
            .any(|r| r.to_ascii_lowercase() == dep)
        {
            return Err(Error::validation(format!(
                "dependent variable '{}' also appears among the regressors",
                self.dependent
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for r in &self.regressors {
            if !seen.insert(r.to_ascii_lowercase()) {
                return Err(Error::validation(format!("duplicate regressor '{r}'")));
            }
        }
        if !self.instrument_directives.is_empty() && self.dep_lag_order == 0 {
            return Err(Error::validation(
                "instrument directives require a dynamic model (dependent lag order >= 1)",
            ));
        }
        Ok(())
    }
}

/// Overall-fit statistics; which fields are present depends on the method.
#[derive(Debug, Clone, Default)]
pub struct FitStats {
    pub r_squared: Option<f64>,
    /// Joint slope-significance F: (statistic, df1, df2, p).
    pub f_stat: Option<FStat>,
    /// Overall Wald chi-square: (statistic, df, p).
    pub wald_chi2: Option<WaldStat>,
}

#[derive(Debug, Clone, Copy)]
pub struct FStat {
    pub stat: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct WaldStat {
    pub stat: f64,
    pub df: f64,
    pub p: f64,
}

/// Method-specific extras carried alongside the common result fields.
#[derive(Debug, Clone)]
pub enum Auxiliary {
    None,
    RandomEffects {
        sigma_e2: f64,
        sigma_v2: f64,
        /// Smallest and largest per-entity quasi-demeaning weight.
        theta_range: (f64, f64),
        /// True when the between-variance estimate was floored at zero.
        floored: bool,
    },
    Fgls {
        converged: bool,
        iterations: usize,
        /// Common AR(1) coefficient when the error model includes it.
        rho: Option<f64>,
    },
    Gmm {
        instrument_count: usize,
        group_count: usize,
        robust: bool,
    },
}

/// Output of any estimator: named coefficients with inference, sample
/// bookkeeping, fit statistics, and per-row residuals.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub method: Method,
    pub coef_names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub std_errors: Vec<f64>,
    /// t statistics for POLS/FE, z statistics for RE/FGLS/GMM.
    pub stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub n_obs: usize,
    pub n_entities: usize,
    pub fit: FitStats,
    /// (entity index, period index) for every row used, aligned with
    /// `residuals` and `fitted`.
    pub rows: Vec<(usize, usize)>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Residual sum of squares on the estimation (possibly transformed) scale.
    pub ssr: f64,
    pub auxiliary: Auxiliary,
    /// Human-readable warnings accumulated during estimation.
    pub notes: Vec<String>,
}

/// Reference distribution for per-coefficient inference.
pub enum CoefInference {
    /// Student t with the given residual degrees of freedom.
    T { dof: f64 },
    /// Standard normal (asymptotic z).
    Z,
}

impl EstimationResult {
    /// Fill `std_errors`, `stats`, and `p_values` from the covariance
    /// diagonal under the given reference distribution.
    pub fn compute_inference(&mut self, inference: CoefInference) {
        let k = self.coefficients.len();
        self.std_errors = (0..k)
            .map(|j| self.covariance[(j, j)].max(0.0).sqrt())
            .collect();
        self.stats = (0..k)
            .map(|j| {
                if self.std_errors[j] > 0.0 {
                    self.coefficients[j] / self.std_errors[j]
                } else {
                    f64::NAN
                }
            })
            .collect();
        self.p_values = self
            .stats
            .iter()
            .map(|&s| {
                if !s.is_finite() {
                    return f64::NAN;
                }
                match inference {
                    CoefInference::T { dof } => crate::dist::t_two_sided(s, dof),
                    CoefInference::Z => crate::dist::normal_two_sided(s),
                }
            })
            .collect();
    }

    /// Index of a coefficient by (case-insensitive) name.
    pub fn coef_index(&self, name: &str) -> Option<usize> {
        let want = name.to_ascii_lowercase();
        self.coef_names
            .iter()
            .position(|n| n.to_ascii_lowercase() == want)
    }
}

/// Outcome of a single hypothesis test.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub distribution: Distribution,
    pub p_value: f64,
    pub h0: String,
    /// Decision phrased at a stated significance level.
    pub decision: String,
    /// Warnings accumulated while computing the test (exclusions, clamps).
    pub notes: Vec<String>,
}

impl TestResult {
    /// Build a result whose p-value is the upper tail of `distribution` at
    /// `statistic`, with a reject/fail-to-reject decision at `alpha`.
    pub fn upper_tail(
        name: impl Into<String>,
        statistic: f64,
        distribution: Distribution,
        h0: impl Into<String>,
        alpha: f64,
    ) -> Self {
        let p_value = distribution.sf(statistic);
        Self::with_p(name, statistic, distribution, p_value, h0, alpha)
    }

    /// Build a result for a z statistic with a two-sided normal p-value.
    pub fn two_sided_z(
        name: impl Into<String>,
        z: f64,
        h0: impl Into<String>,
        alpha: f64,
    ) -> Self {
        let p_value = crate::dist::normal_two_sided(z);
        Self::with_p(name, z, Distribution::Normal, p_value, h0, alpha)
    }

    /// Build a result from an already-computed p-value.
    pub fn with_p(
        name: impl Into<String>,
        statistic: f64,
        distribution: Distribution,
        p_value: f64,
        h0: impl Into<String>,
        alpha: f64,
    ) -> Self {
        let decision = decision_text(p_value, alpha);
        TestResult {
            name: name.into(),
            statistic,
            distribution,
            p_value,
            h0: h0.into(),
            decision,
            notes: Vec::new(),
        }
    }
}

/// Standard decision phrasing shared by all tests.
pub fn decision_text(p: f64, alpha: f64) -> String {
    let pct = alpha * 100.0;
    let pct = if pct.fract() == 0.0 {
        format!("{}%", pct as i64)
    } else {
        format!("{pct}%")
    };
    if p < alpha {
        format!("reject H0 at {pct}")
    } else {
        format!("fail to reject H0 at {pct}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_rejects_dependent_among_regressors() {
        let spec = ModelSpec::static_spec("roa", &["size", "ROA"]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_rejects_duplicate_regressors() {
        let spec = ModelSpec::static_spec("roa", &["size", "SIZE"]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_requires_dynamic_model_for_instruments() {
        let mut spec = ModelSpec::static_spec("roa", &["size"]);
        spec.instrument_directives =
            crate::gmm::directive::parse_instrument_spec("D.(L2.gdp)").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn decision_text_phrasing() {
        assert_eq!(decision_text(0.003, 0.05), "reject H0 at 5%");
        assert_eq!(decision_text(0.3, 0.05), "fail to reject H0 at 5%");
        assert_eq!(decision_text(0.02, 0.01), "fail to reject H0 at 1%");
    }

    #[test]
    fn inference_fills_se_stats_p() {
        let mut r = EstimationResult {
            method: Method::PooledOls,
            coef_names: vec!["const".into(), "x".into()],
            coefficients: DVector::from_vec(vec![1.0, 2.0]),
            covariance: DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0]),
            std_errors: vec![],
            stats: vec![],
            p_values: vec![],
            n_obs: 10,
            n_entities: 2,
            fit: FitStats::default(),
            rows: vec![],
            residuals: vec![],
            fitted: vec![],
            ssr: 0.0,
            auxiliary: Auxiliary::None,
            notes: vec![],
        };
        r.compute_inference(CoefInference::Z);
        assert_eq!(r.std_errors, vec![0.5, 1.0]);
        assert_eq!(r.stats, vec![2.0, 2.0]);
        assert!((r.p_values[0] - crate::dist::normal_two_sided(2.0)).abs() < 1e-15);
    }
}

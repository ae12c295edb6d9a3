//! Replicated estimation over independently seeded panels.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

use super::dgp::{simulate_dynamic_panel, DgpConfig};

/// One coefficient's contribution from a single replication.
#[derive(Debug, Clone)]
pub struct CoefDraw {
    pub name: String,
    pub true_value: f64,
    pub estimate: f64,
    /// Whether the replication's nominal 95% interval covered `true_value`.
    pub covered_95: bool,
}

/// One test's contribution from a single replication.
#[derive(Debug, Clone)]
pub struct TestDraw {
    pub name: String,
    pub level: f64,
    pub rejected: bool,
}

/// What the per-replication closure reports back to the harness.
#[derive(Debug, Clone, Default)]
pub struct ReplicationOutcome {
    pub coefficients: Vec<CoefDraw>,
    pub tests: Vec<TestDraw>,
}

/// Aggregated behavior of one coefficient across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub true_value: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Share of replications whose 95% interval covered the true value.
    pub coverage_95: f64,
}

/// Aggregated rejection rate of one test across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRateSummary {
    pub name: String,
    pub nominal_level: f64,
    pub rejection_rate: f64,
}

/// A replication that errored instead of producing an outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

/// Full Monte Carlo result: failures are recorded, not fatal, and every
/// rate is computed over the completed replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub estimator: String,
    pub replications: usize,
    pub completed: usize,
    pub failures: Vec<ReplicationFailure>,
    pub coefficients: Vec<CoefficientSummary>,
    pub tests: Vec<TestRateSummary>,
}

struct CoefAcc {
    name: String,
    true_value: f64,
    sum: f64,
    sum_sq_err: f64,
    covered: usize,
    n: usize,
}

struct TestAcc {
    name: String,
    level: f64,
    rejected: usize,
    n: usize,
}

/// Runs `run` on `replications` independently generated panels.
///
/// Replication `r` regenerates the panel with the seed `base_seed XOR r`.
/// Replications execute in parallel, but the reduction walks them in
/// replication order, so the summary does not depend on scheduling.
pub fn monte_carlo<F>(
    config: &DgpConfig,
    estimator: &str,
    replications: usize,
    base_seed: u64,
    run: F,
) -> Result<MonteCarloSummary>
where
    F: Fn(&PanelDataset) -> Result<ReplicationOutcome> + Sync,
{
    if replications == 0 {
        return Err(Error::validation("replications must be at least 1"));
    }
    config.validate()?;

    let outcomes: Vec<Result<ReplicationOutcome>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = base_seed ^ r as u64;
            simulate_dynamic_panel(&cfg).and_then(|panel| run(&panel))
        })
        .collect();

    let mut coef_accs: Vec<CoefAcc> = Vec::new();
    let mut test_accs: Vec<TestAcc> = Vec::new();
    let mut failures = Vec::new();
    let mut completed = 0usize;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Err(e) => failures.push(ReplicationFailure {
                replication: r,
                message: e.to_string(),
            }),
            Ok(out) => {
                completed += 1;
                for c in out.coefficients {
                    let acc = match coef_accs.iter_mut().find(|a| a.name == c.name) {
                        Some(a) => a,
                        None => {
                            coef_accs.push(CoefAcc {
                                name: c.name.clone(),
                                true_value: c.true_value,
                                sum: 0.0,
                                sum_sq_err: 0.0,
                                covered: 0,
                                n: 0,
                            });
                            coef_accs.last_mut().unwrap()
                        }
                    };
                    acc.sum += c.estimate;
                    acc.sum_sq_err += (c.estimate - c.true_value).powi(2);
                    acc.covered += usize::from(c.covered_95);
                    acc.n += 1;
                }
                for t in out.tests {
                    let acc = match test_accs
                        .iter_mut()
                        .find(|a| a.name == t.name && a.level == t.level)
                    {
                        Some(a) => a,
                        None => {
                            test_accs.push(TestAcc {
                                name: t.name.clone(),
                                level: t.level,
                                rejected: 0,
                                n: 0,
                            });
                            test_accs.last_mut().unwrap()
                        }
                    };
                    acc.rejected += usize::from(t.rejected);
                    acc.n += 1;
                }
            }
        }
    }

    let coefficients = coef_accs
        .into_iter()
        .map(|a| {
            let n = a.n as f64;
            let mean = a.sum / n;
            CoefficientSummary {
                name: a.name,
                true_value: a.true_value,
                mean_estimate: mean,
                bias: mean - a.true_value,
                rmse: (a.sum_sq_err / n).sqrt(),
                coverage_95: a.covered as f64 / n,
            }
        })
        .collect();
    let tests = test_accs
        .into_iter()
        .map(|a| TestRateSummary {
            name: a.name,
            nominal_level: a.level,
            rejection_rate: a.rejected as f64 / a.n as f64,
        })
        .collect();

    Ok(MonteCarloSummary {
        estimator: estimator.to_string(),
        replications,
        completed,
        failures,
        coefficients,
        tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::pooled_ols;
    use crate::model::ModelSpec;

    fn static_cfg() -> DgpConfig {
        DgpConfig {
            n_entities: 50,
            n_periods: 5,
            omega: 0.0,
            theta: vec![1.5],
            regressor_persistence: vec![0.3],
            fixed_effect_sd: 0.0,
            idiosyncratic_sd: 1.0,
            ..DgpConfig::default()
        }
    }

    fn pols_run(panel: &PanelDataset) -> Result<ReplicationOutcome> {
        let spec = ModelSpec::static_spec("y", &["x1"]);
        let fit = pooled_ols(panel, &spec)?;
        let j = fit.coef_index("x1").unwrap();
        let est = fit.coefficients[j];
        let half = 1.959963984540054 * fit.std_errors[j];
        Ok(ReplicationOutcome {
            coefficients: vec![CoefDraw {
                name: "x1".into(),
                true_value: 1.5,
                estimate: est,
                covered_95: (est - half..=est + half).contains(&1.5),
            }],
            tests: vec![TestDraw {
                name: "slope zero".into(),
                level: 0.05,
                rejected: fit.p_values[j] < 0.05,
            }],
        })
    }

    #[test]
    fn pooled_ols_is_unbiased_on_static_exogenous_panels() {
        let summary = monte_carlo(&static_cfg(), "pols", 200, 77, pols_run).unwrap();
        assert_eq!(summary.completed, 200);
        let c = &summary.coefficients[0];
        // Bias within 3 Monte Carlo standard errors of zero.
        let mc_se = c.rmse / (summary.completed as f64).sqrt();
        assert!(c.bias.abs() <= 3.0 * mc_se, "bias = {}, se = {mc_se}", c.bias);
        assert!(c.rmse >= c.bias.abs());
        assert!((0.90..=0.99).contains(&c.coverage_95), "{}", c.coverage_95);
        assert_eq!(summary.tests[0].rejection_rate, 1.0);
    }

    #[test]
    fn summaries_are_deterministic() {
        let a = monte_carlo(&static_cfg(), "pols", 40, 5, pols_run).unwrap();
        let b = monte_carlo(&static_cfg(), "pols", 40, 5, pols_run).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summaries_do_not_depend_on_worker_count() {
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1
            .install(|| monte_carlo(&static_cfg(), "pols", 30, 9, pols_run))
            .unwrap();
        let b = pool4
            .install(|| monte_carlo(&static_cfg(), "pols", 30, 9, pols_run))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let run = |panel: &PanelDataset| {
            let y = panel.series_index("y").unwrap();
            if panel.value(y, 0, 0).unwrap() > 0.0 {
                return Err(Error::validation("synthetic failure"));
            }
            pols_run(panel)
        };
        let summary = monte_carlo(&static_cfg(), "pols", 60, 123, run).unwrap();
        assert!(!summary.failures.is_empty());
        assert!(summary.completed > 0);
        assert_eq!(summary.completed + summary.failures.len(), 60);
        assert!(summary.failures[0].message.contains("synthetic failure"));
    }

    #[test]
    fn zero_replications_is_an_error() {
        assert!(monte_carlo(&static_cfg(), "pols", 0, 1, pols_run).is_err());
    }
}

//! The full estimation cascade for one or more configured models, with every
//! stage failure captured inside the report rather than aborting the run.

use crate::diagnostics::{
    bp_lm_re_test, breusch_pagan_het_test, dwh_endogeneity_test, fisher_unit_root, hausman_test,
    modified_wald_groupwise_het, wooldridge_autocorr_test, AdfOptions, Deterministic,
    UnitRootDecisionPolicy, UnitRootReport,
};
use crate::error::Error;
use crate::estimators::{
    f_test_pooled_vs_fe, fgls_full, fixed_effects, pooled_ols, random_effects, FglsErrorModel,
    FglsOptions,
};
use crate::gmm::{
    difference_in_sargan, estimate_one_step, parse_instrument_spec, DepthOption,
    InstrumentDirective, PlanOptions, SubsetSelector,
};
use crate::io::{ModelConfig, PipelineConfig};
use crate::model::{Auxiliary, EstimationResult, Method, ModelSpec, TestResult};
use crate::panel::{correlation_matrix, describe, vif, PanelDataset};

use super::builder::{
    battery_section, correlation_section, describe_section, dwh_section, estimation_section,
    gmm_section, model_selection, specification_section, unitroot_section, vif_section,
};
use super::{Report, Section, StageError, StageErrorKind};

/// Map the result-level error taxonomy onto process exit codes: numerical
/// failures dominate validation failures, and a clean report exits zero.
pub fn report_exit_code(report: &Report) -> i32 {
    let mut code = 0;
    for section in &report.sections {
        if let Some(err) = &section.error {
            match err.kind {
                StageErrorKind::Numerical => return 3,
                StageErrorKind::Validation => code = 2,
            }
        }
    }
    code
}

fn failed(id: String, title: &str, provenance: &str, e: &Error) -> Section {
    Section::new(id, title, provenance).with_error(StageError::from_error(e))
}

/// Severest error kind in a batch: numerical trumps validation.
fn worst_kind(errors: &[(Method, Error)]) -> StageErrorKind {
    if errors
        .iter()
        .any(|(_, e)| matches!(e, Error::Numerical(_)))
    {
        StageErrorKind::Numerical
    } else {
        StageErrorKind::Validation
    }
}

fn join_failures(errors: &[(Method, Error)]) -> String {
    errors
        .iter()
        .map(|(m, e)| format!("{m}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

struct ModelRun<'a> {
    panel: &'a PanelDataset,
    m: &'a ModelConfig,
    alpha: f64,
    sections: Vec<Section>,
}

impl<'a> ModelRun<'a> {
    fn id(&self, stage: &str) -> String {
        format!("{}:{stage}", self.m.name)
    }

    fn screening(&mut self) {
        let mut vars: Vec<&str> = vec![self.m.dependent.as_str()];
        vars.extend(self.m.regressors.iter().map(String::as_str));

        let id = self.id("describe");
        self.sections.push(match describe(self.panel, &vars) {
            Ok(rows) => describe_section(id, &rows),
            Err(e) => failed(id, "Descriptive statistics", "describe", &e),
        });

        let id = self.id("correlation");
        self.sections
            .push(match correlation_matrix(self.panel, &vars) {
                Ok(m) => correlation_section(id, &m),
                Err(e) => failed(id, "Correlation matrix", "correlation_matrix", &e),
            });

        // The collinearity screen is only defined for two or more regressors.
        if self.m.regressors.len() >= 2 {
            let regs: Vec<&str> = self.m.regressors.iter().map(String::as_str).collect();
            let id = self.id("vif");
            self.sections.push(match vif(self.panel, &regs) {
                Ok((rows, mean)) => vif_section(id, &rows, mean),
                Err(e) => failed(id, "Variance inflation factors", "vif", &e),
            });
        }
    }

    fn unit_roots(&mut self) {
        if !self.m.wants_test("unitroot") {
            return;
        }
        let mut vars: Vec<&str> = vec![self.m.dependent.as_str()];
        vars.extend(self.m.regressors.iter().map(String::as_str));
        let options = AdfOptions {
            lags: self.m.unit_root_lags,
            deterministic: Deterministic::Constant,
        };
        let mut reports: Vec<UnitRootReport> = Vec::new();
        let mut errors: Vec<(String, Error)> = Vec::new();
        for v in &vars {
            match fisher_unit_root(self.panel, v, options) {
                Ok(r) => reports.push(r),
                Err(e) => errors.push((v.to_string(), e)),
            }
        }
        let id = self.id("unitroot");
        let mut section = unitroot_section(
            id,
            &reports,
            self.alpha,
            UnitRootDecisionPolicy::default(),
        );
        if reports.is_empty() && !errors.is_empty() {
            let kind = if errors
                .iter()
                .any(|(_, e)| matches!(e, Error::Numerical(_)))
            {
                StageErrorKind::Numerical
            } else {
                StageErrorKind::Validation
            };
            let message = errors
                .iter()
                .map(|(v, e)| format!("{v}: {e}"))
                .collect::<Vec<_>>()
                .join("; ");
            section.error = Some(StageError { kind, message });
        } else {
            for (v, e) in &errors {
                section.notes.push(format!("{v}: skipped ({e})"));
            }
        }
        self.sections.push(section);
    }

    fn wants_method(&self, name: &str) -> bool {
        self.m
            .methods
            .iter()
            .any(|s| s.eq_ignore_ascii_case(name))
    }

    /// Pooled OLS, fixed effects, and random effects side by side, then the
    /// specification tests that arbitrate among them and the residual
    /// diagnostics that motivate FGLS and GMM.
    fn static_cascade(&mut self, spec: &ModelSpec) {
        let mut fitted: Vec<EstimationResult> = Vec::new();
        let mut errors: Vec<(Method, Error)> = Vec::new();
        let mut fit = |requested: bool,
                       method: Method,
                       run: &dyn Fn() -> crate::error::Result<EstimationResult>| {
            if requested {
                match run() {
                    Ok(r) => fitted.push(r),
                    Err(e) => errors.push((method, e)),
                }
            }
        };
        fit(self.wants_method("pols"), Method::PooledOls, &|| {
            pooled_ols(self.panel, spec)
        });
        fit(self.wants_method("fe"), Method::FixedEffects, &|| {
            fixed_effects(self.panel, spec, false)
        });
        fit(self.wants_method("re"), Method::RandomEffects, &|| {
            random_effects(self.panel, spec)
        });

        if fitted.is_empty() && errors.is_empty() {
            return; // no static methods requested
        }

        let id = self.id("estimation");
        let refs: Vec<&EstimationResult> = fitted.iter().collect();
        let mut section = estimation_section(id, "Estimation results", &refs);
        if !errors.is_empty() {
            section.error = Some(StageError {
                kind: worst_kind(&errors),
                message: join_failures(&errors),
            });
        }
        self.sections.push(section);

        let find = |method: Method| fitted.iter().find(|r| r.method == method);
        let pols = find(Method::PooledOls);
        let fe = find(Method::FixedEffects);
        let re = find(Method::RandomEffects);

        // Pooled-vs-FE F, the LM test for random effects, Hausman.
        let mut spec_tests: Vec<TestResult> = Vec::new();
        let mut spec_notes: Vec<String> = Vec::new();
        let mut run_pair = |wanted: bool, name: &str, out: Option<crate::error::Result<TestResult>>| {
            if !wanted {
                return;
            }
            match out {
                Some(Ok(t)) => spec_tests.push(t),
                Some(Err(e)) => spec_notes.push(format!("{name} failed: {e}")),
                None => spec_notes.push(format!(
                    "{name} skipped: a required estimate is unavailable"
                )),
            }
        };
        run_pair(
            self.m.wants_test("f"),
            "poolability F test",
            match (pols, fe) {
                (Some(p), Some(f)) => Some(f_test_pooled_vs_fe(p, f)),
                _ => None,
            },
        );
        run_pair(
            self.m.wants_test("bplm"),
            "random-effects LM test",
            pols.map(bp_lm_re_test),
        );
        run_pair(
            self.m.wants_test("hausman"),
            "Hausman test",
            match (fe, re) {
                (Some(f), Some(r)) => Some(hausman_test(f, r)),
                _ => None,
            },
        );

        if !spec_tests.is_empty() || !spec_notes.is_empty() {
            let p_of = |needle: &str| {
                spec_tests
                    .iter()
                    .find(|t| t.name.to_ascii_lowercase().contains(needle))
                    .map(|t| t.p_value)
            };
            let selection = model_selection(
                p_of("pooled"),
                p_of("lagrange"),
                p_of("hausman"),
                self.alpha,
            );
            let refs: Vec<&TestResult> = spec_tests.iter().collect();
            let id = self.id("spec-tests");
            let mut section = specification_section(id, &refs, selection, self.alpha);
            section.notes.extend(spec_notes);
            self.sections.push(section);
        }

        // Residual diagnostics: serial correlation and the two
        // heteroskedasticity tests.
        let mut battery: Vec<TestResult> = Vec::new();
        let mut battery_notes: Vec<String> = Vec::new();
        let mut run_test = |wanted: bool, name: &str, out: Option<crate::error::Result<TestResult>>| {
            if !wanted {
                return;
            }
            match out {
                Some(Ok(t)) => battery.push(t),
                Some(Err(e)) => battery_notes.push(format!("{name} failed: {e}")),
                None => battery_notes.push(format!(
                    "{name} skipped: a required estimate is unavailable"
                )),
            }
        };
        run_test(
            self.m.wants_test("wooldridge"),
            "serial-correlation test",
            Some(wooldridge_autocorr_test(self.panel, spec)),
        );
        run_test(
            self.m.wants_test("bp"),
            "heteroskedasticity LM test",
            pols.map(breusch_pagan_het_test),
        );
        run_test(
            self.m.wants_test("modwald"),
            "groupwise heteroskedasticity test",
            fe.map(modified_wald_groupwise_het),
        );
        if !battery.is_empty() || !battery_notes.is_empty() {
            let refs: Vec<&TestResult> = battery.iter().collect();
            let id = self.id("residual-tests");
            let mut section = battery_section(
                id,
                "Residual diagnostics",
                "residual_diagnostics",
                &refs,
                self.alpha,
            );
            section.notes.extend(battery_notes);
            self.sections.push(section);
        }
    }

    /// Iterated FGLS under groupwise heteroskedasticity with an AR(1)
    /// correction, falling back to the pure heteroskedastic weighting when
    /// entities are too short for the autocorrelation fit.
    fn fgls_stage(&mut self, spec: &ModelSpec) {
        if !self.wants_method("fgls") {
            return;
        }
        let id = self.id("fgls");
        let mut attempt = fgls_full(
            self.panel,
            spec,
            FglsOptions::new(FglsErrorModel::GroupwiseHetAr1),
        );
        let mut fallback_note = None;
        if matches!(&attempt, Err(e) if e.is_validation()) {
            let first = match &attempt {
                Err(e) => e.to_string(),
                Ok(_) => unreachable!(),
            };
            attempt = fgls_full(
                self.panel,
                spec,
                FglsOptions::new(FglsErrorModel::GroupwiseHet),
            );
            fallback_note = Some(format!(
                "AR(1) error model unavailable ({first}); using groupwise \
                 heteroskedastic weighting only"
            ));
        }
        match attempt {
            Ok((result, _details)) => {
                let mut section = estimation_section(id, "FGLS estimates", &[&result]);
                if let Auxiliary::Fgls {
                    converged,
                    iterations,
                    rho,
                } = result.auxiliary
                {
                    let mut line = if converged {
                        format!("iterated FGLS converged after {iterations} iteration(s)")
                    } else {
                        format!("iterated FGLS stopped after {iterations} iteration(s) without converging")
                    };
                    if let Some(r) = rho {
                        line.push_str(&format!("; common AR(1) coefficient {r:.6}"));
                    }
                    section.notes.push(line);
                }
                if let Some(n) = fallback_note {
                    section.notes.push(n);
                }
                self.sections.push(section);
            }
            Err(e) => {
                let mut section = failed(id, "FGLS estimates", "fgls", &e);
                if let Some(n) = fallback_note {
                    section.notes.push(n);
                }
                self.sections.push(section);
            }
        }
    }

    /// Regressor-by-regressor endogeneity screen, instrumenting each
    /// suspected series with its own first lag.
    fn dwh_stage(&mut self, spec: &ModelSpec) {
        if !self.m.wants_test("dwh") || self.m.regressors.is_empty() {
            return;
        }
        let mut rows: Vec<(String, TestResult, TestResult)> = Vec::new();
        let mut notes: Vec<String> = Vec::new();
        for reg in &self.m.regressors {
            match self.test_one_regressor(spec, reg) {
                Ok((durbin, wu)) => rows.push((reg.clone(), durbin, wu)),
                Err(e) => notes.push(format!("{reg}: skipped ({e})")),
            }
        }
        let id = self.id("dwh");
        let mut section = dwh_section(id, &rows, self.alpha);
        section.notes.extend(notes);
        self.sections.push(section);
    }

    fn test_one_regressor(
        &self,
        spec: &ModelSpec,
        reg: &str,
    ) -> crate::error::Result<(TestResult, TestResult)> {
        let mut augmented = self.panel.clone();
        let idx = augmented.series_index(reg)?;
        let n_p = augmented.n_periods();
        let mut lagged = Vec::with_capacity(augmented.n_entities() * n_p);
        for i in 0..augmented.n_entities() {
            for t in 0..n_p {
                lagged.push(augmented.lagged(idx, i, t, 1));
            }
        }
        let lag_name = format!("L.{reg}");
        augmented.add_series(lag_name.clone(), lagged)?;
        dwh_endogeneity_test(&augmented, spec, reg, &[lag_name.as_str()])
    }

    /// One-step difference GMM with the Sargan/serial-correlation validity
    /// block; runs only when the model asks for it and declares a dynamic lag.
    fn gmm_stage(&mut self) {
        if !self.wants_method("gmm") {
            return;
        }
        let id = self.id("gmm");
        let regs: Vec<&str> = self.m.regressors.iter().map(String::as_str).collect();
        let mut directives: Vec<InstrumentDirective> = Vec::new();
        for text in [self.m.iv.as_deref(), self.m.gmm_iv.as_deref()]
            .into_iter()
            .flatten()
        {
            match parse_instrument_spec(text) {
                Ok(ds) => directives.extend(ds),
                Err(e) => {
                    self.sections
                        .push(failed(id, "Difference GMM", "estimate_one_step", &e));
                    return;
                }
            }
        }
        let mut spec = ModelSpec::dynamic_spec(&self.m.dependent, &regs, directives);
        spec.dep_lag_order = self.m.lags.max(1);
        let options = PlanOptions {
            max_gmm_lag_depth: self
                .m
                .max_lag_depth
                .map(DepthOption::Fixed)
                .unwrap_or(DepthOption::Auto),
            collapse_default: self.m.collapse,
        };
        let fit = match estimate_one_step(self.panel, &spec, &options, self.m.robust) {
            Ok(f) => f,
            Err(e) => {
                self.sections
                    .push(failed(id, "Difference GMM", "estimate_one_step", &e));
                return;
            }
        };

        let mut validity: Vec<TestResult> = Vec::new();
        let mut notes: Vec<String> = Vec::new();
        if self.m.wants_test("sargan") {
            validity.push(fit.sargan());
        }
        if self.m.wants_test("ar") {
            validity.push(fit.ar_test(1));
            validity.push(fit.ar_test(2));
        }
        let has_differenced_iv = fit.plan.directives.iter().any(
            |d| matches!(d, InstrumentDirective::Iv { differenced, .. } if *differenced),
        );
        if self.m.wants_test("diffsargan") && has_differenced_iv {
            match difference_in_sargan(self.panel, &fit, &SubsetSelector::DifferencedIv) {
                Ok((excl, diff)) => {
                    validity.push(excl);
                    validity.push(diff);
                }
                Err(e) => notes.push(format!("difference-in-Sargan skipped ({e})")),
            }
        }
        let refs: Vec<&TestResult> = validity.iter().collect();
        let mut section = gmm_section(id, &fit, &refs);
        section.notes.extend(notes);
        self.sections.push(section);
    }
}

/// Run every configured model's cascade over `panel` and collect the
/// sections into one deterministic report.
pub fn run_pipeline(panel: &PanelDataset, config: &PipelineConfig) -> Report {
    let alpha = config
        .significance_levels
        .first()
        .copied()
        .unwrap_or(0.01);
    let mut report = Report::new("Panel estimation report", config.significance_levels.clone());
    for m in &config.models {
        let mut run = ModelRun {
            panel,
            m,
            alpha,
            sections: Vec::new(),
        };
        run.screening();
        run.unit_roots();
        let regs: Vec<&str> = m.regressors.iter().map(String::as_str).collect();
        let spec = ModelSpec::static_spec(&m.dependent, &regs);
        run.static_cascade(&spec);
        run.fgls_stage(&spec);
        run.dwh_stage(&spec);
        run.gmm_stage();
        report.sections.extend(run.sections);
    }
    report
}

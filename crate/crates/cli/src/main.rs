//! `panelgmm`: panel-data screening, the static estimation cascade, one-step
//! difference GMM, diagnostic batteries, simulation, and full config-driven
//! pipeline reports.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use panelgmm::diagnostics::{AdfOptions, Deterministic, UnitRootDecisionPolicy};
use panelgmm::error::{Error, Result};
use panelgmm::estimators::{
    fgls_full, fixed_effects, pooled_ols, random_effects, FglsErrorModel, FglsOptions,
};
use panelgmm::gmm::{
    difference_in_sargan, estimate_one_step, parse_instrument_spec, DepthOption,
    InstrumentDirective, PlanOptions, SubsetSelector,
};
use panelgmm::io::{
    read_bank_csv, read_macro_csv, read_panel_csv, write_panel, ModelConfig, OutputFormat,
    PipelineConfig,
};
use panelgmm::model::{ModelSpec, TestResult};
use panelgmm::panel::{compute_ratios, correlation_matrix, describe, vif, PanelDataset};
use panelgmm::report::{
    correlation_section, describe_section, estimation_section, gmm_section, render,
    report_exit_code, run_pipeline, unitroot_section, vif_section, Cell, Report, Table,
};
use panelgmm::sim::{monte_carlo, simulate_dynamic_panel, CoefDraw, DgpConfig, ReplicationOutcome};

#[derive(Parser)]
#[command(
    name = "panelgmm",
    version,
    about = "Dynamic panel-data estimation: pooled OLS through difference GMM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags selecting the input dataset: either a prebuilt panel CSV, or a raw
/// bank-statement CSV paired with a macro CSV from which the ratio panel is
/// derived.
#[derive(Args)]
struct DataArgs {
    /// Prebuilt panel CSV (entity_id, year, value columns).
    #[arg(long, value_name = "FILE")]
    panel: Option<PathBuf>,
    /// Raw bank-statement CSV; requires --macro-csv.
    #[arg(long = "bank", value_name = "FILE")]
    bank: Option<PathBuf>,
    /// Macro series CSV (year, gdp, inf); requires --bank.
    #[arg(long = "macro-csv", value_name = "FILE")]
    macro_csv: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<PanelDataset> {
        match (&self.panel, &self.bank, &self.macro_csv) {
            (Some(p), None, None) => read_panel_csv(p),
            (None, Some(b), Some(m)) => {
                let build = compute_ratios(&read_bank_csv(b)?, &read_macro_csv(m)?)?;
                for d in &build.diagnostics {
                    eprintln!("warning: {d}");
                }
                Ok(build.panel)
            }
            (None, None, None) => Err(Error::validation(
                "no input data: pass --panel FILE, or --bank FILE with --macro-csv FILE",
            )),
            _ => Err(Error::validation(
                "pass either --panel alone or --bank together with --macro-csv",
            )),
        }
    }
}

/// Flags shared by every command that prints a report.
#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

/// Flags describing a model equation.
#[derive(Args)]
struct ModelArgs {
    /// Dependent series name.
    #[arg(long)]
    dep: String,
    /// Comma-separated regressor names.
    #[arg(long, value_delimiter = ',')]
    regressors: Vec<String>,
    /// Dependent-variable lag order for the dynamic (GMM) equation.
    #[arg(long, default_value_t = 1)]
    lags: usize,
    /// iv-style instrument directives, e.g. "D.(L2.roa L3.gdp)".
    #[arg(long)]
    iv: Option<String>,
    /// gmm-style instrument directives, e.g. "L(1/).L3.llpr".
    #[arg(long = "gmm-iv")]
    gmm_iv: Option<String>,
    /// Cap every gmm-style block at this many lags.
    #[arg(long = "max-lag-depth")]
    max_lag_depth: Option<usize>,
    /// Collapse the automatic dependent-variable instrument block.
    #[arg(long)]
    collapse: bool,
    /// Robust (heteroskedasticity-consistent) GMM standard errors.
    #[arg(long)]
    robust: bool,
}

#[derive(Args)]
struct DgpArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    entities: usize,
    #[arg(long, default_value_t = 7)]
    periods: usize,
    /// Dependent-variable persistence.
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// Comma-separated regressor coefficients.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    theta: Vec<f64>,
    /// Entity-effect standard deviation.
    #[arg(long = "fe-sd", default_value_t = 1.0)]
    fe_sd: f64,
    /// Idiosyncratic-error standard deviation.
    #[arg(long = "sigma", default_value_t = 1.0)]
    sigma: f64,
    /// How strongly the entity effect loads on the regressors.
    #[arg(long = "loading", default_value_t = 0.0)]
    loading: f64,
    /// AR(1) coefficient of the idiosyncratic error.
    #[arg(long = "error-ar1", default_value_t = 0.0)]
    error_ar1: f64,
    /// Variance-ratio factor applied to the upper half of entities.
    #[arg(long = "het-factor", default_value_t = 1.0)]
    het_factor: f64,
}

impl DgpArgs {
    fn to_config(&self) -> DgpConfig {
        DgpConfig {
            n_entities: self.entities,
            n_periods: self.periods,
            omega: self.omega,
            theta: self.theta.clone(),
            fixed_effect_sd: self.fe_sd,
            idiosyncratic_sd: self.sigma,
            regressor_persistence: vec![0.5; self.theta.len()],
            regressor_effect_loading: self.loading,
            groupwise_het_factor: self.het_factor,
            error_ar1: self.error_ar1,
            seed: self.seed,
            ..DgpConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-variable descriptive statistics.
    Describe {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated variables (default: every series).
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Pairwise correlation matrix.
    Correlate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Variance inflation factors across a regressor set.
    Vif {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated regressors (at least two).
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fisher-combined panel unit-root battery.
    Unitroot {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        /// Augmentation lags in each entity-level regression.
        #[arg(long, default_value_t = 1)]
        lags: usize,
        /// Include a linear trend in the entity-level regressions.
        #[arg(long)]
        trend: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit one model with one method.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        /// pols | fe | re | fgls | gmm
        #[arg(long)]
        method: String,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Specification, residual, endogeneity, and unit-root test batteries.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated test ids (default: the full battery):
        /// unitroot,f,bplm,hausman,wooldridge,bp,modwald,dwh
        #[arg(long, value_delimiter = ',')]
        tests: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// One-step difference GMM with its validity block (same as
    /// `estimate --method gmm`).
    Gmm {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw one synthetic dynamic panel and write it as a panel CSV.
    Simulate {
        #[command(flatten)]
        dgp: DgpArgs,
        /// Output CSV path (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Monte Carlo bias/RMSE/coverage study over seeded replications.
    Mc {
        #[command(flatten)]
        dgp: DgpArgs,
        /// Number of replications.
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Comma-separated estimators to compare: pols, fe, gmm.
        #[arg(long, value_delimiter = ',', default_value = "fe,gmm")]
        estimators: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the full configured cascade and emit the report.
    Pipeline {
        /// TOML configuration file.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Override the config's output format.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    };
    std::process::exit(code);
}

fn emit(report: &Report, format: OutputFormat, out: Option<&Path>) -> Result<i32> {
    let text = render(report, format)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(report_exit_code(report))
}

fn single_section_report(section: panelgmm::report::Section) -> Report {
    let mut report = Report::new("panelgmm report", vec![0.01, 0.05, 0.10]);
    report.sections.push(section);
    report
}

/// Either the explicit variable list, or every series in the panel.
fn vars_or_all(panel: &PanelDataset, vars: &[String]) -> Vec<String> {
    if vars.is_empty() {
        panel.series_names().to_vec()
    } else {
        vars.to_vec()
    }
}

fn parse_directives(model: &ModelArgs) -> Result<Vec<InstrumentDirective>> {
    let mut directives = Vec::new();
    for text in [model.iv.as_deref(), model.gmm_iv.as_deref()]
        .into_iter()
        .flatten()
    {
        directives.extend(parse_instrument_spec(text)?);
    }
    Ok(directives)
}

fn plan_options(model: &ModelArgs) -> PlanOptions {
    PlanOptions {
        max_gmm_lag_depth: model
            .max_lag_depth
            .map(DepthOption::Fixed)
            .unwrap_or(DepthOption::Auto),
        collapse_default: model.collapse,
    }
}

fn run_estimate(panel: &PanelDataset, method: &str, model: &ModelArgs) -> Result<Report> {
    let regs: Vec<&str> = model.regressors.iter().map(String::as_str).collect();
    let spec = ModelSpec::static_spec(&model.dep, &regs);
    let section = match method.to_ascii_lowercase().as_str() {
        "pols" => {
            let r = pooled_ols(panel, &spec)?;
            estimation_section("estimate", "Estimation results", &[&r])
        }
        "fe" => {
            let r = fixed_effects(panel, &spec, false)?;
            estimation_section("estimate", "Estimation results", &[&r])
        }
        "re" => {
            let r = random_effects(panel, &spec)?;
            estimation_section("estimate", "Estimation results", &[&r])
        }
        "fgls" => {
            let (r, _) = fgls_full(
                panel,
                &spec,
                FglsOptions::new(FglsErrorModel::GroupwiseHetAr1),
            )?;
            estimation_section("estimate", "FGLS estimates", &[&r])
        }
        "gmm" => gmm_stage(panel, model)?,
        other => {
            return Err(Error::validation(format!(
                "unknown method '{other}'; expected pols, fe, re, fgls, or gmm"
            )))
        }
    };
    Ok(single_section_report(section))
}

fn gmm_stage(panel: &PanelDataset, model: &ModelArgs) -> Result<panelgmm::report::Section> {
    let regs: Vec<&str> = model.regressors.iter().map(String::as_str).collect();
    let mut spec = ModelSpec::dynamic_spec(&model.dep, &regs, parse_directives(model)?);
    spec.dep_lag_order = model.lags.max(1);
    let fit = estimate_one_step(panel, &spec, &plan_options(model), model.robust)?;
    let mut validity: Vec<TestResult> = vec![fit.sargan(), fit.ar_test(1), fit.ar_test(2)];
    let has_differenced_iv = fit.plan.directives.iter().any(
        |d| matches!(d, InstrumentDirective::Iv { differenced, .. } if *differenced),
    );
    let mut notes = Vec::new();
    if has_differenced_iv {
        match difference_in_sargan(panel, &fit, &SubsetSelector::DifferencedIv) {
            Ok((excl, diff)) => {
                validity.push(excl);
                validity.push(diff);
            }
            Err(e) => notes.push(format!("difference-in-Sargan skipped ({e})")),
        }
    }
    let refs: Vec<&TestResult> = validity.iter().collect();
    let mut section = gmm_section("gmm", &fit, &refs);
    section.notes.extend(notes);
    Ok(section)
}

/// Synthesize a single-model pipeline config so the `test` subcommand shares
/// the cascade's prerequisite wiring, then keep only the test sections.
fn run_tests(panel: &PanelDataset, model: &ModelArgs, tests: &[String]) -> Report {
    let selected = if tests.is_empty() {
        None
    } else {
        Some(tests.to_vec())
    };
    let mut methods = vec!["pols".to_string(), "fe".to_string(), "re".to_string()];
    if model.iv.is_some() || model.gmm_iv.is_some() {
        methods.push("gmm".to_string());
    }
    let m = ModelConfig {
        name: "model".to_string(),
        dependent: model.dep.clone(),
        regressors: model.regressors.clone(),
        lags: model.lags,
        methods,
        iv: model.iv.clone(),
        gmm_iv: model.gmm_iv.clone(),
        max_lag_depth: model.max_lag_depth,
        collapse: model.collapse,
        robust: model.robust,
        tests: selected,
        unit_root_lags: 1,
    };
    let config = PipelineConfig {
        bank_csv: None,
        macro_csv: None,
        panel_csv: None,
        format: OutputFormat::Text,
        seed: 0,
        significance_levels: vec![0.01, 0.05, 0.10],
        models: vec![m],
    };
    let mut report = run_pipeline(panel, &config);
    let keep = [":spec-tests", ":residual-tests", ":dwh", ":unitroot", ":gmm"];
    report
        .sections
        .retain(|s| keep.iter().any(|k| s.id.ends_with(k)) || s.error.is_some());
    report
}

fn run_unitroot(
    panel: &PanelDataset,
    vars: &[String],
    lags: usize,
    trend: bool,
) -> Result<Report> {
    let options = AdfOptions {
        lags,
        deterministic: if trend {
            Deterministic::ConstantTrend
        } else {
            Deterministic::Constant
        },
    };
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    for v in vars {
        match panelgmm::diagnostics::fisher_unit_root(panel, v, options) {
            Ok(r) => reports.push(r),
            Err(e) => notes.push(format!("{v}: skipped ({e})")),
        }
    }
    if reports.is_empty() {
        return Err(Error::validation(format!(
            "no variable could be tested: {}",
            notes.join("; ")
        )));
    }
    let mut section = unitroot_section("unitroot", &reports, 0.05, UnitRootDecisionPolicy::default());
    section.notes.extend(notes);
    Ok(single_section_report(section))
}

fn mc_outcome(
    panel: &PanelDataset,
    estimator: &str,
    model_args: (&[f64], f64, usize),
) -> Result<ReplicationOutcome> {
    let (theta, omega, lags) = model_args;
    let regs: Vec<String> = (1..=theta.len()).map(|j| format!("x{j}")).collect();
    let reg_refs: Vec<&str> = regs.iter().map(String::as_str).collect();
    let mut outcome = ReplicationOutcome::default();
    // pols/fe estimate the same dynamic equation the DGP generates, with the
    // lagged dependent variable as an ordinary regressor; that is what makes
    // their omega bias visible next to GMM's.
    let dynamic_by_ols = |panel: &PanelDataset| -> Result<(PanelDataset, Vec<String>)> {
        let mut augmented = panel.clone();
        let y = augmented.series_index("y")?;
        let mut lagged = Vec::with_capacity(augmented.n_entities() * augmented.n_periods());
        for i in 0..augmented.n_entities() {
            for t in 0..augmented.n_periods() {
                lagged.push(augmented.lagged(y, i, t, 1));
            }
        }
        augmented.add_series("L.y", lagged)?;
        let mut names = vec!["L.y".to_string()];
        names.extend(regs.iter().cloned());
        Ok((augmented, names))
    };
    let result = match estimator {
        "pols" => {
            let (augmented, names) = dynamic_by_ols(panel)?;
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            pooled_ols(&augmented, &ModelSpec::static_spec("y", &refs))?
        }
        "fe" => {
            let (augmented, names) = dynamic_by_ols(panel)?;
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            fixed_effects(&augmented, &ModelSpec::static_spec("y", &refs), false)?
        }
        "gmm" => {
            let mut spec = ModelSpec::dynamic_spec("y", &reg_refs, Vec::new());
            spec.dep_lag_order = lags.max(1);
            estimate_one_step(panel, &spec, &PlanOptions::default(), false)?.result
        }
        other => {
            return Err(Error::validation(format!(
                "unknown estimator '{other}'; expected pols, fe, or gmm"
            )))
        }
    };
    for (j, name) in result.coef_names.iter().enumerate() {
        let truth = if name.eq_ignore_ascii_case("const") {
            continue;
        } else if let Some(idx) = regs.iter().position(|r| r.eq_ignore_ascii_case(name)) {
            theta[idx]
        } else {
            // dependent-variable lag
            omega
        };
        let est = result.coefficients[j];
        let se = result.std_errors[j];
        outcome.coefficients.push(CoefDraw {
            name: name.clone(),
            true_value: truth,
            estimate: est,
            covered_95: (est - truth).abs() <= 1.959963984540054 * se,
        });
    }
    Ok(outcome)
}

fn run_mc(dgp: &DgpArgs, reps: usize, estimators: &[String]) -> Result<Report> {
    let config = dgp.to_config();
    config.validate()?;
    let mut report = Report::new("Monte Carlo summary", vec![0.01, 0.05, 0.10]);
    for est in estimators {
        let est = est.to_ascii_lowercase();
        let theta = config.theta.clone();
        let omega = config.omega;
        let summary = monte_carlo(&config, &est, reps, config.seed, |panel| {
            mc_outcome(panel, &est, (&theta, omega, 1))
        })?;
        let mut table = Table {
            columns: [
                "Coefficient",
                "True value",
                "Mean estimate",
                "Bias",
                "RMSE",
                "95% coverage",
            ]
            .map(String::from)
            .to_vec(),
            rows: Vec::new(),
        };
        for c in &summary.coefficients {
            table.rows.push(vec![
                Cell::text(&c.name),
                Cell::num(c.true_value),
                Cell::num(c.mean_estimate),
                Cell::num(c.bias),
                Cell::num(c.rmse),
                Cell::num(c.coverage_95),
            ]);
        }
        let mut section = panelgmm::report::Section::new(
            format!("mc:{est}"),
            format!("Monte Carlo: {est}"),
            "monte_carlo",
        );
        section.table = Some(table);
        section.notes.push(format!(
            "{} of {} replications completed",
            summary.completed, summary.replications
        ));
        for f in summary.failures.iter().take(3) {
            section
                .notes
                .push(format!("replication {} failed: {}", f.replication, f.message));
        }
        report.sections.push(section);
    }
    Ok(report)
}

/// Resolve a configured path against the config file's directory so that a
/// config can be invoked from anywhere.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn run_config_pipeline(
    config_path: &Path,
    format_override: Option<FormatArg>,
    out: Option<&Path>,
) -> Result<i32> {
    let config = PipelineConfig::load(config_path)?;
    config.validate()?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let panel = match (&config.panel_csv, &config.bank_csv, &config.macro_csv) {
        (Some(p), _, _) => read_panel_csv(resolve(base, p))?,
        (None, Some(b), Some(m)) => {
            let build = compute_ratios(
                &read_bank_csv(resolve(base, b))?,
                &read_macro_csv(resolve(base, m))?,
            )?;
            for d in &build.diagnostics {
                eprintln!("warning: {d}");
            }
            build.panel
        }
        _ => {
            return Err(Error::validation(
                "config must name either panel_csv or bank_csv + macro_csv",
            ))
        }
    };
    let report = run_pipeline(&panel, &config);
    let format = format_override.map(OutputFormat::from).unwrap_or(config.format);
    emit(&report, format, out)
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Describe { data, vars, output } => {
            let panel = data.load()?;
            let vars = vars_or_all(&panel, &vars);
            let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
            let rows = describe(&panel, &refs)?;
            let report = single_section_report(describe_section("describe", &rows));
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Correlate { data, vars, output } => {
            let panel = data.load()?;
            let vars = vars_or_all(&panel, &vars);
            let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
            let m = correlation_matrix(&panel, &refs)?;
            let report = single_section_report(correlation_section("correlation", &m));
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Vif { data, vars, output } => {
            let panel = data.load()?;
            let vars = vars_or_all(&panel, &vars);
            let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
            let (rows, mean) = vif(&panel, &refs)?;
            let report = single_section_report(vif_section("vif", &rows, mean));
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Unitroot {
            data,
            vars,
            lags,
            trend,
            output,
        } => {
            let panel = data.load()?;
            let vars = vars_or_all(&panel, &vars);
            let report = run_unitroot(&panel, &vars, lags, trend)?;
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Estimate {
            data,
            method,
            model,
            output,
        } => {
            let panel = data.load()?;
            let report = run_estimate(&panel, &method, &model)?;
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Test {
            data,
            model,
            tests,
            output,
        } => {
            let panel = data.load()?;
            let report = run_tests(&panel, &model, &tests);
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Gmm {
            data,
            model,
            output,
        } => {
            let panel = data.load()?;
            let report = single_section_report(gmm_stage(&panel, &model)?);
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Simulate { dgp, out } => {
            let config = dgp.to_config();
            let panel = simulate_dynamic_panel(&config)?;
            match out {
                Some(path) => write_panel(std::fs::File::create(&path)?, &panel)?,
                None => {
                    let mut buf = Vec::new();
                    write_panel(&mut buf, &panel)?;
                    std::io::stdout().lock().write_all(&buf)?;
                }
            }
            Ok(0)
        }
        Command::Mc {
            dgp,
            reps,
            estimators,
            output,
        } => {
            let report = run_mc(&dgp, reps, &estimators)?;
            emit(&report, output.format.into(), output.out.as_deref())
        }
        Command::Pipeline {
            config,
            format,
            out,
        } => run_config_pipeline(&config, format, out.as_deref()),
    }
}

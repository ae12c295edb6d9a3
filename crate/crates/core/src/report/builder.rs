//! Constructors turning estimator and test outputs into report sections.

use crate::diagnostics::{UnitRootDecisionPolicy, UnitRootReport};
use crate::gmm::{canonical_spec_string, GmmFit};
use crate::model::{decision_text, Auxiliary, EstimationResult, TestResult};
use crate::panel::{CorrelationMatrix, DescriptiveRow, VifRow};

use super::{Cell, Section, Table};

/// Descriptive statistics, one row per variable.
pub fn describe_section(id: impl Into<String>, rows: &[DescriptiveRow]) -> Section {
    let table = Table {
        columns: ["Variable", "Mean", "Std. Dev.", "Min", "Max", "Obs"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::text(&r.variable),
                    Cell::num(r.mean),
                    Cell::num(r.std_dev),
                    Cell::num(r.min),
                    Cell::num(r.max),
                    Cell::int(r.n_obs),
                ]
            })
            .collect(),
    };
    Section::new(id, "Descriptive statistics", "describe").with_table(table)
}

/// Lower-triangle correlation matrix with high-correlation flags as notes.
pub fn correlation_section(id: impl Into<String>, m: &CorrelationMatrix) -> Section {
    let mut columns = vec!["".to_string()];
    columns.extend(m.names.iter().cloned());
    let rows = m
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut row = vec![Cell::text(name)];
            for j in 0..m.names.len() {
                row.push(if j > i {
                    Cell::Empty
                } else {
                    match m.values[i][j] {
                        Some(v) => Cell::num(v),
                        None => Cell::text("undefined"),
                    }
                });
            }
            row
        })
        .collect();
    let mut section = Section::new(id, "Correlation matrix", "correlation_matrix")
        .with_table(Table { columns, rows });
    for &(i, j, r) in &m.high_pairs {
        section.notes.push(format!(
            "|r| = {:.4} between {} and {} exceeds 0.80",
            r.abs(),
            m.names[i],
            m.names[j]
        ));
    }
    section
}

/// Variance inflation factors with the mean-VIF summary row.
pub fn vif_section(id: impl Into<String>, rows: &[VifRow], mean_vif: f64) -> Section {
    let mut body: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::text(&r.variable),
                if r.vif.is_finite() {
                    Cell::num(r.vif)
                } else {
                    Cell::text("inf")
                },
                if r.reciprocal > 0.0 {
                    Cell::num(r.reciprocal)
                } else {
                    Cell::num(0.0)
                },
            ]
        })
        .collect();
    body.push(vec![Cell::text("Mean VIF"), Cell::num(mean_vif), Cell::Empty]);
    let mut section = Section::new(id, "Variance inflation factors", "vif").with_table(Table {
        columns: ["Variable", "VIF", "1/VIF"].map(String::from).to_vec(),
        rows: body,
    });
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|r| r.vif > 10.0)
        .map(|r| r.variable.as_str())
        .collect();
    if !flagged.is_empty() {
        section.notes.push(format!(
            "VIF > 10.0 signals multicollinearity: {}",
            flagged.join(", ")
        ));
    }
    section
}

/// Panel unit-root battery, one row per variable with the four pooled
/// statistics and the stationarity call.
pub fn unitroot_section(
    id: impl Into<String>,
    reports: &[UnitRootReport],
    alpha: f64,
    policy: UnitRootDecisionPolicy,
) -> Section {
    let columns = [
        "Variable", "P", "P p", "Z", "Z p", "L*", "L* p", "Pm", "Pm p", "Decision",
    ]
    .map(String::from)
    .to_vec();
    let mut notes = Vec::new();
    let rows = reports
        .iter()
        .map(|r| {
            let mut row = vec![Cell::text(&r.variable)];
            for t in &r.combined {
                row.push(Cell::num(t.statistic));
                row.push(Cell::pval(t.p_value));
            }
            row.push(Cell::text(r.decision(alpha, policy)));
            for n in &r.notes {
                notes.push(format!("{}: {n}", r.variable));
            }
            row
        })
        .collect();
    let mut section = Section::new(id, "Panel unit-root tests", "fisher_unit_root")
        .with_table(Table { columns, rows });
    section.notes = notes;
    section
}

fn push_summary_row(
    rows: &mut Vec<Vec<Cell>>,
    label: &str,
    cells: Vec<Cell>,
) {
    if cells.iter().any(|c| !matches!(c, Cell::Empty)) {
        let mut row = vec![Cell::text(label)];
        row.extend(cells);
        rows.push(row);
    }
}

/// Side-by-side estimation table: one column per result, two rows per
/// coefficient (starred estimate above its parenthesized t/z statistic),
/// then sample-size and fit rows.
pub fn estimation_section(
    id: impl Into<String>,
    title: impl Into<String>,
    results: &[&EstimationResult],
) -> Section {
    let mut columns = vec!["Variable".to_string()];
    columns.extend(results.iter().map(|r| r.method.to_string()));

    let mut names: Vec<String> = Vec::new();
    for r in results {
        for n in &r.coef_names {
            if !names.iter().any(|x| x.eq_ignore_ascii_case(n)) {
                names.push(n.clone());
            }
        }
    }

    let mut rows = Vec::new();
    for name in &names {
        let mut coef_row = vec![Cell::text(name)];
        let mut stat_row = vec![Cell::Empty];
        for r in results {
            match r.coef_index(name) {
                Some(j) => {
                    coef_row.push(Cell::starred(r.coefficients[j], r.p_values[j]));
                    stat_row.push(Cell::paren(r.stats[j]));
                }
                None => {
                    coef_row.push(Cell::Empty);
                    stat_row.push(Cell::Empty);
                }
            }
        }
        rows.push(coef_row);
        rows.push(stat_row);
    }

    push_summary_row(
        &mut rows,
        "Observations",
        results.iter().map(|r| Cell::int(r.n_obs)).collect(),
    );
    push_summary_row(
        &mut rows,
        "Entities",
        results.iter().map(|r| Cell::int(r.n_entities)).collect(),
    );
    push_summary_row(
        &mut rows,
        "R-squared",
        results
            .iter()
            .map(|r| r.fit.r_squared.map(Cell::num).unwrap_or(Cell::Empty))
            .collect(),
    );
    push_summary_row(
        &mut rows,
        "F statistic",
        results
            .iter()
            .map(|r| r.fit.f_stat.map(|f| Cell::num(f.stat)).unwrap_or(Cell::Empty))
            .collect(),
    );
    push_summary_row(
        &mut rows,
        "F p-value",
        results
            .iter()
            .map(|r| r.fit.f_stat.map(|f| Cell::pval(f.p)).unwrap_or(Cell::Empty))
            .collect(),
    );
    push_summary_row(
        &mut rows,
        "Wald chi2",
        results
            .iter()
            .map(|r| {
                r.fit
                    .wald_chi2
                    .map(|w| Cell::num(w.stat))
                    .unwrap_or(Cell::Empty)
            })
            .collect(),
    );
    push_summary_row(
        &mut rows,
        "Wald p-value",
        results
            .iter()
            .map(|r| {
                r.fit
                    .wald_chi2
                    .map(|w| Cell::pval(w.p))
                    .unwrap_or(Cell::Empty)
            })
            .collect(),
    );

    let mut section =
        Section::new(id, title, "estimation").with_table(Table { columns, rows });
    for r in results {
        for n in &r.notes {
            section.notes.push(format!("{}: {n}", r.method));
        }
    }
    section
}

/// One row per hypothesis test: statistic, reference distribution, p-value,
/// and the decision re-phrased at `alpha`.
pub fn battery_section(
    id: impl Into<String>,
    title: impl Into<String>,
    provenance: impl Into<String>,
    tests: &[&TestResult],
    alpha: f64,
) -> Section {
    let columns = ["Test", "Statistic", "Distribution", "p-value", "Decision"]
        .map(String::from)
        .to_vec();
    let mut notes = Vec::new();
    let rows = tests
        .iter()
        .map(|t| {
            for n in &t.notes {
                notes.push(format!("{}: {n}", t.name));
            }
            let decision = if t.statistic.is_nan() {
                t.decision.clone()
            } else {
                decision_text(t.p_value, alpha)
            };
            vec![
                Cell::text(&t.name),
                Cell::num(t.statistic),
                Cell::text(t.distribution.to_string()),
                Cell::pval(t.p_value),
                Cell::text(decision),
            ]
        })
        .collect();
    let mut section =
        Section::new(id, title, provenance).with_table(Table { columns, rows });
    section.notes = notes;
    section
}

/// The pooled-vs-FE-vs-RE arbitration at significance `alpha`:
/// both F and the LM test rejecting hands the call to Hausman; one rejecting
/// picks its own winner; neither keeps pooled OLS.
pub fn model_selection(
    f_p: Option<f64>,
    bplm_p: Option<f64>,
    hausman_p: Option<f64>,
    alpha: f64,
) -> Option<&'static str> {
    let f_rej = f_p? < alpha;
    let lm_rej = bplm_p? < alpha;
    Some(match (f_rej, lm_rej) {
        (true, true) => {
            if hausman_p? < alpha {
                "Fixed Effect"
            } else {
                "Random Effect"
            }
        }
        (true, false) => "Fixed Effect",
        (false, true) => "Random Effect",
        (false, false) => "Pooled OLS",
    })
}

/// Specification-test block (poolability F, the random-effects LM test,
/// Hausman) with the model-selection verdict as the final row.
pub fn specification_section(
    id: impl Into<String>,
    tests: &[&TestResult],
    selection: Option<&str>,
    alpha: f64,
) -> Section {
    let mut section = battery_section(
        id,
        "Specification tests",
        "specification_tests",
        tests,
        alpha,
    );
    if let (Some(sel), Some(table)) = (selection, section.table.as_mut()) {
        table.rows.push(vec![
            Cell::text("Result"),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::text(sel),
        ]);
    }
    section
}

/// Per-regressor endogeneity rows: score and F forms side by side.
pub fn dwh_section(
    id: impl Into<String>,
    rows_in: &[(String, TestResult, TestResult)],
    alpha: f64,
) -> Section {
    let columns = [
        "Regressor",
        "Durbin chi2",
        "Durbin p",
        "Wu-Hausman F",
        "F p",
        "Decision",
    ]
    .map(String::from)
    .to_vec();
    let mut notes = Vec::new();
    let rows = rows_in
        .iter()
        .map(|(name, durbin, wu)| {
            for n in durbin.notes.iter().chain(&wu.notes) {
                notes.push(format!("{name}: {n}"));
            }
            vec![
                Cell::text(name),
                Cell::num(durbin.statistic),
                Cell::pval(durbin.p_value),
                Cell::num(wu.statistic),
                Cell::pval(wu.p_value),
                Cell::text(decision_text(durbin.p_value, alpha)),
            ]
        })
        .collect();
    let mut section = Section::new(id, "Endogeneity tests", "dwh_endogeneity_test")
        .with_table(Table { columns, rows });
    section.notes = notes;
    section
}

/// GMM estimates with the validity block underneath: group and instrument
/// counts, the instrument specification, Sargan, the serial-correlation
/// z-tests, and (when present) the difference-in-Sargan pair.
pub fn gmm_section(
    id: impl Into<String>,
    fit: &GmmFit,
    validity: &[&TestResult],
) -> Section {
    let r = &fit.result;
    let columns = ["Variable", "Difference GMM", "p-value"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    for j in 0..r.coef_names.len() {
        rows.push(vec![
            Cell::text(&r.coef_names[j]),
            Cell::starred(r.coefficients[j], r.p_values[j]),
            Cell::pval(r.p_values[j]),
        ]);
        rows.push(vec![Cell::Empty, Cell::paren(r.stats[j]), Cell::Empty]);
    }
    rows.push(vec![
        Cell::text("Observations"),
        Cell::int(r.n_obs),
        Cell::Empty,
    ]);
    if let Auxiliary::Gmm {
        instrument_count,
        group_count,
        robust,
    } = r.auxiliary
    {
        rows.push(vec![
            Cell::text("No. of groups"),
            Cell::int(group_count),
            Cell::Empty,
        ]);
        rows.push(vec![
            Cell::text("No. of instruments"),
            Cell::int(instrument_count),
            Cell::Empty,
        ]);
        rows.push(vec![
            Cell::text("Estimator"),
            Cell::text(if robust {
                "one-step difference GMM, robust"
            } else {
                "one-step difference GMM"
            }),
            Cell::Empty,
        ]);
    }
    rows.push(vec![
        Cell::text("Instruments"),
        Cell::text(canonical_spec_string(&fit.plan.directives)),
        Cell::Empty,
    ]);
    if let Some(w) = r.fit.wald_chi2 {
        rows.push(vec![
            Cell::text(format!("Wald chi2({})", w.df as i64)),
            Cell::num(w.stat),
            Cell::pval(w.p),
        ]);
    }
    // The estimator already carries the plan's notes in `result.notes`.
    let mut notes: Vec<String> = r.notes.clone();
    for t in validity {
        rows.push(vec![
            Cell::text(format!("{} [{}]", t.name, t.distribution)),
            Cell::num(t.statistic),
            Cell::pval(t.p_value),
        ]);
        for n in &t.notes {
            notes.push(format!("{}: {n}", t.name));
        }
    }
    let mut section = Section::new(id, "Difference GMM", "estimate_one_step")
        .with_table(Table { columns, rows });
    section.notes = notes;
    section
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::model::{FitStats, Method};
    use nalgebra::{DMatrix, DVector};

    fn result(method: Method, names: &[&str], coefs: &[f64]) -> EstimationResult {
        let k = names.len();
        let mut r = EstimationResult {
            method,
            coef_names: names.iter().map(|s| s.to_string()).collect(),
            coefficients: DVector::from_row_slice(coefs),
            covariance: DMatrix::identity(k, k),
            std_errors: vec![],
            stats: vec![],
            p_values: vec![],
            n_obs: 100,
            n_entities: 10,
            fit: FitStats::default(),
            rows: vec![],
            residuals: vec![],
            fitted: vec![],
            ssr: 1.0,
            auxiliary: crate::model::Auxiliary::None,
            notes: vec![],
        };
        r.compute_inference(crate::model::CoefInference::Z);
        r
    }

    #[test]
    fn side_by_side_unions_coefficients() {
        let a = result(Method::PooledOls, &["const", "x"], &[1.0, 2.0]);
        let b = result(Method::FixedEffects, &["x"], &[2.5]);
        let s = estimation_section("e", "Estimates", &[&a, &b]);
        let t = s.table.unwrap();
        assert_eq!(t.columns, vec!["Variable", "Pooled OLS", "Fixed Effects"]);
        // const row: present for POLS, empty for FE.
        assert_eq!(t.rows[0][0], Cell::text("const"));
        assert!(matches!(t.rows[0][1], Cell::Starred { .. }));
        assert_eq!(t.rows[0][2], Cell::Empty);
        // statistic row beneath.
        assert!(matches!(t.rows[1][1], Cell::Paren { .. }));
        // x present for both.
        assert_eq!(t.rows[2][0], Cell::text("x"));
        assert!(matches!(t.rows[2][2], Cell::Starred { .. }));
        // sample sizes rendered once per column.
        assert!(t
            .rows
            .iter()
            .any(|r| r[0] == Cell::text("Observations")));
    }

    #[test]
    fn selection_logic_matches_decision_vocabulary() {
        let a = 0.01;
        assert_eq!(
            model_selection(Some(0.001), Some(0.001), Some(0.005), a),
            Some("Fixed Effect")
        );
        assert_eq!(
            model_selection(Some(0.001), Some(0.001), Some(0.15), a),
            Some("Random Effect")
        );
        assert_eq!(
            model_selection(Some(0.001), Some(0.5), None, a),
            Some("Fixed Effect")
        );
        assert_eq!(
            model_selection(Some(0.5), Some(0.001), None, a),
            Some("Random Effect")
        );
        assert_eq!(
            model_selection(Some(0.5), Some(0.5), None, a),
            Some("Pooled OLS")
        );
        assert_eq!(model_selection(None, Some(0.001), None, a), None);
        // Hausman needed only when both reject.
        assert_eq!(model_selection(Some(0.001), Some(0.001), None, a), None);
    }

    #[test]
    fn specification_section_appends_result_row() {
        let f = TestResult::upper_tail(
            "poolability F",
            9.0,
            Distribution::F { df1: 5.0, df2: 40.0 },
            "pooled intercepts are equal",
            0.05,
        );
        let s = specification_section("spec", &[&f], Some("Fixed Effect"), 0.01);
        let t = s.table.unwrap();
        let last = t.rows.last().unwrap();
        assert_eq!(last[0], Cell::text("Result"));
        assert_eq!(last[4], Cell::text("Fixed Effect"));
    }

    #[test]
    fn battery_rephrases_decisions_at_alpha() {
        let t = TestResult::with_p(
            "x",
            5.0,
            Distribution::ChiSquare { df: 1.0 },
            0.025,
            "h0",
            0.05,
        );
        let s = battery_section("b", "B", "tests", &[&t], 0.01);
        let table = s.table.unwrap();
        assert_eq!(
            table.rows[0][4],
            Cell::text("fail to reject H0 at 1%")
        );
    }
}

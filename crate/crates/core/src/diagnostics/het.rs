//! Heteroskedasticity tests: a fitted-value score test for pooled OLS and a
//! groupwise Wald test for fixed-effects residuals.

use std::collections::BTreeMap;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::model::{EstimationResult, Method, TestResult};

/// Breusch-Pagan / Cook-Weisberg score test against variance drifting with
/// the fitted values.
///
/// With u the pooled-OLS residuals and s2 = SSR/n, regress u^2/s2 on the
/// fitted values; the explained sum of squares divided by 2 is chi-square(1)
/// under homoskedasticity.
pub fn breusch_pagan_het_test(pols: &EstimationResult) -> Result<TestResult> {
    if pols.method != Method::PooledOls {
        return Err(Error::validation(
            "the fitted-value heteroskedasticity test needs a pooled OLS result",
        ));
    }
    let n = pols.residuals.len();
    if n < 3 {
        return Err(Error::validation("too few residuals for the score test"));
    }
    let nf = n as f64;
    let s2: f64 = pols.residuals.iter().map(|e| e * e).sum::<f64>() / nf;
    if s2 <= 0.0 {
        return Err(Error::validation(
            "residuals are identically zero; the score test is undefined",
        ));
    }
    let g: Vec<f64> = pols.residuals.iter().map(|e| e * e / s2).collect();
    let fbar: f64 = pols.fitted.iter().sum::<f64>() / nf;
    let gbar: f64 = g.iter().sum::<f64>() / nf;
    let sff: f64 = pols.fitted.iter().map(|f| (f - fbar) * (f - fbar)).sum();
    let name = "Breusch-Pagan / Cook-Weisberg test for heteroskedasticity";
    let h0 = "constant error variance (homoskedasticity)";
    if sff <= 1e-12 * nf * (1.0 + fbar * fbar) {
        let mut t = TestResult {
            name: name.into(),
            statistic: f64::NAN,
            distribution: Distribution::ChiSquare { df: 1.0 },
            p_value: f64::NAN,
            h0: h0.into(),
            decision: "undefined: fitted values are constant, so variance cannot \
                       be related to them"
                .into(),
            notes: Vec::new(),
        };
        t.notes.push("fitted values have no variation".into());
        return Ok(t);
    }
    let sgf: f64 = pols
        .fitted
        .iter()
        .zip(&g)
        .map(|(f, gi)| (f - fbar) * (gi - gbar))
        .sum();
    // Explained sum of squares of the auxiliary regression = Sgf^2 / Sff.
    let stat = sgf * sgf / sff / 2.0;
    Ok(TestResult::upper_tail(
        name,
        stat,
        Distribution::ChiSquare { df: 1.0 },
        h0,
        0.05,
    ))
}

/// Groupwise-heteroskedasticity Wald test on fixed-effects residuals.
///
/// W = sum_i (s_i^2 - s^2)^2 / V_i with s_i^2 the entity residual variance,
/// s^2 the pooled variance, and V_i the estimated variance of s_i^2;
/// chi-square with one degree of freedom per contributing entity. Entities
/// whose fourth-moment estimate V_i is zero cannot contribute and are
/// excluded with a note.
pub fn modified_wald_groupwise_het(fe: &EstimationResult) -> Result<TestResult> {
    if fe.method != Method::FixedEffects {
        return Err(Error::validation(
            "the groupwise heteroskedasticity test needs a fixed-effects result",
        ));
    }
    let mut by_entity: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (r, &(i, _)) in fe.rows.iter().enumerate() {
        by_entity.entry(i).or_default().push(fe.residuals[r]);
    }
    let n = fe.residuals.len() as f64;
    let pooled: f64 = fe.residuals.iter().map(|e| e * e).sum::<f64>() / n;

    let mut notes = Vec::new();
    let mut stat = 0.0;
    let mut contributing = 0usize;
    for (&i, res) in &by_entity {
        let t_i = res.len();
        if t_i < 2 {
            notes.push(format!(
                "entity index {i} has a single residual and is excluded from the \
                 groupwise test"
            ));
            continue;
        }
        let tf = t_i as f64;
        let s_i: f64 = res.iter().map(|e| e * e).sum::<f64>() / tf;
        let v_i: f64 = res
            .iter()
            .map(|e| {
                let d = e * e - s_i;
                d * d
            })
            .sum::<f64>()
            / (tf * (tf - 1.0));
        if v_i <= 0.0 {
            notes.push(format!(
                "entity index {i} has zero variance of its squared residuals and \
                 is excluded from the groupwise test"
            ));
            continue;
        }
        stat += (s_i - pooled) * (s_i - pooled) / v_i;
        contributing += 1;
    }
    if contributing == 0 {
        return Err(Error::validation(
            "no entity provides a usable fourth-moment estimate; the groupwise \
             test is undefined",
        ));
    }
    let mut t = TestResult::upper_tail(
        "Modified Wald test for groupwise heteroskedasticity",
        stat,
        Distribution::ChiSquare {
            df: contributing as f64,
        },
        "entity residual variances are all equal to the pooled variance",
        0.05,
    );
    t.notes = notes;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fe::fixed_effects;
    use crate::estimators::pols::pooled_ols;
    use crate::model::ModelSpec;
    use crate::panel::PanelDataset;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn het_panel(scale_with_x: bool, seed: u64) -> PanelDataset {
        let mut p = PanelDataset::new(
            (0..20).map(|i| format!("e{i}")).collect(),
            0,
            8,
        )
        .unwrap();
        let mut state = seed;
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for _ in 0..20 {
            for _ in 0..8 {
                let x = lcg(&mut state) * 2.0 + 3.0;
                let sd = if scale_with_x { x } else { 1.0 };
                xs.push(Some(x));
                ys.push(Some(1.0 + 2.0 * x + sd * lcg(&mut state)));
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        p
    }

    #[test]
    fn score_test_flags_variance_in_fitted() {
        let p = het_panel(true, 99);
        let r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        let t = breusch_pagan_het_test(&r).unwrap();
        assert!(t.p_value < 0.05, "p = {}", t.p_value);
    }

    #[test]
    fn score_test_calm_when_homoskedastic() {
        let p = het_panel(false, 17);
        let r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        let t = breusch_pagan_het_test(&r).unwrap();
        assert!(t.p_value > 0.05, "p = {}", t.p_value);
    }

    #[test]
    fn score_test_undefined_for_constant_fit() {
        let p = het_panel(false, 5);
        let mut r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        for f in r.fitted.iter_mut() {
            *f = 2.5;
        }
        let t = breusch_pagan_het_test(&r).unwrap();
        assert!(t.statistic.is_nan());
        assert!(t.decision.starts_with("undefined"));
    }

    #[test]
    fn groupwise_test_zero_when_entities_identical() {
        // Identical residual vectors entity by entity: W = 0, p = 1.
        let mut p = PanelDataset::new(
            (0..4).map(|i| format!("e{i}")).collect(),
            0,
            6,
        )
        .unwrap();
        let noise = [0.4, -0.3, 0.2, -0.35, 0.15, -0.1];
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for _ in 0..4 {
            for t in 0..6 {
                let x = t as f64;
                xs.push(Some(x));
                ys.push(Some(2.0 + 0.5 * x + noise[t]));
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        let fe = fixed_effects(&p, &ModelSpec::static_spec("y", &["x"]), false).unwrap();
        let t = modified_wald_groupwise_het(&fe).unwrap();
        assert!(t.statistic < 1e-16, "W = {}", t.statistic);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        assert!(matches!(t.distribution, Distribution::ChiSquare { df } if df == 4.0));
    }

    #[test]
    fn groupwise_test_flags_planted_heterogeneity() {
        let mut p = PanelDataset::new(
            (0..10).map(|i| format!("e{i}")).collect(),
            0,
            10,
        )
        .unwrap();
        let mut state = 31u64;
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for i in 0..10 {
            let sd = if i < 5 { 0.3 } else { 5.0 };
            for t in 0..10 {
                let x = lcg(&mut state) + 0.05 * t as f64;
                xs.push(Some(x));
                ys.push(Some(1.0 + x + sd * lcg(&mut state)));
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        let fe = fixed_effects(&p, &ModelSpec::static_spec("y", &["x"]), false).unwrap();
        let t = modified_wald_groupwise_het(&fe).unwrap();
        assert!(t.p_value < 0.01, "p = {}", t.p_value);
    }
}

//! Tests that arbitrate between pooled, random-effects, and fixed-effects
//! specifications.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::estimators::design::PERIOD_DUMMY_PREFIX;
use crate::linalg::pinv;
use crate::model::{EstimationResult, Method, TestResult};

/// Lagrange-multiplier test for the presence of an entity random effect,
/// in the unbalanced-panel form.
///
/// With e the pooled-OLS residuals grouped by entity, T_i the entity sizes,
/// A = sum_i (sum_t e_it)^2 / sum_it e_it^2 - 1 and
/// scale = (sum_i T_i)^2 / (2 sum_i T_i (T_i - 1)), the one-sided statistic
/// is scale * A^2 when A > 0 and 0 otherwise (the variance component cannot
/// be negative, so negative A is boundary evidence). Reference distribution:
/// an equal mixture of a point mass at zero and chi-square(1).
pub fn bp_lm_re_test(pols: &EstimationResult) -> Result<TestResult> {
    if pols.method != Method::PooledOls {
        return Err(Error::validation(
            "the random-effects LM test needs a pooled OLS result",
        ));
    }
    let mut by_entity: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (r, &(i, _)) in pols.rows.iter().enumerate() {
        by_entity.entry(i).or_default().push(pols.residuals[r]);
    }
    let mut notes = Vec::new();
    by_entity.retain(|&i, v| {
        if v.len() >= 2 {
            true
        } else {
            notes.push(format!(
                "entity index {i} observed once contributes nothing to the LM test"
            ));
            false
        }
    });
    if by_entity.is_empty() {
        return Err(Error::validation(
            "every entity is observed only once; the LM test is undefined",
        ));
    }
    let sum_t: f64 = by_entity.values().map(|v| v.len() as f64).sum();
    let sum_tt1: f64 = by_entity
        .values()
        .map(|v| {
            let t = v.len() as f64;
            t * (t - 1.0)
        })
        .sum();
    let ssq: f64 = by_entity
        .values()
        .flatten()
        .map(|e| e * e)
        .sum();
    if ssq <= 0.0 {
        return Err(Error::validation(
            "residuals are identically zero; the LM test is undefined",
        ));
    }
    let sum_sums: f64 = by_entity
        .values()
        .map(|v| {
            let s: f64 = v.iter().sum();
            s * s
        })
        .sum();
    let a = sum_sums / ssq - 1.0;
    let scale = sum_t * sum_t / (2.0 * sum_tt1);
    let statistic = if a > 0.0 { scale * a * a } else { 0.0 };
    let mut t = TestResult::upper_tail(
        "Breusch-Pagan Lagrange multiplier test for random effects",
        statistic,
        Distribution::ChiBar2_01,
        "the variance of the entity random effect is zero",
        0.05,
    );
    t.notes = notes;
    Ok(t)
}

/// Quadratic form q' (V)^+ q via the SVD pseudo-inverse.
///
/// Returns the (possibly negative, when V is indefinite) statistic and the
/// numerical rank of V.
fn contrast_statistic(q: &DVector<f64>, v: &DMatrix<f64>) -> Result<(f64, usize)> {
    let (vp, rank) = pinv(v)?;
    Ok(((&vp * q).dot(q), rank))
}

/// Contrast test of fixed effects against random effects.
///
/// Compares the coefficients the two methods share, excluding the intercept
/// and any period indicator columns; H = q'(V_FE - V_RE)^+ q with
/// q the coefficient difference, referred to chi-square on the number of
/// compared coefficients. A rank-deficient or indefinite variance contrast
/// is handled by the pseudo-inverse and disclosed in the notes; a negative
/// quadratic form is clamped to zero.
pub fn hausman_test(fe: &EstimationResult, re: &EstimationResult) -> Result<TestResult> {
    if fe.method != Method::FixedEffects || re.method != Method::RandomEffects {
        return Err(Error::validation(
            "the specification contrast needs a fixed-effects result and a \
             random-effects result",
        ));
    }
    if fe.rows != re.rows {
        return Err(Error::validation(
            "fixed- and random-effects results were estimated on different samples",
        ));
    }
    let mut fe_idx = Vec::new();
    let mut re_idx = Vec::new();
    for (j, name) in fe.coef_names.iter().enumerate() {
        let lower = name.to_ascii_lowercase();
        if lower == "const" || name.starts_with(PERIOD_DUMMY_PREFIX) {
            continue;
        }
        if let Some(r) = re.coef_index(name) {
            fe_idx.push(j);
            re_idx.push(r);
        }
    }
    let k = fe_idx.len();
    if k == 0 {
        return Err(Error::validation(
            "the two results share no comparable coefficients",
        ));
    }
    let mut q = DVector::zeros(k);
    let mut vdiff = DMatrix::zeros(k, k);
    for a in 0..k {
        q[a] = fe.coefficients[fe_idx[a]] - re.coefficients[re_idx[a]];
        for b in 0..k {
            vdiff[(a, b)] = fe.covariance[(fe_idx[a], fe_idx[b])]
                - re.covariance[(re_idx[a], re_idx[b])];
        }
    }
    let (raw, rank) = contrast_statistic(&q, &vdiff)?;
    let mut notes = Vec::new();
    if rank < k {
        notes.push(format!(
            "variance contrast has rank {rank} of {k}; pseudo-inverse used"
        ));
    }
    let statistic = if raw < 0.0 {
        notes.push(
            "indefinite variance contrast produced a negative quadratic form; \
             statistic clamped to zero"
                .into(),
        );
        0.0
    } else {
        raw
    };
    let mut t = TestResult::upper_tail(
        "Hausman specification test (fixed vs random effects)",
        statistic,
        Distribution::ChiSquare { df: k as f64 },
        "coefficient differences are not systematic (random effects is consistent)",
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
    use crate::estimators::re::random_effects;
    use crate::model::ModelSpec;
    use crate::panel::PanelDataset;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn effects_panel(effect_sd: f64, seed: u64) -> PanelDataset {
        let mut p = PanelDataset::new(
            (0..15).map(|i| format!("e{i}")).collect(),
            0,
            8,
        )
        .unwrap();
        let mut state = seed;
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for _ in 0..15 {
            let alpha = lcg(&mut state) * 2.0 * effect_sd;
            for t in 0..8 {
                let x = lcg(&mut state) * 2.0 + 0.1 * t as f64;
                xs.push(Some(x));
                ys.push(Some(alpha + 1.0 + 0.5 * x + lcg(&mut state)));
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        p
    }

    #[test]
    fn lm_detects_entity_effects() {
        let p = effects_panel(4.0, 21);
        let r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        let t = bp_lm_re_test(&r).unwrap();
        assert!(t.p_value < 0.01, "p = {}", t.p_value);
    }

    #[test]
    fn lm_zero_at_boundary() {
        // Doctored residuals with zero within-entity sums: A < 0 clamps to 0.
        let p = effects_panel(0.0, 9);
        let mut r = pooled_ols(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        let mut by_entity: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (row, &(i, _)) in r.rows.iter().enumerate() {
            by_entity.entry(i).or_default().push(row);
        }
        for rows in by_entity.values() {
            for (pos, &row) in rows.iter().enumerate() {
                r.residuals[row] = if pos % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        let t = bp_lm_re_test(&r).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn lm_permutation_invariant() {
        // Reversing the entity order changes only the accumulation order.
        let p = effects_panel(2.0, 33);
        let spec = ModelSpec::static_spec("y", &["x"]);
        let r1 = pooled_ols(&p, &spec).unwrap();
        let n_ent = p.n_entities();
        let mut rev = PanelDataset::new(
            (0..n_ent).map(|i| format!("e{i}")).collect(),
            0,
            p.n_periods(),
        )
        .unwrap();
        for s in 0..p.series_names().len() {
            let mut vals = Vec::new();
            for i in (0..n_ent).rev() {
                for t in 0..p.n_periods() {
                    vals.push(p.value(s, i, t));
                }
            }
            rev.add_series(p.series_names()[s].clone(), vals).unwrap();
        }
        let r2 = pooled_ols(&rev, &spec).unwrap();
        let t1 = bp_lm_re_test(&r1).unwrap();
        let t2 = bp_lm_re_test(&r2).unwrap();
        // Identical per-entity contributions, re-ordered accumulation.
        assert!(
            (t1.statistic - t2.statistic).abs()
                <= 1e-12 * t1.statistic.abs().max(1.0),
            "{} vs {}",
            t1.statistic,
            t2.statistic
        );
    }

    #[test]
    fn hausman_zero_for_equal_coefficients() {
        let p = effects_panel(1.0, 3);
        let spec = ModelSpec::static_spec("y", &["x"]);
        let fe = fixed_effects(&p, &spec, false).unwrap();
        let re = random_effects(&p, &spec).unwrap();
        let mut re2 = re.clone();
        let j = re2.coef_index("x").unwrap();
        re2.coefficients[j] = fe.coefficients[fe.coef_index("x").unwrap()];
        let t = hausman_test(&fe, &re2).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn hausman_runs_on_matching_results() {
        let p = effects_panel(2.0, 41);
        let spec = ModelSpec::static_spec("y", &["x"]);
        let fe = fixed_effects(&p, &spec, false).unwrap();
        let re = random_effects(&p, &spec).unwrap();
        let t = hausman_test(&fe, &re).unwrap();
        assert!(matches!(t.distribution, Distribution::ChiSquare { df } if df == 1.0));
        assert!(t.statistic >= 0.0);
        assert!((0.0..=1.0).contains(&t.p_value));
    }

    #[test]
    fn hausman_rejects_mismatched_samples() {
        let p = effects_panel(1.0, 12);
        let spec = ModelSpec::static_spec("y", &["x"]);
        let fe = fixed_effects(&p, &spec, false).unwrap();
        let p2 = effects_panel(1.0, 13);
        let re = random_effects(&p2, &spec).unwrap();
        // Same shape but different data: rows match, so doctor the row list.
        let mut re2 = re;
        if fe.rows == re2.rows {
            re2.rows.pop();
        }
        assert!(hausman_test(&fe, &re2).is_err());
    }

    #[test]
    fn contrast_invariant_under_reparameterization() {
        // q -> Tq, V -> TVT' leaves the quadratic form unchanged for any
        // nonsingular T when V itself is nonsingular.
        let q = DVector::from_vec(vec![0.3, -0.7, 1.1]);
        let v = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 0.9],
        );
        let t = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 3.0, 0.0, 1.0],
        );
        let (h1, _) = contrast_statistic(&q, &v).unwrap();
        let qt = &t * &q;
        let vt = &t * &v * t.transpose();
        let (h2, _) = contrast_statistic(&qt, &vt).unwrap();
        assert!((h1 - h2).abs() < 1e-8 * h1.abs().max(1.0), "{h1} vs {h2}");
    }
}

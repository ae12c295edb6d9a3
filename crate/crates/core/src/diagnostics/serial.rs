//! First-order serial-correlation test for panel idiosyncratic errors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::gmm::instruments::first_difference;
use crate::linalg::lstsq;
use crate::model::{ModelSpec, TestResult};
use crate::panel::PanelDataset;

/// Wooldridge-style test for first-order autocorrelation.
///
/// Regresses the first-differenced dependent on the first-differenced
/// regressors without an intercept, then regresses those residuals on their
/// own one-period lag. Under serially uncorrelated idiosyncratic errors the
/// lag coefficient is -0.5 (the MA(1) signature of differencing), so the
/// test is H0: rho = -0.5 with an entity-clustered variance, referred to
/// F(1, G - 1) where G is the number of entities contributing lag pairs.
pub fn wooldridge_autocorr_test(panel: &PanelDataset, spec: &ModelSpec) -> Result<TestResult> {
    spec.validate()?;
    if spec.regressors.is_empty() {
        return Err(Error::validation(
            "the serial-correlation test needs at least one regressor",
        ));
    }
    let mut names: Vec<&str> = vec![spec.dependent.as_str()];
    names.extend(spec.regressors.iter().map(|s| s.as_str()));
    let diffs = first_difference(panel, &names)?;
    let dep = diffs.series_index(&spec.dependent)?;
    let regs: Vec<usize> = spec
        .regressors
        .iter()
        .map(|r| diffs.series_index(r))
        .collect::<Result<_>>()?;

    // Complete cases of the differenced regression.
    let mut series = vec![dep];
    series.extend(&regs);
    let rows = diffs.complete_rows(&series);
    let k = regs.len();
    if rows.len() <= k {
        return Err(Error::validation(
            "not enough differenced observations for the serial-correlation test",
        ));
    }
    let mut x = DMatrix::zeros(rows.len(), k);
    let mut y = DVector::zeros(rows.len());
    for (r, &(i, t)) in rows.iter().enumerate() {
        y[r] = diffs.value(dep, i, t).expect("complete row");
        for (c, &s) in regs.iter().enumerate() {
            x[(r, c)] = diffs.value(s, i, t).expect("complete row");
        }
    }
    let sol = lstsq(&x, &y)?;
    if sol.rank < k {
        return Err(Error::validation(
            "differenced regressors are collinear; cannot run the serial-correlation test",
        ));
    }
    let resid = &y - &x * &sol.beta;

    // Adjacent residual pairs (e_{t-1}, e_t) within each entity.
    let index: BTreeMap<(usize, usize), usize> = rows
        .iter()
        .enumerate()
        .map(|(r, &key)| (key, r))
        .collect();
    // Per entity: list of (lagged residual, current residual).
    let mut pairs: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (&(i, t), &r) in &index {
        if t == 0 {
            continue;
        }
        if let Some(&rl) = index.get(&(i, t - 1)) {
            pairs.entry(i).or_default().push((resid[rl], resid[r]));
        }
    }
    pairs.retain(|_, v| !v.is_empty());
    let groups = pairs.len();
    if groups < 2 {
        return Err(Error::validation(
            "fewer than 2 entities contribute residual lag pairs; cannot cluster",
        ));
    }

    let sxx: f64 = pairs
        .values()
        .flatten()
        .map(|&(el, _)| el * el)
        .sum();
    if sxx <= 0.0 {
        return Err(Error::validation(
            "lagged residuals have no variation; the test statistic is undefined",
        ));
    }
    let sxy: f64 = pairs
        .values()
        .flatten()
        .map(|&(el, e)| el * e)
        .sum();
    let rho = sxy / sxx;

    // Entity-clustered sandwich variance with the usual finite-sample factor.
    let mut meat = 0.0;
    for v in pairs.values() {
        let s: f64 = v.iter().map(|&(el, e)| el * (e - rho * el)).sum();
        meat += s * s;
    }
    let g = groups as f64;
    // Finite-sample cluster factor (G/(G-1))*((m-1)/(m-k)); k = 1 regressor,
    // so the second ratio is exactly 1.
    let correction = g / (g - 1.0);
    let var = correction * meat / (sxx * sxx);
    if var <= 0.0 {
        return Err(Error::numerical(
            "clustered variance of the residual autoregression collapsed to zero",
        ));
    }

    let f = (rho + 0.5) * (rho + 0.5) / var;
    Ok(TestResult::upper_tail(
        "Wooldridge test for autocorrelation in panel data",
        f,
        Distribution::F {
            df1: 1.0,
            df2: g - 1.0,
        },
        "no first-order autocorrelation in the idiosyncratic errors",
        0.05,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small deterministic generator for fixture noise.
    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn panel_with_ar(rho: f64, n: usize, t_len: usize, seed: u64) -> PanelDataset {
        let mut p = PanelDataset::new(
            (0..n).map(|i| format!("e{i}")).collect(),
            0,
            t_len,
        )
        .unwrap();
        let mut state = seed;
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for i in 0..n {
            let alpha = lcg(&mut state) * 4.0;
            let mut e_prev = lcg(&mut state);
            for tt in 0..t_len {
                let x = lcg(&mut state) * 2.0 + 0.1 * tt as f64;
                let e = rho * e_prev + lcg(&mut state);
                e_prev = e;
                xs.push(Some(x));
                ys.push(Some(alpha + 1.5 * x + e));
                let _ = i;
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        p
    }

    #[test]
    fn detects_strong_autocorrelation() {
        let p = panel_with_ar(0.9, 40, 10, 7);
        let spec = ModelSpec::static_spec("y", &["x"]);
        let r = wooldridge_autocorr_test(&p, &spec).unwrap();
        assert!(r.p_value < 0.05, "p = {}", r.p_value);
        assert!(matches!(r.distribution, Distribution::F { df1, df2 }
            if df1 == 1.0 && df2 == 39.0));
    }

    #[test]
    fn calm_on_white_noise() {
        let p = panel_with_ar(0.0, 40, 10, 11);
        let spec = ModelSpec::static_spec("y", &["x"]);
        let r = wooldridge_autocorr_test(&p, &spec).unwrap();
        assert!(r.p_value > 0.05, "p = {}", r.p_value);
    }

    #[test]
    fn needs_two_entities() {
        let p = panel_with_ar(0.0, 1, 10, 3);
        let spec = ModelSpec::static_spec("y", &["x"]);
        assert!(wooldridge_autocorr_test(&p, &spec).is_err());
    }

    #[test]
    fn short_entities_do_not_contribute() {
        // Entities with two observations produce one differenced residual and
        // no lag pair; only the long entities cluster.
        let mut p = PanelDataset::new(
            vec!["long1".into(), "long2".into(), "short".into()],
            0,
            8,
        )
        .unwrap();
        let mut state = 5u64;
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for i in 0..3 {
            for t in 0..8 {
                if i == 2 && t >= 2 {
                    ys.push(None);
                    xs.push(None);
                } else {
                    let x = lcg(&mut state);
                    xs.push(Some(x));
                    ys.push(Some(2.0 * x + lcg(&mut state) + t as f64 * 0.01));
                }
            }
        }
        p.add_series("Y", ys).unwrap();
        p.add_series("X", xs).unwrap();
        let r = wooldridge_autocorr_test(&p, &ModelSpec::static_spec("y", &["x"])).unwrap();
        // Two contributing entities -> denominator df 1.
        assert!(matches!(r.distribution, Distribution::F { df2, .. } if df2 == 1.0));
    }
}

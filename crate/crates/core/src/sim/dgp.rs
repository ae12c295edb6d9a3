//! The dynamic-panel data-generating process.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// Parameters of the synthetic dynamic panel
/// `y_it = a_i + omega * y_{i,t-1} + theta' x_it + eps_it`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub n_entities: usize,
    pub n_periods: usize,
    /// Leading periods generated and discarded so the recorded sample starts
    /// near the stationary distribution. Must be at least 20.
    pub burn_in: usize,
    /// Autoregressive coefficient on the lagged dependent variable;
    /// `|omega| < 1`.
    pub omega: f64,
    /// Slope on each regressor; the number of regressors is `theta.len()`.
    pub theta: Vec<f64>,
    /// Standard deviation of the entity effect `a_i ~ N(0, sd^2)`.
    pub fixed_effect_sd: f64,
    /// Standard deviation of the idiosyncratic error (before the groupwise
    /// scale); must be positive.
    pub idiosyncratic_sd: f64,
    /// AR(1) coefficient of each regressor's own process, each in (-1, 1);
    /// must have the same length as `theta`.
    pub regressor_persistence: Vec<f64>,
    /// How strongly each regressor carries the entity effect:
    /// `x_jit = loading * a_i + chi_jit` with `chi` the AR(1) part.
    pub regressor_effect_loading: f64,
    /// Correlation between each regressor's innovation and the standardized
    /// error shock of the same period, in [-1, 1]. Nonzero values make the
    /// regressors endogenous.
    pub endogeneity_corr: f64,
    /// Entities in the upper half (index >= n_entities / 2) draw errors with
    /// standard deviation `idiosyncratic_sd * groupwise_het_factor`; must be
    /// at least 1. A factor of 1 keeps the panel homoskedastic.
    pub groupwise_het_factor: f64,
    /// AR(1) coefficient of the error process, in (-1, 1). The innovation is
    /// scaled so the marginal error variance stays at the configured level.
    pub error_ar1: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            n_entities: 100,
            n_periods: 7,
            burn_in: 50,
            omega: 0.5,
            theta: vec![1.0],
            fixed_effect_sd: 1.0,
            idiosyncratic_sd: 1.0,
            regressor_persistence: vec![0.5],
            regressor_effect_loading: 0.0,
            endogeneity_corr: 0.0,
            groupwise_het_factor: 1.0,
            error_ar1: 0.0,
            seed: 0,
        }
    }
}

impl DgpConfig {
    /// Checks every parameter bound; generation refuses to start otherwise.
    pub fn validate(&self) -> Result<()> {
        if self.n_entities == 0 || self.n_periods == 0 {
            return Err(Error::validation(
                "n_entities and n_periods must be positive",
            ));
        }
        if self.burn_in < 20 {
            return Err(Error::validation(format!(
                "burn_in must be at least 20; got {}",
                self.burn_in
            )));
        }
        if !(self.omega.is_finite() && self.omega.abs() < 1.0) {
            return Err(Error::validation(format!(
                "omega must satisfy |omega| < 1; got {}",
                self.omega
            )));
        }
        if !(self.fixed_effect_sd.is_finite() && self.fixed_effect_sd >= 0.0) {
            return Err(Error::validation(format!(
                "fixed_effect_sd must be non-negative; got {}",
                self.fixed_effect_sd
            )));
        }
        if !(self.idiosyncratic_sd.is_finite() && self.idiosyncratic_sd > 0.0) {
            return Err(Error::validation(format!(
                "idiosyncratic_sd must be positive; got {}",
                self.idiosyncratic_sd
            )));
        }
        if self.theta.len() != self.regressor_persistence.len() {
            return Err(Error::validation(format!(
                "theta has {} entries but regressor_persistence has {}",
                self.theta.len(),
                self.regressor_persistence.len()
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::validation("theta entries must be finite"));
        }
        for &rho in &self.regressor_persistence {
            if !(rho.is_finite() && rho.abs() < 1.0) {
                return Err(Error::validation(format!(
                    "regressor_persistence entries must lie in (-1, 1); got {rho}"
                )));
            }
        }
        if !self.regressor_effect_loading.is_finite() {
            return Err(Error::validation(
                "regressor_effect_loading must be finite",
            ));
        }
        if !(self.endogeneity_corr.is_finite() && self.endogeneity_corr.abs() <= 1.0) {
            return Err(Error::validation(format!(
                "endogeneity_corr must lie in [-1, 1]; got {}",
                self.endogeneity_corr
            )));
        }
        if !(self.groupwise_het_factor.is_finite() && self.groupwise_het_factor >= 1.0) {
            return Err(Error::validation(format!(
                "groupwise_het_factor must be at least 1; got {}",
                self.groupwise_het_factor
            )));
        }
        if !(self.error_ar1.is_finite() && self.error_ar1.abs() < 1.0) {
            return Err(Error::validation(format!(
                "error_ar1 must lie in (-1, 1); got {}",
                self.error_ar1
            )));
        }
        Ok(())
    }
}

/// Standard-normal source implementing the Box-Muller transform documented
/// in the module docs; the second variate of each pair is cached.
struct NormalSource {
    rng: ChaCha20Rng,
    cached: Option<f64>,
}

impl NormalSource {
    fn new(rng: ChaCha20Rng) -> Self {
        NormalSource { rng, cached: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.cached.take() {
            return z;
        }
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * SCALE;
        let u2 = (self.rng.next_u64() >> 11) as f64 * SCALE;
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.cached = Some(r * angle.sin());
        r * angle.cos()
    }
}

/// Generates one panel from the configured process.
///
/// The returned dataset holds the dependent series `y`, regressors
/// `x1..xk`, and the realized error series `eps`, over periods
/// `1..=n_periods`. The initial level is drawn from the approximate
/// stationary distribution given the entity effect, and `burn_in` leading
/// periods are generated and discarded on top of that.
pub fn simulate_dynamic_panel(config: &DgpConfig) -> Result<PanelDataset> {
    config.validate()?;
    let n = config.n_entities;
    let t_len = config.n_periods;
    let k = config.theta.len();
    let total = n * t_len;

    let mut y_out = vec![None; total];
    let mut x_out = vec![vec![None; total]; k];
    let mut e_out = vec![None; total];

    let corr = config.endogeneity_corr;
    let corr_rest = (1.0 - corr * corr).max(0.0).sqrt();
    // Stationary variance of y, ignoring the x/error covariance channels;
    // good enough as a starting point that the burn-in then washes out.
    let chi_var: f64 = config
        .theta
        .iter()
        .zip(&config.regressor_persistence)
        .map(|(t, r)| t * t / (1.0 - r * r))
        .sum();

    for i in 0..n {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        let mut normals = NormalSource::new(rng);

        let alpha = config.fixed_effect_sd * normals.next();
        let sigma_i = if i >= n / 2 {
            config.idiosyncratic_sd * config.groupwise_het_factor
        } else {
            config.idiosyncratic_sd
        };
        // Innovation scale keeping the marginal error variance at sigma_i^2.
        let innov_sd = sigma_i * (1.0 - config.error_ar1 * config.error_ar1).sqrt();

        let mut chi: Vec<f64> = config
            .regressor_persistence
            .iter()
            .map(|r| normals.next() / (1.0 - r * r).sqrt())
            .collect();
        let mut eps = sigma_i * normals.next();

        let theta_load: f64 = config.theta.iter().sum::<f64>() * config.regressor_effect_loading;
        let y_mean = (alpha * (1.0 + theta_load)) / (1.0 - config.omega);
        let y_sd =
            ((sigma_i * sigma_i + chi_var) / (1.0 - config.omega * config.omega)).sqrt();
        let mut y = y_mean + y_sd * normals.next();

        for t in 0..config.burn_in + t_len {
            let shock = normals.next();
            eps = config.error_ar1 * eps + innov_sd * shock;
            let mut xt_dot_theta = 0.0;
            for j in 0..k {
                let u = corr * shock + corr_rest * normals.next();
                chi[j] = config.regressor_persistence[j] * chi[j] + u;
                let xj = config.regressor_effect_loading * alpha + chi[j];
                xt_dot_theta += config.theta[j] * xj;
                if t >= config.burn_in {
                    x_out[j][i * t_len + (t - config.burn_in)] = Some(xj);
                }
            }
            y = alpha + config.omega * y + xt_dot_theta + eps;
            if t >= config.burn_in {
                let idx = i * t_len + (t - config.burn_in);
                y_out[idx] = Some(y);
                e_out[idx] = Some(eps);
            }
        }
    }

    let width = n.to_string().len();
    let entities: Vec<String> = (1..=n).map(|i| format!("e{i:0width$}")).collect();
    let mut panel = PanelDataset::new(entities, 1, t_len)?;
    panel.add_series("y", y_out)?;
    for (j, col) in x_out.into_iter().enumerate() {
        panel.add_series(&format!("x{}", j + 1), col)?;
    }
    panel.add_series("eps", e_out)?;
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> DgpConfig {
        DgpConfig {
            n_entities: 10,
            n_periods: 20,
            seed: 11,
            ..DgpConfig::default()
        }
    }

    fn series_vals(p: &PanelDataset, name: &str) -> Vec<f64> {
        let s = p.series_index(name).unwrap();
        (0..p.n_entities())
            .flat_map(|i| (0..p.n_periods()).filter_map(move |t| p.value(s, i, t)))
            .collect()
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = simulate_dynamic_panel(&base()).unwrap();
        let b = simulate_dynamic_panel(&base()).unwrap();
        for name in ["y", "x1", "eps"] {
            assert_eq!(series_vals(&a, name), series_vals(&b, name), "{name}");
        }
    }

    #[test]
    fn entity_streams_do_not_depend_on_entity_count() {
        let small = simulate_dynamic_panel(&base()).unwrap();
        let big = simulate_dynamic_panel(&DgpConfig {
            n_entities: 13,
            ..base()
        })
        .unwrap();
        let sy = small.series_index("y").unwrap();
        let by = big.series_index("y").unwrap();
        for i in 0..3 {
            for t in 0..small.n_periods() {
                assert_eq!(small.value(sy, i, t), big.value(by, i, t));
            }
        }
    }

    #[test]
    fn degenerate_config_gives_pure_noise() {
        let cfg = DgpConfig {
            n_entities: 10,
            n_periods: 200,
            omega: 0.0,
            theta: vec![],
            regressor_persistence: vec![],
            fixed_effect_sd: 0.0,
            idiosyncratic_sd: 1.0,
            seed: 3,
            ..DgpConfig::default()
        };
        let p = simulate_dynamic_panel(&cfg).unwrap();
        let ys = series_vals(&p, "y");
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean = {mean}");
    }

    #[test]
    fn long_run_variance_matches_stationary_formula() {
        let cfg = DgpConfig {
            n_entities: 1,
            n_periods: 2000,
            omega: 0.5,
            theta: vec![],
            regressor_persistence: vec![],
            fixed_effect_sd: 0.0,
            idiosyncratic_sd: 1.0,
            seed: 9,
            ..DgpConfig::default()
        };
        let p = simulate_dynamic_panel(&cfg).unwrap();
        let ys = series_vals(&p, "y");
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let target = 1.0 / (1.0 - 0.25);
        assert!(
            (var - target).abs() < 0.1 * target,
            "var = {var}, target {target}"
        );
    }

    #[test]
    fn endogeneity_corr_is_realized() {
        let cfg = DgpConfig {
            n_entities: 1,
            n_periods: 4000,
            omega: 0.2,
            theta: vec![1.0],
            regressor_persistence: vec![0.6],
            fixed_effect_sd: 0.0,
            idiosyncratic_sd: 1.0,
            endogeneity_corr: 0.7,
            seed: 21,
            ..DgpConfig::default()
        };
        let p = simulate_dynamic_panel(&cfg).unwrap();
        let xs = series_vals(&p, "x1");
        let es = series_vals(&p, "eps");
        // With zero loading and zero error AR, the regressor innovation is
        // x_t - rho x_{t-1} and the standardized shock is eps_t itself.
        let mut us = Vec::new();
        let mut ee = Vec::new();
        for t in 1..xs.len() {
            us.push(xs[t] - 0.6 * xs[t - 1]);
            ee.push(es[t]);
        }
        let n = us.len() as f64;
        let mu = us.iter().sum::<f64>() / n;
        let me = ee.iter().sum::<f64>() / n;
        let mut suu = 0.0;
        let mut see = 0.0;
        let mut sue = 0.0;
        for t in 0..us.len() {
            let du = us[t] - mu;
            let de = ee[t] - me;
            suu += du * du;
            see += de * de;
            sue += du * de;
        }
        let corr = sue / (suu * see).sqrt();
        assert!((corr - 0.7).abs() < 0.05, "corr = {corr}");
    }

    #[test]
    fn groupwise_factor_scales_upper_half_errors() {
        let cfg = DgpConfig {
            n_entities: 2,
            n_periods: 1000,
            omega: 0.0,
            theta: vec![],
            regressor_persistence: vec![],
            fixed_effect_sd: 0.0,
            idiosyncratic_sd: 1.0,
            groupwise_het_factor: 5.0,
            seed: 2,
            ..DgpConfig::default()
        };
        let p = simulate_dynamic_panel(&cfg).unwrap();
        let e = p.series_index("eps").unwrap();
        let sd = |i: usize| {
            let vals: Vec<f64> = (0..p.n_periods()).filter_map(|t| p.value(e, i, t)).collect();
            let n = vals.len() as f64;
            let m = vals.iter().sum::<f64>() / n;
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
        };
        let ratio = sd(1) / sd(0);
        assert!((ratio - 5.0).abs() < 1.0, "ratio = {ratio}");
    }

    #[test]
    fn invalid_configs_are_rejected_before_generation() {
        let bad = [
            DgpConfig { omega: 1.0, ..base() },
            DgpConfig { idiosyncratic_sd: 0.0, ..base() },
            DgpConfig { fixed_effect_sd: -1.0, ..base() },
            DgpConfig { regressor_persistence: vec![1.0], ..base() },
            DgpConfig { regressor_persistence: vec![0.2, 0.3], ..base() },
            DgpConfig { endogeneity_corr: 1.5, ..base() },
            DgpConfig { groupwise_het_factor: 0.5, ..base() },
            DgpConfig { error_ar1: -1.0, ..base() },
            DgpConfig { burn_in: 5, ..base() },
            DgpConfig { n_entities: 0, ..base() },
        ];
        for cfg in bad {
            assert!(simulate_dynamic_panel(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn exported_series_are_named_as_documented() {
        let cfg = DgpConfig {
            theta: vec![1.0, -0.5],
            regressor_persistence: vec![0.3, 0.4],
            ..base()
        };
        let p = simulate_dynamic_panel(&cfg).unwrap();
        assert_eq!(p.series_names(), &["y", "x1", "x2", "eps"]);
        assert_eq!(p.periods().first(), Some(&1));
        assert_eq!(p.entities()[0], "e01");
    }
}

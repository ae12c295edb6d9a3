//! Pipeline configuration: flat top-level keys plus one `[[model]]` section
//! per model, in TOML. Instrument directives appear as quoted strings in
//! the same grammar the `--iv`/`--gmm-iv` flags accept.
//!
//! ```toml
//! panel_csv = "panel.csv"          # or bank_csv + macro_csv
//! format = "text"
//! seed = 42
//!
//! [[model]]
//! name = "profitability"
//! dependent = "roa"
//! regressors = ["size", "nplr", "llpr", "car", "gdp", "inf"]
//! lags = 1
//! methods = ["pols", "fe", "re", "fgls", "gmm"]
//! iv = "D.(L2.roa L3.gdp L.inf L.size nplr)"
//! gmm_iv = "L(1/).L3.llpr"
//! max_lag_depth = 6
//! collapse = false
//! robust = false
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::validation(format!(
                "unknown output format '{other}'; expected text, json, or csv"
            ))),
        }
    }
}

/// Estimation methods and test stages a model may select.
pub const KNOWN_METHODS: [&str; 5] = ["pols", "fe", "re", "fgls", "gmm"];
pub const KNOWN_TESTS: [&str; 11] = [
    "unitroot",
    "f",
    "bplm",
    "hausman",
    "wooldridge",
    "bp",
    "modwald",
    "dwh",
    "sargan",
    "ar",
    "diffsargan",
];

fn default_methods() -> Vec<String> {
    ["pols", "fe", "re", "fgls"].map(String::from).to_vec()
}

fn default_unit_root_lags() -> usize {
    1
}

/// One `[[model]]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub dependent: String,
    pub regressors: Vec<String>,
    /// Dependent-variable lag order for the GMM stage; the static cascade
    /// (POLS/FE/RE/FGLS) always runs without dependent lags.
    #[serde(default)]
    pub lags: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// Standard (iv-style) instrument directives for the GMM stage.
    #[serde(default)]
    pub iv: Option<String>,
    /// gmm-style instrument directives for the GMM stage.
    #[serde(default)]
    pub gmm_iv: Option<String>,
    /// Cap on gmm-block lag depth; absent means automatic.
    #[serde(default)]
    pub max_lag_depth: Option<usize>,
    #[serde(default)]
    pub collapse: bool,
    #[serde(default)]
    pub robust: bool,
    /// Which tests to run; absent runs the full battery, an empty list runs
    /// none (estimation tables only).
    #[serde(default)]
    pub tests: Option<Vec<String>>,
    #[serde(default = "default_unit_root_lags")]
    pub unit_root_lags: usize,
}

impl ModelConfig {
    /// True when the selection (or its absence) includes the named test.
    pub fn wants_test(&self, id: &str) -> bool {
        match &self.tests {
            None => true,
            Some(list) => list.iter().any(|t| t.eq_ignore_ascii_case(id)),
        }
    }
}

fn default_levels() -> Vec<f64> {
    vec![0.01, 0.05, 0.10]
}

/// The whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Raw bank-statement CSV; requires `macro_csv` too.
    #[serde(default)]
    pub bank_csv: Option<PathBuf>,
    #[serde(default)]
    pub macro_csv: Option<PathBuf>,
    /// Prebuilt ratio panel CSV; mutually exclusive with the pair above.
    #[serde(default)]
    pub panel_csv: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: u64,
    /// Star/decision thresholds, ascending; fixed at three levels.
    #[serde(default = "default_levels")]
    pub significance_levels: Vec<f64>,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelConfig>,
}

impl PipelineConfig {
    /// Parse from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and parse a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    /// Structural checks that need no data files.
    pub fn validate(&self) -> Result<()> {
        match (&self.panel_csv, &self.bank_csv, &self.macro_csv) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (None, None, None) => {
                return Err(Error::Config(
                    "no input: set panel_csv, or bank_csv together with macro_csv".into(),
                ))
            }
            (Some(_), _, _) => {
                return Err(Error::Config(
                    "panel_csv is mutually exclusive with bank_csv/macro_csv".into(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "bank_csv and macro_csv must be set together".into(),
                ))
            }
        }
        if self.models.is_empty() {
            return Err(Error::Config("config declares no [[model]] section".into()));
        }
        if self.significance_levels.len() != 3
            || self
                .significance_levels
                .windows(2)
                .any(|w| w[0] >= w[1])
            || self
                .significance_levels
                .iter()
                .any(|l| !(*l > 0.0 && *l < 1.0))
        {
            return Err(Error::Config(format!(
                "significance_levels must be three ascending values in (0, 1); got {:?}",
                self.significance_levels
            )));
        }
        let mut names = std::collections::HashSet::new();
        for m in &self.models {
            if m.name.trim().is_empty() {
                return Err(Error::Config("model name must be nonempty".into()));
            }
            if !names.insert(m.name.to_ascii_lowercase()) {
                return Err(Error::Config(format!("duplicate model name '{}'", m.name)));
            }
            if m.dependent.trim().is_empty() {
                return Err(Error::Config(format!(
                    "model '{}': dependent variable must be nonempty",
                    m.name
                )));
            }
            if m.regressors.is_empty() {
                return Err(Error::Config(format!(
                    "model '{}': at least one regressor required",
                    m.name
                )));
            }
            if m.methods.is_empty() {
                return Err(Error::Config(format!(
                    "model '{}': at least one method required",
                    m.name
                )));
            }
            for method in &m.methods {
                if !KNOWN_METHODS.contains(&method.to_ascii_lowercase().as_str()) {
                    return Err(Error::Config(format!(
                        "model '{}': unknown method '{method}'; expected one of {}",
                        m.name,
                        KNOWN_METHODS.join(", ")
                    )));
                }
            }
            let wants_gmm = m
                .methods
                .iter()
                .any(|x| x.eq_ignore_ascii_case("gmm"));
            if wants_gmm && m.lags == 0 {
                return Err(Error::Config(format!(
                    "model '{}': the gmm method needs lags >= 1",
                    m.name
                )));
            }
            if let Some(tests) = &m.tests {
                for t in tests {
                    if !KNOWN_TESTS.contains(&t.to_ascii_lowercase().as_str()) {
                        return Err(Error::Config(format!(
                            "model '{}': unknown test '{t}'; expected one of {}",
                            m.name,
                            KNOWN_TESTS.join(", ")
                        )));
                    }
                }
            }
            if let Some(iv) = &m.iv {
                crate::gmm::parse_instrument_spec(iv)?;
            }
            if let Some(iv) = &m.gmm_iv {
                crate::gmm::parse_instrument_spec(iv)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
panel_csv = "panel.csv"
seed = 7

[[model]]
name = "profitability"
dependent = "roa"
regressors = ["size", "nplr", "gdp"]
lags = 1
methods = ["pols", "fe", "re", "gmm"]
iv = "D.(L2.roa L3.gdp)"
gmm_iv = "L(1/).L3.nplr"
max_lag_depth = 6
"#;

    #[test]
    fn good_config_parses() {
        let cfg = PipelineConfig::from_toml_str(GOOD).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.format, OutputFormat::Text);
        assert_eq!(cfg.significance_levels, vec![0.01, 0.05, 0.10]);
        assert_eq!(cfg.models.len(), 1);
        let m = &cfg.models[0];
        assert_eq!(m.name, "profitability");
        assert_eq!(m.max_lag_depth, Some(6));
        assert!(m.wants_test("hausman"));
    }

    #[test]
    fn empty_test_list_disables_all() {
        let text = GOOD.replace("lags = 1", "lags = 1\ntests = []");
        let cfg = PipelineConfig::from_toml_str(&text).unwrap();
        assert!(!cfg.models[0].wants_test("hausman"));
    }

    #[test]
    fn missing_input_is_rejected() {
        let text = GOOD.replace("panel_csv = \"panel.csv\"", "");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn bank_without_macro_is_rejected() {
        let text = GOOD.replace(
            "panel_csv = \"panel.csv\"",
            "bank_csv = \"banks.csv\"",
        );
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn gmm_method_needs_lags() {
        let text = GOOD.replace("lags = 1", "lags = 0");
        let err = PipelineConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("lags >= 1"), "{err}");
    }

    #[test]
    fn bad_directive_string_is_rejected_at_parse_time() {
        let text = GOOD.replace("D.(L2.roa L3.gdp)", "D.(L2..roa");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn unknown_method_and_test_are_rejected() {
        let text = GOOD.replace("\"gmm\"]", "\"ols2\"]");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
        let text = GOOD.replace("lags = 1", "lags = 1\ntests = [\"hausmann\"]");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let text = format!("{GOOD}\nbogus_key = 1\n");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn duplicate_model_names_are_rejected() {
        let text = format!(
            "{GOOD}\n[[model]]\nname = \"PROFITABILITY\"\ndependent = \"roe\"\nregressors = [\"size\"]\n"
        );
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn levels_must_be_three_ascending() {
        let text = format!("{GOOD}\nsignificance_levels = [0.05, 0.01, 0.10]\n");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
    }
}

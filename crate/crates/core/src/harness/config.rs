use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::glm::Method;
use crate::par::Parallelism;

use super::scenario::{Scenario, ScenarioFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub runs_per_scenario: usize,
    pub dev_pool_size: usize,
    pub validation_size: usize,
    pub bootstrap_reps: usize,
    pub master_seed: u64,
    pub scenario_filter: Option<ScenarioFilter>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 = all available, 1 = sequential.
    pub parallelism: usize,
    /// Methods to fit. ML is always fitted, since it drives the exclusion
    /// rule and the optimal-shrinkage reference.
    pub methods: Vec<Method>,
    pub cv_folds: usize,
    /// Monte Carlo sample used to solve each true intercept.
    pub intercept_mc_size: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            runs_per_scenario: 200,
            dev_pool_size: 200_000,
            validation_size: 100_000,
            bootstrap_reps: 200,
            master_seed: 20_180_501,
            scenario_filter: None,
            output_dir: PathBuf::from("results"),
            parallelism: 0,
            methods: Method::ALL.to_vec(),
            cv_folds: 10,
            intercept_mc_size: 1_000_000,
        }
    }
}

/// On-disk form. Every key is optional and falls back to the default.
///
/// ```toml
/// runs = 200
/// dev_pool_size = 200000
/// validation_size = 100000
/// bootstrap_reps = 200
/// seed = 20180501
/// filter = "set=5T,rho=0,rate=0.1"
/// output_dir = "results"
/// parallelism = 0
/// methods = ["ML", "LU", "BU", "L2", "PML", "L1", "AL", "NNG", "Firth"]
/// cv_folds = 10
/// intercept_mc_size = 1000000
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    runs: Option<usize>,
    dev_pool_size: Option<usize>,
    validation_size: Option<usize>,
    bootstrap_reps: Option<usize>,
    seed: Option<u64>,
    filter: Option<String>,
    output_dir: Option<PathBuf>,
    parallelism: Option<usize>,
    methods: Option<Vec<String>>,
    cv_folds: Option<usize>,
    intercept_mc_size: Option<usize>,
}

pub fn parse_methods<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Method>> {
    let mut methods = vec![Method::Ml];
    for l in labels {
        let m = Method::from_label(l.as_ref().trim())
            .ok_or_else(|| Error::Config(format!("unknown method '{}'", l.as_ref())))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    methods.sort();
    Ok(methods)
}

impl HarnessConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = HarnessConfig::default();
        if let Some(v) = file.runs {
            c.runs_per_scenario = v;
        }
        if let Some(v) = file.dev_pool_size {
            c.dev_pool_size = v;
        }
        if let Some(v) = file.validation_size {
            c.validation_size = v;
        }
        if let Some(v) = file.bootstrap_reps {
            c.bootstrap_reps = v;
        }
        if let Some(v) = file.seed {
            c.master_seed = v;
        }
        if let Some(v) = file.filter {
            c.scenario_filter = Some(v.parse()?);
        }
        if let Some(v) = file.output_dir {
            c.output_dir = v;
        }
        if let Some(v) = file.parallelism {
            c.parallelism = v;
        }
        if let Some(v) = file.methods {
            c.methods = parse_methods(&v)?;
        }
        if let Some(v) = file.cv_folds {
            c.cv_folds = v;
        }
        if let Some(v) = file.intercept_mc_size {
            c.intercept_mc_size = v;
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    pub fn parallelism(&self) -> Parallelism {
        Parallelism(self.parallelism)
    }

    /// Checks that do not depend on the selected scenarios.
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_scenario == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.methods.contains(&Method::Bu) && self.bootstrap_reps == 0 {
            return Err(Error::Config("bootstrap_reps must be at least 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if self.intercept_mc_size == 0 {
            return Err(Error::Config("intercept_mc_size must be positive".into()));
        }
        if !self.methods.contains(&Method::Ml) {
            return Err(Error::Config("ML must be among the fitted methods".into()));
        }
        Ok(())
    }

    /// Pools must hold at least ten times the largest development sample.
    pub fn validate_for(&self, scenarios: &[Scenario]) -> Result<()> {
        self.validate()?;
        let largest = scenarios.iter().map(|s| s.n_total).max().unwrap_or(0);
        for (name, size) in [("dev_pool_size", self.dev_pool_size), ("validation_size", self.validation_size)] {
            if size < 10 * largest {
                return Err(Error::Config(format!(
                    "{name} = {size} is below ten times the largest sample size ({largest})"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(HarnessConfig::from_toml_str("").unwrap(), HarnessConfig::default());
    }

    #[test]
    fn file_overrides() {
        let c = HarnessConfig::from_toml_str(
            "runs = 10\nseed = 5\nfilter = \"set=5T,epv=3\"\nmethods = [\"LU\", \"Firth\"]\nparallelism = 1\n",
        )
        .unwrap();
        assert_eq!(c.runs_per_scenario, 10);
        assert_eq!(c.master_seed, 5);
        assert_eq!(c.methods, vec![Method::Ml, Method::Lu, Method::Firth]);
        assert_eq!(c.parallelism(), Parallelism::SEQUENTIAL);
        assert!(c.scenario_filter.is_some());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(HarnessConfig::from_toml_str("runz = 3").is_err());
        assert!(HarnessConfig::from_toml_str("methods = [\"XYZ\"]").is_err());
        let c = HarnessConfig { runs_per_scenario: 0, ..HarnessConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn pool_size_rule() {
        let s = vec![Scenario::new(50, super::super::scenario::PredictorSet::TenTrue, 0.0, 0.1, -3.0)];
        let c = HarnessConfig { dev_pool_size: 49_999, ..HarnessConfig::default() };
        assert!(c.validate_for(&s).is_err());
        assert!(HarnessConfig::default().validate_for(&s).is_ok());
    }
}

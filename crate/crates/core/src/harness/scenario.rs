use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use crate::datagen::{solve_intercept, TrueModel};
use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamKey};

use super::config::HarnessConfig;

pub const EPV_LEVELS: [usize; 5] = [3, 5, 10, 20, 50];
pub const RHO_LEVELS: [f64; 2] = [0.0, 0.5];
pub const EVENT_RATE_LEVELS: [f64; 2] = [0.1, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictorSet {
    FiveTrue,
    FiveTrueFiveNoise,
    TenTrue,
}

impl PredictorSet {
    pub const ALL: [PredictorSet; 3] = [PredictorSet::FiveTrue, PredictorSet::FiveTrueFiveNoise, PredictorSet::TenTrue];

    pub fn betas(self) -> Vec<f64> {
        const FIVE: [f64; 5] = [0.2, 0.2, 0.2, 0.5, 0.8];
        match self {
            PredictorSet::FiveTrue => FIVE.to_vec(),
            PredictorSet::FiveTrueFiveNoise => FIVE.iter().copied().chain([0.0; 5]).collect(),
            PredictorSet::TenTrue => vec![0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.5, 0.5, 0.8, 0.8],
        }
    }

    /// Number of candidate predictors.
    pub fn df(self) -> usize {
        match self {
            PredictorSet::FiveTrue => 5,
            _ => 10,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PredictorSet::FiveTrue => "5T",
            PredictorSet::FiveTrueFiveNoise => "5T5N",
            PredictorSet::TenTrue => "10T",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for PredictorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PredictorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "5t" | "fivetrue" => Ok(PredictorSet::FiveTrue),
            "5t5n" | "fivetruefivenoise" => Ok(PredictorSet::FiveTrueFiveNoise),
            "10t" | "tentrue" => Ok(PredictorSet::TenTrue),
            _ => Err(Error::Config(format!("unknown predictor set '{s}' (expected 5T, 5T5N or 10T)"))),
        }
    }
}

/// The (predictor set, correlation, event rate) cell. Scenarios that differ
/// only in EPV share the true model and the populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub predictor_set: PredictorSet,
    pub rho: f64,
    pub event_rate: f64,
}

impl Cell {
    /// Stable numeric label, independent of which scenarios are selected.
    pub fn key(&self) -> u64 {
        let rho = RHO_LEVELS.iter().position(|&r| r == self.rho).map_or(self.rho.to_bits(), |i| i as u64);
        let rate = EVENT_RATE_LEVELS.iter().position(|&r| r == self.event_rate).map_or(self.event_rate.to_bits(), |i| i as u64);
        self.predictor_set.index() * 1_000_003 + rho * 1009 + rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub epv: usize,
    pub predictor_set: PredictorSet,
    pub rho: f64,
    pub event_rate: f64,
    pub n_events: usize,
    pub n_total: usize,
    pub df: usize,
    pub true_betas: Vec<f64>,
    pub true_intercept: f64,
}

impl Scenario {
    pub fn new(epv: usize, predictor_set: PredictorSet, rho: f64, event_rate: f64, true_intercept: f64) -> Self {
        let df = predictor_set.df();
        let n_events = epv * df;
        let n_total = (n_events as f64 / event_rate).round() as usize;
        Scenario {
            epv,
            predictor_set,
            rho,
            event_rate,
            n_events,
            n_total,
            df,
            true_betas: predictor_set.betas(),
            true_intercept,
        }
    }

    pub fn id(&self) -> String {
        format!("{}_rho{}_er{}_epv{}", self.predictor_set, self.rho, self.event_rate, self.epv)
    }

    pub fn cell(&self) -> Cell {
        Cell { predictor_set: self.predictor_set, rho: self.rho, event_rate: self.event_rate }
    }

    /// Stream label for this scenario; depends only on its factor levels.
    pub fn key(&self) -> u64 {
        self.cell().key() * 101 + self.epv as u64
    }

    pub fn true_model(&self) -> Result<TrueModel> {
        TrueModel::new(self.true_betas.clone(), self.true_intercept, self.rho)
    }
}

/// Selector over the factorial design. Every field left `None` matches all
/// levels.
///
/// Text form: comma-separated `key=value` pairs with alternatives separated
/// by `/`, for example `set=5T/10T,rho=0,rate=0.1,epv=3/10`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioFilter {
    pub epv: Option<Vec<usize>>,
    pub predictor_set: Option<Vec<PredictorSet>>,
    pub rho: Option<Vec<f64>>,
    pub event_rate: Option<Vec<f64>>,
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split('/')
        .map(|v| v.trim().parse::<T>().map_err(|_| Error::Config(format!("bad value '{v}' for filter key '{key}'"))))
        .collect()
}

impl FromStr for ScenarioFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut f = ScenarioFilter::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| Error::Config(format!("filter term '{part}' is not key=value")))?;
            match key.trim() {
                "epv" => f.epv = Some(parse_list(key, value)?),
                "set" | "predictors" | "predictor_set" => f.predictor_set = Some(parse_list(key, value)?),
                "rho" | "corr" => f.rho = Some(parse_list(key, value)?),
                "rate" | "er" | "event_rate" => f.event_rate = Some(parse_list(key, value)?),
                other => return Err(Error::Config(format!("unknown filter key '{other}'"))),
            }
        }
        Ok(f)
    }
}

impl ScenarioFilter {
    pub fn matches(&self, epv: usize, set: PredictorSet, rho: f64, rate: f64) -> bool {
        self.epv.as_ref().is_none_or(|v| v.contains(&epv))
            && self.predictor_set.as_ref().is_none_or(|v| v.contains(&set))
            && self.rho.as_ref().is_none_or(|v| v.iter().any(|&r| (r - rho).abs() < 1e-12))
            && self.event_rate.as_ref().is_none_or(|v| v.iter().any(|&r| (r - rate).abs() < 1e-12))
    }
}

type InterceptKey = (PredictorSet, u64, u64, u64, usize);

fn intercept_cache() -> &'static Mutex<HashMap<InterceptKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<InterceptKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// True intercept for a cell, solved once per (cell, seed, Monte Carlo size).
pub fn cell_intercept(cell: Cell, seed: u64, mc_size: usize) -> Result<f64> {
    let key = (cell.predictor_set, cell.rho.to_bits(), cell.event_rate.to_bits(), seed, mc_size);
    if let Some(&v) = intercept_cache().lock().expect("intercept cache poisoned").get(&key) {
        return Ok(v);
    }
    let stream = StreamKey::new(seed).child(Purpose::Intercept.into()).child(cell.key());
    let v = solve_intercept(&cell.predictor_set.betas(), cell.rho, cell.event_rate, mc_size, stream, 1e-12)?;
    intercept_cache().lock().expect("intercept cache poisoned").insert(key, v);
    Ok(v)
}

/// The filtered factorial, in a fixed order (set, rho, rate, epv).
pub fn enumerate_scenarios(config: &HarnessConfig) -> Result<Vec<Scenario>> {
    let filter = config.scenario_filter.clone().unwrap_or_default();
    let mut out = Vec::new();
    for set in PredictorSet::ALL {
        for rho in RHO_LEVELS {
            for rate in EVENT_RATE_LEVELS {
                let levels: Vec<usize> =
                    EPV_LEVELS.iter().copied().filter(|&e| filter.matches(e, set, rho, rate)).collect();
                if levels.is_empty() {
                    continue;
                }
                let cell = Cell { predictor_set: set, rho, event_rate: rate };
                let intercept = cell_intercept(cell, config.master_seed, config.intercept_mc_size)?;
                out.extend(levels.into_iter().map(|epv| Scenario::new(epv, set, rho, rate, intercept)));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("scenario filter selects no scenarios".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(filter: &str) -> HarnessConfig {
        HarnessConfig {
            scenario_filter: if filter.is_empty() { None } else { Some(filter.parse().unwrap()) },
            intercept_mc_size: 20_000,
            ..HarnessConfig::default()
        }
    }

    #[test]
    fn full_factorial_has_sixty_cells() {
        let s = enumerate_scenarios(&config("")).unwrap();
        assert_eq!(s.len(), 60);
        let keys: std::collections::HashSet<u64> = s.iter().map(Scenario::key).collect();
        assert_eq!(keys.len(), 60);
        for sc in &s {
            assert_eq!(sc.n_events, sc.epv * sc.df);
            assert_eq!(sc.n_total as f64, sc.n_events as f64 / sc.event_rate);
            if sc.event_rate == 0.5 {
                assert_eq!(sc.true_intercept, 0.0);
            }
        }
    }

    #[test]
    fn derived_sizes() {
        let s = enumerate_scenarios(&config("epv=3,set=10T,rho=0.5,rate=0.5")).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].n_events, s[0].n_total), (30, 60));
        let s = enumerate_scenarios(&config("rate=0.1,set=5T,epv=50")).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|sc| sc.n_total == 2500));
    }

    #[test]
    fn coefficient_sets() {
        assert_eq!(PredictorSet::FiveTrueFiveNoise.betas().iter().filter(|&&b| b == 0.0).count(), 5);
        let ten = PredictorSet::TenTrue.betas();
        assert_eq!(ten.iter().filter(|&&b| b == 0.2).count(), 6);
        assert_eq!(ten.iter().filter(|&&b| b == 0.8).count(), 2);
    }

    #[test]
    fn empty_selection_is_an_error() {
        assert!(matches!(enumerate_scenarios(&config("epv=4")), Err(Error::Config(_))));
        assert!("bogus=1".parse::<ScenarioFilter>().is_err());
        assert!("set=7T".parse::<ScenarioFilter>().is_err());
    }

    #[test]
    fn filter_alternatives() {
        let f: ScenarioFilter = "set=5T/10T, epv=3/50".parse().unwrap();
        assert!(f.matches(3, PredictorSet::TenTrue, 0.5, 0.1));
        assert!(!f.matches(5, PredictorSet::TenTrue, 0.5, 0.1));
        assert!(!f.matches(3, PredictorSet::FiveTrueFiveNoise, 0.5, 0.1));
    }
}

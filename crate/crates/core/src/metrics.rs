//! Validation measures and their aggregation over simulation runs.

use std::collections::BTreeMap;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_univariable, linear_predictor, FitOptions, FitResult, Method};

/// Floor applied to calibration slopes before any log transform.
pub const WINSOR_FLOOR: f64 = 0.01;
/// Slope recorded for a model with no predictors left.
pub const NO_PREDICTOR_SLOPE: f64 = 1000.0;
/// Exclusion reason for runs whose ML fit shows separation.
pub const SEPARATION_REASON: &str = "separation";

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn class_counts(outcomes: &[f64]) -> (usize, usize) {
    let events = outcomes.iter().filter(|&&y| y == 1.0).count();
    (events, outcomes.len() - events)
}

/// Concordance probability via the rank-sum (Mann-Whitney) identity.
pub fn c_statistic(scores: &[f64], outcomes: &[f64]) -> Result<f64> {
    if scores.len() != outcomes.len() {
        return Err(Error::DimensionMismatch { expected: outcomes.len(), found: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("c-statistic of NaN scores"));
    }
    let (n1, n0) = class_counts(outcomes);
    if n1 == 0 || n0 == 0 {
        return Err(Error::UndefinedMetric("c-statistic needs both classes"));
    }
    let ranks = average_ranks(scores);
    let r1: f64 = ranks.iter().zip(outcomes).filter(|(_, &y)| y == 1.0).map(|(r, _)| r).sum();
    let (n1, n0) = (n1 as f64, n0 as f64);
    Ok((r1 - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

/// Slope from the logistic regression of `outcomes` on `lp`.
pub fn calibration_slope(lp: &[f64], outcomes: &[f64]) -> Result<f64> {
    let (lo, hi) = lp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::UndefinedMetric("calibration slope of non-finite predictor"));
    }
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
        return Err(Error::UndefinedMetric("calibration slope of constant predictor"));
    }
    let (_, slope) = fit_univariable(lp, outcomes, &FitOptions::default())?;
    Ok(slope)
}

/// Calibration slope of `fit` on `validation`, or [`NO_PREDICTOR_SLOPE`] when
/// the fit has no non-zero coefficients.
pub fn slope_for_run(fit: &FitResult, validation: &Dataset) -> Result<f64> {
    if fit.all_zero() {
        return Ok(NO_PREDICTOR_SLOPE);
    }
    let lp = linear_predictor(fit, &validation.x)?;
    match calibration_slope(&lp, &validation.y) {
        Err(Error::UndefinedMetric(_)) => Ok(NO_PREDICTOR_SLOPE),
        other => other,
    }
}

pub fn winsorize(slope: f64) -> f64 {
    slope.max(WINSOR_FLOOR)
}

/// Linear interpolation between order statistics (type 7). `sorted` must be
/// ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeSummary {
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
    pub mad_log: f64,
    pub rmsd_log: f64,
}

/// Median and 5th/95th percentiles of the raw slopes; MAD and RMSD of the
/// winsorized log slopes.
pub fn aggregate_slopes(slopes: &[f64]) -> Result<SlopeSummary> {
    if slopes.is_empty() {
        return Err(Error::UndefinedMetric("no slopes to aggregate"));
    }
    let mut sorted = slopes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let logs: Vec<f64> = slopes.iter().map(|&s| winsorize(s).ln()).collect();
    let m = median(&logs);
    let deviations: Vec<f64> = logs.iter().map(|l| (l - m).abs()).collect();
    let rmsd = (logs.iter().map(|l| l * l).sum::<f64>() / logs.len() as f64).sqrt();
    Ok(SlopeSummary {
        median: quantile_sorted(&sorted, 0.5),
        p5: quantile_sorted(&sorted, 0.05),
        p95: quantile_sorted(&sorted, 0.95),
        mad_log: median(&deviations),
        rmsd_log: rmsd,
    })
}

/// Spearman rank correlation; `None` when either input has no spread.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Spearman correlation between the shrinkage a method applied,
/// `log(slope) - log(slope_ML)`, and the shrinkage that would have been
/// optimal, `-log(slope_ML)`. Slopes are winsorized first.
pub fn shrinkage_correlation(method_slopes: &[f64], ml_slopes: &[f64]) -> Result<Option<f64>> {
    if method_slopes.len() != ml_slopes.len() {
        return Err(Error::DimensionMismatch { expected: ml_slopes.len(), found: method_slopes.len() });
    }
    let optimal: Vec<f64> = ml_slopes.iter().map(|&s| -winsorize(s).ln()).collect();
    let estimated: Vec<f64> =
        method_slopes.iter().zip(ml_slopes).map(|(&m, &s)| winsorize(m).ln() - winsorize(s).ln()).collect();
    Ok(spearman(&estimated, &optimal))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefBias {
    /// Mean of `sign(b_j) (b^_j - b_j)` over runs and true predictors.
    pub mean_bias_true: f64,
    /// Mean of `b^_j` over runs and noise predictors.
    pub mean_bias_noise: Option<f64>,
}

fn bias_from_deviations<'a>(deviations: impl Iterator<Item = &'a [f64]>, truth: &[f64]) -> CoefBias {
    let (mut st, mut nt, mut sn, mut nn) = (0.0, 0usize, 0.0, 0usize);
    for dev in deviations {
        for (d, &b) in dev.iter().zip(truth) {
            if b == 0.0 {
                sn += d;
                nn += 1;
            } else {
                st += b.signum() * d;
                nt += 1;
            }
        }
    }
    CoefBias {
        mean_bias_true: if nt > 0 { st / nt as f64 } else { 0.0 },
        mean_bias_noise: (nn > 0).then(|| sn / nn as f64),
    }
}

/// Coefficient bias against the true coefficients. The fits must be on the
/// scale of the true model (destandardized).
pub fn coefficient_bias(fits: &[FitResult], true_betas: &[f64]) -> Result<CoefBias> {
    let mut deviations = Vec::with_capacity(fits.len());
    for f in fits {
        if f.betas.len() != true_betas.len() {
            return Err(Error::DimensionMismatch { expected: true_betas.len(), found: f.betas.len() });
        }
        deviations.push(f.betas.iter().zip(true_betas).map(|(e, t)| e - t).collect::<Vec<f64>>());
    }
    Ok(bias_from_deviations(deviations.iter().map(Vec::as_slice), true_betas))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionStats {
    pub mean_n_selected: f64,
    pub mean_n_noise_selected: f64,
}

pub fn selection_stats(fits: &[FitResult], true_betas: &[f64]) -> SelectionStats {
    if fits.is_empty() {
        return SelectionStats { mean_n_selected: 0.0, mean_n_noise_selected: 0.0 };
    }
    let (mut all, mut noise) = (0usize, 0usize);
    for f in fits {
        for (&s, &b) in f.selected_mask.iter().zip(true_betas) {
            if s {
                all += 1;
                if b == 0.0 {
                    noise += 1;
                }
            }
        }
    }
    let n = fits.len() as f64;
    SelectionStats { mean_n_selected: all as f64 / n, mean_n_noise_selected: noise as f64 / n }
}

/// Per-method outcome of one included run.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    /// Calibration slope before winsorization.
    pub slope: f64,
    pub c_stat: f64,
    pub n_selected: usize,
    pub n_noise_selected: usize,
    /// `b^_j - b_j` on the scale of the true model.
    pub coef_bias: Vec<f64>,
    pub shrinkage_factor: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario_id: String,
    pub run_index: usize,
    pub per_method: BTreeMap<Method, MethodMetrics>,
    pub excluded: bool,
    pub exclusion_reason: Option<String>,
}

impl RunRecord {
    pub fn included(scenario_id: &str, run_index: usize, per_method: BTreeMap<Method, MethodMetrics>) -> Self {
        RunRecord { scenario_id: scenario_id.to_string(), run_index, per_method, excluded: false, exclusion_reason: None }
    }

    pub fn excluded(scenario_id: &str, run_index: usize, reason: impl Into<String>) -> Self {
        RunRecord {
            scenario_id: scenario_id.to_string(),
            run_index,
            per_method: BTreeMap::new(),
            excluded: true,
            exclusion_reason: Some(reason.into()),
        }
    }

    /// Excluded because the ML fit showed separation (as opposed to a failure).
    pub fn is_separation(&self) -> bool {
        self.excluded && self.exclusion_reason.as_deref() == Some(SEPARATION_REASON)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub median_slope: f64,
    pub slope_p5: f64,
    pub slope_p95: f64,
    pub mad_log_slope: f64,
    pub rmsd_log_slope: f64,
    pub median_cstat: f64,
    /// Absent for ML and when undefined.
    pub spearman_vs_optimal: Option<f64>,
    pub mean_coef_bias_true: f64,
    pub mean_coef_bias_noise: Option<f64>,
    /// Only for variable-selecting methods.
    pub mean_n_selected: Option<f64>,
    pub mean_n_noise_selected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub scenario_id: String,
    pub per_method: BTreeMap<Method, MethodSummary>,
    pub n_runs_included: usize,
    /// Runs left out because of separation.
    pub n_runs_excluded: usize,
    /// Runs left out because a fitter failed.
    pub n_runs_failed: usize,
}

/// Aggregate the included runs of one scenario, in run order.
pub fn summarize(scenario_id: &str, records: &[RunRecord], true_betas: &[f64]) -> Result<ScenarioSummary> {
    let included: Vec<&RunRecord> = records.iter().filter(|r| !r.excluded).collect();
    let n_sep = records.iter().filter(|r| r.is_separation()).count();
    let mut per_method = BTreeMap::new();
    let methods: Vec<Method> =
        Method::ALL.iter().copied().filter(|m| included.iter().any(|r| r.per_method.contains_key(m))).collect();
    let ml_slopes: Option<Vec<f64>> = included.iter().map(|r| r.per_method.get(&Method::Ml).map(|m| m.slope)).collect();
    for method in methods {
        let rows: Vec<&MethodMetrics> = included.iter().filter_map(|r| r.per_method.get(&method)).collect();
        let slopes: Vec<f64> = rows.iter().map(|m| m.slope).collect();
        let agg = aggregate_slopes(&slopes)?;
        let cstats: Vec<f64> = rows.iter().map(|m| m.c_stat).collect();
        let spearman_vs_optimal = match (&ml_slopes, method) {
            (_, Method::Ml) => None,
            (Some(ml), _) if ml.len() == slopes.len() => shrinkage_correlation(&slopes, ml)?,
            _ => None,
        };
        let bias = bias_from_deviations(rows.iter().map(|m| m.coef_bias.as_slice()), true_betas);
        let n = rows.len() as f64;
        let (sel, noise) = if method.selects_variables() {
            (
                Some(rows.iter().map(|m| m.n_selected as f64).sum::<f64>() / n),
                Some(rows.iter().map(|m| m.n_noise_selected as f64).sum::<f64>() / n),
            )
        } else {
            (None, None)
        };
        per_method.insert(
            method,
            MethodSummary {
                median_slope: agg.median,
                slope_p5: agg.p5,
                slope_p95: agg.p95,
                mad_log_slope: agg.mad_log,
                rmsd_log_slope: agg.rmsd_log,
                median_cstat: median(&cstats),
                spearman_vs_optimal,
                mean_coef_bias_true: bias.mean_bias_true,
                mean_coef_bias_noise: bias.mean_bias_noise,
                mean_n_selected: sel,
                mean_n_noise_selected: noise,
            },
        );
    }
    Ok(ScenarioSummary {
        scenario_id: scenario_id.to_string(),
        per_method,
        n_runs_included: included.len(),
        n_runs_excluded: n_sep,
        n_runs_failed: records.len() - included.len() - n_sep,
    })
}

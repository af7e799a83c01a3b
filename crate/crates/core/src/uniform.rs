//! Uniform shrinkage of maximum-likelihood coefficients by a single factor,
//! estimated either from the likelihood-ratio statistic or by bootstrap.

use rand::Rng;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_ml, fit_univariable, linear_predictor, log_likelihood, lr_chi_square, refit_intercept, FitOptions, FitResult, Method};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkageKind {
    Likelihood,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformShrinkage {
    pub factor: f64,
    pub kind: ShrinkageKind,
    pub bootstrap_reps: Option<usize>,
}

/// `s = (chi2 - df) / chi2`. Negative when `chi2 < df`; applied as-is.
pub fn likelihood_factor(chi_square: f64, df: usize) -> Result<f64> {
    if chi_square <= 0.0 || !chi_square.is_finite() {
        return Err(Error::UndefinedShrinkage);
    }
    Ok((chi_square - df as f64) / chi_square)
}

/// Scale the ML slopes by `factor` and re-estimate the intercept by ML.
pub fn apply_uniform(
    ml_fit: &FitResult,
    shrinkage: &UniformShrinkage,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<FitResult> {
    let betas: Vec<f64> = ml_fit.betas.iter().map(|b| shrinkage.factor * b).collect();
    let intercept = refit_intercept(&betas, data, opts)?;
    let log_lik = log_likelihood(intercept, &betas, data);
    let method = match shrinkage.kind {
        ShrinkageKind::Likelihood => Method::Lu,
        ShrinkageKind::Bootstrap => Method::Bu,
    };
    let mut fit = FitResult::new(method, intercept, betas, log_lik);
    fit.shrinkage_factor = Some(shrinkage.factor);
    Ok(fit)
}

/// Likelihood-based uniform shrinkage with `df` candidate predictors.
pub fn likelihood_uniform(ml_fit: &FitResult, data: &Dataset, df: usize, opts: &FitOptions) -> Result<FitResult> {
    let factor = likelihood_factor(lr_chi_square(ml_fit, data), df)?;
    let shrinkage = UniformShrinkage { factor, kind: ShrinkageKind::Likelihood, bootstrap_reps: None };
    apply_uniform(ml_fit, &shrinkage, data, opts)
}

/// Calibration slope, on the original data, of a model fitted to `rows`.
/// `None` when the replicate fit shows separation or cannot be fitted.
pub(crate) fn replicate_slope(data: &Dataset, rows: &[usize], opts: &FitOptions) -> Option<f64> {
    let replicate = data.select_rows(rows).ok()?;
    let fit = fit_ml(&replicate, opts).ok()?;
    if fit.separation_detected {
        return None;
    }
    let lp = linear_predictor(&fit, &data.x).ok()?;
    let (_, slope) = fit_univariable(&lp, &data.y, opts).ok()?;
    slope.is_finite().then_some(slope)
}

/// Mean calibration slope over `reps` bootstrap replicates.
///
/// Replicate `r` draws from its own stream `key.child(r)`; a replicate whose
/// fit shows separation is redrawn from the same stream. At most `10 * reps`
/// draws are made in total.
pub fn bootstrap_factor(data: &Dataset, reps: usize, opts: &FitOptions, key: StreamKey) -> Result<UniformShrinkage> {
    if reps == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    let n = data.n();
    let cap = 10 * reps;
    let mut attempts = 0usize;
    let mut sum = 0.0;
    let mut rows = vec![0usize; n];
    for r in 0..reps {
        let mut rng = key.child(r as u64).rng();
        loop {
            if attempts >= cap {
                return Err(Error::BootstrapExhausted { attempts, requested: reps });
            }
            attempts += 1;
            for v in rows.iter_mut() {
                *v = rng.random_range(0..n);
            }
            if let Some(slope) = replicate_slope(data, &rows, opts) {
                sum += slope;
                break;
            }
        }
    }
    Ok(UniformShrinkage { factor: sum / reps as f64, kind: ShrinkageKind::Bootstrap, bootstrap_reps: Some(reps) })
}

/// Bootstrap-based uniform shrinkage, reusing an existing ML fit of `data`.
pub fn bootstrap_uniform_from(
    ml_fit: &FitResult,
    data: &Dataset,
    reps: usize,
    opts: &FitOptions,
    key: StreamKey,
) -> Result<FitResult> {
    let shrinkage = bootstrap_factor(data, reps, opts, key)?;
    apply_uniform(ml_fit, &shrinkage, data, opts)
}

pub fn bootstrap_uniform(data: &Dataset, reps: usize, opts: &FitOptions, key: StreamKey) -> Result<FitResult> {
    let ml = fit_ml(data, opts)?;
    bootstrap_uniform_from(&ml, data, reps, opts, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{draw_development_sample, generate_population, inv_logit, standardize, TrueModel};
    use crate::glm::lp_from;
    use crate::metrics::c_statistic;
    use crate::par::Parallelism;

    fn dev_sample(seed: u64, betas: Vec<f64>, intercept: f64, events: usize, total: usize) -> Dataset {
        let model = TrueModel::new(betas, intercept, 0.0).unwrap();
        let pop = generate_population(&model, 20_000, StreamKey::new(seed), Parallelism::SEQUENTIAL).unwrap();
        let d = draw_development_sample(&pop, events, total, &mut StreamKey::new(seed + 1).rng()).unwrap();
        standardize(&d).unwrap().0
    }

    #[test]
    fn factor_formula() {
        assert_eq!(likelihood_factor(5.0, 5).unwrap(), 0.0);
        assert_eq!(likelihood_factor(10.0, 5).unwrap(), 0.5);
        assert!((likelihood_factor(50.0, 5).unwrap() - 0.9).abs() < 1e-15);
        assert!(likelihood_factor(2.0, 5).unwrap() < 0.0);
        assert_eq!(likelihood_factor(0.0, 5), Err(Error::UndefinedShrinkage));
    }

    #[test]
    fn zero_factor_gives_intercept_only_model() {
        let d = dev_sample(1, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 15, 150);
        let opts = FitOptions::default();
        let ml = fit_ml(&d, &opts).unwrap();
        let s = UniformShrinkage { factor: 0.0, kind: ShrinkageKind::Likelihood, bootstrap_reps: None };
        let fit = apply_uniform(&ml, &s, &d, &opts).unwrap();
        assert!(fit.all_zero());
        assert!((fit.intercept - (0.1f64 / 0.9).ln()).abs() < 1e-10);
    }

    #[test]
    fn likelihood_shrinkage_scales_exactly() {
        let d = dev_sample(3, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 50, 500);
        let opts = FitOptions::default();
        let ml = fit_ml(&d, &opts).unwrap();
        let chi = lr_chi_square(&ml, &d);
        let lu = likelihood_uniform(&ml, &d, 5, &opts).unwrap();
        let s = lu.shrinkage_factor.unwrap();
        assert!((s - (chi - 5.0) / chi).abs() < 1e-12);
        for (b, m) in lu.betas.iter().zip(&ml.betas) {
            assert_eq!(*b, s * m);
        }
        assert_eq!(lu.method, Method::Lu);
    }

    #[test]
    fn refit_matches_event_rate_and_preserves_ranking() {
        let d = dev_sample(5, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 25, 250);
        let opts = FitOptions::default();
        let ml = fit_ml(&d, &opts).unwrap();
        let lu = likelihood_uniform(&ml, &d, 5, &opts).unwrap();
        assert!(lu.shrinkage_factor.unwrap() > 0.0);
        let lp = lp_from(lu.intercept, &lu.betas, &d.x);
        let mean_p = lp.iter().map(|&e| inv_logit(e)).sum::<f64>() / d.n() as f64;
        assert!((mean_p - d.event_rate()).abs() < 1e-8);
        let c_ml = c_statistic(&linear_predictor(&ml, &d.x).unwrap(), &d.y).unwrap();
        let c_lu = c_statistic(lp.as_slice(), &d.y).unwrap();
        assert_eq!(c_ml, c_lu);
    }

    #[test]
    fn self_replicate_has_unit_slope() {
        let d = dev_sample(7, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 25, 250);
        let identity: Vec<usize> = (0..d.n()).collect();
        let slope = replicate_slope(&d, &identity, &FitOptions::default()).unwrap();
        assert!((slope - 1.0).abs() < 1e-8, "slope {slope}");
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let d = dev_sample(9, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 15, 150);
        let opts = FitOptions::default();
        let a = bootstrap_uniform(&d, 20, &opts, StreamKey::new(42)).unwrap();
        let b = bootstrap_uniform(&d, 20, &opts, StreamKey::new(42)).unwrap();
        assert_eq!(a.shrinkage_factor.unwrap().to_bits(), b.shrinkage_factor.unwrap().to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_shrinks_noise_models() {
        let opts = FitOptions::default();
        let mut below = 0;
        let seeds = 100;
        for s in 0..seeds {
            let d = dev_sample(1000 + 3 * s, vec![0.0; 5], 0.0, 20, 40);
            let f = bootstrap_factor(&d, 20, &opts, StreamKey::new(s)).unwrap();
            if f.factor < 1.0 {
                below += 1;
            }
        }
        assert!(below >= 90, "{below} of {seeds} factors below one");
    }
}

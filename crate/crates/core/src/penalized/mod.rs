//! Penalized logistic regression: ridge, penalized maximum likelihood,
//! LASSO, adaptive LASSO and the non-negative garrote.
//!
//! Ridge and the L1 family maximize the mean log-likelihood minus the penalty
//! and are tuned by stratified 10-fold cross-validated deviance over a shared
//! grid. Penalized maximum likelihood penalizes the total log-likelihood with
//! a `0.5 * lambda` factor and is tuned by AICc over the same grid.

mod cd;
mod cv;

pub use cv::{cv_deviance, cv_path_deviance, make_cv_plan, select_lambda, CvPlan};

use nalgebra::DVector;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::glm::{
    lp_from, log_likelihood, newton_quadratic, refit_intercept, weighted_information, FitOptions,
    FitResult, Method,
};
use crate::datagen::inv_logit;

/// Smallest non-zero tuning value on the default grid.
pub const DEFAULT_LAMBDA_MIN: f64 = 1e-4;
pub const DEFAULT_LAMBDA_MAX: f64 = 64.0;
/// Cap on adaptive weights when an initial coefficient vanishes.
pub const MAX_ADAPTIVE_WEIGHT: f64 = 1e10;

/// Zero followed by log-equidistant values, increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(lower: f64, upper: f64, nonzero: usize) -> Result<Self> {
        if !(lower > 0.0 && upper > lower) || nonzero < 2 {
            return Err(Error::Config(format!("invalid grid [{lower}, {upper}] with {nonzero} values")));
        }
        let ratio = (upper / lower).ln() / (nonzero - 1) as f64;
        let mut values = Vec::with_capacity(nonzero + 1);
        values.push(0.0);
        values.extend((0..nonzero).map(|k| lower * (ratio * k as f64).exp()));
        values[nonzero] = upper;
        Ok(LambdaGrid { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The 251-value default grid on `[0, 64]`.
pub fn lambda_grid() -> LambdaGrid {
    LambdaGrid::new(DEFAULT_LAMBDA_MIN, DEFAULT_LAMBDA_MAX, 250).expect("default grid is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    Ridge,
    Pml,
    Lasso,
    AdaptiveLasso,
    Garrote,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    /// Adaptive LASSO weights `1 / |init|^gamma`.
    pub weights: Option<Vec<f64>>,
    /// PML scaling factors (predictor standard deviations).
    pub scaling: Option<Vec<f64>>,
    /// Initial estimates for adaptive LASSO and the garrote.
    pub init_betas: Option<Vec<f64>>,
    pub gamma: f64,
}

impl PenaltySpec {
    fn plain(kind: PenaltyKind) -> Self {
        PenaltySpec { kind, weights: None, scaling: None, init_betas: None, gamma: 1.0 }
    }

    pub fn ridge() -> Self {
        Self::plain(PenaltyKind::Ridge)
    }

    pub fn lasso() -> Self {
        Self::plain(PenaltyKind::Lasso)
    }

    pub fn pml(scaling: Vec<f64>) -> Self {
        PenaltySpec { scaling: Some(scaling), ..Self::plain(PenaltyKind::Pml) }
    }

    pub fn adaptive_lasso(init: &[f64]) -> Self {
        let gamma = 1.0;
        let weights = init
            .iter()
            .map(|b| {
                let a = b.abs();
                if a < 1e-10 {
                    MAX_ADAPTIVE_WEIGHT
                } else {
                    (1.0 / a.powf(gamma)).min(MAX_ADAPTIVE_WEIGHT)
                }
            })
            .collect();
        PenaltySpec { weights: Some(weights), init_betas: Some(init.to_vec()), gamma, ..Self::plain(PenaltyKind::AdaptiveLasso) }
    }

    pub fn garrote(init: &[f64]) -> Self {
        PenaltySpec { init_betas: Some(init.to_vec()), ..Self::plain(PenaltyKind::Garrote) }
    }

    pub fn method(&self) -> Method {
        match self.kind {
            PenaltyKind::Ridge => Method::Ridge,
            PenaltyKind::Pml => Method::Pml,
            PenaltyKind::Lasso => Method::Lasso,
            PenaltyKind::AdaptiveLasso => Method::AdaptiveLasso,
            PenaltyKind::Garrote => Method::Garrote,
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        let check_len = |v: &Option<Vec<f64>>, name: &str| match v {
            Some(v) if v.len() != p => Err(Error::DimensionMismatch { expected: p, found: v.len() }),
            None => Err(Error::Config(format!("{name} missing from penalty"))),
            _ => Ok(()),
        };
        match self.kind {
            PenaltyKind::Ridge | PenaltyKind::Lasso => Ok(()),
            PenaltyKind::Pml => check_len(&self.scaling, "scaling"),
            PenaltyKind::AdaptiveLasso => check_len(&self.weights, "weights"),
            PenaltyKind::Garrote => check_len(&self.init_betas, "initial estimates"),
        }
    }

    /// Penalized objective being maximized, in this crate's conventions.
    /// For the garrote `coefs` are the multipliers `c_j`.
    pub fn objective(&self, lambda: f64, data: &Dataset, intercept: f64, coefs: &[f64]) -> f64 {
        let n = data.n() as f64;
        match self.kind {
            PenaltyKind::Ridge => {
                log_likelihood(intercept, coefs, data) / n - lambda * coefs.iter().map(|b| b * b).sum::<f64>()
            }
            PenaltyKind::Pml => {
                let s = self.scaling.as_deref().unwrap_or(&[]);
                log_likelihood(intercept, coefs, data)
                    - 0.5 * lambda * coefs.iter().zip(s).map(|(b, s)| (s * b).powi(2)).sum::<f64>()
            }
            PenaltyKind::Lasso => {
                log_likelihood(intercept, coefs, data) / n - lambda * coefs.iter().map(|b| b.abs()).sum::<f64>()
            }
            PenaltyKind::AdaptiveLasso => {
                let w = self.weights.as_deref().unwrap_or(&[]);
                log_likelihood(intercept, coefs, data) / n
                    - lambda * coefs.iter().zip(w).map(|(b, w)| w * b.abs()).sum::<f64>()
            }
            PenaltyKind::Garrote => {
                let init = self.init_betas.as_deref().unwrap_or(&[]);
                let betas: Vec<f64> = coefs.iter().zip(init).map(|(c, b)| c * b).collect();
                log_likelihood(intercept, &betas, data) / n - lambda * coefs.iter().sum::<f64>()
            }
        }
    }
}

/// Solution at one tuning value.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub intercept: f64,
    /// Coefficients on the predictor scale.
    pub betas: Vec<f64>,
    /// Garrote multipliers `c_j` (equal to `betas` for the other penalties).
    pub coefs: Vec<f64>,
    pub converged: bool,
}

/// Solve along `lambdas`, which must be in decreasing order, warm-starting
/// each point from the previous one. Returns one point per value.
pub fn solve_path(data: &Dataset, spec: &PenaltySpec, lambdas: &[f64], opts: &FitOptions) -> Result<Vec<PathPoint>> {
    let p = data.p();
    spec.check(p)?;
    debug_assert!(lambdas.windows(2).all(|w| w[0] >= w[1]));
    let n = data.n() as f64;
    let rate = data.y.iter().sum::<f64>() / n;
    let null_intercept = (rate / (1.0 - rate)).ln();
    let mut out = Vec::with_capacity(lambdas.len());

    match spec.kind {
        PenaltyKind::Ridge | PenaltyKind::Pml => {
            let mut warm: Option<DVector<f64>> = None;
            for &lambda in lambdas {
                let mut diag = vec![0.0; p + 1];
                for j in 0..p {
                    diag[j + 1] = match spec.kind {
                        PenaltyKind::Ridge => 2.0 * n * lambda,
                        _ => lambda * spec.scaling.as_ref().map_or(1.0, |s| s[j] * s[j]),
                    };
                }
                let trace = newton_quadratic(data, &diag, warm.as_ref(), opts)?;
                let betas = trace.coef.as_slice()[1..].to_vec();
                out.push(PathPoint {
                    lambda,
                    intercept: trace.coef[0],
                    coefs: betas.clone(),
                    betas,
                    converged: trace.converged,
                });
                warm = Some(trace.coef);
            }
        }
        PenaltyKind::Lasso | PenaltyKind::AdaptiveLasso => {
            let weights = match spec.kind {
                PenaltyKind::AdaptiveLasso => spec.weights.clone().unwrap_or_else(|| vec![1.0; p]),
                _ => vec![1.0; p],
            };
            let mut intercept = null_intercept;
            let mut coefs = vec![0.0; p];
            for &lambda in lambdas {
                let pen: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
                let sol = cd::solve_l1(&data.x, &data.y, &pen, false, intercept, &coefs);
                intercept = sol.intercept;
                coefs = sol.coefs;
                out.push(PathPoint {
                    lambda,
                    intercept,
                    betas: coefs.clone(),
                    coefs: coefs.clone(),
                    converged: sol.converged,
                });
            }
        }
        PenaltyKind::Garrote => {
            let init = spec.init_betas.as_ref().expect("checked above");
            let mut z = data.x.clone();
            for (j, mut col) in z.column_iter_mut().enumerate() {
                col *= init[j];
            }
            let mut intercept = null_intercept;
            let mut coefs = vec![0.0; p];
            for &lambda in lambdas {
                let pen = vec![lambda; p];
                let sol = cd::solve_l1(&z, &data.y, &pen, true, intercept, &coefs);
                intercept = sol.intercept;
                coefs = sol.coefs;
                let betas = coefs.iter().zip(init).map(|(c, b)| c * b).collect();
                out.push(PathPoint { lambda, intercept, betas, coefs: coefs.clone(), converged: sol.converged });
            }
        }
    }
    Ok(out)
}

/// Solution at a single tuning value, approached from the top of `grid`.
pub fn solve_at(data: &Dataset, spec: &PenaltySpec, grid: &LambdaGrid, index: usize, opts: &FitOptions) -> Result<PathPoint> {
    let lambdas: Vec<f64> = grid.values[index..].iter().rev().copied().collect();
    let mut path = solve_path(data, spec, &lambdas, opts)?;
    Ok(path.pop().expect("non-empty path"))
}

fn finish(data: &Dataset, spec: &PenaltySpec, point: PathPoint, opts: &FitOptions) -> Result<FitResult> {
    let intercept = if spec.kind == PenaltyKind::Garrote {
        refit_intercept(&point.betas, data, opts)?
    } else {
        point.intercept
    };
    let log_lik = log_likelihood(intercept, &point.betas, data);
    let mut fit = FitResult::new(spec.method(), intercept, point.betas, log_lik);
    fit.lambda = Some(point.lambda);
    fit.converged = point.converged;
    Ok(fit)
}

/// Tune by cross-validated deviance, then refit on all of `data`.
pub fn fit_cv(data: &Dataset, spec: &PenaltySpec, grid: &LambdaGrid, plan: &CvPlan, opts: &FitOptions) -> Result<FitResult> {
    let dev = cv_path_deviance(data, spec, grid, plan, opts)?;
    let index = select_lambda(&dev).ok_or(Error::NoAdmissibleLambda)?;
    let point = solve_at(data, spec, grid, index, opts)?;
    finish(data, spec, point, opts)
}

/// Ridge, `mean ell - lambda * sum b_j^2`, tuned by cross-validation.
pub fn fit_ridge(data: &Dataset, grid: &LambdaGrid, plan: &CvPlan, opts: &FitOptions) -> Result<FitResult> {
    fit_cv(data, &PenaltySpec::ridge(), grid, plan, opts)
}

pub fn fit_lasso(data: &Dataset, grid: &LambdaGrid, plan: &CvPlan, opts: &FitOptions) -> Result<FitResult> {
    fit_cv(data, &PenaltySpec::lasso(), grid, plan, opts)
}

/// Adaptive LASSO with weights `1 / |b_ML|` from an existing ML fit.
pub fn fit_adaptive_lasso(
    data: &Dataset,
    grid: &LambdaGrid,
    plan: &CvPlan,
    ml_fit: &FitResult,
    opts: &FitOptions,
) -> Result<FitResult> {
    if ml_fit.separation_detected {
        return Err(Error::InvalidModel("adaptive LASSO needs a non-separated ML fit".into()));
    }
    fit_cv(data, &PenaltySpec::adaptive_lasso(&ml_fit.betas), grid, plan, opts)
}

/// Non-negative garrote on the ML estimates. Coefficient signs never flip.
pub fn fit_garrote(
    data: &Dataset,
    grid: &LambdaGrid,
    plan: &CvPlan,
    ml_fit: &FitResult,
    opts: &FitOptions,
) -> Result<FitResult> {
    if ml_fit.separation_detected {
        return Err(Error::InvalidModel("garrote needs a non-separated ML fit".into()));
    }
    fit_cv(data, &PenaltySpec::garrote(&ml_fit.betas), grid, plan, opts)
}

/// Effective degrees of freedom `trace(I (I + P)^-1)` at a quadratic-penalty
/// solution, counting the intercept.
pub fn effective_df(data: &Dataset, intercept: f64, betas: &[f64], penalty_diag: &[f64]) -> Result<f64> {
    let lp = lp_from(intercept, betas, &data.x);
    let w: Vec<f64> = lp.iter().map(|&e| {
        let p = inv_logit(e);
        p * (1.0 - p)
    }).collect();
    let info = weighted_information(&data.x, &w);
    let mut penalized = info.clone();
    for (k, d) in penalty_diag.iter().enumerate() {
        penalized[(k, k)] += d;
    }
    let chol = penalized.cholesky().ok_or(Error::RankDeficient)?;
    let solved = chol.solve(&info);
    Ok(solved.trace())
}

/// `-2 ell + 2 df n / (n - df - 1)`; `None` when the correction is undefined.
pub fn aicc(log_lik: f64, df: f64, n: usize) -> Option<f64> {
    let n = n as f64;
    let denom = n - df - 1.0;
    (denom > 0.0).then(|| -2.0 * log_lik + 2.0 * df * n / denom)
}

/// Per-grid-point PML diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlPoint {
    pub point: PathPoint,
    pub df: f64,
    pub aicc: Option<f64>,
}

pub fn pml_path(data: &Dataset, scaling: &[f64], grid: &LambdaGrid, opts: &FitOptions) -> Result<Vec<PmlPoint>> {
    let spec = PenaltySpec::pml(scaling.to_vec());
    let lambdas: Vec<f64> = grid.values.iter().rev().copied().collect();
    let path = solve_path(data, &spec, &lambdas, opts)?;
    let mut out: Vec<PmlPoint> = path
        .into_iter()
        .map(|point| {
            let mut diag = vec![0.0; data.p() + 1];
            for j in 0..data.p() {
                diag[j + 1] = point.lambda * scaling[j] * scaling[j];
            }
            let df = effective_df(data, point.intercept, &point.betas, &diag)?;
            let ll = log_likelihood(point.intercept, &point.betas, data);
            let score = if point.converged { aicc(ll, df, data.n()) } else { None };
            Ok(PmlPoint { point, df, aicc: score })
        })
        .collect::<Result<_>>()?;
    out.reverse();
    Ok(out)
}

/// Penalized maximum likelihood, `ell - 0.5 lambda sum (s_j b_j)^2`, tuned by AICc.
/// On standardized data the scaling factors are all one.
pub fn fit_pml(data: &Dataset, grid: &LambdaGrid, opts: &FitOptions) -> Result<FitResult> {
    let scaling = vec![1.0; data.p()];
    fit_pml_scaled(data, &scaling, grid, opts)
}

pub fn fit_pml_scaled(data: &Dataset, scaling: &[f64], grid: &LambdaGrid, opts: &FitOptions) -> Result<FitResult> {
    let path = pml_path(data, scaling, grid, opts)?;
    let scores: Vec<Option<f64>> = path.iter().map(|p| p.aicc).collect();
    let index = select_lambda(&scores).ok_or(Error::NoAdmissibleLambda)?;
    let chosen = path.into_iter().nth(index).expect("index within grid");
    let spec = PenaltySpec::pml(scaling.to_vec());
    finish(data, &spec, chosen.point, opts)
}

#[cfg(test)]
mod tests;

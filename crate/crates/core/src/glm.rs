//! Maximum-likelihood logistic regression.
//!
//! Fitting is Newton-Raphson on the log-likelihood, which for the canonical
//! logit link is the same thing as iteratively reweighted least squares. A
//! step that lowers the likelihood is halved until it does not. Separation is
//! reported rather than treated as an error: either the iterations fail to
//! settle, or some fitted probabilities end up numerically at 0 or 1.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::datagen::{inv_logit, Dataset, StandardizationParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ml,
    Lu,
    Bu,
    Ridge,
    Pml,
    Lasso,
    AdaptiveLasso,
    Garrote,
    Firth,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Ml,
        Method::Lu,
        Method::Bu,
        Method::Ridge,
        Method::Pml,
        Method::Lasso,
        Method::AdaptiveLasso,
        Method::Garrote,
        Method::Firth,
    ];

    /// Short label used in output files.
    pub fn label(self) -> &'static str {
        match self {
            Method::Ml => "ML",
            Method::Lu => "LU",
            Method::Bu => "BU",
            Method::Ridge => "L2",
            Method::Pml => "PML",
            Method::Lasso => "L1",
            Method::AdaptiveLasso => "AL",
            Method::Garrote => "NNG",
            Method::Firth => "Firth",
        }
    }

    pub fn from_label(s: &str) -> Option<Method> {
        let s = s.trim();
        Method::ALL.into_iter().find(|m| {
            m.label().eq_ignore_ascii_case(s) || format!("{m:?}").eq_ignore_ascii_case(s)
        })
    }

    /// Methods that can set coefficients exactly to zero.
    pub fn selects_variables(self) -> bool {
        matches!(self, Method::Lasso | Method::AdaptiveLasso | Method::Garrote)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub intercept: f64,
    pub betas: Vec<f64>,
    pub method: Method,
    /// Selected tuning value, for the penalized fitters.
    pub lambda: Option<f64>,
    /// Uniform shrinkage factor, for LU and BU.
    pub shrinkage_factor: Option<f64>,
    pub converged: bool,
    pub separation_detected: bool,
    /// Unpenalized log-likelihood at the returned coefficients.
    pub log_lik: f64,
    pub selected_mask: Vec<bool>,
}

impl FitResult {
    pub fn new(method: Method, intercept: f64, betas: Vec<f64>, log_lik: f64) -> Self {
        let selected_mask = betas.iter().map(|&b| b != 0.0).collect();
        FitResult {
            intercept,
            betas,
            method,
            lambda: None,
            shrinkage_factor: None,
            converged: true,
            separation_detected: false,
            log_lik,
            selected_mask,
        }
    }

    pub fn n_selected(&self) -> usize {
        self.selected_mask.iter().filter(|&&s| s).count()
    }

    pub fn all_zero(&self) -> bool {
        self.betas.iter().all(|&b| b == 0.0)
    }

    /// Coefficients expressed on the scale of the unstandardized predictors.
    pub fn destandardize(&self, params: &StandardizationParams) -> FitResult {
        let betas: Vec<f64> = self.betas.iter().zip(&params.sds).map(|(b, s)| b / s).collect();
        let shift: f64 = betas.iter().zip(&params.means).map(|(b, m)| b * m).sum();
        FitResult { intercept: self.intercept - shift, betas, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the relative change in log-likelihood.
    pub tol: f64,
    /// Fitted probabilities closer than this to 0 or 1 signal separation.
    pub prob_epsilon: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iter: 100, tol: 1e-8, prob_epsilon: 1e-8 }
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub fn log1pexp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of outcomes given linear predictors.
pub fn log_likelihood_lp(lp: &[f64], y: &[f64]) -> f64 {
    lp.iter().zip(y).map(|(&eta, &yi)| yi * eta - log1pexp(eta)).sum()
}

pub fn log_likelihood(alpha: f64, betas: &[f64], data: &Dataset) -> f64 {
    let lp = lp_from(alpha, betas, &data.x);
    log_likelihood_lp(lp.as_slice(), &data.y)
}

/// Log-likelihood of the intercept-only model.
pub fn null_log_likelihood(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let k = y.iter().sum::<f64>();
    let mut ll = 0.0;
    if k > 0.0 {
        ll += k * (k / n).ln();
    }
    if k < n {
        ll += (n - k) * (1.0 - k / n).ln();
    }
    ll
}

pub(crate) fn lp_from(alpha: f64, betas: &[f64], x: &DMatrix<f64>) -> DVector<f64> {
    let mut lp = x * DVector::from_column_slice(betas);
    lp.add_scalar_mut(alpha);
    lp
}

pub fn linear_predictor(fit: &FitResult, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() != fit.betas.len() {
        return Err(Error::DimensionMismatch { expected: fit.betas.len(), found: x.ncols() });
    }
    Ok(lp_from(fit.intercept, &fit.betas, x).data.into())
}

/// `X~' W X~` where `X~` is the design with a leading column of ones.
pub(crate) fn weighted_information(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut info = DMatrix::zeros(p + 1, p + 1);
    info[(0, 0)] = w.iter().sum();
    let mut wx = vec![0.0; w.len()];
    for j in 0..p {
        let cj = x.column(j);
        for (i, v) in wx.iter_mut().enumerate() {
            *v = w[i] * cj[i];
        }
        let s: f64 = wx.iter().sum();
        info[(0, j + 1)] = s;
        info[(j + 1, 0)] = s;
        for k in j..p {
            let ck = x.column(k);
            let s: f64 = wx.iter().zip(ck.iter()).map(|(a, b)| a * b).sum();
            info[(j + 1, k + 1)] = s;
            info[(k + 1, j + 1)] = s;
        }
    }
    info
}

/// `X~' r`.
pub(crate) fn design_tr_mul(x: &DMatrix<f64>, r: &[f64]) -> DVector<f64> {
    let p = x.ncols();
    let mut g = DVector::zeros(p + 1);
    g[0] = r.iter().sum();
    for j in 0..p {
        g[j + 1] = x.column(j).iter().zip(r).map(|(a, b)| a * b).sum();
    }
    g
}

pub(crate) fn extreme_probabilities(lp: &[f64], eps: f64) -> bool {
    lp.iter().map(|&eta| inv_logit(eta)).any(|p| p < eps || p > 1.0 - eps)
}

/// Relative change criterion shared by the Newton-type fitters.
#[inline]
pub(crate) fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / (new.abs() + 0.1)
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonTrace {
    pub coef: DVector<f64>,
    pub log_lik: f64,
    pub converged: bool,
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

/// Newton iterations for `ell(b) - 0.5 b' P b` with diagonal `P` (zero for the
/// intercept). `penalty_diag.len() == p + 1`. Used by ML (all zeros) and by the
/// quadratic-penalty fitters.
pub(crate) fn newton_quadratic(
    data: &Dataset,
    penalty_diag: &[f64],
    start: Option<&DVector<f64>>,
    opts: &FitOptions,
) -> Result<NewtonTrace> {
    let p = data.p();
    debug_assert_eq!(penalty_diag.len(), p + 1);
    let n = data.n();
    let objective = |coef: &DVector<f64>, lp: &DVector<f64>| {
        let pen: f64 = coef.iter().zip(penalty_diag).map(|(b, d)| d * b * b).sum();
        log_likelihood_lp(lp.as_slice(), &data.y) - 0.5 * pen
    };
    let mut coef = match start {
        Some(s) => s.clone(),
        None => {
            let mut c = DVector::zeros(p + 1);
            let rate = data.y.iter().sum::<f64>() / n as f64;
            c[0] = (rate / (1.0 - rate)).ln();
            c
        }
    };
    let mut lp = lp_from(coef[0], &coef.as_slice()[1..], &data.x);
    let mut obj = objective(&coef, &lp);
    let mut history = vec![obj];
    let mut converged = false;
    let mut w = vec![0.0; n];
    let mut resid = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        for i in 0..n {
            let pi = inv_logit(lp[i]);
            w[i] = pi * (1.0 - pi);
            resid[i] = data.y[i] - pi;
        }
        let mut grad = design_tr_mul(&data.x, &resid);
        let mut hess = weighted_information(&data.x, &w);
        for k in 0..=p {
            grad[k] -= penalty_diag[k] * coef[k];
            hess[(k, k)] += penalty_diag[k];
        }
        let Some(chol) = hess.cholesky() else {
            if iter == 1 {
                return Err(Error::RankDeficient);
            }
            break;
        };
        let step = chol.solve(&grad);
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &coef + &step * t;
            let cand_lp = lp_from(cand[0], &cand.as_slice()[1..], &data.x);
            let cand_obj = objective(&cand, &cand_lp);
            if cand_obj.is_finite() && cand_obj >= obj - 1e-12 * (obj.abs() + 1.0) {
                accepted = Some((cand, cand_lp, cand_obj));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_lp, cand_obj)) = accepted else {
            // No ascent possible along the Newton direction: numerically at the optimum.
            converged = true;
            break;
        };
        let change = relative_change(cand_obj, obj);
        coef = cand;
        lp = cand_lp;
        obj = cand_obj;
        history.push(obj);
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let log_lik = log_likelihood_lp(lp.as_slice(), &data.y);
    Ok(NewtonTrace { coef, log_lik, converged, history })
}

/// Maximum-likelihood fit.
pub fn fit_ml(data: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    let penalty = vec![0.0; data.p() + 1];
    let trace = newton_quadratic(data, &penalty, None, opts)?;
    Ok(ml_result(data, trace, opts))
}

fn ml_result(data: &Dataset, trace: NewtonTrace, opts: &FitOptions) -> FitResult {
    let lp = lp_from(trace.coef[0], &trace.coef.as_slice()[1..], &data.x);
    let extreme = extreme_probabilities(lp.as_slice(), opts.prob_epsilon);
    let mut fit = FitResult::new(Method::Ml, trace.coef[0], trace.coef.as_slice()[1..].to_vec(), trace.log_lik);
    fit.converged = trace.converged;
    fit.separation_detected = !trace.converged || extreme;
    fit
}

#[cfg(test)]
pub(crate) fn fit_ml_traced(data: &Dataset, opts: &FitOptions) -> Result<(FitResult, Vec<f64>)> {
    let penalty = vec![0.0; data.p() + 1];
    let trace = newton_quadratic(data, &penalty, None, opts)?;
    let history = trace.history.clone();
    Ok((ml_result(data, trace, opts), history))
}

/// Maximum-likelihood intercept with the slope coefficients held fixed.
///
/// Solves the score equation `sum(y - p) = 0` by safeguarded Newton steps,
/// so the mean fitted probability equals the observed event rate.
pub fn refit_intercept(betas_fixed: &[f64], data: &Dataset, opts: &FitOptions) -> Result<f64> {
    if betas_fixed.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: betas_fixed.len() });
    }
    if betas_fixed.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidModel("fixed coefficients must be finite".into()));
    }
    let offset = lp_from(0.0, betas_fixed, &data.x);
    refit_intercept_offset(offset.as_slice(), &data.y, opts)
}

pub(crate) fn refit_intercept_offset(offset: &[f64], y: &[f64], opts: &FitOptions) -> Result<f64> {
    let n = y.len() as f64;
    let rate = y.iter().sum::<f64>() / n;
    let mean_offset = offset.iter().sum::<f64>() / n;
    let mut alpha = (rate / (1.0 - rate)).ln() - mean_offset;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let max_iter = opts.max_iter.max(200);
    for _ in 0..max_iter {
        let (mut score, mut info) = (0.0, 0.0);
        for (&o, &yi) in offset.iter().zip(y) {
            let p = inv_logit(alpha + o);
            score += yi - p;
            info += p * (1.0 - p);
        }
        if (score / n).abs() < 1e-14 {
            return Ok(alpha);
        }
        if score > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let mut next = if info > 0.0 { alpha + score / info } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0 + (lo - alpha).abs(),
                (false, true) => hi - 1.0 - (hi - alpha).abs(),
                (false, false) => unreachable!(),
            };
        }
        if (next - alpha).abs() < 1e-15 * (1.0 + alpha.abs()) {
            return Ok(next);
        }
        alpha = next;
    }
    Err(Error::NonConvergence { what: "intercept refit", iterations: max_iter })
}

/// Likelihood-ratio statistic of `fit` against the intercept-only model.
pub fn lr_chi_square(fit: &FitResult, data: &Dataset) -> f64 {
    let ll = log_likelihood(fit.intercept, &fit.betas, data);
    (2.0 * (ll - null_log_likelihood(&data.y))).max(0.0)
}

/// Logistic regression of `y` on a single covariate. Returns `(intercept, slope)`.
pub fn fit_univariable(covariate: &[f64], y: &[f64], opts: &FitOptions) -> Result<(f64, f64)> {
    if covariate.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: covariate.len() });
    }
    let n = y.len() as f64;
    let events = y.iter().sum::<f64>();
    if events == 0.0 || events == n {
        return Err(Error::SingleClass { events: events as usize, nonevents: (n - events) as usize });
    }
    let objective = |a: f64, b: f64| -> f64 {
        covariate.iter().zip(y).map(|(&x, &yi)| {
            let eta = a + b * x;
            yi * eta - log1pexp(eta)
        }).sum()
    };
    let mut a = (events / (n - events)).ln();
    let mut b = 0.0;
    let mut ll = objective(a, b);
    for _ in 0..opts.max_iter {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &yi) in covariate.iter().zip(y) {
            let p = inv_logit(a + b * x);
            let w = p * (1.0 - p);
            let r = yi - p;
            g0 += r;
            g1 += r * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::RankDeficient);
        }
        let da = (h11 * g0 - h01 * g1) / det;
        let db = (h00 * g1 - h01 * g0) / det;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..40 {
            let (ca, cb) = (a + t * da, b + t * db);
            let cl = objective(ca, cb);
            if cl.is_finite() && cl >= ll - 1e-12 * (ll.abs() + 1.0) {
                next = Some((ca, cb, cl));
                break;
            }
            t *= 0.5;
        }
        let Some((ca, cb, cl)) = next else {
            return Ok((a, b));
        };
        let change = relative_change(cl, ll);
        let step = (ca - a).abs().max((cb - b).abs());
        a = ca;
        b = cb;
        ll = cl;
        if change < opts.tol.min(1e-10) && step < 1e-9 * (1.0 + b.abs()) {
            return Ok((a, b));
        }
    }
    Err(Error::NonConvergence { what: "univariable logistic fit", iterations: opts.max_iter })
}

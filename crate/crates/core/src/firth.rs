//! Firth's bias-reduced logistic regression.
//!
//! The estimate maximizes `ell(b) + 0.5 log|I(b)|`. Each iteration is a Newton
//! step on the modified score, in which every response `y_i` is replaced by
//! `y_i + h_i (0.5 - p_i)` with `h_i` the leverage from the weighted hat
//! matrix; steps are halved when they lower the penalized likelihood. Once the
//! slopes have settled, the intercept is re-estimated by ordinary maximum
//! likelihood with the slopes held fixed, which removes the bias Firth's
//! penalty introduces in predicted probabilities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::datagen::{inv_logit, Dataset};
use crate::error::{Error, Result};
use crate::glm::{
    design_tr_mul, log_likelihood, log_likelihood_lp, lp_from, refit_intercept, weighted_information, FitOptions,
    FitResult, Method,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirthOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub step_halving_max: usize,
}

impl Default for FirthOptions {
    fn default() -> Self {
        FirthOptions { max_iter: 200, tol: 1e-8, step_halving_max: 20 }
    }
}

impl FirthOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(format!("invalid Firth options {self:?}")));
        }
        Ok(())
    }
}

struct State {
    lp: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    objective: f64,
}

fn evaluate(data: &Dataset, coef: &DVector<f64>) -> Option<State> {
    let lp = lp_from(coef[0], &coef.as_slice()[1..], &data.x);
    let w: Vec<f64> = lp.iter().map(|&e| inv_logit(e) * (1.0 - inv_logit(e))).collect();
    let chol = weighted_information(&data.x, &w).cholesky()?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let objective = log_likelihood_lp(lp.as_slice(), &data.y) + 0.5 * log_det;
    objective.is_finite().then_some(State { lp, chol, objective })
}

/// Penalized log-likelihood `ell(b) + 0.5 log|I(b)|`, with `b = (intercept, betas)`.
pub fn firth_objective(data: &Dataset, intercept: f64, betas: &[f64]) -> Result<f64> {
    let mut coef = DVector::zeros(betas.len() + 1);
    coef[0] = intercept;
    coef.as_mut_slice()[1..].copy_from_slice(betas);
    evaluate(data, &coef).map(|s| s.objective).ok_or(Error::RankDeficient)
}

/// Modified score `X~'(y - p + h (0.5 - p))`.
fn modified_score(data: &Dataset, design_t: &DMatrix<f64>, state: &State) -> DVector<f64> {
    let n = data.n();
    // Leverages h_i = w_i * |L^{-1} x~_i|^2.
    let mut z = design_t.clone();
    state.chol.l_dirty().solve_lower_triangular_mut(&mut z);
    let mut r = vec![0.0; n];
    for i in 0..n {
        let pi = inv_logit(state.lp[i]);
        let h = pi * (1.0 - pi) * z.column(i).norm_squared();
        r[i] = data.y[i] - pi + h * (0.5 - pi);
    }
    design_tr_mul(&data.x, &r)
}

/// Slopes and the penalized-likelihood intercept before the ML intercept refit.
/// Returns `(coef, converged)`.
pub(crate) fn firth_coefficients(data: &Dataset, opts: &FirthOptions) -> Result<(DVector<f64>, bool)> {
    opts.validate()?;
    let n = data.n();
    let p = data.p();
    let events = data.n_events();
    if events == 0 || events == n {
        return Err(Error::SingleClass { events, nonevents: n - events });
    }
    let mut design_t = DMatrix::from_element(p + 1, n, 1.0);
    for j in 0..p {
        design_t.row_mut(j + 1).copy_from(&data.x.column(j).transpose());
    }

    let mut coef = DVector::zeros(p + 1);
    let rate = data.event_rate();
    coef[0] = (rate / (1.0 - rate)).ln();
    let mut state = evaluate(data, &coef).ok_or(Error::RankDeficient)?;
    let mut converged = false;

    for _ in 0..opts.max_iter {
        let score = modified_score(data, &design_t, &state);
        let step = state.chol.solve(&score);
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.step_halving_max {
            let cand = &coef + &step * t;
            if let Some(s) = evaluate(data, &cand) {
                if s.objective >= state.objective - 1e-12 * (state.objective.abs() + 1.0) {
                    accepted = Some((cand, s));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, s)) = accepted else {
            // The Newton direction no longer improves the objective.
            converged = score.amax() < 1e-6 * (n as f64).max(1.0);
            break;
        };
        let moved = (&cand - &coef).amax();
        coef = cand;
        state = s;
        if moved < opts.tol {
            converged = true;
            break;
        }
    }
    Ok((coef, converged))
}

/// Firth fit with the intercept re-estimated by ML given the Firth slopes.
pub fn fit_firth(data: &Dataset, opts: &FirthOptions) -> Result<FitResult> {
    let (coef, converged) = firth_coefficients(data, opts)?;
    let betas = coef.as_slice()[1..].to_vec();
    let ml_opts = FitOptions { max_iter: opts.max_iter, ..FitOptions::default() };
    let intercept = refit_intercept(&betas, data, &ml_opts)?;
    let log_lik = log_likelihood(intercept, &betas, data);
    let mut fit = FitResult::new(Method::Firth, intercept, betas, log_lik);
    fit.converged = converged;
    Ok(fit)
}

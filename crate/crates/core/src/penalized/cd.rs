//! Coordinate descent for L1-penalized logistic regression.
//!
//! Minimizes `-(1/n) ell(a, b) + sum_j pen_j |b_j|` with an unpenalized
//! intercept. Each outer iteration forms the weighted least-squares
//! approximation at the current estimate and solves it by cyclic coordinate
//! updates with soft-thresholding; the move is then accepted with step
//! halving on the exact objective. With `nonneg` the coefficients are kept
//! at or above zero (one-sided thresholding).

use nalgebra::DMatrix;

use crate::datagen::inv_logit;
use crate::glm::{log_likelihood_lp, relative_change};

const MIN_WEIGHT: f64 = 1e-5;
const MAX_OUTER: usize = 100;
const MAX_INNER: usize = 2000;
const INNER_TOL: f64 = 1e-18;
const OUTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct L1Solution {
    pub intercept: f64,
    pub coefs: Vec<f64>,
    pub converged: bool,
}

#[inline]
fn soft_threshold(g: f64, t: f64) -> f64 {
    if g > t {
        g - t
    } else if g < -t {
        g + t
    } else {
        0.0
    }
}

fn objective(eta: &[f64], y: &[f64], coefs: &[f64], pen: &[f64]) -> f64 {
    let n = y.len() as f64;
    let l1: f64 = coefs.iter().zip(pen).map(|(c, p)| p * c.abs()).sum();
    -log_likelihood_lp(eta, y) / n + l1
}

fn linear_predictor(x: &DMatrix<f64>, intercept: f64, coefs: &[f64], out: &mut [f64]) {
    out.fill(intercept);
    for (j, &c) in coefs.iter().enumerate() {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(x.column(j).iter()) {
                *o += c * v;
            }
        }
    }
}

pub(crate) fn solve_l1(
    x: &DMatrix<f64>,
    y: &[f64],
    pen: &[f64],
    nonneg: bool,
    start_intercept: f64,
    start: &[f64],
) -> L1Solution {
    let n = y.len();
    let nf = n as f64;
    let p = x.ncols();
    let mut intercept = start_intercept;
    let mut coefs = start.to_vec();
    if nonneg {
        coefs.iter_mut().for_each(|c| *c = c.max(0.0));
    }
    let mut eta = vec![0.0; n];
    linear_predictor(x, intercept, &coefs, &mut eta);
    let mut obj = objective(&eta, y, &coefs, pen);

    let mut w = vec![0.0; n];
    let mut res = vec![0.0; n];
    let mut h = vec![0.0; p];
    let mut cand_eta = vec![0.0; n];
    let mut converged = false;

    for _ in 0..MAX_OUTER {
        for i in 0..n {
            let pi = inv_logit(eta[i]);
            w[i] = (pi * (1.0 - pi)).max(MIN_WEIGHT);
            res[i] = (y[i] - pi) / w[i];
        }
        let wsum: f64 = w.iter().sum();
        for (j, hj) in h.iter_mut().enumerate() {
            *hj = x.column(j).iter().zip(&w).map(|(v, wi)| wi * v * v).sum::<f64>() / nf;
        }

        let mut new_intercept = intercept;
        let mut new_coefs = coefs.clone();
        for _ in 0..MAX_INNER {
            let mut max_delta = 0.0f64;
            let d = res.iter().zip(&w).map(|(r, wi)| r * wi).sum::<f64>() / wsum;
            if d != 0.0 {
                new_intercept += d;
                res.iter_mut().for_each(|r| *r -= d);
                max_delta = max_delta.max(d * d * wsum / nf);
            }
            for j in 0..p {
                if h[j] <= 0.0 {
                    continue;
                }
                let col = x.column(j);
                let old = new_coefs[j];
                let g = col.iter().zip(&res).zip(&w).map(|((v, r), wi)| wi * v * r).sum::<f64>() / nf + h[j] * old;
                let new = if nonneg {
                    (g - pen[j]).max(0.0) / h[j]
                } else {
                    soft_threshold(g, pen[j]) / h[j]
                };
                let d = new - old;
                if d != 0.0 {
                    for (r, v) in res.iter_mut().zip(col.iter()) {
                        *r -= d * v;
                    }
                    new_coefs[j] = new;
                    max_delta = max_delta.max(h[j] * d * d);
                }
            }
            if max_delta < INNER_TOL {
                break;
            }
        }

        // Accept the move with step halving on the exact objective.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let ci = intercept + t * (new_intercept - intercept);
            let cc: Vec<f64> = coefs.iter().zip(&new_coefs).map(|(o, nw)| o + t * (nw - o)).collect();
            linear_predictor(x, ci, &cc, &mut cand_eta);
            let cobj = objective(&cand_eta, y, &cc, pen);
            if cobj.is_finite() && cobj <= obj + 1e-14 * (obj.abs() + 1.0) {
                accepted = Some((ci, cc, cobj));
                break;
            }
            t *= 0.5;
        }
        let Some((ci, cc, cobj)) = accepted else {
            converged = true;
            break;
        };
        let max_change = coefs
            .iter()
            .zip(&cc)
            .map(|(a, b)| (a - b).abs())
            .fold((intercept - ci).abs(), f64::max);
        let rel = relative_change(cobj, obj);
        intercept = ci;
        coefs = cc;
        obj = cobj;
        std::mem::swap(&mut eta, &mut cand_eta);
        if max_change < OUTER_TOL || (rel < 1e-15 && max_change < 1e-6) {
            converged = true;
            break;
        }
    }
    L1Solution { intercept, coefs, converged }
}

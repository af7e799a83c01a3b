//! Simulated populations with equicorrelated Gaussian predictors and
//! Bernoulli outcomes, plus stratified development samples drawn from them.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Parallelism};
use crate::rng::StreamKey;

/// Numerically stable inverse logit.
#[inline]
pub fn inv_logit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub betas: Vec<f64>,
    pub intercept: f64,
    pub rho: f64,
}

impl TrueModel {
    pub fn new(betas: Vec<f64>, intercept: f64, rho: f64) -> Result<Self> {
        let model = TrueModel { betas, intercept, rho };
        model.validate()?;
        Ok(model)
    }

    pub fn p(&self) -> usize {
        self.betas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) || !self.rho.is_finite() {
            return Err(Error::InvalidCorrelation(self.rho));
        }
        if self.betas.is_empty() {
            return Err(Error::InvalidModel("at least one predictor is required".into()));
        }
        if !self.intercept.is_finite() || self.betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidModel("coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn is_noise(&self, j: usize) -> bool {
        self.betas[j] == 0.0
    }
}

/// Predictor matrix with a binary outcome. Columns are predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    /// Validates shape, that outcomes are 0/1, and that both classes occur.
    pub fn new(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidModel("dataset needs at least one predictor".into()));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidModel("outcomes must be 0 or 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("predictors must be finite".into()));
        }
        let events = y.iter().filter(|&&v| v == 1.0).count();
        if events == 0 || events == y.len() {
            return Err(Error::SingleClass { events, nonevents: y.len() - events });
        }
        Ok(Dataset { x, y })
    }

    /// Build from row-major predictor values.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidModel("ragged predictor rows".into()));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Dataset::new(x, y)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_events(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1.0).count()
    }

    pub fn event_rate(&self) -> f64 {
        self.n_events() as f64 / self.n() as f64
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Result<Dataset> {
        let x = self.x.select_rows(indices);
        let y = indices.iter().map(|&i| self.y[i]).collect();
        Dataset::new(x, y)
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub true_risk: Vec<f64>,
}

impl Population {
    pub fn size(&self) -> usize {
        self.y.len()
    }

    pub fn event_indices(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.size()).partition(|&i| self.y[i] == 1.0)
    }

    pub fn as_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.x.clone(), self.y.clone())
    }
}

const ROWS_PER_CHUNK: usize = 8192;

/// One equicorrelated row: `x_j = sqrt(rho) z0 + sqrt(1 - rho) z_j`.
fn draw_row<R: Rng>(rng: &mut R, p: usize, rho: f64, out: &mut [f64]) {
    let shared: f64 = rng.sample(StandardNormal);
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    for v in out.iter_mut().take(p) {
        let z: f64 = rng.sample(StandardNormal);
        *v = a * shared + b * z;
    }
}

/// Draw `size` individuals from the true model. Rows are generated in fixed
/// chunks, each with its own stream, so the result depends only on `key`.
pub fn generate_population(
    model: &TrueModel,
    size: usize,
    key: StreamKey,
    parallelism: Parallelism,
) -> Result<Population> {
    model.validate()?;
    if size == 0 {
        return Err(Error::InvalidModel("population size must be at least 1".into()));
    }
    let p = model.p();
    let n_chunks = size.div_ceil(ROWS_PER_CHUNK);
    let chunks = map_indexed(n_chunks, parallelism, |c| {
        let start = c * ROWS_PER_CHUNK;
        let rows = ROWS_PER_CHUNK.min(size - start);
        let mut rng = key.child(c as u64).rng();
        let mut xs = vec![0.0; rows * p];
        let mut ys = Vec::with_capacity(rows);
        let mut risks = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &mut xs[r * p..(r + 1) * p];
            draw_row(&mut rng, p, model.rho, row);
            let lp = model.intercept + row.iter().zip(&model.betas).map(|(x, b)| x * b).sum::<f64>();
            let risk = inv_logit(lp);
            let u: f64 = rng.random();
            ys.push(if u < risk { 1.0 } else { 0.0 });
            risks.push(risk);
        }
        (xs, ys, risks)
    });

    let mut row_major = Vec::with_capacity(size * p);
    let mut y = Vec::with_capacity(size);
    let mut true_risk = Vec::with_capacity(size);
    for (xs, ys, rs) in chunks {
        row_major.extend(xs);
        y.extend(ys);
        true_risk.extend(rs);
    }
    let x = DMatrix::from_row_slice(size, p, &row_major);
    Ok(Population { x, y, true_risk })
}

/// Intercept giving the requested marginal event rate.
///
/// Bisection on `[-20, 20]` against a fixed Monte Carlo sample of linear
/// predictors. The sample is symmetrised (each draw `x` is paired with `-x`),
/// which keeps the estimate unbiased, lowers its variance and returns exactly
/// zero for a target of one half.
pub fn solve_intercept(
    betas: &[f64],
    rho: f64,
    target_rate: f64,
    mc_size: usize,
    key: StreamKey,
    tol: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidCorrelation(rho));
    }
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::InvalidModel(format!("target event rate {target_rate} outside (0, 1)")));
    }
    if mc_size == 0 {
        return Err(Error::InvalidModel("Monte Carlo size must be positive".into()));
    }
    let p = betas.len();
    let mut rng = key.rng();
    let mut row = vec![0.0; p];
    let lps: Vec<f64> = (0..mc_size)
        .map(|_| {
            draw_row(&mut rng, p, rho, &mut row);
            row.iter().zip(betas).map(|(x, b)| x * b).sum()
        })
        .collect();

    let rate_at = |alpha: f64| {
        let s: f64 = lps.iter().map(|&lp| inv_logit(alpha + lp) + inv_logit(alpha - lp)).sum();
        s / (2.0 * mc_size as f64)
    };

    let (mut lo, mut hi) = (-20.0_f64, 20.0_f64);
    const MAX_ITER: usize = 200;
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let resid = rate_at(mid) - target_rate;
        if resid.abs() <= tol || hi - lo < 1e-14 {
            return Ok(mid);
        }
        if resid > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(Error::RootFind { iterations: MAX_ITER, residual: rate_at(mid) - target_rate })
}

/// Stratified draw without replacement: exactly `n_events` events and
/// `n_total - n_events` non-events, returned in shuffled order.
pub fn draw_development_sample<R: Rng>(
    pop: &Population,
    n_events: usize,
    n_total: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n_events == 0 || n_events >= n_total {
        return Err(Error::SingleClass { events: n_events, nonevents: n_total.saturating_sub(n_events) });
    }
    let (events, nonevents) = pop.event_indices();
    let n_non = n_total - n_events;
    if events.len() < n_events {
        return Err(Error::Sampling { requested: n_events, available: events.len() });
    }
    if nonevents.len() < n_non {
        return Err(Error::Sampling { requested: n_non, available: nonevents.len() });
    }
    let mut rows: Vec<usize> = rand::seq::index::sample(rng, events.len(), n_events)
        .into_iter()
        .map(|k| events[k])
        .collect();
    rows.extend(rand::seq::index::sample(rng, nonevents.len(), n_non).into_iter().map(|k| nonevents[k]));
    rows.shuffle(rng);
    let x = pop.x.select_rows(&rows);
    let y = rows.iter().map(|&i| pop.y[i]).collect();
    Dataset::new(x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Centre and scale each column by its own mean and (n - 1) standard deviation.
pub fn standardize(dev: &Dataset) -> Result<(Dataset, StandardizationParams)> {
    let n = dev.n() as f64;
    let mut means = Vec::with_capacity(dev.p());
    let mut sds = Vec::with_capacity(dev.p());
    for (j, col) in dev.x.column_iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n;
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = (ss / (n - 1.0)).sqrt();
        if !sd.is_finite() || sd <= 1e-12 * mean.abs().max(1.0) {
            return Err(Error::DegeneratePredictor(j));
        }
        means.push(mean);
        sds.push(sd);
    }
    let params = StandardizationParams { means, sds };
    let out = apply_standardization(&params, dev)?;
    Ok((out, params))
}

/// Transform `data` with previously estimated means and standard deviations.
pub fn apply_standardization(params: &StandardizationParams, data: &Dataset) -> Result<Dataset> {
    if params.means.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: params.means.len(), found: data.p() });
    }
    let mut x = data.x.clone();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let (m, s) = (params.means[j], params.sds[j]);
        col.apply(|v| *v = (*v - m) / s);
    }
    Ok(Dataset { x, y: data.y.clone() })
}

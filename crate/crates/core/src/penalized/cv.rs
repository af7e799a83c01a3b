use rand::seq::SliceRandom;
use rand::Rng;

use super::{solve_path, LambdaGrid, PenaltySpec};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::glm::{log_likelihood, FitOptions};

/// Fold assignment for K-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub folds: usize,
    pub assignments: Vec<usize>,
    pub stratified: bool,
    /// Fewer folds than requested because a class was too small.
    pub reduced: bool,
}

impl CvPlan {
    pub fn fold_rows(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != fold)
    }
}

/// Random fold assignment stratified by outcome: events are dealt round-robin
/// over the folds, then non-events continue the same rotation.
pub fn make_cv_plan<R: Rng>(data: &Dataset, folds: usize, rng: &mut R) -> Result<CvPlan> {
    let (mut events, mut nonevents): (Vec<usize>, Vec<usize>) = (0..data.n()).partition(|&i| data.y[i] == 1.0);
    let smallest = events.len().min(nonevents.len());
    if smallest < 2 || folds < 2 {
        return Err(Error::CvInfeasible(smallest));
    }
    let used = folds.min(smallest);
    events.shuffle(rng);
    nonevents.shuffle(rng);
    let mut assignments = vec![0; data.n()];
    for (k, &i) in events.iter().chain(nonevents.iter()).enumerate() {
        assignments[i] = k % used;
    }
    Ok(CvPlan { folds: used, assignments, stratified: true, reduced: used < folds })
}

/// Summed out-of-fold deviance for every grid value (ascending order).
/// `None` where some fold failed to converge.
pub fn cv_path_deviance(
    data: &Dataset,
    spec: &PenaltySpec,
    grid: &LambdaGrid,
    plan: &CvPlan,
    opts: &FitOptions,
) -> Result<Vec<Option<f64>>> {
    let m = grid.len();
    let descending: Vec<f64> = grid.values.iter().rev().copied().collect();
    let mut total = vec![Some(0.0); m];
    for fold in 0..plan.folds {
        let (train_rows, test_rows) = plan.fold_rows(fold);
        let wrap = |e: Error| Error::Fold { fold, source: Box::new(e) };
        let train = data.select_rows(&train_rows).map_err(wrap)?;
        let test = data.select_rows(&test_rows).map_err(wrap)?;
        let path = solve_path(&train, spec, &descending, opts).map_err(wrap)?;
        for (k, point) in path.iter().enumerate() {
            let slot = &mut total[m - 1 - k];
            let dev = -2.0 * log_likelihood(point.intercept, &point.betas, &test);
            *slot = match *slot {
                Some(acc) if point.converged && dev.is_finite() => Some(acc + dev),
                _ => None,
            };
        }
    }
    Ok(total)
}

/// Cross-validated deviance at one tuning value.
pub fn cv_deviance(data: &Dataset, spec: &PenaltySpec, lambda: f64, plan: &CvPlan, opts: &FitOptions) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("negative tuning value {lambda}")));
    }
    let mut sum = 0.0;
    for fold in 0..plan.folds {
        let (train_rows, test_rows) = plan.fold_rows(fold);
        let wrap = |e: Error| Error::Fold { fold, source: Box::new(e) };
        let train = data.select_rows(&train_rows).map_err(wrap)?;
        let test = data.select_rows(&test_rows).map_err(wrap)?;
        let point = solve_path(&train, spec, &[lambda], opts).map_err(wrap)?.remove(0);
        if !point.converged {
            return Err(Error::Fold {
                fold,
                source: Box::new(Error::NonConvergence { what: "penalized fit", iterations: opts.max_iter }),
            });
        }
        sum += -2.0 * log_likelihood(point.intercept, &point.betas, &test);
    }
    Ok(sum)
}

/// Index of the smallest score; among scores within 1e-9 of the minimum the
/// largest index (strongest penalty) wins.
pub fn select_lambda(scores: &[Option<f64>]) -> Option<usize> {
    let best = scores.iter().flatten().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    scores
        .iter()
        .enumerate()
        .rev()
        .find(|(_, s)| matches!(s, Some(v) if *v <= best + 1e-9))
        .map(|(i, _)| i)
}

use rand::Rng;

use super::*;
use crate::datagen::{draw_development_sample, generate_population, standardize, TrueModel};
use crate::glm::fit_ml;
use crate::par::Parallelism;
use crate::rng::StreamKey;

fn dev(seed: u64, betas: Vec<f64>, intercept: f64, rho: f64, events: usize, total: usize) -> Dataset {
    let model = TrueModel::new(betas, intercept, rho).unwrap();
    let pop = generate_population(&model, 20_000, StreamKey::new(seed), Parallelism::SEQUENTIAL).unwrap();
    let d = draw_development_sample(&pop, events, total, &mut StreamKey::new(seed ^ 0xABCD).rng()).unwrap();
    standardize(&d).unwrap().0
}

fn two_predictor(seed: u64) -> Dataset {
    dev(seed, vec![0.5, 0.8], 0.0, 0.3, 20, 40)
}

fn opts() -> FitOptions {
    FitOptions::default()
}

// ---- independent oracle helpers -------------------------------------------

fn naive_loglik(alpha: f64, betas: &[f64], d: &Dataset) -> f64 {
    let mut s = 0.0;
    for i in 0..d.n() {
        let mut eta = alpha;
        for j in 0..d.p() {
            eta += betas[j] * d.x[(i, j)];
        }
        let p = 1.0 / (1.0 + (-eta).exp());
        s += if d.y[i] == 1.0 { p.ln() } else { (1.0 - p).ln() };
    }
    s
}

/// Intercept maximizing the likelihood for fixed slopes, by bisection on the score.
fn profile_alpha(betas: &[f64], d: &Dataset) -> f64 {
    let offsets: Vec<f64> = (0..d.n()).map(|i| (0..d.p()).map(|j| betas[j] * d.x[(i, j)]).sum()).collect();
    let score = |a: f64| -> f64 { offsets.iter().zip(&d.y).map(|(o, y)| y - 1.0 / (1.0 + (-(a + o)).exp())).sum() };
    let (mut lo, mut hi) = (-30.0, 30.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Multi-resolution grid search for the maximizer of a concave `f` on
/// `[lo, hi]^2`, ending at spacing 1e-3.
fn grid_max_2d(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut best_val = f64::NEG_INFINITY;
    let mut scan = |x0: f64, x1: f64, y0: f64, y1: f64, step: f64, best: &mut (f64, f64)| {
        let nx = ((x1 - x0) / step).round() as i64;
        let ny = ((y1 - y0) / step).round() as i64;
        let mut local_best = f64::NEG_INFINITY;
        let mut arg = *best;
        for a in 0..=nx {
            for b in 0..=ny {
                let (u, v) = (x0 + a as f64 * step, y0 + b as f64 * step);
                let val = f(u, v);
                if val > local_best {
                    local_best = val;
                    arg = (u, v);
                }
            }
        }
        if local_best > best_val {
            best_val = local_best;
        }
        *best = arg;
    };
    scan(lo, hi, lo, hi, 0.05, &mut best);
    for (half, step) in [(0.1, 0.01), (0.02, 1e-3)] {
        let (u, v) = best;
        scan((u - half).max(lo), (u + half).min(hi), (v - half).max(lo), (v + half).min(hi), step, &mut best);
    }
    best
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > 1e-10 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

fn single_lambda(lambda: f64) -> LambdaGrid {
    LambdaGrid { values: vec![lambda] }
}

fn solve_one(d: &Dataset, spec: &PenaltySpec, lambda: f64) -> PathPoint {
    solve_path(d, spec, &[lambda], &opts()).unwrap().remove(0)
}

// ---- grid --------------------------------------------------------------------

#[test]
fn grid_endpoints_and_spacing() {
    let g = lambda_grid();
    assert_eq!(g.len(), 251);
    assert_eq!(g.values[0], 0.0);
    assert_eq!(g.values[250], 64.0);
    assert_eq!(g.values[1], 1e-4);
    assert!(g.values.windows(2).all(|w| w[1] > w[0]));
    let r0 = g.values[2] / g.values[1];
    for k in 1..250 {
        assert!((g.values[k + 1] / g.values[k] - r0).abs() < 1e-12);
    }
    let expected = (64.0f64 / 1e-4).powf(124.0 / 249.0);
    assert!((g.values[125] / g.values[1] - expected).abs() < 1e-9 * expected);
}

// ---- CV plans ---------------------------------------------------------------

#[test]
fn cv_plan_even_split() {
    let d = dev(1, vec![0.5; 3], 0.0, 0.0, 50, 100);
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(2).rng()).unwrap();
    assert_eq!(plan.folds, 10);
    assert!(!plan.reduced);
    for f in 0..10 {
        let ev = (0..100).filter(|&i| plan.assignments[i] == f && d.y[i] == 1.0).count();
        assert_eq!(ev, 5);
    }
}

#[test]
fn cv_plan_uneven_split() {
    let d = dev(3, vec![0.5; 3], 0.0, 0.0, 15, 30);
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(4).rng()).unwrap();
    for f in 0..10 {
        let ev = (0..30).filter(|&i| plan.assignments[i] == f && d.y[i] == 1.0).count();
        assert!(ev == 1 || ev == 2);
        assert!((0..30).any(|i| plan.assignments[i] == f));
    }
    let again = make_cv_plan(&d, 10, &mut StreamKey::new(4).rng()).unwrap();
    assert_eq!(plan, again);
}

#[test]
fn cv_plan_small_class() {
    let d = dev(5, vec![0.5; 2], 0.0, 0.0, 4, 40);
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(6).rng()).unwrap();
    assert_eq!(plan.folds, 4);
    assert!(plan.reduced);
    let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
    let tiny = Dataset::from_rows(&rows, vec![1.0, 0.0, 0.0]).unwrap();
    assert_eq!(make_cv_plan(&tiny, 10, &mut StreamKey::new(6).rng()), Err(Error::CvInfeasible(1)));
}

// ---- CV deviance ------------------------------------------------------------

#[test]
fn cv_deviance_saturates_to_intercept_only() {
    let d = dev(7, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 25, 250);
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(8).rng()).unwrap();
    let big = cv_deviance(&d, &PenaltySpec::lasso(), 1e3, &plan, &opts()).unwrap();
    let mut null = 0.0;
    for f in 0..plan.folds {
        let (tr, te) = plan.fold_rows(f);
        let train = d.select_rows(&tr).unwrap();
        let test = d.select_rows(&te).unwrap();
        let r = train.event_rate();
        null += -2.0 * naive_loglik((r / (1.0 - r)).ln(), &[0.0; 5], &test);
    }
    assert!((big - null).abs() < 1e-6 * null, "{big} vs {null}");
}

#[test]
fn cv_deviance_without_penalty_is_ml() {
    let d = dev(9, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 50, 500);
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(10).rng()).unwrap();
    let mut ml = 0.0;
    for f in 0..plan.folds {
        let (tr, te) = plan.fold_rows(f);
        let fit = fit_ml(&d.select_rows(&tr).unwrap(), &opts()).unwrap();
        ml += -2.0 * naive_loglik(fit.intercept, &fit.betas, &d.select_rows(&te).unwrap());
    }
    for spec in [PenaltySpec::ridge(), PenaltySpec::lasso()] {
        let v = cv_deviance(&d, &spec, 0.0, &plan, &opts()).unwrap();
        assert!((v - ml).abs() < 1e-5 * ml, "{:?}: {v} vs {ml}", spec.kind);
    }
}

#[test]
fn cv_prefers_some_penalty_on_noise() {
    let grid = lambda_grid();
    let mut wins = 0;
    for s in 0..50u64 {
        let d = dev(100 + s, vec![0.0; 5], 0.0, 0.0, 15, 30);
        let plan = make_cv_plan(&d, 10, &mut StreamKey::new(500 + s).rng()).unwrap();
        let spec = PenaltySpec::ridge();
        let small = cv_deviance(&d, &spec, grid.values[1], &plan, &opts());
        let larger = cv_deviance(&d, &spec, 0.1, &plan, &opts()).unwrap();
        if small.map_or(true, |v| v >= larger) {
            wins += 1;
        }
    }
    assert!(wins >= 35, "only {wins} of 50");
}

#[test]
fn path_deviance_agrees_with_pointwise() {
    let d = dev(11, vec![0.2, 0.5, 0.8], -1.0, 0.5, 30, 120);
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(12).rng()).unwrap();
    let grid = lambda_grid();
    for spec in [PenaltySpec::ridge(), PenaltySpec::lasso()] {
        let path = cv_path_deviance(&d, &spec, &grid, &plan, &opts()).unwrap();
        for k in [0, 60, 150, 250] {
            let point = cv_deviance(&d, &spec, grid.values[k], &plan, &opts()).unwrap();
            let p = path[k].unwrap();
            assert!((p - point).abs() < 1e-5 * point.abs().max(1.0), "{:?} k={k}: {p} vs {point}", spec.kind);
        }
    }
}

#[test]
fn selection_prefers_largest_lambda_on_ties() {
    assert_eq!(select_lambda(&[Some(3.0), Some(1.0), Some(1.0 + 1e-12), Some(2.0)]), Some(2));
    assert_eq!(select_lambda(&[None, Some(5.0), None]), Some(1));
    assert_eq!(select_lambda(&[None, None]), None);
}

// ---- ridge --------------------------------------------------------------------

#[test]
fn ridge_without_penalty_is_ml() {
    let d = dev(13, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 50, 500);
    let ml = fit_ml(&d, &opts()).unwrap();
    let r = solve_one(&d, &PenaltySpec::ridge(), 0.0);
    assert!((r.intercept - ml.intercept).abs() < 1e-6);
    for (a, b) in r.betas.iter().zip(&ml.betas) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn ridge_saturates() {
    let d = dev(14, vec![0.2, 0.5, 0.8], -1.0, 0.0, 30, 100);
    let r = solve_one(&d, &PenaltySpec::ridge(), 1e6);
    assert!(r.betas.iter().all(|b| b.abs() < 1e-5));
    let rate = d.event_rate();
    assert!((r.intercept - (rate / (1.0 - rate)).ln()).abs() < 1e-4);
}

#[test]
fn ridge_matches_brute_force() {
    let d = two_predictor(15);
    let lambda = 0.02;
    let r = solve_one(&d, &PenaltySpec::ridge(), lambda);
    let n = d.n() as f64;
    let f = |b1: f64, b2: f64| {
        let b = [b1, b2];
        naive_loglik(profile_alpha(&b, &d), &b, &d) / n - lambda * (b1 * b1 + b2 * b2)
    };
    let (u, v) = grid_max_2d(f, -3.0, 3.0);
    assert!((r.betas[0] - u).abs() < 2e-3 && (r.betas[1] - v).abs() < 2e-3, "{:?} vs ({u}, {v})", r.betas);
}

#[test]
fn ridge_is_local_optimum_and_continuous() {
    let d = dev(16, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.5, 25, 250);
    let spec = PenaltySpec::ridge();
    let lambda = 0.01;
    let r = solve_one(&d, &spec, lambda);
    let best = spec.objective(lambda, &d, r.intercept, &r.betas);
    let mut rng = StreamKey::new(17).rng();
    for _ in 0..10_000 {
        let a = r.intercept + rng.random_range(-1e-3..1e-3);
        let b: Vec<f64> = r.betas.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect();
        assert!(spec.objective(lambda, &d, a, &b) <= best + 1e-12);
    }
    let grid = lambda_grid();
    let desc: Vec<f64> = grid.values.iter().rev().copied().collect();
    let path = solve_path(&d, &spec, &desc, &opts()).unwrap();
    for w in path.windows(2) {
        let jump = w[0].betas.iter().zip(&w[1].betas).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(jump < 0.5);
    }
}

// ---- PML ----------------------------------------------------------------------

#[test]
fn pml_degrees_of_freedom_limits() {
    let d = dev(18, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 50, 500);
    let ml = fit_ml(&d, &opts()).unwrap();
    let grid = lambda_grid();
    let path = pml_path(&d, &[1.0; 5], &grid, &opts()).unwrap();
    assert!((path[0].df - 6.0).abs() < 1e-6);
    for (a, b) in path[0].point.betas.iter().zip(&ml.betas) {
        assert!((a - b).abs() < 1e-6);
    }
    let huge = effective_df(&d, ml.intercept, &[0.0; 5], &[0.0, 1e9, 1e9, 1e9, 1e9, 1e9]).unwrap();
    assert!((huge - 1.0).abs() < 1e-5);
    assert!(path.windows(2).all(|w| w[1].df <= w[0].df + 1e-9));
}

#[test]
fn pml_matches_brute_force() {
    let d = two_predictor(19);
    let lambda = 3.0;
    let spec = PenaltySpec::pml(vec![1.0, 1.0]);
    let r = solve_one(&d, &spec, lambda);
    let f = |b1: f64, b2: f64| {
        let b = [b1, b2];
        naive_loglik(profile_alpha(&b, &d), &b, &d) - 0.5 * lambda * (b1 * b1 + b2 * b2)
    };
    let (u, v) = grid_max_2d(f, -3.0, 3.0);
    assert!((r.betas[0] - u).abs() < 2e-3 && (r.betas[1] - v).abs() < 2e-3, "{:?} vs ({u}, {v})", r.betas);
}

#[test]
fn pml_selects_finite_aicc() {
    let d = dev(20, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 15, 150);
    let fit = fit_pml(&d, &lambda_grid(), &opts()).unwrap();
    assert_eq!(fit.method, Method::Pml);
    assert!(fit.lambda.is_some());
    assert!(fit.betas.iter().all(|b| b.is_finite()));
}

#[test]
fn aicc_undefined_when_df_too_large() {
    assert_eq!(aicc(-10.0, 9.0, 10), None);
    assert!(aicc(-10.0, 2.0, 10).is_some());
}

// ---- LASSO -----------------------------------------------------------------

fn max_score(d: &Dataset) -> f64 {
    let r = d.event_rate();
    (0..d.p())
        .map(|j| (0..d.n()).map(|i| d.x[(i, j)] * (d.y[i] - r)).sum::<f64>().abs() / d.n() as f64)
        .fold(0.0, f64::max)
}

#[test]
fn lasso_zero_above_max_score() {
    let d = dev(21, vec![0.2, 0.5, 0.8], -1.0, 0.0, 30, 100);
    let lmax = max_score(&d);
    let r = solve_one(&d, &PenaltySpec::lasso(), lmax * 1.001);
    assert!(r.betas.iter().all(|&b| b == 0.0));
    let r = solve_one(&d, &PenaltySpec::lasso(), lmax * 0.9);
    assert!(r.betas.iter().any(|&b| b != 0.0));
}

#[test]
fn lasso_without_penalty_is_ml() {
    let d = dev(22, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.5, 50, 500);
    let ml = fit_ml(&d, &opts()).unwrap();
    for spec in [PenaltySpec::lasso(), PenaltySpec::adaptive_lasso(&ml.betas)] {
        let r = solve_one(&d, &spec, 0.0);
        assert!(r.converged);
        assert!((r.intercept - ml.intercept).abs() < 1e-5);
        for (a, b) in r.betas.iter().zip(&ml.betas) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }
}

#[test]
fn lasso_matches_scalar_oracle() {
    let d = dev(23, vec![0.7], -0.5, 0.0, 20, 60);
    let n = d.n() as f64;
    let lambda = 0.02;
    let r = solve_one(&d, &PenaltySpec::lasso(), lambda);
    let f = |b: f64| naive_loglik(profile_alpha(&[b], &d), &[b], &d) / n - lambda * b.abs();
    let oracle = golden_max(f, -5.0, 5.0);
    assert!((r.betas[0] - oracle).abs() < 1e-5, "{} vs {oracle}", r.betas[0]);
}

#[test]
fn lasso_matches_brute_force_2d() {
    let d = two_predictor(24);
    let n = d.n() as f64;
    let lambda = 0.03;
    let r = solve_one(&d, &PenaltySpec::lasso(), lambda);
    let f = |b1: f64, b2: f64| {
        let b = [b1, b2];
        naive_loglik(profile_alpha(&b, &d), &b, &d) / n - lambda * (b1.abs() + b2.abs())
    };
    let (u, v) = grid_max_2d(f, -3.0, 3.0);
    assert!((r.betas[0] - u).abs() < 2e-3 && (r.betas[1] - v).abs() < 2e-3, "{:?} vs ({u}, {v})", r.betas);
}

/// KKT conditions for `max mean ell - sum pen_j |b_j|`.
fn assert_subgradient(d: &Dataset, intercept: f64, betas: &[f64], pen: &[f64]) {
    let n = d.n() as f64;
    let lp = lp_from(intercept, betas, &d.x);
    let r: Vec<f64> = lp.iter().zip(&d.y).map(|(&e, &y)| y - inv_logit(e)).collect();
    assert!(r.iter().sum::<f64>().abs() / n < 1e-6);
    for j in 0..d.p() {
        let g: f64 = d.x.column(j).iter().zip(&r).map(|(x, r)| x * r).sum::<f64>() / n;
        if betas[j] == 0.0 {
            assert!(g.abs() <= pen[j] + 1e-6, "coordinate {j}: |{g}| > {}", pen[j]);
        } else {
            assert!((g - pen[j] * betas[j].signum()).abs() < 1e-6, "coordinate {j}: {g}");
        }
    }
}

#[test]
fn lasso_satisfies_subgradient_conditions() {
    let d = dev(25, vec![0.2, 0.2, 0.0, 0.5, 0.8], -1.0, 0.5, 40, 160);
    for lambda in [0.002, 0.01, 0.03, 0.08] {
        let r = solve_one(&d, &PenaltySpec::lasso(), lambda);
        assert_subgradient(&d, r.intercept, &r.betas, &vec![lambda; 5]);
    }
}

#[test]
fn lasso_zero_set_reached_at_finite_lambda() {
    let d = dev(26, vec![0.2, 0.5, 0.8], -1.0, 0.5, 30, 100);
    let grid = lambda_grid();
    let desc: Vec<f64> = grid.values.iter().rev().copied().collect();
    let path = solve_path(&d, &PenaltySpec::lasso(), &desc, &opts()).unwrap();
    let first_nonzero = path.iter().position(|p| p.betas.iter().any(|&b| b != 0.0)).unwrap();
    assert!(first_nonzero > 0);
    assert!(path[..first_nonzero].iter().all(|p| p.betas.iter().all(|&b| b == 0.0)));
}

// ---- adaptive LASSO ---------------------------------------------------------

#[test]
fn adaptive_with_equal_weights_is_rescaled_lasso() {
    let d = dev(27, vec![0.2, 0.2, 0.5, 0.8], -1.0, 0.0, 40, 160);
    let init = vec![0.5; 4];
    for lambda in [0.005, 0.02, 0.05] {
        let al = solve_one(&d, &PenaltySpec::adaptive_lasso(&init), lambda);
        let l = solve_one(&d, &PenaltySpec::lasso(), lambda * 2.0);
        let mask_a: Vec<bool> = al.betas.iter().map(|&b| b != 0.0).collect();
        let mask_l: Vec<bool> = l.betas.iter().map(|&b| b != 0.0).collect();
        assert_eq!(mask_a, mask_l);
        for (a, b) in al.betas.iter().zip(&l.betas) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn adaptive_drops_small_initial_estimates_first() {
    let d = dev(28, vec![0.8, 0.8], 0.0, 0.0, 50, 100);
    let spec = PenaltySpec::adaptive_lasso(&[2.0, 0.05]);
    let grid = lambda_grid();
    let desc: Vec<f64> = grid.values.iter().rev().copied().collect();
    let path = solve_path(&d, &spec, &desc, &opts()).unwrap();
    // Largest lambda at which each coefficient is still non-zero.
    let entry = |j: usize| path.iter().find(|p| p.betas[j] != 0.0).map(|p| p.lambda).unwrap_or(0.0);
    assert!(entry(1) < entry(0), "small-init coefficient enters at {} vs {}", entry(1), entry(0));
}

#[test]
fn adaptive_weight_cap() {
    let spec = PenaltySpec::adaptive_lasso(&[0.0, 1e-12, 0.5]);
    let w = spec.weights.unwrap();
    assert_eq!(w[0], MAX_ADAPTIVE_WEIGHT);
    assert_eq!(w[1], MAX_ADAPTIVE_WEIGHT);
    assert_eq!(w[2], 2.0);
}

// ---- garrote ----------------------------------------------------------------

#[test]
fn garrote_without_penalty_keeps_ml() {
    let d = dev(29, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 50, 500);
    let ml = fit_ml(&d, &opts()).unwrap();
    let r = solve_one(&d, &PenaltySpec::garrote(&ml.betas), 0.0);
    for (c, (b, m)) in r.coefs.iter().zip(r.betas.iter().zip(&ml.betas)) {
        assert!((c - 1.0).abs() < 1e-5 * (1.0 / m.abs()).max(1.0), "c = {c}");
        assert!((b - m).abs() < 1e-5);
    }
}

#[test]
fn garrote_saturates_to_zero() {
    let d = dev(30, vec![0.2, 0.5, 0.8], -1.0, 0.0, 30, 100);
    let ml = fit_ml(&d, &opts()).unwrap();
    let r = solve_one(&d, &PenaltySpec::garrote(&ml.betas), 64.0);
    assert!(r.coefs.iter().all(|&c| c == 0.0));
}

#[test]
fn garrote_matches_brute_force() {
    let d = two_predictor(31);
    let ml = fit_ml(&d, &opts()).unwrap();
    let n = d.n() as f64;
    let lambda = 0.01;
    let r = solve_one(&d, &PenaltySpec::garrote(&ml.betas), lambda);
    let f = |c1: f64, c2: f64| {
        let b = [c1 * ml.betas[0], c2 * ml.betas[1]];
        naive_loglik(profile_alpha(&b, &d), &b, &d) / n - lambda * (c1 + c2)
    };
    let (u, v) = grid_max_2d(f, 0.0, 3.0);
    assert!((r.coefs[0] - u).abs() < 2e-3 && (r.coefs[1] - v).abs() < 2e-3, "{:?} vs ({u}, {v})", r.coefs);
}

#[test]
fn garrote_never_flips_signs() {
    let d = dev(32, vec![0.5, -0.5, 0.0, 0.8], 0.0, 0.5, 30, 60);
    let ml = fit_ml(&d, &opts()).unwrap();
    let grid = lambda_grid();
    let desc: Vec<f64> = grid.values.iter().rev().copied().collect();
    for p in solve_path(&d, &PenaltySpec::garrote(&ml.betas), &desc, &opts()).unwrap() {
        for (b, m) in p.betas.iter().zip(&ml.betas) {
            assert!(b * m >= 0.0);
        }
        assert!(p.coefs.iter().all(|&c| c >= 0.0));
    }
}

// ---- full tuned fits ----------------------------------------------------------

#[test]
fn tuned_fitters_run_end_to_end() {
    let d = dev(33, vec![0.2, 0.2, 0.2, 0.5, 0.8], -2.57, 0.0, 15, 150);
    let grid = lambda_grid();
    let plan = make_cv_plan(&d, 10, &mut StreamKey::new(34).rng()).unwrap();
    let ml = fit_ml(&d, &opts()).unwrap();
    let fits = [
        fit_ridge(&d, &grid, &plan, &opts()).unwrap(),
        fit_lasso(&d, &grid, &plan, &opts()).unwrap(),
        fit_adaptive_lasso(&d, &grid, &plan, &ml, &opts()).unwrap(),
        fit_garrote(&d, &grid, &plan, &ml, &opts()).unwrap(),
    ];
    for f in &fits {
        assert!(f.lambda.is_some());
        assert!(f.log_lik <= 0.0);
        assert_eq!(f.selected_mask, f.betas.iter().map(|&b| b != 0.0).collect::<Vec<_>>());
    }
    assert_eq!(fits[0].method, Method::Ridge);
    assert_eq!(fits[3].method, Method::Garrote);
}

#[test]
fn single_point_grid_is_accepted() {
    let d = two_predictor(35);
    let plan = make_cv_plan(&d, 5, &mut StreamKey::new(36).rng()).unwrap();
    let fit = fit_ridge(&d, &single_lambda(0.05), &plan, &opts()).unwrap();
    assert_eq!(fit.lambda, Some(0.05));
}

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use crate::datagen::{apply_standardization, draw_development_sample, generate_population, standardize, Dataset, Population};
use crate::error::{Error, Result};
use crate::firth::{fit_firth, FirthOptions};
use crate::glm::{fit_ml, linear_predictor, FitOptions, FitResult, Method};
use crate::metrics::{c_statistic, slope_for_run, summarize, MethodMetrics, RunRecord, ScenarioSummary, SEPARATION_REASON};
use crate::par::map_indexed;
use crate::penalized::{
    fit_adaptive_lasso, fit_garrote, fit_lasso, fit_pml, fit_ridge, lambda_grid, make_cv_plan, LambdaGrid,
};
use crate::rng::{Purpose, StreamKey};
use crate::uniform::{bootstrap_uniform_from, likelihood_uniform};

use super::config::HarnessConfig;
use super::scenario::{enumerate_scenarios, Cell, Scenario};

/// Development pool and validation set shared by all scenarios of a cell.
#[derive(Debug, Clone)]
pub struct Pools {
    pub development: Population,
    pub validation: Dataset,
}

pub fn generate_pools(scenario: &Scenario, config: &HarnessConfig) -> Result<Pools> {
    let model = scenario.true_model()?;
    let root = StreamKey::new(config.master_seed);
    let cell = scenario.cell().key();
    let par = config.parallelism();
    let development =
        generate_population(&model, config.dev_pool_size, root.child(Purpose::DevelopmentPool.into()).child(cell), par)?;
    let validation =
        generate_population(&model, config.validation_size, root.child(Purpose::ValidationPool.into()).child(cell), par)?
            .as_dataset()?;
    Ok(Pools { development, validation })
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub records: Vec<RunRecord>,
    pub summary: ScenarioSummary,
}

struct RunContext<'a> {
    scenario: &'a Scenario,
    config: &'a HarnessConfig,
    pools: &'a Pools,
    grid: LambdaGrid,
    opts: FitOptions,
    firth: FirthOptions,
}

fn uses_cv(methods: &[Method]) -> bool {
    methods.iter().any(|m| matches!(m, Method::Ridge | Method::Lasso | Method::AdaptiveLasso | Method::Garrote))
}

fn fit_method(
    ctx: &RunContext,
    method: Method,
    data: &Dataset,
    ml: &FitResult,
    plan: Option<&crate::penalized::CvPlan>,
    key: StreamKey,
) -> Result<FitResult> {
    let plan = || plan.ok_or_else(|| Error::Config("cross-validation plan missing".into()));
    match method {
        Method::Ml => Ok(ml.clone()),
        Method::Lu => likelihood_uniform(ml, data, ctx.scenario.df, &ctx.opts),
        Method::Bu => {
            bootstrap_uniform_from(ml, data, ctx.config.bootstrap_reps, &ctx.opts, key.child(Purpose::Bootstrap.into()))
        }
        Method::Ridge => fit_ridge(data, &ctx.grid, plan()?, &ctx.opts),
        Method::Pml => fit_pml(data, &ctx.grid, &ctx.opts),
        Method::Lasso => fit_lasso(data, &ctx.grid, plan()?, &ctx.opts),
        Method::AdaptiveLasso => fit_adaptive_lasso(data, &ctx.grid, plan()?, ml, &ctx.opts),
        Method::Garrote => fit_garrote(data, &ctx.grid, plan()?, ml, &ctx.opts),
        Method::Firth => fit_firth(data, &ctx.firth),
    }
}

/// One simulation run. `Err` is reserved for problems that affect the whole
/// scenario (the pool cannot supply the sample); fitter failures become an
/// excluded record with the reason attached.
fn run_once(ctx: &RunContext, run: usize) -> Result<RunRecord> {
    let id = ctx.scenario.id();
    let key = StreamKey::new(ctx.config.master_seed).child(ctx.scenario.key()).child(run as u64);
    let raw = draw_development_sample(
        &ctx.pools.development,
        ctx.scenario.n_events,
        ctx.scenario.n_total,
        &mut key.child(Purpose::Sample.into()).rng(),
    )?;

    let outcome = catch_unwind(AssertUnwindSafe(|| -> std::result::Result<RunRecord, String> {
        let fail = |what: &str, e: Error| format!("failure: {what}: {e}");
        let (data, params) = standardize(&raw).map_err(|e| fail("standardize", e))?;
        let ml = fit_ml(&data, &ctx.opts).map_err(|e| fail("ML", e))?;
        if ml.separation_detected {
            return Ok(RunRecord::excluded(&id, run, SEPARATION_REASON));
        }
        let validation = apply_standardization(&params, &ctx.pools.validation).map_err(|e| fail("validation", e))?;
        let plan = if uses_cv(&ctx.config.methods) {
            Some(
                make_cv_plan(&data, ctx.config.cv_folds, &mut key.child(Purpose::CvFolds.into()).rng())
                    .map_err(|e| fail("cv plan", e))?,
            )
        } else {
            None
        };
        let truth = &ctx.scenario.true_betas;
        let mut per_method = BTreeMap::new();
        for &method in &ctx.config.methods {
            let fit = fit_method(ctx, method, &data, &ml, plan.as_ref(), key).map_err(|e| fail(method.label(), e))?;
            let slope = slope_for_run(&fit, &validation).map_err(|e| fail(method.label(), e))?;
            let lp = linear_predictor(&fit, &validation.x).map_err(|e| fail(method.label(), e))?;
            let c_stat = c_statistic(&lp, &validation.y).map_err(|e| fail(method.label(), e))?;
            let original = fit.destandardize(&params);
            let n_noise_selected = fit.selected_mask.iter().zip(truth).filter(|(&s, &b)| s && b == 0.0).count();
            per_method.insert(
                method,
                MethodMetrics {
                    slope,
                    c_stat,
                    n_selected: fit.n_selected(),
                    n_noise_selected,
                    coef_bias: original.betas.iter().zip(truth).map(|(e, t)| e - t).collect(),
                    shrinkage_factor: fit.shrinkage_factor,
                    lambda: fit.lambda,
                },
            );
        }
        Ok(RunRecord::included(&id, run, per_method))
    }));

    Ok(match outcome {
        Ok(Ok(record)) => record,
        Ok(Err(reason)) => RunRecord::excluded(&id, run, reason),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            RunRecord::excluded(&id, run, format!("failure: panic: {msg}"))
        }
    })
}

pub fn run_scenario_with_pools(scenario: &Scenario, config: &HarnessConfig, pools: &Pools) -> Result<ScenarioResult> {
    config.validate_for(std::slice::from_ref(scenario))?;
    let ctx = RunContext {
        scenario,
        config,
        pools,
        grid: lambda_grid(),
        opts: FitOptions::default(),
        firth: FirthOptions::default(),
    };
    let records = map_indexed(config.runs_per_scenario, config.parallelism(), |r| run_once(&ctx, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&scenario.id(), &records, &scenario.true_betas)?;
    Ok(ScenarioResult { scenario: scenario.clone(), records, summary })
}

pub fn run_scenario(scenario: &Scenario, config: &HarnessConfig) -> Result<ScenarioResult> {
    config.validate_for(std::slice::from_ref(scenario))?;
    let pools = generate_pools(scenario, config)?;
    run_scenario_with_pools(scenario, config, &pools)
}

/// Every selected scenario, in enumeration order. Pools are generated once
/// per cell and dropped when the next cell starts.
pub fn run_all(config: &HarnessConfig) -> Result<Vec<ScenarioResult>> {
    let scenarios = enumerate_scenarios(config)?;
    config.validate_for(&scenarios)?;
    let mut out = Vec::with_capacity(scenarios.len());
    let mut current: Option<(Cell, Pools)> = None;
    for s in &scenarios {
        if current.as_ref().is_none_or(|(c, _)| *c != s.cell()) {
            // Release the previous cell's pools before allocating the next.
            drop(current.take());
            current = Some((s.cell(), generate_pools(s, config)?));
        }
        let (_, pools) = current.as_ref().expect("pools just generated");
        out.push(run_scenario_with_pools(s, config, pools)?);
    }
    Ok(out)
}

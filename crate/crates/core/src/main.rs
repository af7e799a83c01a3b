use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use shrinkage::harness::check::quick_suite;
use shrinkage::harness::config::parse_methods;
use shrinkage::harness::{run_all, write_results, HarnessConfig, PredictorSet, ScenarioFilter};

#[derive(Parser)]
#[command(name = "shrinksim", version, about = "Simulation study of shrinkage in logistic prediction models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full factorial, or the part selected by --filter.
    Run(Common),
    /// Run a single scenario.
    Scenario {
        /// Predictor set: 5T, 5T5N or 10T.
        #[arg(long)]
        set: PredictorSet,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        epv: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the fast acceptance checks (criteria 1, 6, 8, 9, 10).
    Check {
        /// Directory for the determinism check's scratch output.
        #[arg(long)]
        scratch: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per scenario.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    dev_pool_size: Option<usize>,
    #[arg(long)]
    validation_size: Option<usize>,
    #[arg(long)]
    bootstrap_reps: Option<usize>,
    /// Scenario selector, e.g. "set=5T,rho=0,rate=0.1,epv=3/10".
    #[arg(long)]
    filter: Option<ScenarioFilter>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated method labels (ML is always included).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

impl Common {
    fn config(&self) -> Result<HarnessConfig> {
        let mut c = match &self.config {
            Some(path) => HarnessConfig::from_file(path)?,
            None => HarnessConfig::default(),
        };
        if let Some(v) = self.seed {
            c.master_seed = v;
        }
        if let Some(v) = self.runs {
            c.runs_per_scenario = v;
        }
        if let Some(v) = self.dev_pool_size {
            c.dev_pool_size = v;
        }
        if let Some(v) = self.validation_size {
            c.validation_size = v;
        }
        if let Some(v) = self.bootstrap_reps {
            c.bootstrap_reps = v;
        }
        if let Some(v) = &self.filter {
            c.scenario_filter = Some(v.clone());
        }
        if let Some(v) = &self.output {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.threads {
            c.parallelism = v;
        }
        if let Some(v) = &self.methods {
            c.methods = parse_methods(v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn simulate(config: &HarnessConfig) -> Result<()> {
    let start = Instant::now();
    let results = run_all(config).context("simulation failed")?;
    let (runs, summary) = write_results(&results, config, &config.output_dir)?;
    for r in &results {
        let s = &r.summary;
        eprintln!(
            "{:<24} included {:>5}  separation {:>4}  failed {:>3}",
            r.scenario.id(),
            s.n_runs_included,
            s.n_runs_excluded,
            s.n_runs_failed
        );
    }
    eprintln!("wrote {} and {} in {:.1?}", runs.display(), summary.display(), start.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(common) => common.config().and_then(|c| simulate(&c)).map(|_| true),
        Command::Scenario { set, rho, rate, epv, common } => common.config().and_then(|mut c| {
            c.scenario_filter = Some(ScenarioFilter {
                epv: Some(vec![epv]),
                predictor_set: Some(vec![set]),
                rho: Some(vec![rho]),
                event_rate: Some(vec![rate]),
            });
            simulate(&c).map(|_| true)
        }),
        Command::Check { scratch, common } => common.config().and_then(|c| {
            let tmp;
            let dir = match scratch {
                Some(d) => d,
                None => {
                    tmp = std::env::temp_dir().join(format!("shrinksim-check-{}", std::process::id()));
                    tmp.clone()
                }
            };
            let start = Instant::now();
            let outcomes = quick_suite(&c, &dir);
            for o in &outcomes {
                println!("{o}");
                for d in &o.details {
                    println!("    {d}");
                }
            }
            println!("checks finished in {:.1?}", start.elapsed());
            Ok(outcomes.iter().all(|o| o.passed))
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

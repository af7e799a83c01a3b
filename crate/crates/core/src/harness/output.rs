use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::glm::Method;
use crate::metrics::winsorize;

use super::config::HarnessConfig;
use super::run::ScenarioResult;

pub const RUNS_SCHEMA: &str = "shrinkage-runs/1";
pub const SUMMARY_SCHEMA: &str = "shrinkage-summary/1";

pub const RUNS_HEADER: [&str; 18] = [
    "scenario_id",
    "predictor_set",
    "rho",
    "event_rate",
    "epv",
    "n_events",
    "n_total",
    "run",
    "method",
    "slope_raw",
    "slope_winsorized",
    "c_stat",
    "lambda",
    "shrinkage_factor",
    "n_selected",
    "n_noise_selected",
    "excluded",
    "reason",
];

pub const SUMMARY_HEADER: [&str; 20] = [
    "scenario_id",
    "predictor_set",
    "rho",
    "event_rate",
    "epv",
    "method",
    "n_included",
    "n_excluded",
    "n_failed",
    "median_slope",
    "slope_p5",
    "slope_p95",
    "mad_log_slope",
    "rmsd_log_slope",
    "median_cstat",
    "spearman_vs_optimal",
    "mean_coef_bias_true",
    "mean_coef_bias_noise",
    "mean_n_selected",
    "mean_n_noise_selected",
];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn schema_line(schema: &str, config: &HarnessConfig) -> String {
    format!(
        "#schema={schema};runs={};dev_pool={};validation={};bootstrap_reps={};cv_folds={};seed={}\n",
        config.runs_per_scenario,
        config.dev_pool_size,
        config.validation_size,
        config.bootstrap_reps,
        config.cv_folds,
        config.master_seed
    )
}

fn open_with_schema(path: &Path, line: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(w))
}

/// Write `runs.csv` and `summary.csv` into `dir`. Returns their paths.
pub fn write_results(results: &[ScenarioResult], config: &HarnessConfig, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let runs_path = dir.join("runs.csv");
    let summary_path = dir.join("summary.csv");

    let mut w = open_with_schema(&runs_path, &schema_line(RUNS_SCHEMA, config))?;
    w.write_record(RUNS_HEADER).map_err(|e| io_err(&runs_path, e))?;
    for res in results {
        let s = &res.scenario;
        let lead = [
            s.id(),
            s.predictor_set.to_string(),
            num(s.rho),
            num(s.event_rate),
            s.epv.to_string(),
            s.n_events.to_string(),
            s.n_total.to_string(),
        ];
        for rec in &res.records {
            if rec.excluded {
                let mut row: Vec<String> = lead.to_vec();
                row.push(rec.run_index.to_string());
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push("true".into());
                row.push(rec.exclusion_reason.clone().unwrap_or_default());
                w.write_record(&row).map_err(|e| io_err(&runs_path, e))?;
                continue;
            }
            for (method, m) in &rec.per_method {
                let mut row: Vec<String> = lead.to_vec();
                row.extend([
                    rec.run_index.to_string(),
                    method.label().to_string(),
                    num(m.slope),
                    num(winsorize(m.slope)),
                    num(m.c_stat),
                    opt(m.lambda),
                    opt(m.shrinkage_factor),
                    m.n_selected.to_string(),
                    m.n_noise_selected.to_string(),
                    "false".into(),
                    String::new(),
                ]);
                w.write_record(&row).map_err(|e| io_err(&runs_path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(&runs_path, e))?;

    let mut w = open_with_schema(&summary_path, &schema_line(SUMMARY_SCHEMA, config))?;
    w.write_record(SUMMARY_HEADER).map_err(|e| io_err(&summary_path, e))?;
    let methods: Vec<Method> = Method::ALL.iter().copied().filter(|m| config.methods.contains(m)).collect();
    for res in results {
        let s = &res.scenario;
        let sum = &res.summary;
        for method in &methods {
            let mut row = vec![
                s.id(),
                s.predictor_set.to_string(),
                num(s.rho),
                num(s.event_rate),
                s.epv.to_string(),
                method.label().to_string(),
                sum.n_runs_included.to_string(),
                sum.n_runs_excluded.to_string(),
                sum.n_runs_failed.to_string(),
            ];
            match sum.per_method.get(method) {
                Some(m) => row.extend([
                    num(m.median_slope),
                    num(m.slope_p5),
                    num(m.slope_p95),
                    num(m.mad_log_slope),
                    num(m.rmsd_log_slope),
                    num(m.median_cstat),
                    opt(m.spearman_vs_optimal),
                    num(m.mean_coef_bias_true),
                    opt(m.mean_coef_bias_noise),
                    opt(m.mean_n_selected),
                    opt(m.mean_n_noise_selected),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 11)),
            }
            w.write_record(&row).map_err(|e| io_err(&summary_path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(&summary_path, e))?;
    Ok((runs_path, summary_path))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::harness::scenario::{PredictorSet, Scenario};
    use crate::metrics::{summarize, MethodMetrics, RunRecord, SEPARATION_REASON};

    fn fake_result(epv: usize, runs: usize, excluded: &[usize]) -> ScenarioResult {
        let scenario = Scenario::new(epv, PredictorSet::FiveTrue, 0.0, 0.1, -2.57);
        let id = scenario.id();
        let records: Vec<RunRecord> = (0..runs)
            .map(|r| {
                if excluded.contains(&r) {
                    return RunRecord::excluded(&id, r, SEPARATION_REASON);
                }
                let per_method: BTreeMap<Method, MethodMetrics> = Method::ALL
                    .iter()
                    .map(|&m| {
                        (
                            m,
                            MethodMetrics {
                                slope: 0.8 + 0.01 * r as f64,
                                c_stat: 0.7,
                                n_selected: 5,
                                n_noise_selected: 0,
                                coef_bias: vec![0.0; 5],
                                shrinkage_factor: None,
                                lambda: Some(0.5),
                            },
                        )
                    })
                    .collect();
                RunRecord::included(&id, r, per_method)
            })
            .collect();
        let summary = summarize(&id, &records, &scenario.true_betas).unwrap();
        ScenarioResult { scenario, records, summary }
    }

    fn data_lines(path: &Path) -> Vec<String> {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("#schema="));
        lines.skip(1).map(str::to_string).collect()
    }

    #[test]
    fn row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let results = vec![fake_result(3, 10, &[]), fake_result(5, 10, &[])];
        let (runs, summary) = write_results(&results, &HarnessConfig::default(), dir.path()).unwrap();
        assert_eq!(data_lines(&runs).len(), 180);
        assert_eq!(data_lines(&summary).len(), 18);
    }

    #[test]
    fn excluded_run_is_one_row_with_empty_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let results = vec![fake_result(3, 4, &[2])];
        let (runs, summary) = write_results(&results, &HarnessConfig::default(), dir.path()).unwrap();
        let lines = data_lines(&runs);
        assert_eq!(lines.len(), 3 * 9 + 1);
        let excluded: Vec<&String> = lines.iter().filter(|l| l.contains(",true,")).collect();
        assert_eq!(excluded.len(), 1);
        assert!(excluded[0].contains(",2,,,,,,,,,true,separation"));
        let s = data_lines(&summary);
        assert!(s[0].contains(",3,1,0,"));
        // ML has no correlation: an empty field, never zero.
        let ml = s.iter().find(|l| l.contains(",ML,")).unwrap();
        let fields: Vec<&str> = ml.split(',').collect();
        assert_eq!(fields[15], "");
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_results(&[], &HarnessConfig::default(), &blocker.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { ref path, .. } if path.contains("file")));
    }
}

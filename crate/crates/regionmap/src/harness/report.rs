//! Experiment orchestration above single runs: seeded repeats in a bounded
//! thread pool, metric aggregation, and every file the experiment leaves
//! behind (`report.json`, `metrics.csv`, cluster and region plot data,
//! `config.resolved.json`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::AssertUnwindSafe;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Point;
use crate::regions::{format_point_blocks, format_polyline_blocks, lattice_components};

use super::config::{Algorithm, ExperimentConfig};
use super::pipeline::{run_pipeline, stage_name, PipelineRun, RunRecord};

/// Mean and sample standard deviation of one metric over the runs that
/// reported it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    fn over(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            (ss / (n - 1.0)).sqrt()
        };
        Some(Self {
            mean,
            std,
            count: values.len(),
        })
    }
}

/// The fixed metrics.csv column order. Absent values print as empty cells.
pub const METRIC_COLUMNS: [&str; 8] = [
    "evaluations",
    "global_evaluations",
    "clusters_raw",
    "clusters_reduced",
    "coverage",
    "minima_coverage",
    "hausdorff",
    "missed",
];

fn metric_rows(record: &RunRecord) -> BTreeMap<String, f64> {
    let mut row = BTreeMap::new();
    row.insert("evaluations".into(), record.evaluations as f64);
    row.insert(
        "global_evaluations".into(),
        record.global_evaluations as f64,
    );
    row.insert("clusters_raw".into(), record.clusters_raw as f64);
    row.insert("clusters_reduced".into(), record.clusters_reduced as f64);
    row.insert("coverage".into(), record.coverage);
    row.insert("minima_coverage".into(), record.minima_coverage);
    for (method, mean) in &record.hausdorff {
        if let Some(mean) = mean {
            row.insert(format!("hausdorff_{method}"), *mean);
        }
    }
    for (method, missed) in &record.missed {
        row.insert(format!("missed_{method}"), *missed as f64);
    }
    row
}

/// Aggregate the per-run rows metric by metric. Metrics absent from every
/// run (e.g. a method that never produced a finite distance) are omitted.
pub fn aggregate(records: &[RunRecord]) -> BTreeMap<String, Stat> {
    let rows: Vec<BTreeMap<String, f64>> = records.iter().map(metric_rows).collect();
    let mut names: Vec<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    names.sort();
    names.dedup();
    let mut out = BTreeMap::new();
    for name in names {
        let values: Vec<f64> = rows.iter().filter_map(|r| r.get(name)).copied().collect();
        if let Some(stat) = Stat::over(&values) {
            out.insert(name.clone(), stat);
        }
    }
    out
}

/// Full experiment result: the resolved configuration, one record per
/// completed run, and the aggregated statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    /// Runs that failed and were left out of the aggregates.
    pub excluded: usize,
    pub aggregate: BTreeMap<String, Stat>,
}

impl RunReport {
    pub fn from_runs(config: ExperimentConfig, runs: Vec<RunRecord>, excluded: usize) -> Self {
        let aggregate = aggregate(&runs);
        Self {
            config,
            runs,
            excluded,
            aggregate,
        }
    }

    /// Check that the stored aggregate matches a recomputation from the
    /// per-run rows.
    pub fn validate(&self) -> Result<()> {
        let fresh = aggregate(&self.runs);
        if fresh != self.aggregate {
            return Err(Error::InvalidArgument(
                "report aggregate does not match its per-run rows".into(),
            ));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Load and validate a report file.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let report: Self = serde_json::from_str(&text)?;
        report.validate()?;
        Ok(report)
    }
}

/// Render the metrics table: one row per run, fixed header, default float
/// formatting, no volatile fields — reruns of the same configuration
/// produce byte-identical output.
pub fn metrics_csv(records: &[RunRecord]) -> String {
    let methods = ["l2", "h1", "kriging"];
    let mut header: Vec<String> = vec!["run".into(), "seed".into()];
    for column in METRIC_COLUMNS {
        match column {
            "hausdorff" | "missed" => {
                for m in methods {
                    header.push(format!("{column}_{m}"));
                }
            }
            other => header.push(other.into()),
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for record in records {
        let row = metric_rows(record);
        let mut cells: Vec<String> = vec![record.run.to_string(), record.seed.to_string()];
        for column in &header[2..] {
            cells.push(match row.get(column) {
                Some(v) => format!("{v}"),
                None => String::new(),
            });
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cluster_blocks(clusters: &[crate::clusters::Cluster]) -> String {
    let blocks: Vec<Vec<Point>> = clusters
        .iter()
        .map(|c| c.points.iter().map(|p| p.x.clone()).collect())
        .collect();
    format_point_blocks(&blocks)
}

/// Write one run's plot artifacts into `dir`.
fn write_run_artifacts(dir: &Path, run: &PipelineRun) -> Result<()> {
    let index = run.record.run;
    for snapshot in &run.snapshots {
        let path = dir.join(format!(
            "clusters-{}-{index}.dat",
            stage_name(snapshot.stage)
        ));
        std::fs::write(path, cluster_blocks(&snapshot.clusters))?;
    }
    for fitted in &run.regions {
        let base = format!("{}-{index}-{}", fitted.method, fitted.cluster);
        let components = lattice_components(&fitted.region.points, fitted.region.grid_step);
        std::fs::write(
            dir.join(format!("region-{base}.dat")),
            format_point_blocks(&components),
        )?;
        if !fitted.contours.is_empty() {
            std::fs::write(
                dir.join(format!("isoline-{base}.dat")),
                format_polyline_blocks(&fitted.contours),
            )?;
        }
    }
    Ok(())
}

/// Run the configured number of seeded repeats concurrently, aggregate the
/// survivors, and write every output file into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let jobs = config.effective_jobs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a pool of {jobs} workers: {e}")))?;
    let results: Vec<Option<PipelineRun>> = pool.install(|| {
        (0..config.repeats)
            .into_par_iter()
            .map(|i| {
                let seed = config.seed + i as u64;
                match std::panic::catch_unwind(AssertUnwindSafe(|| {
                    run_pipeline(config, i, seed)
                })) {
                    Ok(run) => Some(run),
                    Err(_) => {
                        warn!("run {i} (seed {seed}) panicked and is excluded");
                        None
                    }
                }
            })
            .collect()
    });

    let excluded = results.iter().filter(|r| r.is_none()).count();
    let completed: Vec<PipelineRun> = results.into_iter().flatten().collect();
    for run in &completed {
        write_run_artifacts(out_dir, run)?;
    }
    let records: Vec<RunRecord> = completed.into_iter().map(|r| r.record).collect();

    let report = RunReport::from_runs(config.clone(), records, excluded);
    report.write(&out_dir.join("report.json"))?;
    std::fs::write(out_dir.join("metrics.csv"), metrics_csv(&report.runs))?;
    let mut resolved = serde_json::to_string_pretty(&report.config)?;
    resolved.push('\n');
    std::fs::write(out_dir.join("config.resolved.json"), resolved)?;
    Ok(report)
}

/// Run one experiment per (algorithm, budget) cell, each into its own
/// subdirectory, and write a long-format `summary.csv` of the aggregates.
pub fn run_sweep(
    base: &ExperimentConfig,
    algorithms: &[Algorithm],
    budgets: &[u64],
    out_dir: &Path,
) -> Result<Vec<(Algorithm, u64, RunReport)>> {
    if algorithms.is_empty() || budgets.is_empty() {
        return Err(Error::Config(
            "a sweep needs at least one algorithm and one budget".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut cells = Vec::new();
    for &algorithm in algorithms {
        for &budget in budgets {
            let mut config = base.clone();
            config.algorithm = algorithm;
            config.budget = budget;
            let cell_dir = out_dir.join(format!("case{}-{algorithm}-budget{budget}", config.case));
            let report = run_experiment(&config, &cell_dir)?;
            cells.push((algorithm, budget, report));
        }
    }

    let mut summary = String::from("case,algorithm,budget,metric,mean,std,count\n");
    for (algorithm, budget, report) in &cells {
        for (metric, stat) in &report.aggregate {
            writeln!(
                summary,
                "{},{algorithm},{budget},{metric},{},{},{}",
                report.config.case, stat.mean, stat.std, stat.count
            )
            .expect("writing to a string cannot fail");
        }
    }
    std::fs::write(out_dir.join("summary.csv"), summary)?;
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Case;
    use crate::surrogates::Method;

    fn tiny_config() -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        config.case = Case::I;
        config.budget = 300;
        config.repeats = 2;
        config.seed = 5;
        config.methods = vec![Method::Kriging];
        config.jobs = Some(1);
        config
    }

    #[test]
    fn aggregate_of_single_run_has_zero_std() {
        let run = run_pipeline(&tiny_config(), 0, 5);
        let stats = aggregate(std::slice::from_ref(&run.record));
        let coverage = &stats["coverage"];
        assert_eq!(coverage.count, 1);
        assert_eq!(coverage.std, 0.0);
        assert_eq!(coverage.mean, run.record.coverage);
    }

    #[test]
    fn experiment_writes_all_outputs_and_report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config();
        let report = run_experiment(&config, dir.path()).unwrap();
        assert_eq!(report.runs.len(), 2);
        assert_eq!(report.excluded, 0);

        for name in ["report.json", "metrics.csv", "config.resolved.json"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        for stage in ["raw", "reduced", "local"] {
            for run in 0..2 {
                let path = dir.path().join(format!("clusters-{stage}-{run}.dat"));
                assert!(path.exists(), "missing {}", path.display());
            }
        }

        // Round trip: read validates the aggregate, a rewrite is identical.
        let loaded = RunReport::read(&dir.path().join("report.json")).unwrap();
        assert_eq!(loaded, report);
        let again = dir.path().join("again.json");
        loaded.write(&again).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("report.json")).unwrap(),
            std::fs::read(again).unwrap()
        );
    }

    #[test]
    fn rerunning_an_experiment_reproduces_metrics_byte_for_byte() {
        let config = tiny_config();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_experiment(&config, dir_a.path()).unwrap();
        run_experiment(&config, dir_b.path()).unwrap();
        let a = std::fs::read(dir_a.path().join("metrics.csv")).unwrap();
        let b = std::fs::read(dir_b.path().join("metrics.csv")).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn records_are_independent_of_experiment_batching() {
        // The same seed run alone or within an experiment gives the same row.
        let config = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&config, dir.path()).unwrap();
        let solo = run_pipeline(&config, 1, config.seed + 1);
        let mut a = report.runs[1].clone();
        let mut b = solo.record;
        a.wall_seconds = 0.0;
        b.wall_seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_aggregate_fails_validation_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config();
        let mut report = run_experiment(&config, dir.path()).unwrap();
        report
            .aggregate
            .get_mut("coverage")
            .expect("coverage stat exists")
            .mean += 1.0;
        let path = dir.path().join("tampered.json");
        report.write(&path).unwrap();
        assert!(RunReport::read(&path).is_err());
    }

    #[test]
    fn sweep_writes_one_cell_per_algorithm_budget_pair() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = tiny_config();
        base.repeats = 1;
        let cells = run_sweep(
            &base,
            &[Algorithm::Hms, Algorithm::Nea2],
            &[200, 300],
            dir.path(),
        )
        .unwrap();
        assert_eq!(cells.len(), 4);
        assert!(dir.path().join("summary.csv").exists());
        for (algorithm, budget, _) in &cells {
            let cell = dir
                .path()
                .join(format!("caseI-{algorithm}-budget{budget}"));
            assert!(cell.join("report.json").exists());
        }
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("case,algorithm,budget,metric,mean,std,count\n"));
        assert!(summary.contains("\nI,hms,200,"));
        assert!(summary.contains("\nI,nea2,300,"));
    }
}

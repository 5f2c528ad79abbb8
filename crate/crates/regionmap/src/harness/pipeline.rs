//! One seeded end-to-end run: global phase, cluster reduction, local
//! spread, surrogate fits, level sets, and the metrics row produced from
//! them. Every stage snapshot is kept so callers can write plot data.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clusters::{merge_clusters, resize, spread_fill, Cluster, Stage};
use crate::engines::StopReason;
use crate::hms::{extract_clusters, hms_run, DemeStatus};
use crate::nea2::nea2_run;
use crate::problems::benchmark;
use crate::regions::{
    coverage_ratio, hausdorff, isolines, level_set, minima_coverage, pair_with_exact,
    RegionApproximation,
};
use crate::surrogates::{fit_surrogate, Method};

use super::config::{Algorithm, ExperimentConfig};

/// Decorrelates the local-phase random stream from the global phase, which
/// consumes the run seed directly.
const LOCAL_PHASE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// The serializable per-run metrics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// Every objective evaluation, local phases included.
    pub evaluations: u64,
    /// Evaluations consumed by the global phase alone (capped by the budget).
    pub global_evaluations: u64,
    pub clusters_raw: usize,
    pub clusters_reduced: usize,
    /// Fraction of ground-truth regions covered by a single cluster.
    pub coverage: f64,
    /// Fraction of ground-truth minima approached by some cluster point.
    pub minima_coverage: f64,
    /// How the global phase's searches ended, by reason.
    pub stops: BTreeMap<String, usize>,
    /// Mean Hausdorff distance to the paired exact regions, per method
    /// (`None` when no finite pair exists).
    pub hausdorff: BTreeMap<String, Option<f64>>,
    /// Exact regions left without a finite-distance approximation, per method.
    pub missed: BTreeMap<String, usize>,
    pub wall_seconds: f64,
}

/// One stage's cluster family, for plot exports.
#[derive(Debug, Clone)]
pub struct StageSnapshot {
    pub stage: Stage,
    pub clusters: Vec<Cluster>,
}

/// A region approximation tagged with the cluster it came from.
#[derive(Debug, Clone)]
pub struct FittedRegion {
    pub method: Method,
    pub cluster: usize,
    pub region: RegionApproximation,
    /// Marching-squares contours at the region level (2D only).
    pub contours: Vec<Vec<[f64; 2]>>,
}

/// Everything a single run produces.
#[derive(Debug)]
pub struct PipelineRun {
    pub record: RunRecord,
    pub snapshots: Vec<StageSnapshot>,
    pub regions: Vec<FittedRegion>,
}

pub(crate) fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::Raw => "raw",
        Stage::Reduced => "reduced",
        Stage::Local => "local",
    }
}

fn stop_name(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Stagnation => "stagnation",
        StopReason::SigmaIncrease => "sigma-increase",
        StopReason::TargetFitness => "target-fitness",
        StopReason::BudgetExhausted => "budget-exhausted",
    }
}

/// Execute one seeded run of the configured pipeline. Per-cluster model
/// failures are logged and skipped; a run without usable clusters yields
/// empty metrics rather than an error.
pub fn run_pipeline(config: &ExperimentConfig, run: usize, seed: u64) -> PipelineRun {
    let started = Instant::now();
    let bench = benchmark(config.case);
    let mut truth = bench.truth;
    if let Some(step) = config.grid_step {
        truth.set_scan_step(step);
    }
    let problem = bench.problem;

    // Global phase.
    let mut stops: BTreeMap<String, usize> = BTreeMap::new();
    let raw = match config.algorithm {
        Algorithm::Hms => {
            let outcome = hms_run(&problem, &config.hms.build(), config.budget, seed);
            for leaf in &outcome.tree.leaves {
                let key = match leaf.status {
                    DemeStatus::Active => "active",
                    DemeStatus::Stopped(reason) => stop_name(reason),
                    DemeStatus::Failed => "failed",
                };
                *stops.entry(key.into()).or_insert(0) += 1;
            }
            extract_clusters(&outcome.tree)
        }
        Algorithm::Nea2 => {
            let outcome = nea2_run(&problem, &config.nea2.build(), config.budget, seed);
            for cluster in &outcome.clusters {
                if let crate::clusters::Origin::Restart { converged, .. } = cluster.origin {
                    let key = if converged { "converged" } else { "unconverged" };
                    *stops.entry(key.into()).or_insert(0) += 1;
                }
            }
            outcome.clusters
        }
    };
    let global_evaluations = problem.evaluations();

    // Reduction: basin merging, then clamping into the usable size band.
    let merged = merge_clusters(raw.clone(), &problem, config.merge_interior_points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ LOCAL_PHASE_SEED_SALT);
    let reduced: Vec<Cluster> = merged
        .clusters
        .into_iter()
        .filter(|c| {
            if c.points.is_empty() {
                warn!("run {run}: dropping empty cluster {}", c.id);
            }
            !c.points.is_empty()
        })
        .map(|c| resize(c, config.resize_min, config.resize_max, &mut rng))
        .collect();

    // Local spread phase.
    let spread_params = config.spread.build();
    let local: Vec<Cluster> = reduced
        .iter()
        .cloned()
        .map(|c| spread_fill(c, &problem, &spread_params, &mut rng))
        .collect();

    // Region approximations and metrics.
    let grid_spec = config.grid.build();
    let step = truth.scan_step();
    let exact = truth.exact_regions();
    let mut regions: Vec<FittedRegion> = Vec::new();
    let mut hausdorff_means: BTreeMap<String, Option<f64>> = BTreeMap::new();
    let mut missed: BTreeMap<String, usize> = BTreeMap::new();
    for &method in &config.methods {
        let mut fitted: Vec<(usize, RegionApproximation, Vec<Vec<[f64; 2]>>)> = Vec::new();
        for cluster in &local {
            let surrogate = match fit_surrogate(cluster, method, &grid_spec, problem.bounds()) {
                Ok(s) => s,
                Err(err) => {
                    warn!(
                        "run {run}: {method} fit failed on cluster {}: {err}",
                        cluster.id
                    );
                    continue;
                }
            };
            let region = match level_set(&surrogate, cluster, config.epsilon, step, problem.bounds())
            {
                Ok(r) => r,
                Err(err) => {
                    warn!(
                        "run {run}: {method} level set failed on cluster {}: {err}",
                        cluster.id
                    );
                    continue;
                }
            };
            let contours = if problem.dimension() == 2 && !region.is_empty() {
                isolines(
                    |x| surrogate.predict(x),
                    &surrogate.domain,
                    problem.bounds().lower(),
                    step,
                    region.level,
                )
                .unwrap_or_default()
            } else {
                Vec::new()
            };
            fitted.push((cluster.id, region, contours));
        }

        // Pair non-empty approximations with their nearest exact region and
        // average the finite distances; exact regions that end up with no
        // finite-distance partner count as missed.
        let usable: Vec<usize> = (0..fitted.len())
            .filter(|&i| !fitted[i].1.is_empty())
            .collect();
        let centroids: Vec<_> = usable
            .iter()
            .map(|&i| {
                let cluster = local
                    .iter()
                    .find(|c| c.id == fitted[i].0)
                    .expect("fitted regions come from local clusters");
                cluster.centroid()
            })
            .collect();
        let pairs = pair_with_exact(&centroids, &exact);
        let mut distances = Vec::new();
        let mut matched: BTreeSet<usize> = BTreeSet::new();
        for (&i, pair) in usable.iter().zip(&pairs) {
            let Some(target) = *pair else { continue };
            let d = hausdorff(&fitted[i].1.points, &exact[target].points);
            if d.is_finite() {
                distances.push(d);
                matched.insert(target);
            }
        }
        let mean = (!distances.is_empty())
            .then(|| distances.iter().sum::<f64>() / distances.len() as f64);
        hausdorff_means.insert(method.to_string(), mean);
        missed.insert(method.to_string(), exact.len() - matched.len());

        regions.extend(fitted.into_iter().map(|(cluster, region, contours)| {
            FittedRegion {
                method,
                cluster,
                region,
                contours,
            }
        }));
    }

    let record = RunRecord {
        run,
        seed,
        evaluations: problem.evaluations(),
        global_evaluations,
        clusters_raw: raw.len(),
        clusters_reduced: reduced.len(),
        coverage: coverage_ratio(&local, &truth),
        minima_coverage: minima_coverage(&local, &truth),
        stops,
        hausdorff: hausdorff_means,
        missed,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    PipelineRun {
        record,
        snapshots: vec![
            StageSnapshot {
                stage: Stage::Raw,
                clusters: raw,
            },
            StageSnapshot {
                stage: Stage::Reduced,
                clusters: reduced,
            },
            StageSnapshot {
                stage: Stage::Local,
                clusters: local,
            },
        ],
        regions,
    }
}

//! Restart pipeline: repeatedly draw a uniform sample, split it with
//! nearest-better clustering, and run one adaptive local search per cluster
//! until the evaluation budget runs out. Final search populations become the
//! raw clusters.

use log::{debug, warn};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clusters::{Cluster, Origin, Stage};
use crate::engines::{CmaState, StopReason, StopSpec};
use crate::problems::{EvaluatedPoint, Problem};

/// Nearest-better clustering parameters.
#[derive(Debug, Clone, Copy)]
pub struct NbcParams {
    /// Edge-length cut factor: edges longer than `phi` times the mean edge
    /// length are removed.
    pub phi: f64,
    /// Incoming-edge cut factor: a node with at least `min_incoming` incoming
    /// edges loses its outgoing edge when that edge is longer than `b` times
    /// the median incoming length.
    pub b: f64,
    pub min_incoming: usize,
}

impl Default for NbcParams {
    fn default() -> Self {
        Self {
            phi: 2.0,
            b: 3.0,
            min_incoming: 3,
        }
    }
}

/// Nearest-better clustering: connect every point to its nearest strictly
/// better point (by value, then age), prune long edges by the mean-length
/// rule and then the incoming-median rule, and return the connected
/// components of the pruned graph. Components are ordered by their first
/// member; members are ordered as given.
pub fn nearest_better_clustering(points: &[EvaluatedPoint], params: &NbcParams) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }

    // Edge from each point to its nearest better point (distance ties prefer
    // the earlier point). The best point has no edge.
    let mut edges: Vec<Option<(usize, f64)>> = vec![None; n];
    for i in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i || !points[j].is_better_than(&points[i]) {
                continue;
            }
            let d = (&points[i].x - &points[j].x).norm();
            if best.is_none_or(|(bd, bj)| d < bd || (d == bd && j < bj)) {
                best = Some((d, j));
            }
        }
        edges[i] = best.map(|(d, j)| (j, d));
    }

    // Rule 1: cut edges longer than phi times the mean edge length.
    let lengths: Vec<f64> = edges.iter().flatten().map(|&(_, d)| d).collect();
    if !lengths.is_empty() {
        let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
        for e in &mut edges {
            if e.is_some_and(|(_, d)| d > params.phi * mean) {
                *e = None;
            }
        }
    }

    // Rule 2 on the pruned graph: nodes with enough incoming edges lose
    // their outgoing edge when it dwarfs the median incoming length. Cuts
    // are decided on a snapshot and applied together.
    let mut incoming: Vec<Vec<f64>> = vec![Vec::new(); n];
    for e in edges.iter().flatten() {
        incoming[e.0].push(e.1);
    }
    let cuts: Vec<usize> = (0..n)
        .filter(|&i| {
            incoming[i].len() >= params.min_incoming
                && edges[i].is_some_and(|(_, d)| d > params.b * median(&mut incoming[i].clone()))
        })
        .collect();
    for i in cuts {
        edges[i] = None;
    }

    // Connected components of the remaining (undirected) edges.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, e) in edges.iter().enumerate() {
        if let Some((j, _)) = *e {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                parent[hi] = lo;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Configuration of the restart pipeline.
#[derive(Debug, Clone)]
pub struct Nea2Config {
    /// Uniform sample size per round (`None` = 40 per dimension).
    pub sample_size: Option<usize>,
    pub nbc: NbcParams,
    /// Initial step size of the per-cluster searches.
    pub sigma0: f64,
    /// Search population size (`None` = dimension default).
    pub lambda: Option<usize>,
    /// Search stop conditions.
    pub stop: StopSpec,
}

impl Default for Nea2Config {
    fn default() -> Self {
        Self {
            sample_size: None,
            nbc: NbcParams::default(),
            sigma0: 0.5,
            lambda: None,
            stop: StopSpec::stagnation_only(),
        }
    }
}

/// Result of a full pipeline run.
pub struct Nea2Outcome {
    pub clusters: Vec<Cluster>,
    /// Completed sample-cluster-search rounds.
    pub rounds: usize,
    /// Local searches started across all rounds.
    pub searches: usize,
}

/// Run the restart pipeline. Each round draws a fresh uniform sample, splits
/// it into nearest-better clusters and runs one local search seeded at each
/// cluster's best point. The final population of every search becomes a raw
/// cluster; searches cut short by the budget are flagged unconverged. A
/// remaining budget smaller than the sample size is spent on a truncated
/// sample that is not clustered.
pub fn nea2_run(problem: &Problem, config: &Nea2Config, budget: u64, seed: u64) -> Nea2Outcome {
    let dim = problem.bounds().dimension();
    let sample_size = config.sample_size.unwrap_or(40 * dim);
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters = Vec::new();
    let mut rounds = 0;
    let mut searches = 0;

    'rounds: loop {
        let remaining = budget.saturating_sub(problem.evaluations());
        if remaining == 0 {
            break;
        }
        let truncated = remaining < sample_size as u64;
        let draw = (sample_size as u64).min(remaining) as usize;
        let sample: Vec<EvaluatedPoint> = (0..draw)
            .map(|_| problem.evaluate(&problem.bounds().sample_uniform(&mut master)))
            .collect();
        if truncated {
            debug!("budget only allowed a truncated sample of {draw}, not clustered");
            break;
        }

        for group in nearest_better_clustering(&sample, &config.nbc) {
            if problem.evaluations() >= budget {
                break 'rounds;
            }
            let seed_point = group
                .iter()
                .map(|&i| &sample[i])
                .min_by(|a, b| a.rank_key().partial_cmp(&b.rank_key()).unwrap())
                .expect("groups are non-empty");
            let state = CmaState::new(
                seed_point.x.clone(),
                config.sigma0,
                config.lambda,
                config.stop.clone(),
                master.next_u64(),
            );
            let mut state = match state {
                Ok(state) => state,
                Err(err) => {
                    warn!("local search construction failed, cluster skipped: {err}");
                    continue;
                }
            };
            let index = searches;
            searches += 1;
            let converged = match state.run(problem, budget) {
                Ok(reason) => reason != StopReason::BudgetExhausted,
                Err(err) => {
                    warn!("local search {index} degenerated: {err}");
                    false
                }
            };
            let Some(last) = state.trace().last() else {
                continue;
            };
            let mut points = last.population.clone();
            points.sort_by_key(|p| p.index);
            clusters.push(Cluster::new(
                clusters.len(),
                Stage::Raw,
                points,
                Origin::Restart {
                    round: rounds,
                    index,
                    converged,
                },
            ));
        }
        rounds += 1;
    }

    Nea2Outcome {
        clusters,
        rounds,
        searches,
    }
}

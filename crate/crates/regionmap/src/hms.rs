//! Two-level hierarchic memetic strategy: a population-based root deme scans
//! the domain while adaptive leaf demes sprouted from promising root
//! individuals exploit their neighbourhoods. Leaf samples are pooled into
//! clusters through the leaf distributions.

use log::{debug, warn};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clusters::{Cluster, Origin, Stage};
use crate::engines::{
    CmaState, EpochOutcome, SeaParams, SeaState, StepOutcome, StopReason, StopSpec,
};
use crate::problems::{EvaluatedPoint, Point, Problem};

/// Configuration of the hierarchic strategy.
#[derive(Debug, Clone)]
pub struct HmsConfig {
    /// Root epochs (and leaf iterations) per metaepoch.
    pub metaepoch_length: usize,
    /// Root deme engine parameters.
    pub sea: SeaParams,
    /// Initial step size of sprouted leaf demes.
    pub leaf_sigma0: f64,
    /// Leaf population size (`None` = dimension default).
    pub leaf_lambda: Option<usize>,
    /// Leaf stop conditions.
    pub leaf_stop: StopSpec,
    /// Minimum distance from a sprout candidate to every existing leaf
    /// (seed points and current means).
    pub sprout_min_distance: f64,
    /// Maximum objective value of a sprout candidate.
    pub sprout_max_fitness: f64,
}

impl Default for HmsConfig {
    fn default() -> Self {
        Self {
            metaepoch_length: 3,
            sea: SeaParams::default(),
            leaf_sigma0: 0.5,
            leaf_lambda: None,
            leaf_stop: StopSpec::leaf_defaults(),
            sprout_min_distance: 1.0,
            sprout_max_fitness: 0.5,
        }
    }
}

/// Lifecycle state of a leaf deme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemeStatus {
    Active,
    Stopped(StopReason),
    /// The adaptation update degenerated; the deme keeps its last valid
    /// sampler but no longer advances.
    Failed,
}

/// An adaptive leaf deme sprouted from a root individual.
pub struct LeafDeme {
    pub id: usize,
    /// Root individual the deme was sprouted from.
    pub seed_point: Point,
    pub state: CmaState,
    pub status: DemeStatus,
}

/// The two-level deme tree.
pub struct HmsTree {
    pub root: SeaState,
    pub leaves: Vec<LeafDeme>,
}

impl HmsTree {
    pub fn new(sea: SeaParams, seed: u64) -> Self {
        Self {
            root: SeaState::new(sea, seed),
            leaves: Vec::new(),
        }
    }

    /// Best evaluated point seen anywhere in the tree.
    pub fn best(&self) -> Option<&EvaluatedPoint> {
        let mut best = self.root.best();
        for leaf in &self.leaves {
            if let Some(b) = leaf.state.best() {
                if best.is_none_or(|cur| b.is_better_than(cur)) {
                    best = Some(b);
                }
            }
        }
        best
    }
}

/// Result of a full strategy run.
pub struct HmsOutcome {
    pub tree: HmsTree,
    pub metaepochs: usize,
    /// Sprout attempts that were rejected (no candidate met the fitness and
    /// separation conditions).
    pub rejected_sprouts: usize,
}

/// Advance every active deme by one metaepoch: leaves first (in sprout
/// order), then the root. Returns `false` once the evaluation budget is
/// exhausted.
pub fn advance_metaepoch(
    tree: &mut HmsTree,
    config: &HmsConfig,
    problem: &Problem,
    budget: u64,
) -> bool {
    for leaf in &mut tree.leaves {
        if leaf.status != DemeStatus::Active {
            continue;
        }
        if problem.evaluations() >= budget {
            return false;
        }
        for _ in 0..config.metaepoch_length {
            match leaf.state.step(problem, budget) {
                Ok(StepOutcome::Continued) => {}
                Ok(StepOutcome::Stopped(reason)) => {
                    debug!("leaf {} stopped: {:?}", leaf.id, reason);
                    leaf.status = DemeStatus::Stopped(reason);
                    break;
                }
                Err(err) => {
                    warn!("leaf {} failed and is frozen: {}", leaf.id, err);
                    leaf.status = DemeStatus::Failed;
                    break;
                }
            }
        }
    }
    if problem.evaluations() >= budget {
        return false;
    }
    for _ in 0..config.metaepoch_length {
        if tree.root.epoch(problem, budget) == EpochOutcome::BudgetExhausted {
            return false;
        }
    }
    problem.evaluations() < budget
}

/// Try to sprout one leaf from the best root individuals. The candidate is
/// the best-fitness individual; among exact fitness ties the one farthest
/// from the existing leaves is preferred (then the oldest). Sprouting
/// requires fitness below the threshold and separation of at least the
/// configured distance from every leaf seed point and current mean.
pub fn try_sprout(
    tree: &mut HmsTree,
    config: &HmsConfig,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let population = tree.root.population();
    if population.is_empty() {
        return None;
    }

    let leaf_anchors: Vec<Point> = tree
        .leaves
        .iter()
        .flat_map(|l| [l.seed_point.clone(), l.state.sampler().mean().clone()])
        .collect();
    let separation = |x: &Point| -> f64 {
        leaf_anchors
            .iter()
            .map(|a| (x - a).norm())
            .fold(f64::INFINITY, f64::min)
    };

    let best_value = population
        .iter()
        .map(|p| p.value)
        .fold(f64::INFINITY, f64::min);
    let candidate = population
        .iter()
        .filter(|p| p.value == best_value)
        .max_by(|a, b| {
            (separation(&a.x), std::cmp::Reverse(a.index))
                .partial_cmp(&(separation(&b.x), std::cmp::Reverse(b.index)))
                .unwrap()
        })
        .expect("population is non-empty");

    if candidate.value >= config.sprout_max_fitness {
        return None;
    }
    if separation(&candidate.x) < config.sprout_min_distance {
        return None;
    }

    let id = tree.leaves.len();
    let state = CmaState::new(
        candidate.x.clone(),
        config.leaf_sigma0,
        config.leaf_lambda,
        config.leaf_stop.clone(),
        rng.next_u64(),
    );
    match state {
        Ok(state) => {
            debug!(
                "sprouted leaf {} at {:?} (fitness {})",
                id, candidate.x, candidate.value
            );
            tree.leaves.push(LeafDeme {
                id,
                seed_point: candidate.x.clone(),
                state,
                status: DemeStatus::Active,
            });
            Some(id)
        }
        Err(err) => {
            warn!("sprout rejected, engine construction failed: {}", err);
            None
        }
    }
}

/// Run the full strategy: alternate metaepochs and sprout attempts until the
/// evaluation budget is exhausted.
pub fn hms_run(problem: &Problem, config: &HmsConfig, budget: u64, seed: u64) -> HmsOutcome {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let root_seed = master.next_u64();
    let mut tree = HmsTree::new(config.sea.clone(), root_seed);
    let mut metaepochs = 0;
    let mut rejected_sprouts = 0;
    loop {
        let budget_left = advance_metaepoch(&mut tree, config, problem, budget);
        metaepochs += 1;
        if !budget_left {
            break;
        }
        if try_sprout(&mut tree, config, &mut master).is_none() {
            rejected_sprouts += 1;
        }
    }
    HmsOutcome {
        tree,
        metaepochs,
        rejected_sprouts,
    }
}

/// Pool every point sampled by the leaf demes and slice the pool through each
/// leaf's final distribution: a leaf's cluster is every pooled point within
/// unit scaled (Mahalanobis) distance of its sampler. Points may appear in
/// several clusters; empty clusters are dropped.
pub fn extract_clusters(tree: &HmsTree) -> Vec<Cluster> {
    let mut pool: Vec<EvaluatedPoint> = tree
        .leaves
        .iter()
        .flat_map(|l| l.state.trace().iter().flat_map(|it| it.population.clone()))
        .collect();
    pool.sort_by_key(|p| p.index);
    pool.dedup_by_key(|p| p.index);

    let mut clusters = Vec::new();
    for leaf in &tree.leaves {
        let sampler = leaf.state.sampler();
        let members: Vec<EvaluatedPoint> = pool
            .iter()
            .filter(|p| sampler.mahalanobis(&p.x) <= 1.0)
            .cloned()
            .collect();
        if members.is_empty() {
            debug!("leaf {} produced an empty cluster, dropped", leaf.id);
            continue;
        }
        let stop = match leaf.status {
            DemeStatus::Stopped(reason) => Some(reason),
            _ => None,
        };
        clusters.push(Cluster::new(
            clusters.len(),
            Stage::Raw,
            members,
            Origin::LeafDeme {
                deme: leaf.id,
                stop,
            },
        ));
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::benchmark;
    use crate::problems::{Bounds, Case};
    use std::sync::Arc;

    #[test]
    fn root_only_metaepoch_costs_population_times_epochs() {
        let bench = benchmark(Case::I);
        let config = HmsConfig::default();
        let mut tree = HmsTree::new(config.sea.clone(), 42);
        let ok = advance_metaepoch(&mut tree, &config, &bench.problem, 1_000_000);
        assert!(ok);
        // Three root epochs at 40 evaluations each.
        assert_eq!(bench.problem.evaluations(), 120);
    }

    #[test]
    fn budget_is_never_exceeded() {
        let bench = benchmark(Case::I);
        let outcome = hms_run(&bench.problem, &HmsConfig::default(), 500, 7);
        assert!(bench.problem.evaluations() <= 500);
        assert!(outcome.metaepochs >= 1);
    }

    #[test]
    fn low_budget_run_sprouts_leaves_on_tiled_benchmark() {
        let mut sprouted = 0;
        for seed in 0..10 {
            let bench = benchmark(Case::I);
            let outcome = hms_run(&bench.problem, &HmsConfig::default(), 500, seed);
            if !outcome.tree.leaves.is_empty() {
                sprouted += 1;
            }
        }
        assert!(sprouted >= 8, "only {sprouted}/10 runs sprouted a leaf");
    }

    #[test]
    fn sprout_respects_fitness_and_distance_conditions() {
        // A problem whose minimum sits at the origin with value above the
        // sprout threshold: no leaf must ever sprout.
        let problem = Problem::new(
            "high-floor",
            Bounds::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(),
            Arc::new(|x: &[f64]| 0.8 + x.iter().map(|v| v * v).sum::<f64>()),
        );
        let outcome = hms_run(&problem, &HmsConfig::default(), 400, 5);
        assert!(outcome.tree.leaves.is_empty());
        assert!(outcome.rejected_sprouts >= 1);

        // Conversely on a single deep basin every sprouted seed must satisfy
        // the fitness threshold, and seeds must be mutually separated.
        let problem = Problem::new(
            "single-basin",
            Bounds::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(),
            Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>()),
        );
        let outcome = hms_run(&problem, &HmsConfig::default(), 600, 5);
        let seeds: Vec<_> = outcome
            .tree
            .leaves
            .iter()
            .map(|l| l.seed_point.clone())
            .collect();
        assert!(!seeds.is_empty(), "deep basin should sprout at least once");
        for s in &seeds {
            assert!(s.norm_squared() < 0.5);
        }
        for (i, a) in seeds.iter().enumerate() {
            for b in &seeds[i + 1..] {
                assert!((a - b).norm() >= 1.0);
            }
        }
    }

    #[test]
    fn extracted_clusters_lie_within_unit_scaled_distance() {
        let bench = benchmark(Case::I);
        let outcome = hms_run(&bench.problem, &HmsConfig::default(), 1500, 3);
        let clusters = extract_clusters(&outcome.tree);
        assert!(!clusters.is_empty(), "no clusters extracted");
        for cluster in &clusters {
            assert_eq!(cluster.stage, Stage::Raw);
            assert!(!cluster.points.is_empty());
            let Origin::LeafDeme { deme, .. } = cluster.origin else {
                panic!("HMS cluster must originate from a leaf deme");
            };
            let sampler = outcome.tree.leaves[deme].state.sampler();
            for p in &cluster.points {
                assert!(sampler.mahalanobis(&p.x) <= 1.0 + 1e-12);
            }
            // Members are unique and ordered by evaluation index.
            for w in cluster.points.windows(2) {
                assert!(w[0].index < w[1].index);
            }
        }
    }
}

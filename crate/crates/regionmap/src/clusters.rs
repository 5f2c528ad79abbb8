//! Cluster representation and post-processing: hill-valley basin tests,
//! basin-aware merging, size normalisation and a spread-oriented EA that
//! thickens sparse clusters into point sets usable for model fitting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::engines::StopReason;
use crate::problems::{EvaluatedPoint, Problem};

/// Pipeline stage a cluster belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Straight out of the global phase.
    Raw,
    /// After basin merging and resizing.
    Reduced,
    /// After the spread EA (fit-ready).
    Local,
}

/// Where a cluster came from.
#[derive(Debug, Clone)]
pub enum Origin {
    /// Pooled sample of one leaf deme of the hierarchic strategy.
    LeafDeme {
        deme: usize,
        stop: Option<StopReason>,
    },
    /// Final population of one local search of the restart pipeline.
    Restart {
        round: usize,
        index: usize,
        converged: bool,
    },
    /// Union of merged clusters.
    Merged(Vec<Origin>),
}

/// A set of evaluated points treated as one candidate region sample.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub id: usize,
    pub stage: Stage,
    pub points: Vec<EvaluatedPoint>,
    /// Points still owed to reach the minimum usable size; filled by the
    /// first epoch of the spread EA.
    pub deficit: usize,
    pub origin: Origin,
}

impl Cluster {
    pub fn new(id: usize, stage: Stage, points: Vec<EvaluatedPoint>, origin: Origin) -> Self {
        Self {
            id,
            stage,
            points,
            deficit: 0,
            origin,
        }
    }

    /// Best member by (value, evaluation index).
    pub fn best(&self) -> &EvaluatedPoint {
        self.points
            .iter()
            .min_by(|a, b| a.rank_key().partial_cmp(&b.rank_key()).unwrap())
            .expect("cluster is non-empty")
    }

    /// Arithmetic mean of the member coordinates.
    pub fn centroid(&self) -> crate::problems::Point {
        let dim = self.points[0].x.len();
        let mut c = crate::problems::Point::zeros(dim);
        for p in &self.points {
            c += &p.x;
        }
        c / self.points.len() as f64
    }

    /// Largest pairwise member distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max((&a.x - &b.x).norm());
            }
        }
        d
    }
}

/// Sort by evaluation index and drop duplicate indices (points pooled from
/// overlapping sources appear once).
fn dedup_by_index(mut points: Vec<EvaluatedPoint>) -> Vec<EvaluatedPoint> {
    points.sort_by_key(|p| p.index);
    points.dedup_by_key(|p| p.index);
    points
}

// ---------------------------------------------------------------------------
// Hill-valley test and merging
// ---------------------------------------------------------------------------

/// Tolerance added to the endpoint maximum in the basin test.
const BASIN_TOLERANCE: f64 = 1e-9;

/// Hill-valley basin test: `a` and `b` are considered to share a basin when
/// every one of `interior_points` equally spaced points strictly between them
/// evaluates no higher than the worse endpoint (plus tolerance). Identical
/// points share a basin by definition and consume no evaluations.
pub fn same_basin(
    a: &EvaluatedPoint,
    b: &EvaluatedPoint,
    problem: &Problem,
    interior_points: usize,
) -> bool {
    if a.x == b.x {
        return true;
    }
    let ceiling = a.value.max(b.value) + BASIN_TOLERANCE;
    let k = interior_points as f64;
    for j in 1..=interior_points {
        let t = j as f64 / (k + 1.0);
        let x = a.x.scale(1.0 - t) + b.x.scale(t);
        if problem.evaluate(&x).value > ceiling {
            return false;
        }
    }
    true
}

/// Representatives for a merge test between two clusters: each cluster's best
/// point, with ties at the best value broken toward the partner cluster. On
/// plateau objectives whole clusters evaluate to the same value, so "the best
/// point" is ambiguous; probing the closest tied pair tests the shortest chord
/// between the clusters' best-value sets instead of an arbitrary one. With
/// unique best values this reduces to the plain best points. Distance ties
/// fall back to evaluation-index order, keeping the choice deterministic and
/// symmetric in the two clusters.
fn merge_representatives<'a>(
    a: &'a Cluster,
    b: &'a Cluster,
) -> (&'a EvaluatedPoint, &'a EvaluatedPoint) {
    let tied = |c: &'a Cluster| -> Vec<&'a EvaluatedPoint> {
        let best = c.best().value;
        c.points.iter().filter(|p| p.value == best).collect()
    };
    let (tied_a, tied_b) = (tied(a), tied(b));
    let mut choice = (tied_a[0], tied_b[0]);
    let mut closest = f64::INFINITY;
    for p in &tied_a {
        for q in &tied_b {
            let d = (&p.x - &q.x).norm();
            if d < closest {
                closest = d;
                choice = (p, q);
            }
        }
    }
    choice
}

/// Result of [`merge_clusters`].
#[derive(Debug)]
pub struct MergeOutcome {
    pub clusters: Vec<Cluster>,
    /// Number of cluster pairs whose best points were actually tested (pairs
    /// already joined transitively are skipped).
    pub pairs_tested: usize,
}

/// Merge clusters whose best points pass the hill-valley test, transitively
/// (ties at a cluster's best value resolved by [`merge_representatives`]).
/// Pairs already connected through earlier merges are skipped, so the number
/// of evaluations is `interior_points` times `pairs_tested` at most (the test
/// short-circuits on the first interior point above the ceiling). The final
/// partition does not depend on the input order.
pub fn merge_clusters(
    clusters: Vec<Cluster>,
    problem: &Problem,
    interior_points: usize,
) -> MergeOutcome {
    let n = clusters.len();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut pairs_tested = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                continue;
            }
            pairs_tested += 1;
            let (p, q) = merge_representatives(&clusters[i], &clusters[j]);
            if same_basin(p, q, problem, interior_points) {
                let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                parent[hi] = lo;
            }
        }
    }

    // Group members in input order; groups ordered by their first member.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root: std::collections::HashMap<usize, usize> =
        std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }

    let mut merged = Vec::with_capacity(groups.len());
    for (new_id, members) in groups.iter().enumerate() {
        let mut points = Vec::new();
        let mut origins = Vec::new();
        for &m in members {
            points.extend(clusters[m].points.iter().cloned());
            origins.push(clusters[m].origin.clone());
        }
        let origin = if origins.len() == 1 {
            origins.pop().expect("non-empty")
        } else {
            Origin::Merged(origins)
        };
        merged.push(Cluster {
            id: new_id,
            stage: Stage::Reduced,
            points: dedup_by_index(points),
            deficit: 0,
            origin,
        });
    }

    MergeOutcome {
        clusters: merged,
        pairs_tested,
    }
}

// ---------------------------------------------------------------------------
// Resizing
// ---------------------------------------------------------------------------

/// Clamp a cluster into the usable size band: oversized clusters are randomly
/// subsampled down to `max_size`; undersized ones record a deficit to be
/// filled by the first epoch of the spread EA.
pub fn resize(mut cluster: Cluster, min_size: usize, max_size: usize, rng: &mut ChaCha8Rng) -> Cluster {
    if cluster.points.len() > max_size {
        let chosen = rand::seq::index::sample(rng, cluster.points.len(), max_size);
        let mut picked: Vec<EvaluatedPoint> = chosen
            .into_iter()
            .map(|i| cluster.points[i].clone())
            .collect();
        picked.sort_by_key(|p| p.index);
        cluster.points = picked;
    } else if cluster.points.len() < min_size {
        cluster.deficit = min_size - cluster.points.len();
    }
    cluster
}

// ---------------------------------------------------------------------------
// Spread EA
// ---------------------------------------------------------------------------

/// Parameters of the spread EA that thickens reduced clusters.
#[derive(Debug, Clone, Copy)]
pub struct SpreadParams {
    pub epochs: usize,
    /// Committee score weight: `alpha` on fitness rank, `1 - alpha` on
    /// distance to the already-selected members.
    pub alpha: f64,
    /// Mutation standard deviation used when the initial cluster has no
    /// usable diameter (fewer than two distinct points).
    pub fallback_std: f64,
}

impl Default for SpreadParams {
    fn default() -> Self {
        Self {
            epochs: 3,
            alpha: 0.5,
            fallback_std: 0.5,
        }
    }
}

/// Run the spread EA on a reduced cluster: each epoch mutates every committee
/// member once (Gaussian, std = initial diameter / 2), the first epoch
/// additionally generates the deficit as mutants of random members, and a
/// greedy committee balancing objective rank against mutual distance selects
/// the next committee. The returned cluster accumulates *every* evaluated
/// point (initial members and all mutants) — the fit-ready sample.
pub fn spread_fill(
    cluster: Cluster,
    problem: &Problem,
    params: &SpreadParams,
    rng: &mut ChaCha8Rng,
) -> Cluster {
    let target_size = cluster.points.len() + cluster.deficit;
    let diameter = cluster.diameter();
    let std = if diameter > 0.0 {
        diameter / 2.0
    } else {
        params.fallback_std
    };

    let mut committee = cluster.points.clone();
    let mut accumulated = cluster.points.clone();

    let mutate = |parent: &EvaluatedPoint, rng: &mut ChaCha8Rng| {
        let mut x = parent.x.clone();
        for k in 0..x.len() {
            let noise: f64 = rng.sample(StandardNormal);
            x[k] += std * noise;
        }
        problem.evaluate(&problem.bounds().clamp(&x))
    };

    for epoch in 1..=params.epochs {
        let mut candidates = committee.clone();
        for member in &committee {
            let m = mutate(member, rng);
            accumulated.push(m.clone());
            candidates.push(m);
        }
        if epoch == 1 {
            for _ in 0..cluster.deficit {
                let parent = committee[rng.random_range(0..committee.len())].clone();
                let m = mutate(&parent, rng);
                accumulated.push(m.clone());
                candidates.push(m);
            }
        }
        committee = select_committee(&candidates, target_size, params.alpha);
    }

    Cluster {
        id: cluster.id,
        stage: Stage::Local,
        points: dedup_by_index(accumulated),
        deficit: 0,
        origin: cluster.origin,
    }
}

/// Greedy committee selection: start from the best candidate, then repeatedly
/// add the candidate maximising
/// `alpha * (1 - rank percentile) + (1 - alpha) * normalised distance`,
/// where the distance term is the distance to the nearest already-selected
/// member normalised by the committee diameter so far (candidate-set diameter
/// while the committee is still degenerate). Ties prefer older points.
pub fn select_committee(
    candidates: &[EvaluatedPoint],
    size: usize,
    alpha: f64,
) -> Vec<EvaluatedPoint> {
    let n = candidates.len();
    if n == 0 || size == 0 {
        return Vec::new();
    }

    // Fitness rank percentile per candidate (0 = best, 1 = worst).
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_by(|&a, &b| {
        candidates[a]
            .rank_key()
            .partial_cmp(&candidates[b].rank_key())
            .unwrap()
    });
    // Competition ranking: tied objective values share their group's first
    // rank, so the distance term alone separates equally-fit candidates.
    let mut percentile = vec![0.0; n];
    let mut group_rank = 0;
    for (pos, &i) in by_rank.iter().enumerate() {
        if pos > 0 && candidates[i].value > candidates[by_rank[pos - 1]].value {
            group_rank = pos;
        }
        percentile[i] = if n > 1 {
            group_rank as f64 / (n - 1) as f64
        } else {
            0.0
        };
    }

    let candidate_diameter = {
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max((&candidates[i].x - &candidates[j].x).norm());
            }
        }
        d
    };

    let mut selected_idx: Vec<usize> = vec![by_rank[0]];
    let mut selected = vec![false; n];
    selected[by_rank[0]] = true;
    // Distance from each candidate to the nearest selected member.
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| (&candidates[i].x - &candidates[by_rank[0]].x).norm())
        .collect();
    let mut committee_diameter: f64 = 0.0;

    while selected_idx.len() < size.min(n) {
        let scale = if committee_diameter > 0.0 {
            committee_diameter
        } else {
            candidate_diameter
        };
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if selected[i] {
                continue;
            }
            let dist_term = if scale > 0.0 { nearest[i] / scale } else { 0.0 };
            let score = alpha * (1.0 - percentile[i]) + (1.0 - alpha) * dist_term;
            let better = match best {
                None => true,
                Some((s, j)) => {
                    score > s || (score == s && candidates[i].index < candidates[j].index)
                }
            };
            if better {
                best = Some((score, i));
            }
        }
        let (_, pick) = best.expect("unselected candidates remain");
        selected[pick] = true;
        selected_idx.push(pick);
        for i in 0..n {
            let d = (&candidates[i].x - &candidates[pick].x).norm();
            nearest[i] = nearest[i].min(d);
            if selected[i] {
                committee_diameter = committee_diameter.max(d);
            }
        }
    }

    selected_idx
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect()
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Bounds, Point};
    use rand::SeedableRng;
    use std::sync::Arc;

    /// Double well along the first axis: zero at x0 = +-1, barrier at 0.
    fn double_well() -> Problem {
        Problem::new(
            "double-well",
            Bounds::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap(),
            Arc::new(|x: &[f64]| {
                let t = x[0] * x[0] - 1.0;
                t * t
            }),
        )
    }

    fn eval(problem: &Problem, coords: Vec<f64>) -> EvaluatedPoint {
        problem.evaluate(&Point::from_vec(coords))
    }

    #[test]
    fn identical_points_share_a_basin_for_free() {
        let problem = double_well();
        let a = eval(&problem, vec![1.0, 0.0]);
        let before = problem.evaluations();
        assert!(same_basin(&a, &a.clone(), &problem, 3));
        assert_eq!(problem.evaluations(), before);
    }

    #[test]
    fn basin_test_separates_wells_and_joins_within() {
        let problem = double_well();
        let left = eval(&problem, vec![-1.0, 0.0]);
        let right = eval(&problem, vec![1.0, 0.0]);
        let right_up = eval(&problem, vec![1.0, 1.5]);
        let before = problem.evaluations();
        assert!(!same_basin(&left, &right, &problem, 3));
        let used_separating = problem.evaluations() - before;
        assert!(used_separating <= 3);
        assert!(same_basin(&right, &right_up, &problem, 3));
        assert_eq!(problem.evaluations() - before, used_separating + 3);
    }

    fn cluster_at(problem: &Problem, id: usize, coords: &[[f64; 2]]) -> Cluster {
        let points = coords
            .iter()
            .map(|c| problem.evaluate(&Point::from_vec(c.to_vec())))
            .collect();
        Cluster::new(
            id,
            Stage::Raw,
            points,
            Origin::LeafDeme {
                deme: id,
                stop: None,
            },
        )
    }

    #[test]
    fn merging_joins_same_well_only() {
        let problem = double_well();
        let clusters = vec![
            cluster_at(&problem, 0, &[[0.9, 0.0], [1.1, 0.1]]),
            cluster_at(&problem, 1, &[[1.0, 1.0]]),
            cluster_at(&problem, 2, &[[-1.0, 0.0], [-0.95, 0.2]]),
        ];
        let outcome = merge_clusters(clusters, &problem, 3);
        assert_eq!(outcome.clusters.len(), 2);
        assert_eq!(outcome.clusters[0].points.len(), 3);
        assert_eq!(outcome.clusters[1].points.len(), 2);
        assert!(outcome
            .clusters
            .iter()
            .all(|c| c.stage == Stage::Reduced));
    }

    #[test]
    fn merge_evaluation_accounting_matches_pairs_tested() {
        let problem = double_well();
        let clusters = vec![
            cluster_at(&problem, 0, &[[0.9, 0.0]]),
            cluster_at(&problem, 1, &[[1.1, 0.0]]),
            cluster_at(&problem, 2, &[[-1.0, 0.0]]),
            cluster_at(&problem, 3, &[[-1.1, 0.0]]),
        ];
        let before = problem.evaluations();
        let outcome = merge_clusters(clusters, &problem, 3);
        let used = problem.evaluations() - before;
        // Every tested pair costs at most 3 evaluations (short-circuit on
        // the first barrier hit); passing pairs cost exactly 3.
        assert!(used <= 3 * outcome.pairs_tested as u64);
        assert!(outcome.pairs_tested <= 6);
        assert_eq!(outcome.clusters.len(), 2);
    }

    #[test]
    fn merge_partition_is_input_order_independent() {
        let problem = double_well();
        let build = |ids: &[usize]| -> Vec<Cluster> {
            let base = [
                vec![[0.9, 0.0], [1.05, 0.0]],
                vec![[1.2, 0.3]],
                vec![[-1.0, 0.0]],
                vec![[-0.9, -0.4]],
            ];
            ids.iter()
                .map(|&i| {
                    cluster_at(
                        &problem,
                        i,
                        &base[i].iter().map(|c| [c[0], c[1]]).collect::<Vec<_>>(),
                    )
                })
                .collect()
        };
        let partition = |clusters: Vec<Cluster>| -> Vec<Vec<u64>> {
            let outcome = merge_clusters(clusters, &problem, 3);
            let mut groups: Vec<Vec<u64>> = outcome
                .clusters
                .iter()
                .map(|c| {
                    let mut v: Vec<u64> =
                        c.points.iter().map(|p| p.x[0].to_bits()).collect();
                    v.sort();
                    v
                })
                .collect();
            groups.sort();
            groups
        };
        let reference = partition(build(&[0, 1, 2, 3]));
        for perm in [
            [3usize, 2, 1, 0],
            [1, 3, 0, 2],
            [2, 0, 3, 1],
        ] {
            assert_eq!(partition(build(&perm)), reference);
        }
    }

    #[test]
    fn resize_subsamples_and_flags_deficit() {
        let problem = double_well();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let big: Vec<[f64; 2]> = (0..150)
            .map(|i| [1.0 + 0.001 * i as f64, 0.0])
            .collect();
        let cluster = cluster_at(&problem, 0, &big);
        let original: Vec<u64> = cluster.points.iter().map(|p| p.index).collect();
        let shrunk = resize(cluster, 10, 100, &mut rng);
        assert_eq!(shrunk.points.len(), 100);
        assert_eq!(shrunk.deficit, 0);
        // Subset of originals, sorted by index.
        let mut last = 0;
        for p in &shrunk.points {
            assert!(original.contains(&p.index));
            assert!(p.index >= last);
            last = p.index;
        }

        let small = cluster_at(&problem, 1, &[[1.0, 0.0], [0.9, 0.0]]);
        let padded = resize(small, 10, 100, &mut rng);
        assert_eq!(padded.points.len(), 2);
        assert_eq!(padded.deficit, 8);
    }

    #[test]
    fn spread_fill_reaches_target_size_and_accumulates() {
        let problem = double_well();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small = cluster_at(&problem, 0, &[[1.0, 0.0], [0.9, 0.2]]);
        let small = resize(small, 10, 100, &mut rng);
        let before = problem.evaluations();
        let filled = spread_fill(small, &problem, &SpreadParams::default(), &mut rng);
        let used = problem.evaluations() - before;
        assert_eq!(filled.stage, Stage::Local);
        // Epoch 1: 2 mutants + 8 deficit mutants; epochs 2-3: 10 mutants each.
        assert_eq!(used, 30);
        // Accumulates the 2 initial points plus every mutant.
        assert_eq!(filled.points.len(), 32);
        assert!(filled
            .points
            .iter()
            .all(|p| problem.bounds().contains(&p.x)));
    }

    #[test]
    fn committee_prefers_spread_over_pure_fitness() {
        // On a flat region the committee must spread out more than a
        // take-the-k-best selection.
        let problem = Problem::new(
            "flat",
            Bounds::new(vec![0.0, 0.0], vec![10.0, 10.0]).unwrap(),
            Arc::new(|_: &[f64]| 0.0),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let candidates: Vec<EvaluatedPoint> = (0..40)
            .map(|_| {
                let x = problem.bounds().sample_uniform(&mut rng);
                problem.evaluate(&x)
            })
            .collect();
        let committee = select_committee(&candidates, 10, 0.5);
        let baseline: Vec<EvaluatedPoint> = candidates[..10].to_vec();
        let mean_nn = |points: &[EvaluatedPoint]| -> f64 {
            let mut total = 0.0;
            for (i, a) in points.iter().enumerate() {
                let mut nn = f64::INFINITY;
                for (j, b) in points.iter().enumerate() {
                    if i != j {
                        nn = nn.min((&a.x - &b.x).norm());
                    }
                }
                total += nn;
            }
            total / points.len() as f64
        };
        assert_eq!(committee.len(), 10);
        assert!(mean_nn(&committee) >= mean_nn(&baseline));
    }
}

//! Scratch diagnostics for pipeline tuning (not part of the product).

use regionmap::clusters::Stage;
use regionmap::harness::{run_pipeline, Algorithm, ExperimentConfig};
use regionmap::problems::{benchmark, Case};
use regionmap::regions::{hausdorff, level_set, pair_with_exact};
use regionmap::surrogates::{fit_surrogate, GridSpec, Method};
use regionmap::problems::Point;

fn directed(from: &[Point], to: &[Point]) -> f64 {
    from.iter()
        .map(|p| {
            to.iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Ceiling probe: feed the local phase a perfect global result — one cluster
/// per exact region, subsampled from the region's own lattice — and measure
/// the Hausdorff the fit/level-set stack produces.
fn ideal(case: Case, per_cluster: usize, seed: u64) {
    use rand::SeedableRng;
    use regionmap::clusters::{spread_fill, Cluster, Origin, SpreadParams};
    let bench = benchmark(case);
    let truth = bench.truth;
    let problem = bench.problem;
    let exact = truth.exact_regions();
    let step = truth.scan_step();
    let grid = GridSpec::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut hs = Vec::new();
    for (e, region) in exact.iter().enumerate() {
        let stride = (region.points.len() / per_cluster).max(1);
        let members: Vec<_> = region
            .points
            .iter()
            .step_by(stride)
            .map(|p| problem.evaluate(p))
            .collect();
        let cluster = Cluster::new(e, Stage::Reduced, members, Origin::Restart {
            round: 0,
            index: e,
            converged: true,
        });
        let cluster = spread_fill(cluster, &problem, &SpreadParams::default(), &mut rng);
        let sur = fit_surrogate(&cluster, Method::Kriging, &grid, &truth.bounds()).unwrap();
        let approx = level_set(&sur, &cluster, 0.1, step, &truth.bounds()).unwrap();
        let fwd = directed(&approx.points, &region.points);
        let back = directed(&region.points, &approx.points);
        let h = hausdorff(&approx.points, &region.points);
        hs.push(h);
        println!(
            "  region {e:>2}: cluster {} -> local {} pts diam {:.2}, region {} pts, H={:.3} (a->e {:.3}, e->a {:.3})",
            per_cluster,
            cluster.points.len(),
            cluster.diameter(),
            approx.points.len(),
            h,
            fwd,
            back
        );
    }
    let mean = hs.iter().sum::<f64>() / hs.len() as f64;
    println!("=> ideal-global ceiling: mean H {mean:.3} over {} regions", hs.len());
}

/// Sprout telemetry: metaepoch/rejection counts plus a demes-per-ring map.
fn hms_stats(case: Case, budget: u64, seed: u64) {
    use regionmap::hms::{hms_run, HmsConfig};
    let bench = benchmark(case);
    let outcome = hms_run(&bench.problem, &HmsConfig::default(), budget, seed);
    let leaves = &outcome.tree.leaves;
    println!(
        "budget {budget} seed {seed}: {} metaepochs, {} sprouts, {} rejected attempts, {} evals",
        outcome.metaepochs,
        leaves.len(),
        outcome.rejected_sprouts,
        bench.problem.evaluations()
    );
    // Ring index of each seed point (case II lattice).
    let mut per_ring = std::collections::BTreeMap::new();
    for leaf in leaves {
        let (x, y) = (leaf.seed_point[0], leaf.seed_point[1]);
        let i = ((x - 2.0) / 4.0).round().clamp(0.0, 4.0) as usize;
        let j = ((y - 2.0) / 4.0).round().clamp(0.0, 4.0) as usize;
        *per_ring.entry((i, j)).or_insert(0usize) += 1;
    }
    let multi = per_ring.values().filter(|&&n| n >= 2).count();
    println!(
        "rings hit: {} of 25, with >=2 demes: {multi}; histogram {:?}",
        per_ring.len(),
        per_ring.values().collect::<Vec<_>>()
    );
}

fn main() {
    if std::env::args().nth(1).as_deref() == Some("hms") {
        let case: Case = std::env::args().nth(2).unwrap_or("II".into()).parse().unwrap();
        let budget: u64 = std::env::args().nth(3).unwrap_or("10000".into()).parse().unwrap();
        let seed: u64 = std::env::args().nth(4).unwrap_or("1".into()).parse().unwrap();
        hms_stats(case, budget, seed);
        return;
    }
    if std::env::args().nth(1).as_deref() == Some("ideal") {
        let case: Case = std::env::args().nth(2).unwrap_or("II".into()).parse().unwrap();
        let per: usize = std::env::args().nth(3).unwrap_or("50".into()).parse().unwrap();
        let seed: u64 = std::env::args().nth(4).unwrap_or("1".into()).parse().unwrap();
        ideal(case, per, seed);
        return;
    }
    let case: Case = std::env::args().nth(1).unwrap_or("II".into()).parse().unwrap();
    let algo: Algorithm = std::env::args().nth(2).unwrap_or("hms".into()).parse().unwrap();
    let budget: u64 = std::env::args().nth(3).unwrap_or("10000".into()).parse().unwrap();
    let seed: u64 = std::env::args().nth(4).unwrap_or("1".into()).parse().unwrap();
    let inflation: f64 = std::env::args().nth(5).unwrap_or("0.1".into()).parse().unwrap();
    let cells: usize = std::env::args().nth(6).unwrap_or("8".into()).parse().unwrap();

    let config = ExperimentConfig {
        case,
        algorithm: algo,
        budget,
        methods: vec![Method::Kriging],
        seed,
        ..ExperimentConfig::default()
    };
    let out = run_pipeline(&config, 0, seed);
    let bench = benchmark(case);
    let truth = bench.truth;
    let exact = truth.exact_regions();
    println!(
        "=== {case} {algo:?} budget {budget} seed {seed} inflation {inflation} cells {cells}: {} exact regions",
        exact.len(),
    );
    println!(
        "record: raw {} reduced {} cov {:.3} minima {:.3} H {:?} missed {:?} stops {:?}",
        out.record.clusters_raw,
        out.record.clusters_reduced,
        out.record.coverage,
        out.record.minima_coverage,
        out.record.hausdorff,
        out.record.missed,
        out.record.stops
    );

    for snap in &out.snapshots {
        if matches!(snap.stage, Stage::Local) {
            continue;
        }
        println!("--- stage {:?}: {} clusters", snap.stage, snap.clusters.len());
        for c in &snap.clusters {
            println!(
                "  cluster {:>2}: n={:<3} diam={:<8.3} best_f={:<10.4} centroid=({})",
                c.id,
                c.points.len(),
                c.diameter(),
                c.best().value,
                c.centroid()
                    .iter()
                    .map(|v| format!("{v:.2}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
    }
    let local = out
        .snapshots
        .iter()
        .find(|s| matches!(s.stage, Stage::Local))
        .unwrap();
    let grid = GridSpec {
        cells: Some(cells),
        inflation,
    };
    let step = truth.scan_step();

    // Refit each local cluster and probe the model regime.
    let mut approxes = Vec::new();
    let mut centroids = Vec::new();
    for c in &local.clusters {
        let sur = match fit_surrogate(c, Method::Kriging, &grid, &truth.bounds()) {
            Ok(s) => s,
            Err(e) => {
                println!("  cluster {:>2}: fit failed: {e}", c.id);
                continue;
            }
        };
        // median nearest-neighbor distance of the cluster points
        let pts = &c.points;
        let mut nn: Vec<f64> = (0..pts.len())
            .map(|i| {
                (0..pts.len())
                    .filter(|&j| j != i)
                    .map(|j| (&pts[i].x - &pts[j].x).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ell = nn[nn.len() / 2];
        // far-field prediction: domain corner (usually away from the data)
        let lo: Point = Point::from_iterator(
            sur.domain.dimension(),
            (0..sur.domain.dimension()).map(|d| sur.domain.lower()[d]),
        );
        let far = sur.predict(&lo).unwrap_or(f64::NAN);
        let region = level_set(&sur, c, config.epsilon, step, &truth.bounds()).unwrap();
        // fill fraction: region points / grid points in the fitting box
        let mut total = 1usize;
        for d in 0..sur.domain.dimension() {
            let w = sur.domain.upper()[d] - sur.domain.lower()[d];
            total *= (w / step).floor() as usize + 1;
        }
        println!(
            "  cluster {:>2}: n={:<3} diam={:<6.2} ell={: <6.3} far={: <8.4} level={:.3} region {} / {} ({:.0}%)",
            c.id,
            pts.len(),
            c.diameter(),
            ell,
            far,
            region.level,
            region.points.len(),
            total,
            100.0 * region.points.len() as f64 / total as f64
        );
        if !region.points.is_empty() {
            centroids.push(c.centroid());
            approxes.push((c.id, region));
        }
    }

    let pairs = pair_with_exact(&centroids, &exact);
    let mut paired_h = Vec::new();
    let mut hit = vec![false; exact.len()];
    for ((id, region), pair) in approxes.iter().zip(&pairs) {
        if let Some(e) = pair {
            hit[*e] = true;
            let fwd = directed(&region.points, &exact[*e].points);
            let back = directed(&exact[*e].points, &region.points);
            let h = hausdorff(&region.points, &exact[*e].points);
            paired_h.push(h);
            println!(
                "  cluster {:>2} -> exact {:>2}: H={:.3} (approx->exact {:.3}, exact->approx {:.3}) |approx|={} |exact|={}",
                id,
                e,
                h,
                fwd,
                back,
                region.points.len(),
                exact[*e].points.len()
            );
        }
    }
    let missed = hit.iter().filter(|h| !**h).count();
    let mean = paired_h.iter().sum::<f64>() / paired_h.len().max(1) as f64;
    println!(
        "=> mean paired H {:.3} over {} pairs, {} exact regions missed",
        mean,
        paired_h.len(),
        missed
    );
}

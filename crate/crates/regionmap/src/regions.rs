//! Level-set extraction from fitted surrogates and the geometric metrics
//! used to judge the resulting region approximations: Hausdorff distance
//! against the exact regions, the regions-covered ratio (2D cases) and the
//! minima-coverage ratio (4D case).
//!
//! All lattices here are anchored at the problem domain's lower corner with
//! the ground truth's scan step, so exact regions and approximations sample
//! the same global grid and distances carry no registration bias.

use std::collections::HashMap;

use log::warn;

use crate::clusters::Cluster;
use crate::error::{Error, Result};
use crate::problems::{Bounds, CoverageRegion, ExactRegion, GroundTruth, Point};
use crate::surrogates::{Method, Surrogate};

/// A minimum counts as covered when some cluster point is strictly closer
/// than this.
pub const MINIMUM_COVER_RADIUS: f64 = 0.4;

/// Grid discretization of a surrogate's sublevel set
/// `{x in dom : prediction(x) <= level}`.
#[derive(Debug, Clone)]
pub struct RegionApproximation {
    /// Method the surrogate was requested with.
    pub method: Method,
    /// True when the surrogate fell back from a spline to Kriging.
    pub downgraded: bool,
    /// Sublevel offset above the cluster minimum.
    pub epsilon: f64,
    /// The absolute cut: cluster-minimum prediction plus epsilon.
    pub level: f64,
    pub grid_step: f64,
    /// Lattice points at or below the level, in row-major lattice order.
    pub points: Vec<Point>,
}

impl RegionApproximation {
    /// An empty approximation means the surrogate exceeded the level on
    /// every grid point of its domain — a missed region.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lattice points of `domain` (anchored at `anchor`, spacing `step`) whose
/// prediction is at or below `level`. Points where the predictor declines
/// (outside its own domain) are skipped.
pub fn sublevel_points<F: Fn(&Point) -> Option<f64>>(
    predict: F,
    domain: &Bounds,
    anchor: &[f64],
    step: f64,
    level: f64,
) -> Vec<Point> {
    let dim = domain.dimension();
    let ranges: Vec<(i64, i64)> = (0..dim)
        .map(|k| {
            let start = ((domain.lower()[k] - anchor[k]) / step - 1e-9).ceil() as i64;
            let end = ((domain.upper()[k] - anchor[k]) / step + 1e-9).floor() as i64;
            (start, end)
        })
        .collect();
    if ranges.iter().any(|(a, b)| a > b) {
        return Vec::new();
    }
    let mut points = Vec::new();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut x = Point::zeros(dim);
    'scan: loop {
        for k in 0..dim {
            x[k] = anchor[k] + idx[k] as f64 * step;
        }
        if let Some(v) = predict(&x) {
            if v <= level {
                points.push(x.clone());
            }
        }
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] <= ranges[k].1 {
                continue 'scan;
            }
            idx[k] = ranges[k].0;
        }
        break;
    }
    points
}

/// Extract the approximation of a cluster's region: the grid points of the
/// surrogate's domain where the prediction stays within `epsilon` of the
/// lowest prediction over the cluster's own points. The lattice is anchored
/// at `problem_bounds`' lower corner.
pub fn level_set(
    surrogate: &Surrogate,
    cluster: &Cluster,
    epsilon: f64,
    grid_step: f64,
    problem_bounds: &Bounds,
) -> Result<RegionApproximation> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "level-set epsilon must be positive, got {epsilon}"
        )));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "level-set grid step must be positive, got {grid_step}"
        )));
    }
    let mut base = f64::INFINITY;
    for p in &cluster.points {
        if let Some(v) = surrogate.predict(&p.x) {
            base = base.min(v);
        }
    }
    if !base.is_finite() {
        warn!(
            "cluster {}: no cluster point inside the surrogate domain; empty region",
            cluster.id
        );
        return Ok(RegionApproximation {
            method: surrogate.method,
            downgraded: surrogate.downgraded,
            epsilon,
            level: f64::INFINITY,
            grid_step,
            points: Vec::new(),
        });
    }
    let level = base + epsilon;
    let points = sublevel_points(
        |x| surrogate.predict(x),
        &surrogate.domain,
        problem_bounds.lower(),
        grid_step,
        level,
    );
    if points.is_empty() {
        warn!(
            "cluster {}: surrogate stays above level {level} on its whole grid",
            cluster.id
        );
    }
    Ok(RegionApproximation {
        method: surrogate.method,
        downgraded: surrogate.downgraded,
        epsilon,
        level,
        grid_step,
        points,
    })
}

// ---------------------------------------------------------------------------
// Hausdorff distance
// ---------------------------------------------------------------------------

/// Uniform-grid spatial index over a point set for nearest-distance queries.
struct BucketIndex<'a> {
    points: &'a [Point],
    dim: usize,
    origin: Vec<f64>,
    cell: f64,
    lo_cell: [i64; 4],
    hi_cell: [i64; 4],
    buckets: HashMap<[i64; 4], Vec<usize>>,
}

impl<'a> BucketIndex<'a> {
    fn build(points: &'a [Point]) -> Self {
        let dim = points[0].len();
        assert!(dim <= 4, "spatial index supports up to 4 dimensions");
        let mut lo = points[0].clone();
        let mut hi = points[0].clone();
        for p in points {
            lo = lo.zip_map(p, f64::min);
            hi = hi.zip_map(p, f64::max);
        }
        let extent = (&hi - &lo).amax();
        // Aim for order-one points per cell.
        let cell = if extent > 0.0 {
            extent / (points.len() as f64).powf(1.0 / dim as f64).max(1.0)
        } else {
            1.0
        };
        let origin: Vec<f64> = lo.iter().copied().collect();
        let mut index = Self {
            points,
            dim,
            origin,
            cell,
            lo_cell: [0; 4],
            hi_cell: [0; 4],
            buckets: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let c = index.cell_of(p);
            for k in 0..dim {
                index.lo_cell[k] = index.lo_cell[k].min(c[k]);
                index.hi_cell[k] = index.hi_cell[k].max(c[k]);
            }
            index.buckets.entry(c).or_default().push(i);
        }
        index
    }

    fn cell_of(&self, p: &Point) -> [i64; 4] {
        let mut c = [0i64; 4];
        for k in 0..self.dim {
            c[k] = ((p[k] - self.origin[k]) / self.cell).floor() as i64;
        }
        c
    }

    /// Distance from `q` to its nearest indexed point, by scanning outward
    /// in Chebyshev shells of cells: any point in a farther shell is at
    /// least `r * cell` away, so the search stops as soon as the best found
    /// distance drops under that bound.
    fn nearest_dist(&self, q: &Point) -> f64 {
        let qc = self.cell_of(q);
        let mut r_max = 0i64;
        for k in 0..self.dim {
            r_max = r_max
                .max((qc[k] - self.lo_cell[k]).abs())
                .max((qc[k] - self.hi_cell[k]).abs());
        }
        let mut best = f64::INFINITY;
        for r in 0..=r_max {
            self.scan_shell(&qc, r, q, &mut best);
            if best <= r as f64 * self.cell {
                break;
            }
        }
        best
    }

    fn scan_shell(&self, qc: &[i64; 4], r: i64, q: &Point, best: &mut f64) {
        let ranges: Vec<(i64, i64)> = (0..self.dim)
            .map(|k| {
                (
                    (qc[k] - r).max(self.lo_cell[k]),
                    (qc[k] + r).min(self.hi_cell[k]),
                )
            })
            .collect();
        if ranges.iter().any(|(a, b)| a > b) {
            return;
        }
        let mut c = [0i64; 4];
        for (k, range) in ranges.iter().enumerate() {
            c[k] = range.0;
        }
        'scan: loop {
            let chebyshev = (0..self.dim)
                .map(|k| (c[k] - qc[k]).abs())
                .max()
                .unwrap_or(0);
            if chebyshev == r {
                if let Some(bucket) = self.buckets.get(&c) {
                    for &i in bucket {
                        *best = best.min((&self.points[i] - q).norm());
                    }
                }
            }
            for k in (0..self.dim).rev() {
                c[k] += 1;
                if c[k] <= ranges[k].1 {
                    continue 'scan;
                }
                c[k] = ranges[k].0;
            }
            break;
        }
    }
}

fn directed_hausdorff(from: &[Point], to: &[Point]) -> f64 {
    if to.len() <= 64 {
        return from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
    }
    let index = BucketIndex::build(to);
    from.iter()
        .map(|p| index.nearest_dist(p))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two finite point sets. An empty operand
/// yields +infinity (a missed region must penalize, not crash).
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() || b.is_empty() {
        warn!("hausdorff distance of an empty point set is +inf");
        return f64::INFINITY;
    }
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

// ---------------------------------------------------------------------------
// Coverage metrics
// ---------------------------------------------------------------------------

/// Does a single cluster put at least one point inside every probe
/// ellipsoid of the region?
pub fn cluster_covers(cluster: &Cluster, region: &CoverageRegion) -> bool {
    region
        .ellipsoids
        .iter()
        .all(|e| cluster.points.iter().any(|p| e.contains(&p.x)))
}

/// Fraction of ground-truth regions covered by at least one single cluster
/// (a cluster covers a region only by hitting all of its ellipsoids alone).
pub fn coverage_ratio(clusters: &[Cluster], truth: &GroundTruth) -> f64 {
    if truth.coverage_regions.is_empty() {
        return 0.0;
    }
    let covered = truth
        .coverage_regions
        .iter()
        .filter(|region| clusters.iter().any(|c| cluster_covers(c, region)))
        .count();
    covered as f64 / truth.coverage_regions.len() as f64
}

/// Fraction of ground-truth minima with some cluster point strictly closer
/// than [`MINIMUM_COVER_RADIUS`].
pub fn minima_coverage(clusters: &[Cluster], truth: &GroundTruth) -> f64 {
    if truth.minima.is_empty() {
        return 0.0;
    }
    let covered = truth
        .minima
        .iter()
        .filter(|m| {
            clusters.iter().any(|c| {
                c.points
                    .iter()
                    .any(|p| (&p.x - *m).norm() < MINIMUM_COVER_RADIUS)
            })
        })
        .count();
    covered as f64 / truth.minima.len() as f64
}

/// Pair each approximation (represented by its cluster centroid) with the
/// exact region nearest to that centroid; `None` when there are no exact
/// regions. Exact regions nobody pairs with count as missed.
pub fn pair_with_exact(centroids: &[Point], exact: &[ExactRegion]) -> Vec<Option<usize>> {
    centroids
        .iter()
        .map(|c| {
            exact
                .iter()
                .enumerate()
                .map(|(i, region)| {
                    let d = region
                        .points
                        .iter()
                        .map(|p| (p - c).norm())
                        .fold(f64::INFINITY, f64::min);
                    (d, i)
                })
                .min_by(|a, b| a.partial_cmp(b).expect("distances are comparable"))
                .map(|(_, i)| i)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Lattice components and plotting exports
// ---------------------------------------------------------------------------

/// Split lattice points (spacing `step`) into connected components under
/// axis adjacency, each component sorted in lattice order.
pub fn lattice_components(points: &[Point], step: f64) -> Vec<Vec<Point>> {
    if points.is_empty() {
        return Vec::new();
    }
    let dim = points[0].len();
    assert!(dim <= 4, "lattice components support up to 4 dimensions");
    let mut lo = points[0].clone();
    for p in points {
        lo = lo.zip_map(p, f64::min);
    }
    let index_of = |p: &Point| -> [i64; 4] {
        let mut idx = [0i64; 4];
        for k in 0..dim {
            idx[k] = ((p[k] - lo[k]) / step).round() as i64;
        }
        idx
    };
    let coords: Vec<[i64; 4]> = points.iter().map(index_of).collect();
    let pack = |idx: &[i64; 4]| -> u64 {
        idx.iter()
            .enumerate()
            .fold(0u64, |acc, (k, &v)| acc | ((v as u64 & 0xFFFF) << (16 * k)))
    };
    let mut slot: HashMap<u64, usize> = HashMap::new();
    for (i, c) in coords.iter().enumerate() {
        slot.insert(pack(c), i);
    }

    let mut component = vec![usize::MAX; points.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| coords[a].cmp(&coords[b]));
    let mut stack = Vec::new();
    for &seed in &order {
        if component[seed] != usize::MAX {
            continue;
        }
        let id = groups.len();
        groups.push(Vec::new());
        component[seed] = id;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            groups[id].push(p);
            let mut probe = coords[p];
            for k in 0..dim {
                for delta in [-1i64, 1] {
                    probe[k] += delta;
                    if let Some(&q) = slot.get(&pack(&probe)) {
                        if component[q] == usize::MAX {
                            component[q] = id;
                            stack.push(q);
                        }
                    }
                    probe[k] -= delta;
                }
            }
        }
    }
    groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| coords[a].cmp(&coords[b]));
            members.into_iter().map(|m| points[m].clone()).collect()
        })
        .collect()
}

/// Whitespace-separated coordinate rows, one blank line between blocks —
/// the layout standard plotting tools read as separate polygons/sets.
pub fn format_point_blocks(blocks: &[Vec<Point>]) -> String {
    let mut out = String::new();
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for p in block {
            let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Same block format for 2D polylines.
pub fn format_polyline_blocks(lines: &[Vec<[f64; 2]>]) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for p in line {
            out.push_str(&format!("{} {}\n", p[0], p[1]));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Marching squares
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum CellEdge {
    Bottom,
    Right,
    Top,
    Left,
}

/// Isolines of a 2D predictor at `level`, as chained polylines on the
/// lattice (anchored at `anchor`, spacing `step`) restricted to `domain`.
/// Corners where the predictor declines count as above the level.
pub fn isolines<F: Fn(&Point) -> Option<f64>>(
    predict: F,
    domain: &Bounds,
    anchor: &[f64],
    step: f64,
    level: f64,
) -> Result<Vec<Vec<[f64; 2]>>> {
    if domain.dimension() != 2 {
        return Err(Error::InvalidArgument(
            "isolines are defined for 2D domains only".into(),
        ));
    }
    let range = |k: usize| -> (i64, i64) {
        let start = ((domain.lower()[k] - anchor[k]) / step - 1e-9).ceil() as i64;
        let end = ((domain.upper()[k] - anchor[k]) / step + 1e-9).floor() as i64;
        (start, end)
    };
    let (x0, x1) = range(0);
    let (y0, y1) = range(1);
    if x0 >= x1 || y0 >= y1 {
        return Ok(Vec::new());
    }
    // A finite "far above the level" stand-in for out-of-domain corners,
    // keeping edge interpolation well-defined near the boundary.
    let above = level + 1e6 * (1.0 + level.abs());
    let nx = (x1 - x0) as usize + 1;
    let ny = (y1 - y0) as usize + 1;
    let mut values = vec![above; nx * ny];
    let mut x = Point::zeros(2);
    for i in 0..nx {
        for j in 0..ny {
            x[0] = anchor[0] + (x0 + i as i64) as f64 * step;
            x[1] = anchor[1] + (y0 + j as i64) as f64 * step;
            if let Some(v) = predict(&x) {
                values[i * ny + j] = v;
            }
        }
    }

    let coord = |i: usize, j: usize| -> [f64; 2] {
        [
            anchor[0] + (x0 + i as i64) as f64 * step,
            anchor[1] + (y0 + j as i64) as f64 * step,
        ]
    };
    let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let bl = values[i * ny + j];
            let br = values[(i + 1) * ny + j];
            let tr = values[(i + 1) * ny + j + 1];
            let tl = values[i * ny + j + 1];
            let mask = usize::from(bl <= level)
                | usize::from(br <= level) << 1
                | usize::from(tr <= level) << 2
                | usize::from(tl <= level) << 3;
            if mask == 0 || mask == 15 {
                continue;
            }
            let cross = |edge: CellEdge| -> [f64; 2] {
                let (a, va, b, vb) = match edge {
                    CellEdge::Bottom => (coord(i, j), bl, coord(i + 1, j), br),
                    CellEdge::Right => (coord(i + 1, j), br, coord(i + 1, j + 1), tr),
                    CellEdge::Top => (coord(i, j + 1), tl, coord(i + 1, j + 1), tr),
                    CellEdge::Left => (coord(i, j), bl, coord(i, j + 1), tl),
                };
                let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            };
            use CellEdge::{Bottom, Left, Right, Top};
            let pairs: &[(CellEdge, CellEdge)] = match mask {
                1 | 14 => &[(Left, Bottom)],
                2 | 13 => &[(Bottom, Right)],
                3 | 12 => &[(Left, Right)],
                4 | 11 => &[(Right, Top)],
                6 | 9 => &[(Bottom, Top)],
                7 | 8 => &[(Left, Top)],
                5 => {
                    // Saddle: resolve by the cell-center average.
                    if (bl + br + tr + tl) * 0.25 <= level {
                        &[(Left, Top), (Bottom, Right)]
                    } else {
                        &[(Left, Bottom), (Right, Top)]
                    }
                }
                10 => {
                    if (bl + br + tr + tl) * 0.25 <= level {
                        &[(Left, Bottom), (Right, Top)]
                    } else {
                        &[(Left, Top), (Bottom, Right)]
                    }
                }
                _ => unreachable!("mask 0 and 15 are filtered above"),
            };
            for &(ea, eb) in pairs {
                let pa = cross(ea);
                let pb = cross(eb);
                if pa != pb {
                    segments.push((pa, pb));
                }
            }
        }
    }
    Ok(chain_segments(segments))
}

/// Merge segments into polylines by exact endpoint identity (shared cell
/// edges interpolate identically, so endpoints match bit for bit).
fn chain_segments(segments: Vec<([f64; 2], [f64; 2])>) -> Vec<Vec<[f64; 2]>> {
    let key = |p: &[f64; 2]| (p[0].to_bits(), p[1].to_bits());
    let mut adjacency: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(key(a)).or_default().push(s);
        adjacency.entry(key(b)).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = vec![segments[start].0, segments[start].1];
        // Grow at the tail, then flip and grow the other way.
        for _ in 0..2 {
            loop {
                let tail = *line.last().expect("line has points");
                let Some(candidates) = adjacency.get(&key(&tail)) else {
                    break;
                };
                let Some(&next) = candidates.iter().find(|&&s| !used[s]) else {
                    break;
                };
                used[next] = true;
                let (a, b) = segments[next];
                line.push(if key(&a) == key(&tail) { b } else { a });
            }
            line.reverse();
        }
        lines.push(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusters::{Origin, Stage};
    use crate::problems::{benchmark, Case, EvaluatedPoint};
    use crate::surrogates::{fit_surrogate, GridSpec};
    use crate::verify::oracles::hausdorff_reference;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cluster_from(points: Vec<Vec<f64>>, values: Vec<f64>) -> Cluster {
        Cluster {
            id: 0,
            stage: Stage::Local,
            points: points
                .into_iter()
                .zip(values)
                .enumerate()
                .map(|(i, (x, value))| EvaluatedPoint {
                    x: Point::from_vec(x),
                    value,
                    index: i as u64,
                })
                .collect(),
            deficit: 0,
            origin: Origin::Restart {
                round: 0,
                index: 0,
                converged: true,
            },
        }
    }

    fn points_1d(values: &[f64]) -> Vec<Point> {
        values.iter().map(|&v| Point::from_vec(vec![v])).collect()
    }

    #[test]
    fn paraboloid_sublevel_is_the_grid_ball() {
        // Dyadic step so the lattice negates exactly and the set's
        // reflection symmetry is exact in floating point.
        let domain = Bounds::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let step = 0.0625;
        let level = 0.1;
        let points = sublevel_points(
            |x| Some(x.norm_squared()),
            &domain,
            &[-1.0, -1.0],
            step,
            level,
        );
        assert!(!points.is_empty());
        // `+ 0.0` folds -0.0 into +0.0 so mirrored keys compare bitwise.
        let key = |x: f64, y: f64| ((x + 0.0).to_bits(), (y + 0.0).to_bits());
        let keys: std::collections::BTreeSet<(u64, u64)> =
            points.iter().map(|p| key(p[0], p[1])).collect();
        for p in &points {
            assert!(p.norm_squared() <= level);
            assert!(p.norm() <= 0.1f64.sqrt() + 1e-12);
            for (sx, sy) in [(-1.0, 1.0), (1.0, -1.0)] {
                let mirrored = key(sx * p[0], sy * p[1]);
                assert!(keys.contains(&mirrored), "reflection of {p:?} missing");
            }
        }
        // Independent count: enumerate the lattice directly.
        let mut expected = 0;
        for i in -16i64..=16 {
            for j in -16i64..=16 {
                let (x, y) = (i as f64 * step, j as f64 * step);
                if x * x + y * y <= level {
                    expected += 1;
                }
            }
        }
        assert_eq!(points.len(), expected);
    }

    #[test]
    fn huge_epsilon_covers_the_whole_domain_grid() {
        let cluster = cluster_from(
            vec![vec![0.25, 0.25], vec![0.75, 0.25], vec![0.5, 0.75], vec![0.4, 0.5]],
            vec![1.0, 2.0, 3.0, 1.5],
        );
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let surrogate =
            fit_surrogate(&cluster, Method::Kriging, &GridSpec::default(), &bounds).unwrap();
        let region = level_set(&surrogate, &cluster, 1e9, 0.05, &bounds).unwrap();
        let count = |k: usize| {
            let lo = surrogate.domain.lower()[k];
            let hi = surrogate.domain.upper()[k];
            ((hi / 0.05 + 1e-9).floor() as i64 - (lo / 0.05 - 1e-9).ceil() as i64 + 1) as usize
        };
        assert_eq!(region.points.len(), count(0) * count(1));
    }

    #[test]
    fn level_sets_are_monotone_in_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.random_range(0.5..2.5), rng.random_range(0.5..2.5)])
            .collect();
        let values = xs.iter().map(|x| (x[0] - 1.5f64).hypot(x[1] - 1.5)).collect();
        let cluster = cluster_from(xs, values);
        let bounds = Bounds::new(vec![0.0, 0.0], vec![3.0, 3.0]).unwrap();
        let surrogate =
            fit_surrogate(&cluster, Method::Kriging, &GridSpec::default(), &bounds).unwrap();
        let mut previous: Option<std::collections::BTreeSet<(u64, u64)>> = None;
        for epsilon in [0.05, 0.1, 0.2, 0.5, 1.0] {
            let region = level_set(&surrogate, &cluster, epsilon, 0.05, &bounds).unwrap();
            for p in &region.points {
                assert!(surrogate.predict(p).unwrap() <= region.level + 1e-9);
                assert!(surrogate.domain.contains(p) && bounds.contains(p));
            }
            let keys: std::collections::BTreeSet<(u64, u64)> = region
                .points
                .iter()
                .map(|p| (p[0].to_bits(), p[1].to_bits()))
                .collect();
            if let Some(prev) = &previous {
                assert!(prev.is_subset(&keys), "level set shrank as epsilon grew");
            }
            previous = Some(keys);
        }
    }

    #[test]
    fn hausdorff_handles_the_textbook_cases() {
        let a = points_1d(&[0.0, 1.0, 2.0]);
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert_eq!(
            hausdorff(&points_1d(&[0.0]), &points_1d(&[3.0])),
            3.0
        );
        let wide = points_1d(&[0.0, 10.0]);
        let origin = points_1d(&[0.0]);
        assert_eq!(hausdorff(&wide, &origin), 10.0);
        assert_eq!(hausdorff(&origin, &wide), 10.0);
        assert!(hausdorff(&[], &origin).is_infinite());
        assert!(hausdorff(&origin, &[]).is_infinite());
    }

    #[test]
    fn hausdorff_matches_the_reference_and_is_a_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for round in 0..100 {
            let dim = if round % 2 == 0 { 2 } else { 4 };
            let sample = |rng: &mut ChaCha8Rng| -> Vec<Point> {
                let n = rng.random_range(1..40);
                (0..n)
                    .map(|_| Point::from_fn(dim, |_, _| rng.random_range(-5.0..5.0)))
                    .collect()
            };
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let c = sample(&mut rng);
            let ab = hausdorff(&a, &b);
            assert_eq!(ab, hausdorff_reference(&a, &b), "indexed vs brute force");
            assert_eq!(ab, hausdorff(&b, &a), "symmetry");
            assert_eq!(hausdorff(&a, &a), 0.0, "identity");
            let bc = hausdorff(&b, &c);
            let ac = hausdorff(&a, &c);
            assert!(ac <= ab + bc + 1e-12, "triangle: {ac} > {ab} + {bc}");
        }
    }

    #[test]
    fn bucket_index_is_used_and_agrees_on_large_lattice_sets() {
        // Above the brute-force threshold, so the shell search is exercised.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                let p = Point::from_vec(vec![i as f64 * 0.05, j as f64 * 0.05]);
                if (i + j) % 3 != 0 {
                    a.push(p.clone());
                }
                if i > 2 {
                    b.push(p);
                }
            }
        }
        assert!(a.len() > 64 && b.len() > 64);
        assert_eq!(hausdorff(&a, &b), hausdorff_reference(&a, &b));
    }

    #[test]
    fn shifting_a_region_by_one_step_moves_hausdorff_by_that_step() {
        let truth = benchmark(Case::I).truth;
        let regions = truth.exact_regions();
        let region = &regions[0].points;
        assert_eq!(hausdorff(region, region), 0.0);
        let step = truth.scan_step();
        let shifted: Vec<Point> = region
            .iter()
            .map(|p| Point::from_vec(vec![p[0] + step, p[1]]))
            .collect();
        let d = hausdorff(region, &shifted);
        assert!(d <= step * 2.0f64.sqrt() + 1e-12, "distance {d}");
        assert!(d > 0.0);
    }

    #[test]
    fn coverage_requires_one_cluster_to_hit_all_three_ellipsoids() {
        let truth = benchmark(Case::II).truth;
        assert_eq!(truth.coverage_regions.len(), 25);
        assert_eq!(coverage_ratio(&[], &truth), 0.0);

        let region = &truth.coverage_regions[7];
        let centers: Vec<Vec<f64>> = region
            .ellipsoids
            .iter()
            .map(|e| e.center.iter().copied().collect())
            .collect();
        let full = cluster_from(centers.clone(), vec![0.0; 3]);
        assert!(cluster_covers(&full, region));
        assert_relative_eq!(coverage_ratio(&[full], &truth), 1.0 / 25.0);

        // Two clusters covering disjoint 2-of-3 subsets do not count.
        let first = cluster_from(centers[..2].to_vec(), vec![0.0; 2]);
        let second = cluster_from(centers[1..].to_vec(), vec![0.0; 2]);
        assert!(!cluster_covers(&first, region) && !cluster_covers(&second, region));
        assert_eq!(coverage_ratio(&[first.clone(), second], &truth), 0.0);

        // Adding points never decreases the ratio.
        let mut grown = first;
        grown.points.push(EvaluatedPoint {
            x: Point::from_vec(centers[2].clone()),
            value: 0.0,
            index: 99,
        });
        assert_relative_eq!(coverage_ratio(&[grown], &truth), 1.0 / 25.0);
    }

    #[test]
    fn coverage_never_decreases_when_points_are_added() {
        let truth = benchmark(Case::II).truth;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let sample = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| vec![rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)])
                    .collect()
            };
            let base = sample(&mut rng, 30);
            let mut cluster = cluster_from(base, vec![0.0; 30]);
            let before = coverage_ratio(std::slice::from_ref(&cluster), &truth);
            for (i, x) in sample(&mut rng, 20).into_iter().enumerate() {
                cluster.points.push(EvaluatedPoint {
                    x: Point::from_vec(x),
                    value: 0.0,
                    index: 100 + i as u64,
                });
            }
            let after = coverage_ratio(std::slice::from_ref(&cluster), &truth);
            assert!(after >= before);
        }
    }

    #[test]
    fn minima_coverage_uses_a_strict_radius() {
        let truth = benchmark(Case::III).truth;
        assert_eq!(truth.minima.len(), 27);

        let at_minimum = cluster_from(
            vec![truth.minima[0].iter().copied().collect()],
            vec![0.0],
        );
        assert_relative_eq!(
            minima_coverage(std::slice::from_ref(&at_minimum), &truth),
            1.0 / 27.0
        );

        // Exactly on the radius: not covered ("closer than" is strict).
        let mut on_radius: Vec<f64> = truth.minima[0].iter().copied().collect();
        on_radius[0] += MINIMUM_COVER_RADIUS;
        let boundary = cluster_from(vec![on_radius], vec![0.0]);
        assert_eq!(minima_coverage(&[boundary], &truth), 0.0);

        let all_hit = cluster_from(
            truth.minima.iter().map(|m| m.iter().copied().collect()).collect(),
            vec![0.0; truth.minima.len()],
        );
        assert_relative_eq!(minima_coverage(&[all_hit], &truth), 1.0);
    }

    #[test]
    fn pairing_picks_the_nearest_exact_region() {
        let exact = vec![
            ExactRegion {
                points: points_1d(&[0.0, 1.0]),
            },
            ExactRegion {
                points: points_1d(&[10.0, 11.0]),
            },
        ];
        let centroids = vec![
            Point::from_vec(vec![0.4]),
            Point::from_vec(vec![10.6]),
            Point::from_vec(vec![4.0]),
        ];
        assert_eq!(
            pair_with_exact(&centroids, &exact),
            vec![Some(0), Some(1), Some(0)]
        );
        assert_eq!(pair_with_exact(&centroids, &[]), vec![None, None, None]);
    }

    #[test]
    fn components_split_and_blocks_format_exactly() {
        let points = vec![
            Point::from_vec(vec![0.0, 0.0]),
            Point::from_vec(vec![0.5, 0.0]),
            Point::from_vec(vec![2.0, 0.0]),
        ];
        let components = lattice_components(&points, 0.5);
        assert_eq!(components.len(), 2);
        assert_eq!(components[0].len(), 2);
        assert_eq!(components[1].len(), 1);
        let text = format_point_blocks(&components);
        assert_eq!(text, "0 0\n0.5 0\n\n2 0\n");
    }

    #[test]
    fn isolines_trace_the_paraboloid_circle() {
        let domain = Bounds::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let level = 0.25;
        let lines = isolines(
            |x| Some(x.norm_squared()),
            &domain,
            &[-1.0, -1.0],
            0.0625,
            level,
        )
        .unwrap();
        assert_eq!(lines.len(), 1, "one closed contour");
        let line = &lines[0];
        assert!(line.len() > 20);
        assert_eq!(line.first(), line.last(), "contour closes");
        for p in line {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 0.5).abs() < 0.02, "isoline point at radius {r}");
        }
    }
}

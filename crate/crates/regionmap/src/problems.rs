//! Objective functions, bounded domains and evaluation accounting, plus the
//! built-in benchmark suite with its ground truth.
//!
//! The benchmark objectives are minimization problems whose minima are not
//! isolated points but connected sets on which the objective is exactly zero
//! (*insensitivity regions*). The two 2D cases tile the domain with rotated
//! C-shaped valleys built from products of inverted Gaussians; the 4D case is
//! a separable cosine mixture with 27 box-shaped lowlands.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate vector of a candidate solution.
pub type Point = DVector<f64>;

/// Signature of a raw objective function.
pub type ObjectiveFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

// ---------------------------------------------------------------------------
// Evaluated points and bounds
// ---------------------------------------------------------------------------

/// A point together with its objective value and the global evaluation index
/// at which it was computed. The index makes every evaluation identifiable,
/// which the clustering stages use for deterministic tie-breaking and
/// duplicate removal.
#[derive(Debug, Clone)]
pub struct EvaluatedPoint {
    pub x: Point,
    pub value: f64,
    pub index: u64,
}

impl EvaluatedPoint {
    /// Ordering key: better means lower value, ties broken by older index.
    pub fn rank_key(&self) -> (f64, u64) {
        (self.value, self.index)
    }

    /// True when `self` ranks strictly better than `other`.
    pub fn is_better_than(&self, other: &EvaluatedPoint) -> bool {
        (self.value, self.index) < (other.value, other.index)
    }
}

/// Axis-aligned box domain with per-coordinate closed intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidArgument("empty bounds".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !l.is_finite() || !h.is_finite() || l >= h {
                return Err(Error::InvalidArgument(format!(
                    "invalid interval [{l}, {h}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.len() == self.lo.len()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Project a point onto the box.
    pub fn clamp(&self, x: &Point) -> Point {
        Point::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(v, (l, h))| v.clamp(*l, *h)),
        )
    }

    /// Uniform sample from the box.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Point {
        Point::from_iterator(
            self.lo.len(),
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| rng.random_range(*l..=*h)),
        )
    }

    /// Longest diagonal of the box.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }
}

// ---------------------------------------------------------------------------
// Problem: objective + domain + evaluation counter
// ---------------------------------------------------------------------------

/// A bounded minimization problem. Every call to [`Problem::evaluate`]
/// increments the shared evaluation counter by exactly one and stamps the
/// returned point with its index; the counter is the single source of truth
/// for budget accounting.
pub struct Problem {
    name: String,
    bounds: Bounds,
    objective: Arc<ObjectiveFn>,
    evals: AtomicU64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dimension", &self.dimension())
            .field("evals", &self.evaluations())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        bounds: Bounds,
        objective: Arc<ObjectiveFn>,
    ) -> Self {
        Self {
            name: name.into(),
            bounds,
            objective,
            evals: AtomicU64::new(0),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dimension()
    }

    /// Evaluate the objective, consuming one unit of budget.
    pub fn evaluate(&self, x: &Point) -> EvaluatedPoint {
        assert_eq!(
            x.len(),
            self.dimension(),
            "evaluation point has wrong dimension"
        );
        let value = (self.objective)(x.as_slice());
        let index = self.evals.fetch_add(1, Ordering::Relaxed);
        EvaluatedPoint {
            x: x.clone(),
            value,
            index,
        }
    }

    /// Number of evaluations consumed so far.
    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

// ---------------------------------------------------------------------------
// Benchmark building blocks
// ---------------------------------------------------------------------------

/// Inverted Gaussian valley: zero at `center`, approaching one away from it.
/// `radii` are the half-value distances per axis: one radius away along axis
/// `k` (others at the center) the value is exactly 0.5.
pub fn gaussian_valley(x: &[f64], center: &[f64], radii: &[f64]) -> f64 {
    let q: f64 = x
        .iter()
        .zip(center.iter().zip(radii))
        .map(|(x, (c, r))| {
            let t = (x - c) / r;
            t * t
        })
        .sum();
    1.0 - (-LN_2 * q).exp()
}

/// Centers and half-value radii of the three Gaussian factors forming the
/// C-shaped valley (in the valley's local frame).
const C_FACTORS: [([f64; 2], [f64; 2]); 3] = [
    ([-0.8, 0.0], [0.5, 1.0]),
    ([0.0, -0.8], [1.0, 0.5]),
    ([0.8, 0.0], [0.5, 1.0]),
];

/// C-shaped valley in its local frame: the product of three overlapping
/// Gaussian valleys arranged along a half circle.
pub fn c_shape(x: &[f64; 2]) -> f64 {
    C_FACTORS
        .iter()
        .map(|(center, radii)| gaussian_valley(x, center, radii))
        .product()
}

/// C-shaped valley rotated by `phi`: the argument is rotated *into* the local
/// frame, so the visible valley appears rotated by `-phi` in domain
/// coordinates.
pub fn c_shape_rotated(x: &[f64; 2], phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    c_shape(&[x[0] * c - x[1] * s, x[0] * s + x[1] * c])
}

/// Product of an `n` by `n` grid of rotated C-shaped valleys with centers at
/// `(2 + 4i, 2 + 4j)` and rotation `(pi/2) * ((i + j) mod 4)`.
pub fn c_grid(x: &[f64], n: usize) -> f64 {
    let mut product = 1.0;
    for i in 0..n {
        for j in 0..n {
            let center = [2.0 + 4.0 * i as f64, 2.0 + 4.0 * j as f64];
            let theta = PI / 2.0 * (((i + j) % 4) as f64);
            product *= c_shape_rotated(&[x[0] - center[0], x[1] - center[1]], theta);
        }
    }
    product
}

/// Plateau transform: rescales `(threshold, 1]` to `(0, 1]` and maps
/// everything at or below `threshold` to exactly zero, turning sublevel sets
/// of the input into flat zero-valued regions. Requires `threshold < 1`.
pub fn flatten(value: f64, threshold: f64) -> f64 {
    ((value - threshold) / (1.0 - threshold)).max(0.0)
}

/// Separable cosine mixture over `[-5,5] x [-2,2]^3` with 27 zero-valued
/// minima at `{0} x {-2,0,2}^3`: the first axis oscillates five times slower
/// than the others.
pub fn cosine_mix(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|v| (PI * v).cos()).sum();
    2.0 - 0.5 * ((PI * x[0] / 5.0).cos() + tail)
}

// ---------------------------------------------------------------------------
// Benchmark cases and ground truth
// ---------------------------------------------------------------------------

/// Built-in benchmark case identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Case::I),
            "II" | "2" => Ok(Case::II),
            "III" | "3" => Ok(Case::III),
            other => Err(Error::Config(format!(
                "unknown case {other:?} (expected I, II or III)"
            ))),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        };
        f.write_str(s)
    }
}

/// Rotated axis-aligned ellipsoid used as a coverage probe: a 2D ellipse with
/// the given semiaxes, rotated by `rotation` around its center.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub center: Point,
    pub semiaxes: Vec<f64>,
    pub rotation: f64,
}

impl Ellipsoid {
    /// Membership test: rotate the offset into the ellipse frame and compare
    /// the scaled norm against one.
    pub fn contains(&self, x: &Point) -> bool {
        debug_assert_eq!(x.len(), 2);
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let (s, c) = self.rotation.sin_cos();
        let u = dx * c - dy * s;
        let v = dx * s + dy * c;
        let a = u / self.semiaxes[0];
        let b = v / self.semiaxes[1];
        a * a + b * b <= 1.0
    }
}

/// Coverage description of one insensitivity region: a region counts as
/// covered when a single cluster hits every one of its probe ellipsoids.
#[derive(Debug, Clone)]
pub struct CoverageRegion {
    pub ellipsoids: Vec<Ellipsoid>,
}

/// Where to scan for exact region points.
#[derive(Debug, Clone)]
enum ScanDomain {
    /// Scan the full domain box.
    Full,
    /// Scan boxes of the given half-width around each listed center.
    Boxes { centers: Vec<Point>, radius: f64 },
}

/// Lattice scan parameters for exact-region extraction.
#[derive(Debug, Clone)]
struct ScanSpec {
    step: f64,
    domain: ScanDomain,
}

/// One exact insensitivity region: the lattice points of a connected
/// component of the cutoff sublevel set. Adjacency is along lattice axes.
#[derive(Debug, Clone)]
pub struct ExactRegion {
    pub points: Vec<Point>,
}

/// Ground truth for a benchmark case: the cutoff defining the regions,
/// coverage probes (2D cases), the minima (4D case) and a lattice scanner
/// that enumerates the exact regions.
pub struct GroundTruth {
    pub case: Case,
    pub cutoff: f64,
    pub minima: Vec<Point>,
    pub coverage_regions: Vec<CoverageRegion>,
    bounds: Bounds,
    objective: Arc<ObjectiveFn>,
    scan: ScanSpec,
}

impl std::fmt::Debug for GroundTruth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroundTruth")
            .field("case", &self.case)
            .field("cutoff", &self.cutoff)
            .field("regions", &self.coverage_regions.len())
            .field("minima", &self.minima.len())
            .finish()
    }
}

/// A benchmark problem together with its ground truth.
#[derive(Debug)]
pub struct Benchmark {
    pub problem: Problem,
    pub truth: GroundTruth,
}

/// Construct a benchmark case with default scan resolution (0.05 in 2D, 0.1
/// in 4D restricted to radius-1.5 boxes around the minima).
pub fn benchmark(case: Case) -> Benchmark {
    let (bounds, objective, name): (Bounds, Arc<ObjectiveFn>, &str) = match case {
        Case::I => (
            Bounds::new(vec![0.0, 0.0], vec![6.0, 6.0]).unwrap(),
            Arc::new(|x: &[f64]| flatten(c_grid(x, 2), 0.1)),
            "c-tiles-2x2",
        ),
        Case::II => (
            Bounds::new(vec![0.0, 0.0], vec![20.0, 20.0]).unwrap(),
            Arc::new(|x: &[f64]| flatten(c_grid(x, 5), 0.1)),
            "c-tiles-5x5",
        ),
        Case::III => (
            Bounds::new(vec![-5.0, -2.0, -2.0, -2.0], vec![5.0, 2.0, 2.0, 2.0]).unwrap(),
            Arc::new(|x: &[f64]| cosine_mix(x)),
            "cosine-mix-4d",
        ),
    };

    let (minima, coverage_regions, scan) = match case {
        Case::I => (
            Vec::new(),
            tile_coverage_regions(2),
            ScanSpec {
                step: 0.05,
                domain: ScanDomain::Full,
            },
        ),
        Case::II => (
            Vec::new(),
            tile_coverage_regions(5),
            ScanSpec {
                step: 0.05,
                domain: ScanDomain::Full,
            },
        ),
        Case::III => {
            let mut minima = Vec::new();
            for a in [-2.0, 0.0, 2.0] {
                for b in [-2.0, 0.0, 2.0] {
                    for c in [-2.0, 0.0, 2.0] {
                        minima.push(Point::from_vec(vec![0.0, a, b, c]));
                    }
                }
            }
            let scan = ScanSpec {
                step: 0.1,
                domain: ScanDomain::Boxes {
                    centers: minima.clone(),
                    radius: 1.5,
                },
            };
            (minima, Vec::new(), scan)
        }
    };

    let truth = GroundTruth {
        case,
        cutoff: 0.1,
        minima,
        coverage_regions,
        bounds: bounds.clone(),
        objective: objective.clone(),
        scan,
    };
    Benchmark {
        problem: Problem::new(name, bounds, objective),
        truth,
    }
}

/// Coverage probes for the C-shape grids: per tile, the half-value ellipses
/// of the three Gaussian factors, carried into domain coordinates through the
/// tile's rotation and translation.
fn tile_coverage_regions(n: usize) -> Vec<CoverageRegion> {
    let mut regions = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let tx = 2.0 + 4.0 * i as f64;
            let ty = 2.0 + 4.0 * j as f64;
            let theta = PI / 2.0 * (((i + j) % 4) as f64);
            let (s, c) = theta.sin_cos();
            let ellipsoids = C_FACTORS
                .iter()
                .map(|(kappa, radii)| {
                    // Inverse-rotate the factor center out of the valley frame.
                    let cx = tx + kappa[0] * c + kappa[1] * s;
                    let cy = ty - kappa[0] * s + kappa[1] * c;
                    Ellipsoid {
                        center: Point::from_vec(vec![cx, cy]),
                        semiaxes: radii.to_vec(),
                        rotation: theta,
                    }
                })
                .collect();
            regions.push(CoverageRegion { ellipsoids });
        }
    }
    regions
}

// ---------------------------------------------------------------------------
// Exact region extraction
// ---------------------------------------------------------------------------

/// Global cache of exact region scans, keyed by case and scan resolution.
/// Ground truth instances are cheap per-run objects; the scan is not.
static EXACT_CACHE: OnceLock<Mutex<HashMap<(Case, u64), Arc<Vec<ExactRegion>>>>> =
    OnceLock::new();

impl GroundTruth {
    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Evaluate the objective without touching any evaluation counter; used
    /// only for ground-truth scans and metrics.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Lattice step used both for the exact scan and for level-set grids.
    pub fn scan_step(&self) -> f64 {
        self.scan.step
    }

    /// Override the scan resolution (configuration hook).
    pub fn set_scan_step(&mut self, step: f64) {
        assert!(step > 0.0 && step.is_finite());
        self.scan.step = step;
    }

    /// The exact insensitivity regions: connected components (axis adjacency)
    /// of the cutoff sublevel set sampled on the scan lattice. Results are
    /// cached per (case, step) for the lifetime of the process.
    pub fn exact_regions(&self) -> Arc<Vec<ExactRegion>> {
        let key = (self.case, self.scan.step.to_bits());
        let cache = EXACT_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(hit) = cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let computed = Arc::new(self.scan_regions());
        cache.lock().unwrap().insert(key, computed.clone());
        computed
    }

    fn scan_regions(&self) -> Vec<ExactRegion> {
        let dim = self.bounds.dimension();
        let step = self.scan.step;
        let lo = self.bounds.lower();
        let hi = self.bounds.upper();

        // Integer index ranges (inclusive) of the lattice inside a clipped box.
        let clip_range = |axis: usize, a: f64, b: f64| -> (i64, i64) {
            let a = a.max(lo[axis]);
            let b = b.min(hi[axis]);
            let start = ((a - lo[axis]) / step - 1e-9).ceil() as i64;
            let end = ((b - lo[axis]) / step + 1e-9).floor() as i64;
            (start.max(0), end)
        };
        let full: Vec<(i64, i64)> = (0..dim)
            .map(|k| clip_range(k, lo[k], hi[k]))
            .collect();

        let boxes: Vec<Vec<(i64, i64)>> = match &self.scan.domain {
            ScanDomain::Full => vec![full],
            ScanDomain::Boxes { centers, radius } => centers
                .iter()
                .map(|c| {
                    (0..dim)
                        .map(|k| clip_range(k, c[k] - radius, c[k] + radius))
                        .collect()
                })
                .collect(),
        };

        // Pack a lattice multi-index (each component in [0, 2^16)) into a
        // single hash key; a -1 probe packs to 0xFFFF, which no kept index
        // uses, so neighbour lookups stay safe.
        let pack = |idx: &[i64; 4]| -> u64 {
            idx.iter()
                .enumerate()
                .fold(0u64, |acc, (k, &v)| acc | ((v as u64 & 0xFFFF) << (16 * k)))
        };

        // Scan: keep lattice points below the cutoff. Overlapping boxes may
        // re-evaluate misses (the objective is pure and uncounted here);
        // only kept points are deduplicated.
        let mut kept: HashMap<u64, usize> = HashMap::new();
        let mut coords: Vec<[i64; 4]> = Vec::new();
        let mut x = vec![0.0; dim];
        for ranges in &boxes {
            if ranges.iter().any(|(a, b)| a > b) {
                continue;
            }
            let mut idx = [0i64; 4];
            for (k, r) in ranges.iter().enumerate() {
                idx[k] = r.0;
            }
            'scan: loop {
                if !kept.contains_key(&pack(&idx)) {
                    for k in 0..dim {
                        x[k] = lo[k] + idx[k] as f64 * step;
                    }
                    if (self.objective)(&x) < self.cutoff {
                        kept.insert(pack(&idx), coords.len());
                        coords.push(idx);
                    }
                }
                // Advance the multi-index.
                for k in (0..dim).rev() {
                    idx[k] += 1;
                    if idx[k] <= ranges[k].1 {
                        continue 'scan;
                    }
                    idx[k] = ranges[k].0;
                }
                break;
            }
        }

        // Connected components over axis-neighbour adjacency.
        let mut component = vec![usize::MAX; coords.len()];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| coords[a].cmp(&coords[b]));
        let mut stack = Vec::new();
        for &seed in &order {
            if component[seed] != usize::MAX {
                continue;
            }
            let id = components.len();
            components.push(Vec::new());
            component[seed] = id;
            stack.push(seed);
            while let Some(p) = stack.pop() {
                components[id].push(p);
                let mut probe = coords[p];
                for k in 0..dim {
                    for delta in [-1i64, 1] {
                        probe[k] += delta;
                        if let Some(&q) = kept.get(&pack(&probe)) {
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

        components
            .into_iter()
            .map(|mut members| {
                members.sort_by(|&a, &b| coords[a].cmp(&coords[b]));
                let points = members
                    .into_iter()
                    .map(|m| {
                        Point::from_iterator(
                            dim,
                            coords[m]
                                .iter()
                                .take(dim)
                                .enumerate()
                                .map(|(k, &i)| lo[k] + i as f64 * step),
                        )
                    })
                    .collect();
                ExactRegion { points }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_valley_matches_hand_values() {
        // One radius away along an axis the valley reaches exactly one half.
        let v = gaussian_valley(&[1.0, 0.0], &[0.0, 0.0], &[0.5, 1.0]);
        assert_relative_eq!(v, 0.9375, epsilon = 1e-15); // 1 - 2^-4
        let half = gaussian_valley(&[0.5, 0.0], &[0.0, 0.0], &[0.5, 1.0]);
        assert_relative_eq!(half, 0.5, epsilon = 1e-15);
        assert_eq!(gaussian_valley(&[0.3, -0.7], &[0.3, -0.7], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn flatten_clamps_and_rescales() {
        assert_eq!(flatten(0.05, 0.1), 0.0);
        assert_eq!(flatten(0.1, 0.1), 0.0);
        assert_relative_eq!(flatten(0.55, 0.1), 0.5, epsilon = 1e-15);
        assert_relative_eq!(flatten(1.0, 0.1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_quarter_turn_permutes_arguments() {
        // Rotating the argument by pi/2 maps (x, y) to (-y, x).
        for (x, y) in [(0.3, -0.5), (-0.9, 0.1), (0.0, 0.8)] {
            let rotated = c_shape_rotated(&[x, y], PI / 2.0);
            let direct = c_shape(&[-y, x]);
            assert_relative_eq!(rotated, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn cosine_mix_minima_are_zero() {
        let bench = benchmark(Case::III);
        assert_eq!(bench.truth.minima.len(), 27);
        for m in &bench.truth.minima {
            assert_relative_eq!(cosine_mix(m.as_slice()), 0.0, epsilon = 1e-12);
        }
        // A ridge point: first axis at its antinode, others at minima.
        assert_relative_eq!(cosine_mix(&[5.0, 0.0, 0.0, 0.0]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn evaluation_counter_increments_once_per_call() {
        let bench = benchmark(Case::I);
        assert_eq!(bench.problem.evaluations(), 0);
        let p = bench.problem.evaluate(&Point::from_vec(vec![1.0, 1.0]));
        assert_eq!(p.index, 0);
        let q = bench.problem.evaluate(&Point::from_vec(vec![2.0, 2.0]));
        assert_eq!(q.index, 1);
        assert_eq!(bench.problem.evaluations(), 2);
    }

    #[test]
    fn coverage_ellipsoid_centers_lie_inside_regions() {
        for case in [Case::I, Case::II] {
            let bench = benchmark(case);
            for region in &bench.truth.coverage_regions {
                assert_eq!(region.ellipsoids.len(), 3);
                for e in &region.ellipsoids {
                    let v = bench.truth.objective_value(e.center.as_slice());
                    assert!(
                        v < bench.truth.cutoff,
                        "{case:?}: ellipsoid center {:?} has value {v}",
                        e.center.as_slice()
                    );
                    assert!(e.contains(&e.center));
                }
            }
        }
    }

    #[test]
    fn ellipsoid_membership_respects_rotation() {
        let e = Ellipsoid {
            center: Point::from_vec(vec![1.0, 2.0]),
            semiaxes: vec![0.5, 1.0],
            rotation: PI / 2.0,
        };
        // Rotating by a quarter turn puts the long axis along world x and the
        // short axis along world y.
        assert!(e.contains(&Point::from_vec(vec![1.95, 2.0])));
        assert!(!e.contains(&Point::from_vec(vec![1.0, 2.6])));
        assert!(e.contains(&Point::from_vec(vec![1.0, 2.45])));
        assert!(!e.contains(&Point::from_vec(vec![1.0, 2.95])));
    }

    #[test]
    fn exact_region_counts_match_tile_counts() {
        let bench = benchmark(Case::I);
        let regions = bench.truth.exact_regions();
        assert_eq!(regions.len(), 4);
        for r in regions.iter() {
            assert!(r.points.len() > 100, "region unexpectedly thin");
        }
        // Cached: same Arc on re-query.
        let again = bench.truth.exact_regions();
        assert!(Arc::ptr_eq(&regions, &again));
    }

    #[test]
    fn exact_regions_cover_every_probe_ellipsoid() {
        let bench = benchmark(Case::I);
        let regions = bench.truth.exact_regions();
        // Boundary tiles are clipped by the domain, so probes whose centre
        // falls outside it cannot contain any lattice point; every in-domain
        // probe must be hit.
        for (ci, cov) in bench.truth.coverage_regions.iter().enumerate() {
            for (ei, e) in cov.ellipsoids.iter().enumerate() {
                if !bench.truth.bounds.contains(&e.center) {
                    continue;
                }
                let hit = regions
                    .iter()
                    .any(|r| r.points.iter().any(|p| e.contains(p)));
                assert!(
                    hit,
                    "no exact region point inside probe {ci}/{ei} centred at {:?} (rotation {})",
                    e.center.as_slice(),
                    e.rotation
                );
            }
        }
    }

    #[test]
    fn exact_regions_4d_form_27_components() {
        let bench = benchmark(Case::III);
        let regions = bench.truth.exact_regions();
        assert_eq!(regions.len(), 27);
        // Each component contains its minimum (a lattice point).
        for m in &bench.truth.minima {
            let hit = regions.iter().any(|r| {
                r.points
                    .iter()
                    .any(|p| (p - m).norm() < 1e-9)
            });
            assert!(hit);
        }
    }
}

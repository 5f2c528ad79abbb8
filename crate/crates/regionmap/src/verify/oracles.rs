//! Deliberately simple reference implementations used to cross-check the
//! production kernels. Written independently: plain data layouts, literal
//! rule application, no shortcuts — slow is fine here.

use crate::nea2::NbcParams;
use crate::problems::{EvaluatedPoint, Point};

/// Reference Hausdorff distance: every pairwise distance, no index.
pub fn hausdorff_reference(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[Point], to: &[Point]| -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Reference nearest-better clustering: full distance matrix, literal rule
/// application, repeated flood fill for components.
pub fn nbc_reference(points: &[EvaluatedPoint], params: &NbcParams) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dist = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = (&points[i].x - &points[j].x).norm();
        }
    }
    // Rank every point: strictly better means smaller value, ties broken by
    // earlier evaluation.
    let better = |a: usize, b: usize| -> bool {
        points[a].value < points[b].value
            || (points[a].value == points[b].value && points[a].index < points[b].index)
    };

    // Spanning edges: i -> nearest better j (closest, then earliest).
    let mut target: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !better(j, i) {
                continue;
            }
            match target[i] {
                None => target[i] = Some(j),
                Some(t) => {
                    if dist[i][j] < dist[i][t] || (dist[i][j] == dist[i][t] && j < t) {
                        target[i] = Some(j);
                    }
                }
            }
        }
    }

    // Mean-length rule.
    let mut total = 0.0;
    let mut count = 0;
    for i in 0..n {
        if let Some(t) = target[i] {
            total += dist[i][t];
            count += 1;
        }
    }
    if count > 0 {
        let mean = total / count as f64;
        for i in 0..n {
            if let Some(t) = target[i] {
                if dist[i][t] > params.phi * mean {
                    target[i] = None;
                }
            }
        }
    }

    // Incoming-median rule, decided on the post-mean-rule snapshot.
    let snapshot = target.clone();
    for i in 0..n {
        let Some(t) = snapshot[i] else { continue };
        let mut incoming: Vec<f64> = (0..n)
            .filter(|&j| snapshot[j] == Some(i))
            .map(|j| dist[j][i])
            .collect();
        if incoming.len() < params.min_incoming {
            continue;
        }
        incoming.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = incoming.len();
        let median = if m % 2 == 1 {
            incoming[m / 2]
        } else {
            0.5 * (incoming[m / 2 - 1] + incoming[m / 2])
        };
        if dist[i][t] > params.b * median {
            target[i] = None;
        }
    }

    // Components by repeated flood fill over the undirected remaining edges.
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        if let Some(t) = target[i] {
            adjacency[i].push(t);
            adjacency[t].push(i);
        }
    }
    let mut assigned = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if assigned[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        assigned[start] = id;
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &adjacency[v] {
                if assigned[w] == usize::MAX {
                    assigned[w] = id;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    groups
}

/// Reference benchmark objectives, retyped from the written definitions with
/// literal loops. The production versions in `problems` are compared against
/// these at random points.
pub fn objective_reference(case: crate::problems::Case, x: &Point) -> f64 {
    use crate::problems::Case;
    match case {
        Case::I => plateau_reference(c_grid_reference(x[0], x[1], 2), 0.1),
        Case::II => plateau_reference(c_grid_reference(x[0], x[1], 5), 0.1),
        Case::III => {
            let mut sum = (std::f64::consts::PI * x[0] / 5.0).cos();
            for i in 1..4 {
                sum += (std::f64::consts::PI * x[i]).cos();
            }
            2.0 - 0.5 * sum
        }
    }
}

/// One inverted Gaussian valley: 0 at `center`, approaching 1 far away,
/// exactly 1/2 on the axis-aligned ellipse with semi-axes `radii`.
fn valley_reference(x1: f64, x2: f64, center: [f64; 2], radii: [f64; 2]) -> f64 {
    let q = ((x1 - center[0]) / radii[0]).powi(2) + ((x2 - center[1]) / radii[1]).powi(2);
    1.0 - (-(2.0_f64.ln()) * q).exp()
}

/// The C-shaped valley: product of three overlapping elliptic valleys.
fn c_shape_reference(x1: f64, x2: f64) -> f64 {
    valley_reference(x1, x2, [-0.8, 0.0], [0.5, 1.0])
        * valley_reference(x1, x2, [0.0, -0.8], [1.0, 0.5])
        * valley_reference(x1, x2, [0.8, 0.0], [0.5, 1.0])
}

/// C-shape with the argument rotated by `phi` before evaluation.
fn c_shape_rotated_reference(x1: f64, x2: f64, phi: f64) -> f64 {
    let r1 = x1 * phi.cos() - x2 * phi.sin();
    let r2 = x1 * phi.sin() + x2 * phi.cos();
    c_shape_reference(r1, r2)
}

/// An n-by-n grid of rotated C-shapes centred at (2 + 4i, 2 + 4j), each
/// turned by a quarter revolution per step along the diagonal.
fn c_grid_reference(x1: f64, x2: f64, n: usize) -> f64 {
    let mut product = 1.0;
    for i in 0..n {
        for j in 0..n {
            let theta = std::f64::consts::FRAC_PI_2 * ((i + j) % 4) as f64;
            let cx = 2.0 + 4.0 * i as f64;
            let cy = 2.0 + 4.0 * j as f64;
            product *= c_shape_rotated_reference(x1 - cx, x2 - cy, theta);
        }
    }
    product
}

/// Clip everything below `threshold` to zero and rescale the rest to [0, 1].
fn plateau_reference(value: f64, threshold: f64) -> f64 {
    ((value - threshold) / (1.0 - threshold)).max(0.0)
}

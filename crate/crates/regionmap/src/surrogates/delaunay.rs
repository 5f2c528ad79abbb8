//! Incremental Delaunay triangulation in arbitrary (small) dimension,
//! carrying a first-order Lagrange interpolant over the produced complex.
//! The triangulation is the scaffold that the spline projections integrate
//! against.
//!
//! Construction is the classic insertion algorithm: a large corner simplex
//! encloses every site, sites are inserted one at a time, the "cavity" of
//! simplices whose circumsphere contains the new site is carved out and
//! re-triangulated by connecting its boundary facets to the site. The
//! in-sphere predicate is the sign of the lifted determinant on vertex
//! coordinates translated by the query point — far better conditioned than
//! comparing distances to a computed circumcenter, which matters for the
//! huge scaffold-adjacent simplices. Determinants within a small filter of
//! zero (and hence cospherical sites) count as outside, which picks one of
//! the equally valid triangulations deterministically.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::debug;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problems::{EvaluatedPoint, Point};

/// In-sphere determinants below this fraction of their Hadamard row-norm
/// bound count as outside (covers the rounding error of a small LU solve
/// with a wide margin).
const IN_SPHERE_FILTER: f64 = 1e-12;
/// Barycentric slack for point-in-simplex tests.
const BARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Simplex {
    /// `dim + 1` vertex ids; the inserted site always sits last in a fresh
    /// simplex.
    vertices: Vec<usize>,
    /// Neighbor across the facet opposite `vertices[k]`.
    neighbors: Vec<Option<usize>>,
    /// Inverse of the edge matrix `[v1 - v0, ..., vd - v0]`.
    edge_inverse: DMatrix<f64>,
    /// Sign of the edge-matrix determinant in the stored vertex order.
    orientation: f64,
    circumcenter: Point,
    circumradius2: f64,
    /// Gradient of the affine interpolant on this simplex.
    gradient: Point,
    alive: bool,
}

/// Where a walk through the complex ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Located {
    /// The point lies in this simplex (within tolerance).
    Inside(usize),
    /// The walk left the complex through this hull simplex.
    Exited(usize),
}

/// A Delaunay complex over evaluated points with the piecewise-affine
/// interpolant they induce.
pub struct SimplicialInterpolant {
    dim: usize,
    coords: Vec<Point>,
    values: Vec<f64>,
    simplices: Vec<Simplex>,
}

fn make_simplex(
    coords: &[Point],
    values: &[f64],
    vertices: Vec<usize>,
) -> Option<Simplex> {
    let dim = coords[vertices[0]].len();
    let v0 = &coords[vertices[0]];
    let mut edges = DMatrix::zeros(dim, dim);
    for k in 1..=dim {
        edges.set_column(k - 1, &(&coords[vertices[k]] - v0));
    }
    let orientation = edges.determinant().signum();
    let edge_inverse = edges.try_inverse()?;
    if edge_inverse.iter().any(|e| !e.is_finite()) {
        return None;
    }
    // Circumcenter: rows (v_k - v0)^T c = (|v_k|^2 - |v0|^2) / 2, i.e.
    // E^T c = rhs, so c = E^{-T} rhs.
    let mut rhs = Point::zeros(dim);
    for k in 1..=dim {
        let vk = &coords[vertices[k]];
        rhs[k - 1] = 0.5 * (vk.norm_squared() - v0.norm_squared());
    }
    let circumcenter = edge_inverse.transpose() * rhs;
    let circumradius2 = (v0 - &circumcenter).norm_squared();
    if !circumradius2.is_finite() || circumcenter.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut df = Point::zeros(dim);
    for k in 1..=dim {
        df[k - 1] = values[vertices[k]] - values[vertices[0]];
    }
    let gradient = edge_inverse.transpose() * df;
    Some(Simplex {
        vertices,
        neighbors: vec![None; dim + 1],
        edge_inverse,
        orientation,
        circumcenter,
        circumradius2,
        gradient,
        alive: true,
    })
}

struct Builder {
    dim: usize,
    coords: Vec<Point>,
    values: Vec<f64>,
    simplices: Vec<Simplex>,
    walk_hint: usize,
}

impl Builder {
    /// Scaffold corner simplex `{x : x_k >= q_k, sum(x - q) <= span}`
    /// strictly containing the bounding box of the sites.
    fn new(dim: usize, lo: &Point, hi: &Point) -> Self {
        let extent = (hi - lo).amax().max(1.0);
        let margin = 1e3 * extent;
        let q = lo.map(|v| v - margin);
        let span: f64 = (0..dim).map(|k| hi[k] - q[k]).sum::<f64>() + margin;
        let mut coords = vec![q.clone()];
        for k in 0..dim {
            let mut v = q.clone();
            v[k] += span;
            coords.push(v);
        }
        let values = vec![0.0; dim + 1];
        let scaffold = make_simplex(&coords, &values, (0..=dim).collect())
            .expect("scaffold simplex is non-degenerate");
        Self {
            dim,
            coords,
            values,
            simplices: vec![scaffold],
            walk_hint: 0,
        }
    }

    /// Is `p` strictly inside the circumsphere of simplex `s`? Decided by the
    /// sign of the lifted determinant with rows `[v_i - p | ‖v_i - p‖²]`:
    /// `p` is inside iff `(-1)^dim · det · orientation > 0` (the sign rule is
    /// checked against explicit 1D/2D cases in the tests; both determinants
    /// pick up the same parity under vertex reordering, so the product is
    /// order-free). Determinants inside the rounding filter count as outside.
    fn in_sphere(&self, s: usize, p: &Point) -> bool {
        let simplex = &self.simplices[s];
        let mut m = DMatrix::zeros(self.dim + 1, self.dim + 1);
        let mut scale = 1.0;
        for (row, &v) in simplex.vertices.iter().enumerate() {
            let dv = &self.coords[v] - p;
            let lift = dv.norm_squared();
            for k in 0..self.dim {
                m[(row, k)] = dv[k];
            }
            m[(row, self.dim)] = lift;
            scale *= (lift + lift * lift).sqrt();
        }
        let det = m.determinant();
        let signed = if self.dim % 2 == 0 { det } else { -det } * simplex.orientation;
        signed > IN_SPHERE_FILTER * scale
    }

    /// Barycentric coordinates of `p` in simplex `s` (first coordinate
    /// belongs to vertex 0).
    fn barycentric(&self, s: usize, p: &Point) -> Vec<f64> {
        let simplex = &self.simplices[s];
        let u = &simplex.edge_inverse * (p - &self.coords[simplex.vertices[0]]);
        let mut bary = Vec::with_capacity(self.dim + 1);
        bary.push(1.0 - u.sum());
        bary.extend(u.iter().copied());
        bary
    }

    fn walk(&self, p: &Point, start: usize) -> Located {
        let mut current = start;
        for _ in 0..=self.simplices.len() {
            let bary = self.barycentric(current, p);
            let (worst, &min) = bary
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .expect("barycentric coordinates are non-empty");
            if min >= -BARY_TOL {
                return Located::Inside(current);
            }
            match self.simplices[current].neighbors[worst] {
                Some(next) if self.simplices[next].alive => current = next,
                _ => return Located::Exited(current),
            }
        }
        Located::Exited(current)
    }

    /// Insert one site; `false` means the site had to be skipped because no
    /// valid retriangulation exists (exact degeneracy).
    fn insert(&mut self, site: usize) -> bool {
        let p = self.coords[site].clone();
        // Near-degenerate cavities can corrupt the adjacency enough that a
        // previous insert left no usable hint; restart the walk from any
        // live simplex rather than trusting it blindly.
        let start = match self.simplices.get(self.walk_hint) {
            Some(s) if s.alive => self.walk_hint,
            _ => match (0..self.simplices.len()).find(|&s| self.simplices[s].alive) {
                Some(s) => s,
                None => return false,
            },
        };
        let located = match self.walk(&p, start) {
            Located::Inside(s) => s,
            Located::Exited(_) => {
                // The scaffold contains every site; a failed walk can only be
                // numerical. Fall back to scanning.
                match (0..self.simplices.len())
                    .find(|&s| self.simplices[s].alive && self.in_sphere(s, &p))
                {
                    Some(s) => s,
                    None => return false,
                }
            }
        };

        // Cavity: connected set of simplices whose circumsphere holds the
        // site, grown from the containing simplex (always included so the
        // site is never orphaned).
        let mut bad: BTreeSet<usize> = BTreeSet::new();
        bad.insert(located);
        let mut stack = vec![located];
        while let Some(s) = stack.pop() {
            for &nb in self.simplices[s].neighbors.iter().flatten() {
                if self.simplices[nb].alive && !bad.contains(&nb) && self.in_sphere(nb, &p) {
                    bad.insert(nb);
                    stack.push(nb);
                }
            }
        }

        // Carve and refill, absorbing neighbors when an exactly degenerate
        // facet would otherwise be produced.
        'retry: loop {
            // Boundary facets: (vertices, outside neighbor, facet slot there).
            let mut boundary: Vec<(Vec<usize>, Option<usize>)> = Vec::new();
            for &s in &bad {
                for k in 0..=self.dim {
                    match self.simplices[s].neighbors[k] {
                        Some(nb) if bad.contains(&nb) => {}
                        outside => {
                            let mut facet = self.simplices[s].vertices.clone();
                            facet.remove(k);
                            boundary.push((facet, outside));
                        }
                    }
                }
            }
            if boundary.is_empty() {
                // A cavity with no boundary means the adjacency has been
                // damaged by earlier near-degenerate inserts; skipping the
                // site keeps the surviving complex usable.
                return false;
            }

            let mut fresh: Vec<Simplex> = Vec::with_capacity(boundary.len());
            for (facet, outside) in &boundary {
                let mut vertices = facet.clone();
                vertices.push(site);
                match make_simplex(&self.coords, &self.values, vertices) {
                    Some(s) => fresh.push(s),
                    None => match outside {
                        Some(nb) => {
                            bad.insert(*nb);
                            continue 'retry;
                        }
                        None => return false,
                    },
                }
            }

            // Commit: kill the cavity, append the fresh simplices, and wire
            // neighbors.
            for &s in &bad {
                self.simplices[s].alive = false;
            }
            let base = self.simplices.len();
            let mut internal: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
            for (i, ((facet, outside), mut simplex)) in
                boundary.into_iter().zip(fresh).enumerate()
            {
                let id = base + i;
                // Across the facet lies the survivor (slot of the site,
                // which is the last vertex).
                simplex.neighbors[self.dim] = outside;
                if let Some(nb) = outside {
                    let missing = self.simplices[nb]
                        .vertices
                        .iter()
                        .position(|v| !facet.contains(v))
                        .expect("outside simplex has exactly one off-facet vertex");
                    self.simplices[nb].neighbors[missing] = Some(id);
                }
                // Mate the internal facets (site + all but one facet vertex).
                for (slot, &dropped) in facet.iter().enumerate() {
                    let mut key: Vec<usize> =
                        facet.iter().copied().filter(|&v| v != dropped).collect();
                    key.sort_unstable();
                    match internal.remove(&key) {
                        Some((other, other_slot)) => {
                            simplex.neighbors[slot] = Some(other);
                            self.simplices[other].neighbors[other_slot] = Some(id);
                        }
                        None => {
                            internal.insert(key, (id, slot));
                        }
                    }
                }
                self.simplices.push(simplex);
            }
            self.walk_hint = base;
            return true;
        }
    }

    /// Drop scaffold-adjacent and dead simplices, compact ids.
    fn finish(self) -> Result<SimplicialInterpolant> {
        let scaffold = self.dim + 1;
        let keep: Vec<usize> = (0..self.simplices.len())
            .filter(|&s| {
                self.simplices[s].alive
                    && self.simplices[s].vertices.iter().all(|&v| v >= scaffold)
            })
            .collect();
        if keep.is_empty() {
            return Err(Error::DegenerateGeometry(
                "sites are affinely dependent; no full-dimensional complex".into(),
            ));
        }
        let mut new_id = vec![usize::MAX; self.simplices.len()];
        for (i, &s) in keep.iter().enumerate() {
            new_id[s] = i;
        }
        let simplices = keep
            .iter()
            .map(|&s| {
                let old = &self.simplices[s];
                Simplex {
                    vertices: old.vertices.iter().map(|&v| v - scaffold).collect(),
                    neighbors: old
                        .neighbors
                        .iter()
                        .map(|nb| {
                            nb.and_then(|n| {
                                (new_id[n] != usize::MAX).then(|| new_id[n])
                            })
                        })
                        .collect(),
                    ..old.clone()
                }
            })
            .collect();
        Ok(SimplicialInterpolant {
            dim: self.dim,
            coords: self.coords[scaffold..].to_vec(),
            values: self.values[scaffold..].to_vec(),
            simplices,
        })
    }
}

/// Triangulate evaluated points (insertion in the given order; exact
/// coordinate duplicates keep their first value).
pub fn triangulate(points: &[EvaluatedPoint]) -> Result<SimplicialInterpolant> {
    let Some(first) = points.first() else {
        return Err(Error::DegenerateGeometry("no sites".into()));
    };
    let dim = first.x.len();

    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut sites: Vec<(Point, f64)> = Vec::with_capacity(points.len());
    for p in points {
        let key: Vec<u64> = p.x.iter().map(|c| c.to_bits()).collect();
        if seen.insert(key, ()).is_none() {
            sites.push((p.x.clone(), p.value));
        }
    }
    if sites.len() < dim + 1 {
        return Err(Error::DegenerateGeometry(format!(
            "{} distinct sites cannot span {dim} dimensions",
            sites.len()
        )));
    }

    let mut lo = sites[0].0.clone();
    let mut hi = sites[0].0.clone();
    for (x, _) in &sites {
        lo = lo.zip_map(x, f64::min);
        hi = hi.zip_map(x, f64::max);
    }

    let mut builder = Builder::new(dim, &lo, &hi);
    for (x, value) in sites {
        builder.coords.push(x);
        builder.values.push(value);
        let site = builder.coords.len() - 1;
        if !builder.insert(site) {
            debug!("site {site} skipped: no valid retriangulation");
        }
    }
    builder.finish()
}

impl SimplicialInterpolant {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn vertex(&self, v: usize) -> (&Point, f64) {
        (&self.coords[v], self.values[v])
    }

    /// Vertex ids of simplex `s`.
    pub fn simplex_vertices(&self, s: usize) -> &[usize] {
        &self.simplices[s].vertices
    }

    pub fn circumsphere(&self, s: usize) -> (&Point, f64) {
        (&self.simplices[s].circumcenter, self.simplices[s].circumradius2)
    }

    fn barycentric(&self, s: usize, p: &Point) -> Vec<f64> {
        let simplex = &self.simplices[s];
        let u = &simplex.edge_inverse * (p - &self.coords[simplex.vertices[0]]);
        let mut bary = Vec::with_capacity(self.dim + 1);
        bary.push(1.0 - u.sum());
        bary.extend(u.iter().copied());
        bary
    }

    /// Affine interpolant of simplex `s` evaluated at `x` (defined on all of
    /// space), plus its constant gradient.
    pub fn affine_at(&self, s: usize, x: &Point) -> (f64, &Point) {
        let simplex = &self.simplices[s];
        let v0 = simplex.vertices[0];
        let value = self.values[v0] + simplex.gradient.dot(&(x - &self.coords[v0]));
        (value, &simplex.gradient)
    }

    /// Directed walk from `*hint` towards `x`; updates the hint so runs of
    /// nearby queries stay cheap. An `Exited` result names the hull simplex
    /// the walk left through — the natural extension source for outside
    /// points.
    pub fn locate(&self, x: &Point, hint: &mut usize) -> Located {
        let mut current = (*hint).min(self.simplices.len() - 1);
        for _ in 0..=self.simplices.len() {
            let bary = self.barycentric(current, x);
            let (worst, &min) = bary
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .expect("barycentric coordinates are non-empty");
            if min >= -BARY_TOL {
                *hint = current;
                return Located::Inside(current);
            }
            match self.simplices[current].neighbors[worst] {
                Some(next) => current = next,
                None => {
                    *hint = current;
                    return Located::Exited(current);
                }
            }
        }
        *hint = current;
        Located::Exited(current)
    }

    /// Interpolated value at `x`, `None` outside the convex hull. A failed
    /// walk is double-checked by scanning, so the answer is exact up to the
    /// barycentric tolerance.
    pub fn interpolate(&self, x: &Point) -> Option<f64> {
        let mut hint = 0;
        match self.locate(x, &mut hint) {
            Located::Inside(s) => Some(self.affine_at(s, x).0),
            Located::Exited(_) => {
                let s = (0..self.simplices.len())
                    .find(|&s| self.barycentric(s, x).iter().all(|&b| b >= -BARY_TOL))?;
                Some(self.affine_at(s, x).0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sites(coords: &[&[f64]], values: &[f64]) -> Vec<EvaluatedPoint> {
        coords
            .iter()
            .zip(values)
            .enumerate()
            .map(|(i, (c, &v))| EvaluatedPoint {
                x: Point::from_vec(c.to_vec()),
                value: v,
                index: i as u64,
            })
            .collect()
    }

    fn random_sites(dim: usize, n: usize, seed: u64) -> Vec<EvaluatedPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x = Point::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
                EvaluatedPoint {
                    value: x.norm_squared(),
                    x,
                    index: i as u64,
                }
            })
            .collect()
    }

    /// Every simplex circumsphere must be empty of all other sites.
    fn assert_delaunay(interp: &SimplicialInterpolant) {
        for s in 0..interp.simplex_count() {
            let (center, r2) = interp.circumsphere(s);
            for v in 0..interp.vertex_count() {
                if interp.simplex_vertices(s).contains(&v) {
                    continue;
                }
                let d2 = (interp.vertex(v).0 - center).norm_squared();
                assert!(
                    d2 >= r2 * (1.0 - 1e-9),
                    "site {v} is strictly inside circumsphere of simplex {s}"
                );
            }
        }
    }

    /// The determinant-based predicate must agree with an explicit
    /// circumcenter-distance comparison wherever the latter is trustworthy
    /// (well-conditioned simplex, probe clearly off the sphere). This pins
    /// down the dimension-dependent sign of the lifted determinant.
    #[test]
    fn in_sphere_determinant_matches_circumcenter_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in 1..=4 {
            let mut accepted = 0;
            while accepted < 20 {
                let coords: Vec<Point> = (0..=dim)
                    .map(|_| Point::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)))
                    .collect();
                let values = vec![0.0; dim + 1];
                let Some(simplex) = make_simplex(&coords, &values, (0..=dim).collect())
                else {
                    continue;
                };
                if simplex.circumradius2 > 100.0 {
                    continue;
                }
                accepted += 1;
                let builder = Builder {
                    dim,
                    coords,
                    values,
                    simplices: vec![simplex],
                    walk_hint: 0,
                };
                let center = builder.simplices[0].circumcenter.clone();
                let r2 = builder.simplices[0].circumradius2;
                for _ in 0..200 {
                    let p = Point::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
                    let d2 = (&p - &center).norm_squared();
                    if (d2 - r2).abs() <= 1e-9 * r2 {
                        continue;
                    }
                    assert_eq!(
                        builder.in_sphere(0, &p),
                        d2 < r2,
                        "dim {dim}: d2 {d2} vs r2 {r2}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_from_three_sites() {
        let interp = triangulate(&sites(
            &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]],
            &[1.0, 2.0, 3.0],
        ))
        .unwrap();
        assert_eq!(interp.simplex_count(), 1);
        assert_eq!(interp.vertex_count(), 3);
        // Vertices and edge midpoints reproduce exactly.
        assert_relative_eq!(
            interp.interpolate(&Point::from_vec(vec![0.0, 0.0])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            interp.interpolate(&Point::from_vec(vec![0.5, 0.0])).unwrap(),
            1.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            interp.interpolate(&Point::from_vec(vec![0.0, 0.5])).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert!(interp.interpolate(&Point::from_vec(vec![1.0, 1.0])).is_none());
    }

    #[test]
    fn unit_square_gives_two_triangles() {
        let interp = triangulate(&sites(
            &[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]],
            &[0.0, 0.0, 0.0, 0.0],
        ))
        .unwrap();
        assert_eq!(interp.simplex_count(), 2);
        assert_delaunay(&interp);
    }

    #[test]
    fn collinear_sites_are_degenerate() {
        let result = triangulate(&sites(
            &[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]],
            &[0.0; 4],
        ));
        assert!(matches!(result, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn duplicate_sites_keep_first_value() {
        let interp = triangulate(&sites(
            &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]],
            &[1.0, 2.0, 3.0, 99.0],
        ))
        .unwrap();
        assert_eq!(interp.vertex_count(), 3);
        assert_relative_eq!(
            interp.interpolate(&Point::from_vec(vec![0.0, 0.0])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn circumspheres_are_empty_2d() {
        let interp = triangulate(&random_sites(2, 200, 5)).unwrap();
        assert!(interp.simplex_count() > 200);
        assert_delaunay(&interp);
    }

    #[test]
    fn circumspheres_are_empty_4d() {
        let interp = triangulate(&random_sites(4, 80, 6)).unwrap();
        assert!(interp.simplex_count() > 80);
        assert_delaunay(&interp);
    }

    #[test]
    fn affine_data_is_reproduced_exactly() {
        for dim in [2, 4] {
            let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
            let a = Point::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
            let b: f64 = rng.random_range(-1.0..1.0);
            let mut pts = random_sites(dim, if dim == 2 { 60 } else { 40 }, 7 + dim as u64);
            for p in &mut pts {
                p.value = a.dot(&p.x) + b;
            }
            let interp = triangulate(&pts).unwrap();
            let mut probed = 0;
            for _ in 0..1000 {
                // Random convex combinations of vertices stay in the hull.
                let i = rng.random_range(0..pts.len());
                let j = rng.random_range(0..pts.len());
                let k = rng.random_range(0..pts.len());
                let (w1, w2): (f64, f64) = (rng.random(), rng.random());
                let (u, v, w) = (w1.min(w2), (w1 - w2).abs(), 1.0 - w1.max(w2));
                let x = pts[i].x.scale(u) + pts[j].x.scale(v) + pts[k].x.scale(w);
                if let Some(value) = interp.interpolate(&x) {
                    assert_relative_eq!(value, a.dot(&x) + b, epsilon = 1e-9);
                    probed += 1;
                }
            }
            assert!(probed > 900, "only {probed} probes landed inside the hull");
        }
    }

    #[test]
    fn walk_locate_agrees_with_scan() {
        let interp = triangulate(&random_sites(2, 120, 9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut hint = 0;
        for _ in 0..500 {
            let x = Point::from_fn(2, |_, _| rng.random_range(-1.2..1.2));
            let walked = interp.locate(&x, &mut hint);
            let scanned = (0..interp.simplex_count())
                .find(|&s| interp.barycentric(s, &x).iter().all(|&b| b >= -BARY_TOL));
            match (walked, scanned) {
                (Located::Inside(s), Some(t)) => {
                    // Both must assign the same interpolated value (the
                    // simplices can differ only on shared facets).
                    assert_relative_eq!(
                        interp.affine_at(s, &x).0,
                        interp.affine_at(t, &x).0,
                        epsilon = 1e-9
                    );
                }
                (Located::Exited(_), None) => {}
                (Located::Inside(_), None) => panic!("walk claims inside, scan disagrees"),
                (Located::Exited(_), Some(_)) => {
                    // The walk may rarely exit early near the hull; the
                    // public interpolate() covers this with its scan.
                }
            }
        }
    }
}

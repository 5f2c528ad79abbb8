//! Tensor-product quadratic B-spline models over a regular box grid, fitted
//! by Galerkin projection of a simplicial interpolant in either the L² or
//! the H¹ inner product. Quadratic splines give the C¹ smoothness the level
//! sets are extracted from.

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problems::{Bounds, Point};
use crate::surrogates::delaunay::{Located, SimplicialInterpolant};

/// Spline degree (quadratic).
const DEGREE: usize = 2;
/// Gauss-Legendre nodes and weights on [0, 1], exact through degree 5 —
/// enough for products of quadratics.
const GAUSS: [(f64, f64); 3] = [
    (0.112701665379258311, 0.277777777777777778),
    (0.5, 0.444444444444444444),
    (0.887298334719678329, 0.277777777777777778),
];

/// Inner product the projection minimizes the error in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Values only (mass matrix).
    L2,
    /// Values and gradients (mass plus stiffness).
    H1,
}

/// A fitted tensor-product quadratic spline.
#[derive(Debug, Clone)]
pub struct BsplineModel {
    dim: usize,
    domain: Bounds,
    cells: usize,
    /// Open-uniform knot vector per axis.
    knots: Vec<Vec<f64>>,
    /// Row-major coefficients, (cells + 2) per axis.
    coefficients: Vec<f64>,
}

pub(crate) fn open_uniform_knots(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let h = (b - a) / cells as f64;
    let mut knots = Vec::with_capacity(cells + 2 * DEGREE + 1);
    for _ in 0..=DEGREE {
        knots.push(a);
    }
    for i in 1..cells {
        knots.push(a + i as f64 * h);
    }
    for _ in 0..=DEGREE {
        knots.push(b);
    }
    knots
}

/// Nonzero quadratic basis functions and their derivatives at `x`:
/// `(first_basis_index, values, derivatives)`. Exactly three functions are
/// nonzero on any cell.
pub(crate) fn basis_at(knots: &[f64], cells: usize, x: f64) -> (usize, [f64; 3], [f64; 3]) {
    let a = knots[0];
    let b = knots[knots.len() - 1];
    let h = (b - a) / cells as f64;
    let cell = (((x - a) / h).floor() as isize).clamp(0, cells as isize - 1) as usize;
    let span = cell + DEGREE;

    // Degree-1 basis on the span (Cox-de Boor, one level).
    let safe_div = |num: f64, den: f64| if den != 0.0 { num / den } else { 0.0 };
    let n1_lo = safe_div(knots[span + 1] - x, knots[span + 1] - knots[span]);
    let n1_hi = safe_div(x - knots[span], knots[span + 1] - knots[span]);

    // Degree-2 from degree-1.
    let mut values = [0.0; 3];
    values[0] = safe_div(knots[span + 1] - x, knots[span + 1] - knots[span - 1]) * n1_lo;
    values[1] = safe_div(x - knots[span - 1], knots[span + 1] - knots[span - 1]) * n1_lo
        + safe_div(knots[span + 2] - x, knots[span + 2] - knots[span]) * n1_hi;
    values[2] = safe_div(x - knots[span], knots[span + 2] - knots[span]) * n1_hi;

    // d/dx N_{i,2} = 2 (N_{i,1}/(t_{i+2}-t_i) - N_{i+1,1}/(t_{i+3}-t_{i+1})).
    let p = DEGREE as f64;
    let mut derivs = [0.0; 3];
    let i0 = span - DEGREE;
    let n1 = |i: usize| -> f64 {
        if i == span - 1 {
            n1_lo
        } else if i == span {
            n1_hi
        } else {
            0.0
        }
    };
    for (j, d) in derivs.iter_mut().enumerate() {
        let i = i0 + j;
        *d = p * (safe_div(n1(i), knots[i + DEGREE] - knots[i])
            - safe_div(n1(i + 1), knots[i + DEGREE + 1] - knots[i + 1]));
    }
    (i0, values, derivs)
}

impl BsplineModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Bounds {
        &self.domain
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.cells + DEGREE;
        let mut strides = vec![1usize; self.dim];
        for k in (0..self.dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * n;
        }
        strides
    }

    /// Spline value at `x` (defined on the whole grid box; callers guard the
    /// domain).
    pub fn evaluate(&self, x: &Point) -> f64 {
        let strides = self.strides();
        let per_axis: Vec<(usize, [f64; 3])> = (0..self.dim)
            .map(|k| {
                let (i0, values, _) = basis_at(&self.knots[k], self.cells, x[k]);
                (i0, values)
            })
            .collect();
        let mut total = 0.0;
        let combos = 3usize.pow(self.dim as u32);
        for c in 0..combos {
            let mut idx = 0;
            let mut weight = 1.0;
            let mut rest = c;
            for k in 0..self.dim {
                let j = rest % 3;
                rest /= 3;
                idx += (per_axis[k].0 + j) * strides[k];
                weight *= per_axis[k].1[j];
            }
            total += weight * self.coefficients[idx];
        }
        total
    }
}

/// Galerkin projection of the interpolant onto the spline space over
/// `domain` with `cells` per axis. Quadrature points outside the convex hull
/// of the interpolant take the affine extension of the hull simplex the
/// locating walk exits through.
pub fn project(
    interp: &SimplicialInterpolant,
    domain: &Bounds,
    cells: usize,
    mode: Projection,
) -> Result<BsplineModel> {
    if cells == 0 {
        return Err(Error::InvalidArgument("spline grid needs at least one cell".into()));
    }
    let dim = interp.dim();
    if domain.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: domain.dimension(),
        });
    }
    let n = cells + DEGREE;
    let total = n.pow(dim as u32);
    let knots: Vec<Vec<f64>> = (0..dim)
        .map(|k| open_uniform_knots(domain.lower()[k], domain.upper()[k], cells))
        .collect();
    let h: Vec<f64> = (0..dim)
        .map(|k| (domain.upper()[k] - domain.lower()[k]) / cells as f64)
        .collect();
    let cell_volume: f64 = h.iter().product();

    let mut matrix = DMatrix::zeros(total, total);
    let mut rhs = DVector::zeros(total);

    let strides = {
        let mut s = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * n;
        }
        s
    };

    let combos = 3usize.pow(dim as u32);
    let quad_combos = GAUSS.len().pow(dim as u32);
    let mut hint = 0usize;
    let mut x = Point::zeros(dim);
    // Scratch: global index, basis value, basis gradient per combo.
    let mut phi: Vec<(usize, f64, Vec<f64>)> = vec![(0, 0.0, vec![0.0; dim]); combos];

    let mut cell_idx = vec![0usize; dim];
    loop {
        for q in 0..quad_combos {
            let mut rest = q;
            let mut weight = cell_volume;
            for k in 0..dim {
                let (node, w) = GAUSS[rest % GAUSS.len()];
                rest /= GAUSS.len();
                x[k] = domain.lower()[k] + (cell_idx[k] as f64 + node) * h[k];
                weight *= w;
            }

            let simplex = match interp.locate(&x, &mut hint) {
                Located::Inside(s) | Located::Exited(s) => s,
            };
            let (value, gradient) = interp.affine_at(simplex, &x);

            let per_axis: Vec<(usize, [f64; 3], [f64; 3])> = (0..dim)
                .map(|k| basis_at(&knots[k], cells, x[k]))
                .collect();
            for (c, slot) in phi.iter_mut().enumerate() {
                let mut idx = 0;
                let mut val = 1.0;
                let mut rest = c;
                let mut js = [0usize; 8];
                for k in 0..dim {
                    let j = rest % 3;
                    rest /= 3;
                    js[k] = j;
                    idx += (per_axis[k].0 + j) * strides[k];
                    val *= per_axis[k].1[j];
                }
                for k in 0..dim {
                    let mut g = per_axis[k].2[js[k]];
                    for (other, axis) in per_axis.iter().enumerate() {
                        if other != k {
                            g *= axis.1[js[other]];
                        }
                    }
                    slot.2[k] = g;
                }
                slot.0 = idx;
                slot.1 = val;
            }

            for a in &phi {
                let mut load = value * a.1;
                if mode == Projection::H1 {
                    for k in 0..dim {
                        load += gradient[k] * a.2[k];
                    }
                }
                rhs[a.0] += weight * load;
                for b in &phi {
                    let mut entry = a.1 * b.1;
                    if mode == Projection::H1 {
                        for k in 0..dim {
                            entry += a.2[k] * b.2[k];
                        }
                    }
                    matrix[(a.0, b.0)] += weight * entry;
                }
            }
        }

        // Advance the cell multi-index.
        let mut k = dim;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            cell_idx[k] += 1;
            if cell_idx[k] < cells {
                break;
            }
            cell_idx[k] = 0;
        }
        if cell_idx.iter().all(|&c| c == 0) {
            break;
        }
    }

    let chol = Cholesky::new(matrix).ok_or_else(|| {
        Error::RankDeficient("spline Galerkin system is not positive definite".into())
    })?;
    let coefficients = chol.solve(&rhs);
    debug!(
        "projected {total}-coefficient spline ({mode:?}, {cells} cells/axis, dim {dim})"
    );
    Ok(BsplineModel {
        dim,
        domain: domain.clone(),
        cells,
        knots,
        coefficients: coefficients.iter().copied().collect(),
    })
}

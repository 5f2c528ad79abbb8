//! Ordinary Kriging with a Gaussian kernel: an interpolating surrogate with
//! the process mean handled by the unbiasedness constraint, no trend fitting
//! and no hyperparameter search — the length scale comes from the data.

use log::debug;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::problems::Point;

/// Initial jitter added to the kernel diagonal.
const BASE_NUGGET: f64 = 1e-8;
/// Largest jitter tried before giving up on a singular system.
const MAX_NUGGET: f64 = 1e-2;

/// A fitted ordinary-Kriging interpolant.
pub struct KrigingModel {
    points: Vec<Point>,
    values: Vec<f64>,
    length_scale: f64,
    nugget: f64,
    /// Kernel weights of the fitted dual system.
    weights: DVector<f64>,
    /// Process mean recovered by the unbiasedness constraint.
    mean: f64,
    /// Factorization of the augmented system, kept for per-point weight
    /// queries.
    factorization: nalgebra::LU<f64, Dyn, Dyn>,
}

impl std::fmt::Debug for KrigingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KrigingModel")
            .field("points", &self.points.len())
            .field("length_scale", &self.length_scale)
            .field("nugget", &self.nugget)
            .field("mean", &self.mean)
            .finish()
    }
}

fn kernel(r2: f64, length_scale: f64) -> f64 {
    (-r2 / (2.0 * length_scale * length_scale)).exp()
}

/// Fit to training data. Exact duplicate points are merged by averaging
/// their values first; at least two distinct points are required. The kernel
/// length scale is the median nearest-neighbor distance. A numerically
/// singular system escalates the diagonal jitter tenfold up to a cap before
/// failing.
pub fn fit(points: &[Point], values: &[f64]) -> Result<KrigingModel> {
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    // Merge duplicates, preserving first-appearance order.
    let mut order: Vec<(Point, f64, usize)> = Vec::new();
    let mut slot: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
    for (x, &y) in points.iter().zip(values) {
        let key: Vec<u64> = x.iter().map(|c| c.to_bits()).collect();
        match slot.get(&key) {
            Some(&s) => {
                order[s].1 += y;
                order[s].2 += 1;
            }
            None => {
                slot.insert(key, order.len());
                order.push((x.clone(), y, 1));
            }
        }
    }
    let points: Vec<Point> = order.iter().map(|(x, _, _)| x.clone()).collect();
    let values: Vec<f64> = order.iter().map(|(_, sum, n)| sum / *n as f64).collect();
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "kriging needs at least two distinct points".into(),
        ));
    }

    // Median nearest-neighbor distance as the length scale.
    let mut nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (&points[i] - &points[j]).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let length_scale = if n % 2 == 1 {
        nn[n / 2]
    } else {
        0.5 * (nn[n / 2 - 1] + nn[n / 2])
    };
    if !(length_scale > 0.0) || !length_scale.is_finite() {
        return Err(Error::IllConditioned(
            "kriging length scale degenerated to zero".into(),
        ));
    }

    // Augmented ordinary-Kriging system: [K 1; 1^T 0] [w; m] = [y; 0].
    let mut nugget = BASE_NUGGET;
    loop {
        let mut system = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                let r2 = (&points[i] - &points[j]).norm_squared();
                system[(i, j)] = kernel(r2, length_scale) + if i == j { nugget } else { 0.0 };
            }
            system[(i, n)] = 1.0;
            system[(n, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = values[i];
        }
        let factorization = system.lu();
        if let Some(solution) = factorization.solve(&rhs) {
            if solution.iter().all(|v| v.is_finite()) {
                let weights = DVector::from_iterator(n, solution.iter().take(n).copied());
                let mean = solution[n];
                if nugget > BASE_NUGGET {
                    debug!("kriging fitted with escalated nugget {nugget:e}");
                }
                return Ok(KrigingModel {
                    points,
                    values,
                    length_scale,
                    nugget,
                    weights,
                    mean,
                    factorization,
                });
            }
        }
        nugget *= 10.0;
        if nugget > MAX_NUGGET {
            return Err(Error::IllConditioned(format!(
                "kriging system stayed singular up to nugget {MAX_NUGGET:e}"
            )));
        }
    }
}

impl KrigingModel {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn training_point(&self, i: usize) -> (&Point, f64) {
        (&self.points[i], self.values[i])
    }

    /// Predicted value at `x`.
    pub fn predict(&self, x: &Point) -> f64 {
        let mut total = self.mean;
        for (p, w) in self.points.iter().zip(self.weights.iter()) {
            total += w * kernel((x - p).norm_squared(), self.length_scale);
        }
        total
    }

    /// Classical per-point prediction weights at `x` (they sum to one by the
    /// unbiasedness constraint). The prediction equals the weighted sum of
    /// training values.
    pub fn point_weights(&self, x: &Point) -> DVector<f64> {
        let n = self.points.len();
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = kernel((x - &self.points[i]).norm_squared(), self.length_scale);
        }
        rhs[n] = 1.0;
        let solution = self
            .factorization
            .solve(&rhs)
            .expect("factorization solved the training system");
        DVector::from_iterator(n, solution.iter().take(n).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_training(dim: usize, n: usize, seed: u64) -> (Vec<Point>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Point> = (0..n)
            .map(|_| Point::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)))
            .collect();
        let values = points.iter().map(|p| (p[0] * 1.3).sin() + p.norm()).collect();
        (points, values)
    }

    #[test]
    fn training_points_are_interpolated() {
        let (points, values) = random_training(2, 30, 1);
        let model = fit(&points, &values).unwrap();
        for (p, v) in points.iter().zip(&values) {
            assert_relative_eq!(model.predict(p), *v, epsilon = 1e-6);
        }
    }

    #[test]
    fn constant_data_predicts_the_constant_everywhere() {
        let (points, _) = random_training(2, 20, 2);
        let values = vec![3.25; points.len()];
        let model = fit(&points, &values).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = Point::from_fn(2, |_, _| rng.random_range(-10.0..10.0));
            assert_relative_eq!(model.predict(&x), 3.25, epsilon = 1e-6);
        }
    }

    #[test]
    fn midpoint_of_a_symmetric_pair_is_the_average()
    {
        let points = vec![Point::from_vec(vec![0.0]), Point::from_vec(vec![1.0])];
        let model = fit(&points, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(
            model.predict(&Point::from_vec(vec![0.5])),
            0.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn duplicates_are_averaged() {
        let points = vec![
            Point::from_vec(vec![0.0, 0.0]),
            Point::from_vec(vec![0.0, 0.0]),
            Point::from_vec(vec![1.0, 1.0]),
        ];
        let model = fit(&points, &[0.0, 2.0, 1.0]).unwrap();
        assert_eq!(model.len(), 2);
        assert_relative_eq!(
            model.predict(&Point::from_vec(vec![0.0, 0.0])),
            1.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn point_weights_sum_to_one() {
        let (points, values) = random_training(2, 25, 4);
        let model = fit(&points, &values).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = Point::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let w = model.point_weights(&x);
            assert!((w.sum() - 1.0).abs() <= 1e-9, "weight sum {}", w.sum());
            // Both prediction forms agree.
            let direct: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| wi * model.training_point(i).1)
                .sum();
            assert_relative_eq!(model.predict(&x), direct, epsilon = 1e-7);
        }
    }

    #[test]
    fn single_distinct_point_is_rejected() {
        let points = vec![Point::from_vec(vec![1.0, 1.0]); 5];
        let result = fit(&points, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(result, Err(Error::InvalidArgument(_))));
    }
}

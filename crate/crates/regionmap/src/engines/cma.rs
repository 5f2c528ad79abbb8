//! Covariance matrix adaptation evolution strategy (weighted-recombination
//! variant) with evaluation-budget awareness and opt-in stop conditions.
//!
//! The implementation follows the standard parameterisation: rank-one plus
//! rank-mu covariance updates, cumulative step-size adaptation, and the
//! customary flat-fitness step-size inflation (sigma is multiplied by
//! `exp(0.2 + c_sigma/d_sigma)` whenever the best and the 70th-percentile
//! sorted objective values coincide). The inflation is what makes the step
//! size grow decisively on plateaus, which the sigma-increase stop condition
//! turns into a plateau detector.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::engines::{StopReason, StopSpec};
use crate::error::{Error, Result};
use crate::problems::{EvaluatedPoint, Point, Problem};

/// Maximum resampling attempts before an out-of-bounds draw is clamped.
const BOUND_RESAMPLE_LIMIT: usize = 10;

// ---------------------------------------------------------------------------
// Gaussian sampler
// ---------------------------------------------------------------------------

/// A scaled multivariate normal `N(mean, sigma^2 C)` with a cached spectral
/// decomposition of `C`, used both for sampling and for Mahalanobis queries.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Point,
    sigma: f64,
    cov: DMatrix<f64>,
    /// Eigenvectors of `C` (columns).
    basis: DMatrix<f64>,
    /// Square roots of the eigenvalues of `C`.
    scales: DVector<f64>,
}

impl GaussianSampler {
    /// Build a sampler, validating that `cov` is symmetric (within 1e-10)
    /// and positive definite and that `sigma` is a positive finite number.
    pub fn new(mean: Point, sigma: f64, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cov.nrows(),
            });
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::DegenerateEngine(format!(
                "step size must be positive and finite, got {sigma}"
            )));
        }
        let mut max_abs: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if !cov[(i, j)].is_finite() {
                    return Err(Error::DegenerateEngine(
                        "covariance contains non-finite entries".into(),
                    ));
                }
                max_abs = max_abs.max(cov[(i, j)].abs());
            }
        }
        let tol = 1e-10 * max_abs.max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (cov[(i, j)] - cov[(j, i)]).abs() > tol {
                    return Err(Error::DegenerateEngine(
                        "covariance is not symmetric".into(),
                    ));
                }
            }
        }
        let eigen = cov.clone().symmetric_eigen();
        let max_eig = eigen.eigenvalues.max();
        if !(max_eig.is_finite() && max_eig > 0.0) {
            return Err(Error::DegenerateEngine(
                "covariance has no positive eigenvalues".into(),
            ));
        }
        let mut scales = DVector::zeros(n);
        for (k, &ev) in eigen.eigenvalues.iter().enumerate() {
            if !ev.is_finite() || ev <= max_eig * 1e-14 {
                return Err(Error::DegenerateEngine(format!(
                    "covariance eigenvalue {ev} is not usable"
                )));
            }
            scales[k] = ev.sqrt();
        }
        Ok(Self {
            mean,
            sigma,
            cov,
            basis: eigen.eigenvectors,
            scales,
        })
    }

    /// Sampler with identity covariance.
    pub fn isotropic(mean: Point, sigma: f64) -> Result<Self> {
        let n = mean.len();
        Self::new(mean, sigma, DMatrix::identity(n, n))
    }

    pub fn mean(&self) -> &Point {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Draw `mean + sigma * B * (scales .* z)` with standard normal `z`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let n = self.mean.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let scaled = z.component_mul(&self.scales);
        &self.mean + (&self.basis * scaled) * self.sigma
    }

    /// Mahalanobis distance of `x` under `N(mean, sigma^2 C)`:
    /// `sqrt((x-m)^T (sigma^2 C)^-1 (x-m))`.
    pub fn mahalanobis(&self, x: &Point) -> f64 {
        let diff = self.basis.transpose() * (x - &self.mean);
        let whitened = diff.component_div(&self.scales);
        whitened.norm() / self.sigma
    }
}

// ---------------------------------------------------------------------------
// Strategy parameters
// ---------------------------------------------------------------------------

/// Derived strategy constants for a given dimension and population size.
#[derive(Debug, Clone)]
pub struct CmaParams {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: DVector<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c1: f64,
    pub c_mu: f64,
    /// Expected norm of a standard normal vector in `dim` dimensions.
    pub chi_n: f64,
}

impl CmaParams {
    /// Default parameterisation; `lambda` falls back to `4 + floor(3 ln n)`.
    pub fn new(dim: usize, lambda: Option<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let n = dim as f64;
        let lambda = lambda.unwrap_or(4 + (3.0 * n.ln()).floor() as usize);
        if lambda < 2 {
            return Err(Error::InvalidArgument(format!(
                "population size {lambda} is too small"
            )));
        }
        let mu = lambda / 2;
        let mut weights = DVector::from_iterator(
            mu,
            (0..mu).map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln()),
        );
        let total: f64 = weights.iter().sum();
        weights /= total;
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma =
            1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
        let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff))
            .min(1.0 - c1);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        Ok(Self {
            dim,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c1,
            c_mu,
            chi_n,
        })
    }
}

// ---------------------------------------------------------------------------
// State and stepping
// ---------------------------------------------------------------------------

/// One completed iteration: the population it evaluated and the sampler that
/// generated it.
#[derive(Debug, Clone)]
pub struct CmaIteration {
    pub iteration: u64,
    pub population: Vec<EvaluatedPoint>,
    pub sampler: GaussianSampler,
}

/// Outcome of a single step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continued,
    Stopped(StopReason),
}

/// Full strategy state. The trace records every sampled population, which the
/// cluster-extraction stage later pools into its point cloud.
pub struct CmaState {
    pub params: CmaParams,
    sampler: GaussianSampler,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    iteration: u64,
    best: Option<EvaluatedPoint>,
    mean_history: Vec<f64>,
    stop_spec: StopSpec,
    stop: Option<StopReason>,
    trace: Vec<CmaIteration>,
    rng: ChaCha8Rng,
}

impl std::fmt::Debug for CmaState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CmaState")
            .field("iteration", &self.iteration)
            .field("sigma", &self.sampler.sigma())
            .field("best", &self.best.as_ref().map(|b| b.value))
            .field("stop", &self.stop)
            .finish()
    }
}

impl CmaState {
    /// Start a strategy at `mean0` with step size `sigma0` and identity
    /// covariance. `lambda` overrides the default population size.
    pub fn new(
        mean0: Point,
        sigma0: f64,
        lambda: Option<usize>,
        stop_spec: StopSpec,
        seed: u64,
    ) -> Result<Self> {
        let params = CmaParams::new(mean0.len(), lambda)?;
        let sampler = GaussianSampler::isotropic(mean0, sigma0)?;
        let dim = params.dim;
        Ok(Self {
            params,
            sampler,
            p_sigma: DVector::zeros(dim),
            p_c: DVector::zeros(dim),
            iteration: 0,
            best: None,
            mean_history: Vec::new(),
            stop_spec,
            stop: None,
            trace: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sampler(&self) -> &GaussianSampler {
        &self.sampler
    }

    pub fn best(&self) -> Option<&EvaluatedPoint> {
        self.best.as_ref()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn trace(&self) -> &[CmaIteration] {
        &self.trace
    }

    /// Total points this strategy has evaluated.
    pub fn evaluations(&self) -> u64 {
        self.trace.iter().map(|t| t.population.len() as u64).sum()
    }

    /// Sample a point honouring the domain bounds: resample a bounded number
    /// of times, then clamp.
    fn sample_bounded(&mut self, problem: &Problem) -> Point {
        for _ in 0..BOUND_RESAMPLE_LIMIT {
            let x = self.sampler.sample(&mut self.rng);
            if problem.bounds().contains(&x) {
                return x;
            }
        }
        let x = self.sampler.sample(&mut self.rng);
        problem.bounds().clamp(&x)
    }

    /// Run one iteration: sample and evaluate up to `lambda` points (stopping
    /// early if `budget` would be exceeded), update the distribution and
    /// evaluate the stop conditions. Once a stop reason is set, further calls
    /// return it unchanged.
    pub fn step(&mut self, problem: &Problem, budget: u64) -> Result<StepOutcome> {
        if let Some(reason) = self.stop {
            return Ok(StepOutcome::Stopped(reason));
        }

        let lambda = self.params.lambda;
        let generator = self.sampler.clone();
        let mut population = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            if problem.evaluations() >= budget {
                break;
            }
            let x = self.sample_bounded(problem);
            population.push(problem.evaluate(&x));
        }

        for p in &population {
            if self.best.as_ref().is_none_or(|b| p.is_better_than(b)) {
                self.best = Some(p.clone());
            }
        }

        if population.len() < lambda {
            // Partial iteration: the points still join the trace (and the
            // pooled cloud downstream), but no distribution update is made.
            if !population.is_empty() {
                self.iteration += 1;
                self.trace.push(CmaIteration {
                    iteration: self.iteration,
                    population,
                    sampler: generator,
                });
            }
            self.stop = Some(StopReason::BudgetExhausted);
            return Ok(StepOutcome::Stopped(StopReason::BudgetExhausted));
        }

        self.iteration += 1;
        let mean_objective =
            population.iter().map(|p| p.value).sum::<f64>() / population.len() as f64;

        let mut ranked: Vec<&EvaluatedPoint> = population.iter().collect();
        ranked.sort_by(|a, b| a.rank_key().partial_cmp(&b.rank_key()).unwrap());

        let params = &self.params;
        let old_mean = self.sampler.mean().clone();
        let old_sigma = self.sampler.sigma();

        // Weighted recombination of the mu best.
        let mut new_mean = DVector::zeros(params.dim);
        for (i, w) in params.weights.iter().enumerate() {
            new_mean += ranked[i].x.scale(*w);
        }
        let y_w = (&new_mean - &old_mean) / old_sigma;

        // Conjugate evolution path (uses C^-1/2 through the cached spectrum).
        let whitened = {
            let rotated = self.sampler.basis.transpose() * &y_w;
            let scaled = rotated.component_div(&self.sampler.scales);
            &self.sampler.basis * scaled
        };
        self.p_sigma = self.p_sigma.scale(1.0 - params.c_sigma)
            + whitened.scale((params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff).sqrt());

        let expected_decay =
            (1.0 - (1.0 - params.c_sigma).powi(2 * self.iteration as i32)).sqrt();
        let h_sigma = self.p_sigma.norm() / expected_decay
            < (1.4 + 2.0 / (params.dim as f64 + 1.0)) * params.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };

        self.p_c = self.p_c.scale(1.0 - params.c_c)
            + y_w.scale(h * (params.c_c * (2.0 - params.c_c) * params.mu_eff).sqrt());

        // Covariance update: rank-one plus rank-mu.
        let mut cov = self.sampler.covariance().scale(
            1.0 - params.c1 - params.c_mu
                + params.c1 * (1.0 - h) * params.c_c * (2.0 - params.c_c),
        );
        cov += (&self.p_c * self.p_c.transpose()).scale(params.c1);
        for (i, w) in params.weights.iter().enumerate() {
            let y = (&ranked[i].x - &old_mean) / old_sigma;
            cov += (&y * y.transpose()).scale(params.c_mu * *w);
        }
        // Symmetrise against round-off drift.
        cov = (&cov + cov.transpose()) * 0.5;

        // Step-size update with the customary flat-fitness inflation.
        let mut sigma = old_sigma
            * ((params.c_sigma / params.d_sigma)
                * (self.p_sigma.norm() / params.chi_n - 1.0))
                .exp();
        let flat_probe = ((0.7 * params.lambda as f64).ceil() as usize).clamp(1, lambda) - 1;
        if ranked[0].value == ranked[flat_probe].value {
            sigma *= (0.2 + params.c_sigma / params.d_sigma).exp();
        }

        self.sampler = GaussianSampler::new(new_mean, sigma, cov)?;
        self.trace.push(CmaIteration {
            iteration: self.iteration,
            population,
            sampler: generator,
        });

        // Stop conditions, in documented order.
        if let Some(stagnation) = self.stop_spec.stagnation {
            self.mean_history.push(mean_objective);
            if self.mean_history.len() >= stagnation.window {
                let recent = &self.mean_history[self.mean_history.len() - stagnation.window..];
                let max = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = recent.iter().cloned().fold(f64::INFINITY, f64::min);
                if max - min <= stagnation.tolerance {
                    self.stop = Some(StopReason::Stagnation);
                    return Ok(StepOutcome::Stopped(StopReason::Stagnation));
                }
            }
        }
        if let Some(si) = self.stop_spec.sigma_increase {
            if self.iteration > si.warmup as u64 && sigma > old_sigma {
                self.stop = Some(StopReason::SigmaIncrease);
                return Ok(StepOutcome::Stopped(StopReason::SigmaIncrease));
            }
        }
        if let Some(target) = self.stop_spec.target_fitness {
            if self.best.as_ref().is_some_and(|b| b.value <= target) {
                self.stop = Some(StopReason::TargetFitness);
                return Ok(StepOutcome::Stopped(StopReason::TargetFitness));
            }
        }
        if problem.evaluations() >= budget {
            self.stop = Some(StopReason::BudgetExhausted);
            return Ok(StepOutcome::Stopped(StopReason::BudgetExhausted));
        }

        Ok(StepOutcome::Continued)
    }

    /// Step until a stop condition fires; returns the reason.
    pub fn run(&mut self, problem: &Problem, budget: u64) -> Result<StopReason> {
        loop {
            if let StepOutcome::Stopped(reason) = self.step(problem, budget)? {
                return Ok(reason);
            }
        }
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Bounds;
    use std::sync::Arc;

    fn sphere_problem(dim: usize) -> Problem {
        Problem::new(
            "sphere",
            Bounds::new(vec![-5.0; dim], vec![5.0; dim]).unwrap(),
            Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum()),
        )
    }

    fn flat_problem(dim: usize) -> Problem {
        Problem::new(
            "flat",
            Bounds::new(vec![-5.0; dim], vec![5.0; dim]).unwrap(),
            Arc::new(|_: &[f64]| 0.0),
        )
    }

    #[test]
    fn default_population_sizes_follow_log_rule() {
        assert_eq!(CmaParams::new(2, None).unwrap().lambda, 6);
        assert_eq!(CmaParams::new(4, None).unwrap().lambda, 8);
        assert_eq!(CmaParams::new(10, None).unwrap().lambda, 10);
    }

    #[test]
    fn weights_are_normalised_and_decreasing() {
        let p = CmaParams::new(4, None).unwrap();
        let sum: f64 = p.weights.iter().sum();
        approx::assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        for pair in p.weights.as_slice().windows(2) {
            assert!(pair[0] > pair[1]);
        }
        assert!(p.mu_eff > 1.0 && p.mu_eff <= p.mu as f64);
    }

    #[test]
    fn sphere_reaches_target_fitness() {
        let problem = sphere_problem(2);
        let stop = StopSpec {
            target_fitness: Some(1e-6),
            ..StopSpec::default()
        };
        let mut state = CmaState::new(
            Point::from_vec(vec![1.0, 1.0]),
            0.5,
            None,
            stop,
            7,
        )
        .unwrap();
        let reason = state.run(&problem, 5_000).unwrap();
        assert_eq!(reason, StopReason::TargetFitness);
        assert!(state.best().unwrap().value <= 1e-6);
    }

    #[test]
    fn best_value_is_non_increasing() {
        let problem = sphere_problem(3);
        let mut state = CmaState::new(
            Point::from_vec(vec![2.0, -1.0, 0.5]),
            0.7,
            None,
            StopSpec::default(),
            11,
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..40 {
            state.step(&problem, 10_000).unwrap();
            let b = state.best().unwrap().value;
            assert!(b <= last);
            last = b;
        }
    }

    #[test]
    fn flat_objective_trips_sigma_increase_quickly() {
        let mut stops = 0;
        for seed in 0..20 {
            let problem = flat_problem(2);
            let stop = StopSpec {
                sigma_increase: Some(crate::engines::SigmaIncrease::default()),
                ..StopSpec::default()
            };
            let mut state =
                CmaState::new(Point::from_vec(vec![0.0, 0.0]), 0.5, None, stop, seed).unwrap();
            let reason = state.run(&problem, 50 * 6).unwrap();
            if reason == StopReason::SigmaIncrease {
                stops += 1;
                assert!(state.iteration() <= 50);
            }
        }
        assert!(stops >= 18, "only {stops}/20 runs stopped on sigma growth");
    }

    #[test]
    fn flat_objective_grows_sigma() {
        // Median final/initial sigma ratio over seeds must exceed one: the
        // flat-fitness inflation dominates the random walk.
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let problem = flat_problem(2);
            let mut state =
                CmaState::new(Point::from_vec(vec![0.0, 0.0]), 0.5, None, StopSpec::default(), seed)
                    .unwrap();
            for _ in 0..50 {
                state.step(&problem, u64::MAX).unwrap();
            }
            ratios.push(state.sampler().sigma() / 0.5);
            // The mean is a convex combination of in-bounds samples, so it
            // stays inside the box hull.
            assert!(state.sampler().mean().norm() <= 5.0 * 2.0_f64.sqrt() + 1e-9);
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(ratios[ratios.len() / 2] > 1.0);
    }

    #[test]
    fn budget_exhaustion_stops_partial_iteration() {
        let problem = sphere_problem(2);
        let mut state = CmaState::new(
            Point::from_vec(vec![1.0, 1.0]),
            0.5,
            None,
            StopSpec::default(),
            3,
        )
        .unwrap();
        let reason = state.run(&problem, 10).unwrap();
        assert_eq!(reason, StopReason::BudgetExhausted);
        assert_eq!(problem.evaluations(), 10);
        assert_eq!(state.evaluations(), 10);
    }

    #[test]
    fn samples_respect_bounds() {
        let problem = Problem::new(
            "tight",
            Bounds::new(vec![0.0, 0.0], vec![0.4, 0.4]).unwrap(),
            Arc::new(|x: &[f64]| x[0] + x[1]),
        );
        let mut state = CmaState::new(
            Point::from_vec(vec![0.2, 0.2]),
            1.0, // large step: forces resample/clamp handling
            None,
            StopSpec::default(),
            23,
        )
        .unwrap();
        for _ in 0..10 {
            state.step(&problem, u64::MAX).unwrap();
        }
        for it in state.trace() {
            for p in &it.population {
                assert!(problem.bounds().contains(&p.x));
            }
        }
    }

    #[test]
    fn mahalanobis_matches_direct_inverse() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let sampler = GaussianSampler::new(Point::from_vec(vec![1.0, -1.0]), 0.7, cov.clone())
            .unwrap();
        let x = Point::from_vec(vec![2.0, 0.0]);
        let diff = &x - sampler.mean();
        let inv = (cov * 0.49).try_inverse().unwrap();
        let expected = (diff.transpose() * inv * &diff)[(0, 0)].sqrt();
        approx::assert_relative_eq!(sampler.mahalanobis(&x), expected, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_covariance_is_rejected() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(GaussianSampler::new(Point::from_vec(vec![0.0, 0.0]), 1.0, singular).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(GaussianSampler::new(Point::from_vec(vec![0.0, 0.0]), 1.0, asym).is_err());
    }
}

//! A simple generational evolutionary algorithm used as the exploratory root
//! of the hierarchic strategy: fitness-proportional selection on inverted
//! min-max-normalised objective values, arithmetic crossover, per-coordinate
//! Gaussian mutation and a single elite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problems::{EvaluatedPoint, Point, Problem};

/// Parameters of the generational EA.
#[derive(Debug, Clone, Copy)]
pub struct SeaParams {
    pub population_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_std: f64,
}

impl Default for SeaParams {
    fn default() -> Self {
        Self {
            population_size: 40,
            crossover_prob: 0.1,
            mutation_prob: 0.5,
            mutation_std: 2.0,
        }
    }
}

/// Outcome of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochOutcome {
    Complete,
    /// The budget ran out mid-epoch; the previous generation is kept.
    BudgetExhausted,
}

/// Population state. A fresh state has no individuals; its first epoch
/// evaluates the uniform initial population (costing exactly
/// `population_size` evaluations), and each later epoch breeds and evaluates
/// `population_size` fresh offspring.
pub struct SeaState {
    params: SeaParams,
    population: Vec<EvaluatedPoint>,
    rng: ChaCha8Rng,
}

impl std::fmt::Debug for SeaState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeaState")
            .field("population", &self.population.len())
            .field("best", &self.best().map(|b| b.value))
            .finish()
    }
}

impl SeaState {
    pub fn new(params: SeaParams, seed: u64) -> Self {
        assert!(params.population_size >= 2, "population too small");
        Self {
            params,
            population: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn params(&self) -> &SeaParams {
        &self.params
    }

    pub fn population(&self) -> &[EvaluatedPoint] {
        &self.population
    }

    /// Best individual by (value, evaluation index).
    pub fn best(&self) -> Option<&EvaluatedPoint> {
        self.population
            .iter()
            .min_by(|a, b| a.rank_key().partial_cmp(&b.rank_key()).unwrap())
    }

    /// Advance one epoch, spending at most the evaluations left in `budget`.
    pub fn epoch(&mut self, problem: &Problem, budget: u64) -> EpochOutcome {
        if self.population.is_empty() {
            return self.initialise(problem, budget);
        }
        self.breed(problem, budget)
    }

    fn initialise(&mut self, problem: &Problem, budget: u64) -> EpochOutcome {
        let mut population = Vec::with_capacity(self.params.population_size);
        for _ in 0..self.params.population_size {
            if problem.evaluations() >= budget {
                self.population = population;
                return EpochOutcome::BudgetExhausted;
            }
            let x = problem.bounds().sample_uniform(&mut self.rng);
            population.push(problem.evaluate(&x));
        }
        self.population = population;
        EpochOutcome::Complete
    }

    /// Selection weights: inverted objective values min-max-normalised over
    /// the current population; a constant population selects uniformly.
    fn selection_weights(&self) -> Vec<f64> {
        let max = self
            .population
            .iter()
            .map(|p| p.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self
            .population
            .iter()
            .map(|p| p.value)
            .fold(f64::INFINITY, f64::min);
        if max - min <= 0.0 {
            return vec![1.0; self.population.len()];
        }
        self.population
            .iter()
            .map(|p| (max - p.value) / (max - min))
            .collect()
    }

    fn roulette(&mut self, weights: &[f64], total: f64) -> usize {
        if total <= 0.0 {
            return self.rng.random_range(0..weights.len());
        }
        let mut ticket = self.rng.random_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            ticket -= w;
            if ticket <= 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }

    fn breed(&mut self, problem: &Problem, budget: u64) -> EpochOutcome {
        let weights = self.selection_weights();
        let total: f64 = weights.iter().sum();
        let elite = self.best().cloned().expect("population is non-empty");

        let mut offspring: Vec<EvaluatedPoint> =
            Vec::with_capacity(self.params.population_size);
        for _ in 0..self.params.population_size {
            if problem.evaluations() >= budget {
                // Keep the previous generation intact on a partial epoch.
                return EpochOutcome::BudgetExhausted;
            }
            let a = self.roulette(&weights, total);
            let mut child: Point = if self.rng.random::<f64>() < self.params.crossover_prob {
                let b = self.roulette(&weights, total);
                let u: f64 = self.rng.random();
                self.population[a].x.scale(u) + self.population[b].x.scale(1.0 - u)
            } else {
                self.population[a].x.clone()
            };
            for k in 0..child.len() {
                if self.rng.random::<f64>() < self.params.mutation_prob {
                    let noise: f64 = self.rng.sample(StandardNormal);
                    child[k] += self.params.mutation_std * noise;
                }
            }
            child = problem.bounds().clamp(&child);
            offspring.push(problem.evaluate(&child));
        }

        // One elite: if the old best beats every offspring, it replaces the
        // worst offspring (keeping its cached value, no re-evaluation).
        let best_offspring = offspring
            .iter()
            .map(|p| p.rank_key())
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .expect("offspring is non-empty");
        if elite.rank_key() < best_offspring {
            let worst = offspring
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.rank_key().partial_cmp(&b.rank_key()).unwrap())
                .map(|(i, _)| i)
                .expect("offspring is non-empty");
            offspring[worst] = elite;
        }
        self.population = offspring;
        EpochOutcome::Complete
    }
}

// ---------------------------------------------------------------------------

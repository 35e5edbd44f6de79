//! Genetic-algorithm search for parameters under which part of the initial
//! human cohort survives the shock without the whole cohort surviving.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::abm::{run_replications, stream_rng, survivor_stats, SimConfig, Stream, TimeSeries};
use crate::{par, Error, Result};

/// Box bounds for the three searched parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub exit_threshold: (f64, f64),
    pub entry_rate: (f64, f64),
    pub lambda_creative: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace { exit_threshold: (0.0005, 0.0020), entry_rate: (0.01, 0.10), lambda_creative: (0.005, 0.05) }
    }
}

pub const PARAM_NAMES: [&str; 3] = ["exit_threshold", "entry_rate", "lambda_creative"];

impl SearchSpace {
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![self.exit_threshold, self.entry_rate, self.lambda_creative]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in PARAM_NAMES.iter().zip(self.bounds()) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(
                    *name,
                    format!("search bounds must satisfy lower < upper, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == 3 && self.bounds().iter().zip(x).all(|(&(lo, hi), &v)| (lo..=hi).contains(&v))
    }

    /// `base` with the candidate's values substituted.
    pub fn apply(&self, x: &[f64], base: &SimConfig) -> SimConfig {
        SimConfig { exit_threshold: x[0], entry_rate: x[1], lambda_creative: x[2], ..base.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Mutation standard deviation as a fraction of each box width.
    pub mutation_sd: f64,
    /// Chance that each gene of a child is mutated.
    pub mutation_prob: f64,
    pub crossover_rate: f64,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub replications_per_candidate: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub d_target: f64,
    pub extinction_penalty: f64,
    /// Replications where the active human count reaches zero before this
    /// period count as extinct.
    pub extinction_horizon: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 24,
            generations: 40,
            mutation_sd: 0.1,
            mutation_prob: 1.0 / 3.0,
            crossover_rate: 0.7,
            elitism_count: 2,
            tournament_size: 3,
            replications_per_candidate: 8,
            alpha1: 1.0,
            alpha2: 1.0,
            d_target: 0.35,
            extinction_penalty: 10.0,
            extinction_horizon: 40,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::invalid("population_size", "must be >= 4"));
        }
        if self.replications_per_candidate < 1 {
            return Err(Error::invalid("replications_per_candidate", "must be >= 1"));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::invalid("elitism_count", "must be below population_size"));
        }
        if self.tournament_size < 1 {
            return Err(Error::invalid("tournament_size", "must be >= 1"));
        }
        for (name, v) in
            [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("extinction_penalty", self.extinction_penalty)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("crossover_rate", self.crossover_rate), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, "must lie in [0, 1]"));
            }
        }
        if !(self.mutation_sd.is_finite() && self.mutation_sd >= 0.0) {
            return Err(Error::invalid("mutation_sd", "must be >= 0"));
        }
        Ok(())
    }
}

/// Components behind one fitness value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessBreakdown {
    pub score: f64,
    pub mean_survival: f64,
    pub mean_final_ai_share: f64,
    pub extinct_fraction: f64,
}

/// Scores a finished set of replications.
pub fn score_runs(runs: &[TimeSeries], ga: &GaConfig) -> FitnessBreakdown {
    let n = runs.len().max(1) as f64;
    let mean_survival = runs.iter().map(|r| survivor_stats(r).survival_rate).sum::<f64>() / n;
    let mean_final_ai_share = runs.iter().map(|r| r.records.last().map_or(0.0, |x| x.ai_share)).sum::<f64>() / n;
    let extinct =
        runs.iter().filter(|r| r.records.iter().take(ga.extinction_horizon).any(|x| x.active_humans == 0)).count();
    let extinct_fraction = extinct as f64 / n;
    let score = if mean_survival == 0.0 {
        -ga.extinction_penalty
    } else {
        ga.alpha1 * mean_survival
            - ga.alpha2 * (mean_final_ai_share - ga.d_target).abs()
            - ga.extinction_penalty * extinct_fraction
    };
    FitnessBreakdown { score, mean_survival, mean_final_ai_share, extinct_fraction }
}

/// Runs `seeds` simulations of candidate `x` and scores them. A failing
/// simulation scores at the floor.
pub fn fitness(x: &[f64], space: &SearchSpace, ga: &GaConfig, base: &SimConfig, seeds: &[u64]) -> FitnessBreakdown {
    let cfg = space.apply(x, base);
    match run_replications(&cfg, seeds) {
        Ok(runs) => score_runs(&runs, ga),
        Err(_) => FitnessBreakdown {
            score: -ga.extinction_penalty,
            mean_survival: 0.0,
            mean_final_ai_share: 0.0,
            extinct_fraction: 1.0,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub sd: f64,
    pub best_ever: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_score: f64,
    pub log: Vec<GenerationStats>,
    pub evaluations: usize,
}

/// Generic GA maximizing `f` over a box. Fitness values within a generation
/// are computed through [`par::map`]; every random draw comes from the one
/// seeded stream, so the trajectory is the same in both execution modes.
pub fn optimize<F>(bounds: &[(f64, f64)], ga: &GaConfig, seed: u64, f: F) -> GaResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let mut rng = stream_rng(seed, Stream::Calibration);
    let dim = bounds.len();
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut evaluations = 0;
    let mut evaluate = |pop: &[Vec<f64>], cache: &mut HashMap<Vec<u64>, f64>| -> Vec<f64> {
        let key = |x: &Vec<f64>| x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        let mut fresh: Vec<Vec<f64>> = Vec::new();
        for x in pop {
            if !cache.contains_key(&key(x)) && !fresh.contains(x) {
                fresh.push(x.clone());
            }
        }
        evaluations += fresh.len();
        let scores = par::map(&fresh, |x| f(x));
        for (x, s) in fresh.iter().zip(scores) {
            cache.insert(key(x), s);
        }
        pop.iter().map(|x| cache[&key(x)]).collect()
    };

    let mut pop: Vec<Vec<f64>> =
        (0..ga.population_size).map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect()).collect();
    let mut scores = evaluate(&pop, &mut cache);
    let mut best_i = argmax(&scores);
    let mut best = pop[best_i].clone();
    let mut best_score = scores[best_i];
    let mut log = vec![stats(0, &scores, best_score)];

    for generation in 1..=ga.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut next: Vec<Vec<f64>> = order.iter().take(ga.elitism_count).map(|&i| pop[i].clone()).collect();
        while next.len() < ga.population_size {
            let a = tournament(&scores, ga.tournament_size, &mut rng);
            let b = tournament(&scores, ga.tournament_size, &mut rng);
            let mut child = pop[a].clone();
            if rng.random::<f64>() < ga.crossover_rate {
                for (c, &other) in child.iter_mut().zip(&pop[b]) {
                    if rng.random::<bool>() {
                        *c = other;
                    }
                }
            }
            for (c, &(lo, hi)) in child.iter_mut().zip(bounds) {
                let sd = ga.mutation_sd * (hi - lo);
                if sd > 0.0 && rng.random::<f64>() < ga.mutation_prob {
                    let step = Normal::new(0.0, sd).expect("sd checked positive").sample(&mut rng);
                    *c = (*c + step).clamp(lo, hi);
                }
            }
            debug_assert_eq!(child.len(), dim);
            next.push(child);
        }
        pop = next;
        scores = evaluate(&pop, &mut cache);
        best_i = argmax(&scores);
        if scores[best_i] > best_score {
            best_score = scores[best_i];
            best = pop[best_i].clone();
        }
        log.push(stats(generation, &scores, best_score));
    }
    GaResult { best, best_score, log, evaluations }
}

/// GA over the ABM parameter box. All candidates share one seed set drawn
/// from `seed`, so differences in score come from the parameters alone.
pub fn ga_search(space: &SearchSpace, ga: &GaConfig, base: &SimConfig, seed: u64) -> Result<GaResult> {
    space.validate()?;
    ga.validate()?;
    base.validate()?;
    let seeds = replication_seeds(seed, ga.replications_per_candidate);
    Ok(optimize(&space.bounds(), ga, seed, |x| fitness(x, space, ga, base, &seeds).score))
}

pub fn replication_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = stream_rng(seed, Stream::Calibration);
    let base = rng.next_u64();
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Fresh seeds for validating a search result, disjoint in practice from
/// [`replication_seeds`].
pub fn validation_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = stream_rng(seed, Stream::Calibration);
    rng.next_u64();
    let base = rng.next_u64();
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter().enumerate().fold(0, |b, (i, x)| if *x > xs[b] { i } else { b })
}

fn tournament<R: Rng>(scores: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..scores.len());
    for _ in 1..size {
        let c = rng.random_range(0..scores.len());
        if scores[c] > scores[best] {
            best = c;
        }
    }
    best
}

fn stats(generation: usize, scores: &[f64], best_ever: f64) -> GenerationStats {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    GenerationStats { generation, best: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max), mean, sd, best_ever }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x0: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + Send + '_ {
        move |x| -x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    }

    #[test]
    fn sphere_converges_within_one_percent_of_box() {
        let bounds = [(0.0, 1.0), (-2.0, 2.0), (10.0, 20.0)];
        let x0 = [0.31, 0.7, 13.3];
        let ga = GaConfig { generations: 30, ..GaConfig::default() };
        for seed in 0..8 {
            let r = optimize(&bounds, &ga, seed, sphere(&x0));
            for ((x, t), (lo, hi)) in r.best.iter().zip(&x0).zip(&bounds) {
                assert!((x - t).abs() <= 0.01 * (hi - lo), "seed {seed}: {x} vs {t}");
            }
        }
    }

    #[test]
    fn best_ever_is_monotone_and_candidates_stay_in_box() {
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let ga = GaConfig { generations: 15, mutation_sd: 0.5, ..GaConfig::default() };
        let r = optimize(&bounds, &ga, 3, |x| {
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            (x[0] * 17.0).sin() + x[1]
        });
        assert!(r.log.windows(2).all(|w| w[1].best_ever >= w[0].best_ever));
        assert_eq!(r.log.len(), 16);
    }

    #[test]
    fn zero_generations_returns_best_of_initial_population() {
        let ga = GaConfig { generations: 0, ..GaConfig::default() };
        let r = optimize(&[(0.0, 1.0)], &ga, 5, |x| x[0]);
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.best_score, r.log[0].best);
        assert_eq!(r.evaluations, ga.population_size);
    }

    #[test]
    fn flat_landscape_scores_zero() {
        let ga = GaConfig { generations: 3, ..GaConfig::default() };
        let r = optimize(&[(0.0, 1.0)], &ga, 5, |_| 0.0);
        assert_eq!(r.best_score, 0.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let ga = GaConfig { generations: 5, ..GaConfig::default() };
        let f = |x: &[f64]| -(x[0] - 0.2).powi(2);
        assert_eq!(optimize(&[(0.0, 1.0)], &ga, 9, f), optimize(&[(0.0, 1.0)], &ga, 9, f));
    }

    #[test]
    fn elites_are_served_from_the_cache() {
        let ga = GaConfig { generations: 4, mutation_sd: 0.0, crossover_rate: 0.0, ..GaConfig::default() };
        let r = optimize(&[(0.0, 1.0)], &ga, 1, |x| x[0]);
        // without variation every child is a copy, so nothing new is scored
        assert!(r.evaluations <= ga.population_size);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(GaConfig { population_size: 3, ..GaConfig::default() }.validate().is_err());
        assert!(GaConfig { replications_per_candidate: 0, ..GaConfig::default() }.validate().is_err());
        assert!(GaConfig { alpha1: -1.0, ..GaConfig::default() }.validate().is_err());
        let bad = SearchSpace { entry_rate: (0.1, 0.1), ..SearchSpace::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn apply_substitutes_the_three_parameters() {
        let s = SearchSpace::default();
        let c = s.apply(&[0.001, 0.02, 0.03], &SimConfig::default());
        assert_eq!((c.exit_threshold, c.entry_rate, c.lambda_creative), (0.001, 0.02, 0.03));
        assert!(s.contains(&[0.001, 0.02, 0.03]));
        assert!(!s.contains(&[0.01, 0.02, 0.03]));
    }
}

//! The generational loop: elitism, random injection, breeding, mutation
//! and periodic reset.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::ScheduleLayout;
use crate::optimizer::{
    combine_linear, crossover_split, mutate, select_parent, FitnessBackend, GaConfig, Individual,
};

/// Per-generation convergence record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStat {
    pub generation: usize,
    pub best_f_star: f64,
    pub mean_f_star: f64,
    /// F̄ of the generation's best individual.
    pub best_objective: f64,
    /// Ḡ of the generation's best individual.
    pub best_violation: f64,
}

/// Result of a GA run: the best individual ever evaluated and the
/// per-generation history.
#[derive(Debug, Clone)]
pub struct GaResult {
    pub best: Individual,
    pub history: Vec<GenerationStat>,
}

/// Evaluates every not-yet-evaluated individual in parallel. Results are
/// deterministic: the backend is a pure function and order is preserved.
pub fn evaluate_population(population: &mut [Individual], backend: &dyn FitnessBackend) -> Result<()> {
    population
        .par_iter_mut()
        .filter(|ind| ind.fitness.is_none())
        .try_for_each(|ind| {
            ind.fitness = Some(backend.evaluate(&ind.schedule)?);
            Ok(())
        })
}

/// Stable ascending sort by F*; ties keep insertion order.
fn sort_by_fitness(population: &mut [Individual]) {
    population.sort_by(|a, b| a.f_star().total_cmp(&b.f_star()));
}

/// Elite and random-injection counts, re-balanced so breeding keeps the
/// remainder and the total never exceeds the population size.
fn fraction_counts(config: &GaConfig) -> (usize, usize) {
    let n = config.n_pop;
    let n_elit = ((config.f_elit * n as f64).ceil() as usize).min(n);
    let n_rand = ((config.f_rand * n as f64).ceil() as usize).min(n - n_elit);
    (n_elit, n_rand)
}

/// Produces the next generation from an evaluated population:
/// sort by F*, carry elites unchanged, inject fresh random individuals,
/// and breed the remainder (linear combination with probability p_com,
/// single-split crossover with p_crs, direct transfer otherwise), mutating
/// every bred offspring. Newcomers are evaluated before returning.
pub fn step_generation<R: Rng + ?Sized>(
    mut population: Vec<Individual>,
    config: &GaConfig,
    layout: &ScheduleLayout,
    backend: &dyn FitnessBackend,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if population.len() != config.n_pop {
        return Err(Error::Config(format!(
            "population holds {} individuals, config expects {}",
            population.len(),
            config.n_pop
        )));
    }
    if population.iter().any(|ind| ind.fitness.is_none()) {
        return Err(Error::Config("step_generation needs a fully evaluated population".into()));
    }
    sort_by_fitness(&mut population);

    let (n_elit, n_rand) = fraction_counts(config);
    let n_breed = config.n_pop - n_elit - n_rand;

    let mut next = Vec::with_capacity(config.n_pop);
    next.extend(population[..n_elit].iter().cloned());
    for _ in 0..n_rand {
        next.push(Individual::new(layout.random_schedule(rng)));
    }
    for _ in 0..n_breed {
        let parent_a = select_parent(&population, config.p0, rng)?;
        let parent_b = select_parent(&population, config.p0, rng)?;
        let draw: f64 = rng.random();
        let offspring = if draw < config.p_com {
            combine_linear(
                &parent_a.schedule,
                &parent_b.schedule,
                layout,
                config.epsilon,
                config.shared_r_com,
                rng,
            )
        } else if draw < config.p_com + config.p_crs {
            crossover_split(&parent_a.schedule, &parent_b.schedule, layout, rng)
        } else if rng.random_bool(0.5) {
            parent_a.schedule.clone()
        } else {
            parent_b.schedule.clone()
        };
        let mutated = mutate(&offspring, layout, config.p_mut, rng);
        next.push(Individual::new(mutated));
    }

    evaluate_population(&mut next, backend)?;
    Ok(next)
}

/// Reset generation: keep the elites, re-randomize everyone else.
fn reset_generation<R: Rng + ?Sized>(
    mut population: Vec<Individual>,
    config: &GaConfig,
    layout: &ScheduleLayout,
    backend: &dyn FitnessBackend,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    sort_by_fitness(&mut population);
    let (n_elit, _) = fraction_counts(config);
    let mut next = Vec::with_capacity(config.n_pop);
    next.extend(population[..n_elit].iter().cloned());
    while next.len() < config.n_pop {
        next.push(Individual::new(layout.random_schedule(rng)));
    }
    evaluate_population(&mut next, backend)?;
    Ok(next)
}

fn stats_of(generation: usize, population: &[Individual]) -> GenerationStat {
    let best = population
        .iter()
        .min_by(|a, b| a.f_star().total_cmp(&b.f_star()))
        .expect("population is never empty");
    let report = best.fitness.as_ref().unwrap();
    GenerationStat {
        generation,
        best_f_star: report.penalized,
        mean_f_star: population.iter().map(Individual::f_star).sum::<f64>() / population.len() as f64,
        best_objective: report.objective,
        best_violation: report.violation,
    }
}

fn update_best(best: &mut Individual, population: &[Individual]) {
    for candidate in population {
        if candidate.f_star() < best.f_star() {
            *best = candidate.clone();
        }
    }
}

/// Runs the full GA: `n_gen` generations with a population reset every
/// `n_res` generations (elites retained). Returns the best-ever individual
/// and the per-generation history. Fully reproducible under the seed.
pub fn run_ga(
    layout: &ScheduleLayout,
    backend: &dyn FitnessBackend,
    config: &GaConfig,
) -> Result<GaResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut population: Vec<Individual> = (0..config.n_pop)
        .map(|_| Individual::new(layout.random_schedule(&mut rng)))
        .collect();
    evaluate_population(&mut population, backend)?;

    let mut history = Vec::with_capacity(config.n_gen);
    history.push(stats_of(0, &population));
    let mut best = population
        .iter()
        .min_by(|a, b| a.f_star().total_cmp(&b.f_star()))
        .unwrap()
        .clone();

    for generation in 1..config.n_gen {
        population = if generation % config.n_res == 0 {
            reset_generation(population, config, layout, backend, &mut rng)?
        } else {
            step_generation(population, config, layout, backend, &mut rng)?
        };
        history.push(stats_of(generation, &population));
        update_best(&mut best, &population);
    }

    Ok(GaResult { best, history })
}

/// Convergence history as CSV: generation, best F*, mean F*, best F̄, best Ḡ.
pub fn write_history_csv<W: Write>(history: &[GenerationStat], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["generation", "best_f_star", "mean_f_star", "best_objective", "best_violation"])?;
    for stat in history {
        writer.write_record(&[
            stat.generation.to_string(),
            format!("{}", stat.best_f_star),
            format!("{}", stat.mean_f_star),
            format!("{}", stat.best_objective),
            format!("{}", stat.best_violation),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

//! Modified genetic algorithm over mixed binary/real chromosomes:
//! geometric ranking selection, three reproduction operators (linear
//! combination, single-split crossover, direct transfer), uniform
//! mutation, elitism, random injection and periodic population reset.

mod backend;
mod ga;
mod operators;
mod selection;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessReport;
use crate::network::Schedule;

pub use backend::{FitnessBackend, MetaModelBackend, SimulatorBackend};
pub use ga::{
    evaluate_population, run_ga, step_generation, write_history_csv, GaResult, GenerationStat,
};
pub use operators::{combine_linear, combine_linear_with_factor, crossover_split, mutate};
pub use selection::{select_parent, select_rank, selection_probability};

/// GA parameters. Defaults follow the reference configuration:
/// 𝒫 = 1000, n_gen = 5000, n_res = 100, n_pop = 300, f_elit = 0.01,
/// f_rand = 0.10, P₀ = 0.05, P_com = 0.40, P_crs = 0.50, P_mut = 0.01.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub n_pop: usize,
    pub n_gen: usize,
    /// Reset period: every n_res generations the non-elite population is
    /// re-randomized.
    pub n_res: usize,
    /// Elite fraction carried over unchanged.
    pub f_elit: f64,
    /// Fraction re-randomized every generation.
    pub f_rand: f64,
    /// Geometric ranking parameter P₀.
    pub p0: f64,
    /// Probability of reproducing by linear combination.
    pub p_com: f64,
    /// Probability of reproducing by single-split crossover.
    pub p_crs: f64,
    /// Per-gene mutation probability.
    pub p_mut: f64,
    /// Overshoot ε of the combination factor R_com ∈ [−ε, 1+ε).
    pub epsilon: f64,
    /// Penalty factor 𝒫 of the penalized objective.
    pub penalty_factor: f64,
    pub seed: u64,
    /// One R_com per reproduction event (shared across genes) rather than
    /// one per gene.
    pub shared_r_com: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            n_pop: 300,
            n_gen: 5000,
            n_res: 100,
            f_elit: 0.01,
            f_rand: 0.10,
            p0: 0.05,
            p_com: 0.40,
            p_crs: 0.50,
            p_mut: 0.01,
            epsilon: 0.1,
            penalty_factor: 1000.0,
            seed: 0,
            shared_r_com: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pop < 1 || self.n_gen < 1 || self.n_res < 1 {
            return Err(Error::Config("n_pop, n_gen and n_res must all be at least 1".into()));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(Error::Config(format!("p0 must lie in (0, 1), got {}", self.p0)));
        }
        for (name, p) in [("p_com", self.p_com), ("p_crs", self.p_crs), ("p_mut", self.p_mut)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.p_com + self.p_crs > 1.0 {
            return Err(Error::Config(format!(
                "p_com + p_crs must not exceed 1, got {}",
                self.p_com + self.p_crs
            )));
        }
        for (name, f) in [("f_elit", self.f_elit), ("f_rand", self.f_rand)] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {f}")));
            }
        }
        if self.f_elit + self.f_rand >= 1.0 {
            return Err(Error::Config(format!(
                "f_elit + f_rand must stay below 1, got {}",
                self.f_elit + self.f_rand
            )));
        }
        if !(0.0..=0.2).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 0.2], got {}", self.epsilon)));
        }
        if !(self.penalty_factor > 0.0) {
            return Err(Error::Config(format!(
                "penalty_factor must be positive, got {}",
                self.penalty_factor
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: GaConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

/// One population member: a schedule and, once evaluated, its fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub schedule: Schedule,
    pub fitness: Option<FitnessReport>,
}

impl Individual {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            fitness: None,
        }
    }

    /// Penalized fitness F*; panics if not evaluated yet.
    pub fn f_star(&self) -> f64 {
        self.fitness.as_ref().expect("individual not evaluated").penalized
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        GaConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_fractions_are_rejected() {
        let bad = GaConfig {
            f_elit: 0.6,
            f_rand: 0.5,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());

        let bad = GaConfig {
            p_com: 0.7,
            p_crs: 0.7,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());

        let bad = GaConfig {
            epsilon: 0.5,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let config = GaConfig {
            n_pop: 100,
            n_gen: 500,
            seed: 17,
            ..GaConfig::default()
        };
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(GaConfig::from_json(&text).unwrap(), config);
        // Partial files fall back to defaults.
        let partial = GaConfig::from_json(r#"{"n_pop": 40}"#).unwrap();
        assert_eq!(partial.n_pop, 40);
        assert_eq!(partial.n_gen, GaConfig::default().n_gen);
    }
}

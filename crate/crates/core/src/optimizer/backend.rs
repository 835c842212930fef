//! Pluggable fitness backends: the meta-model (fast path used inside the
//! GA) and the direct simulator (verification path). Both expose the same
//! interface so experiments can quantify the surrogate's impact.

use crate::error::Result;
use crate::fitness::{evaluate, ConstraintSet, FitnessReport};
use crate::metamodel::{predict_eps, MetaModel};
use crate::network::{NetworkModel, Schedule};
use crate::simulator::simulate_eps;

/// Evaluates one schedule into a full fitness report. Implementations are
/// immutable and thread-safe; population evaluation fans out over them.
pub trait FitnessBackend: Sync + Send {
    fn evaluate(&self, schedule: &Schedule) -> Result<FitnessReport>;
    fn name(&self) -> &'static str;
}

/// Ground-truth fitness through the hydraulic simulator.
pub struct SimulatorBackend {
    pub model: NetworkModel,
    pub constraints: ConstraintSet,
    pub penalty_factor: f64,
}

impl SimulatorBackend {
    pub fn new(model: NetworkModel, constraints: ConstraintSet, penalty_factor: f64) -> Self {
        Self {
            model,
            constraints,
            penalty_factor,
        }
    }
}

impl FitnessBackend for SimulatorBackend {
    fn evaluate(&self, schedule: &Schedule) -> Result<FitnessReport> {
        let trajectory = simulate_eps(&self.model, schedule)?;
        evaluate(&trajectory, &self.model, &self.constraints, self.penalty_factor)
    }

    fn name(&self) -> &'static str {
        "simulator"
    }
}

/// Surrogate fitness through the trained meta-model.
pub struct MetaModelBackend {
    pub meta: MetaModel,
    pub model: NetworkModel,
    pub constraints: ConstraintSet,
    pub penalty_factor: f64,
}

impl MetaModelBackend {
    /// Fails fast on a model/meta-model pairing mismatch.
    pub fn new(
        meta: MetaModel,
        model: NetworkModel,
        constraints: ConstraintSet,
        penalty_factor: f64,
    ) -> Result<Self> {
        meta.validate_against(&model)?;
        Ok(Self {
            meta,
            model,
            constraints,
            penalty_factor,
        })
    }
}

impl FitnessBackend for MetaModelBackend {
    fn evaluate(&self, schedule: &Schedule) -> Result<FitnessReport> {
        let trajectory = predict_eps(&self.meta, &self.model, schedule)?;
        evaluate(&trajectory, &self.model, &self.constraints, self.penalty_factor)
    }

    fn name(&self) -> &'static str {
        "meta-model"
    }
}

//! Simplified extended-period hydraulic simulator.
//!
//! This is the ground-truth oracle of the pipeline: an explicit per-interval
//! mass balance over the storage tanks, with pump flow coupled to the target
//! tank's level through a head-dependence factor. It generates the surrogate
//! training data and verifies optimized schedules. It is not a hydraulic
//! engineering tool: no head-loss solver, no pressures, no water quality.

mod dataset;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{NetworkModel, Range, Schedule, ScheduleLayout};

pub use dataset::{
    dataset_file_name, generate_dataset, input_universe, input_value, load_dataset_csv, target_ids,
    write_dataset_csv, Dataset, InputKind, InputVar, TargetTable, ENERGY_TARGET,
};

/// Hydraulic state snapshot. `tank_levels` are absolute meters at the
/// snapshot time; `energy_rate` (kW) is the aggregate pump draw over the
/// interval that *ends* at this snapshot (zero for the initial state).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydraulicState {
    pub tank_levels: Vec<f64>,
    pub energy_rate: f64,
    /// Per-pump breakdown of `energy_rate`; empty when the source cannot
    /// attribute energy to pumps (meta-model predictions, initial state).
    pub per_pump_energy: Vec<f64>,
    /// Set when a tank hit a physical bound and was clamped during the step
    /// (or, for meta-model states, when an input had to be clamped).
    pub clamped: bool,
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajectorySource {
    Simulator,
    MetaModel,
}

/// Normalization context captured from the model so a trajectory can be
/// interpreted without carrying the whole model around.
#[derive(Debug, Clone, PartialEq)]
pub struct NormContext {
    pub tank_ids: Vec<String>,
    pub level_ranges: Vec<Range>,
    pub e_max: f64,
}

impl NormContext {
    pub fn of(model: &NetworkModel) -> Result<Self> {
        let level_ranges = model
            .tanks
            .iter()
            .map(|t| t.level_range())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tank_ids: model.tanks.iter().map(|t| t.id.clone()).collect(),
            level_ranges,
            e_max: model.e_max,
        })
    }
}

/// Time series of hydraulic state over the cycle: `m + 1` snapshots at the
/// interval boundaries, plus the schedule that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<HydraulicState>,
    pub schedule: Schedule,
    pub source: TrajectorySource,
    norm: NormContext,
}

impl Trajectory {
    pub fn new(
        states: Vec<HydraulicState>,
        schedule: Schedule,
        source: TrajectorySource,
        norm: NormContext,
    ) -> Self {
        Self {
            states,
            schedule,
            source,
            norm,
        }
    }

    /// Number of control intervals.
    pub fn m(&self) -> usize {
        self.states.len() - 1
    }

    pub fn n_tanks(&self) -> usize {
        self.norm.tank_ids.len()
    }

    /// Aggregate energy rate (kW) during interval `k`.
    pub fn energy_rate(&self, k: usize) -> f64 {
        self.states[k + 1].energy_rate
    }

    /// Normalized energy rate during interval `k`.
    pub fn normalized_energy_rate(&self, k: usize) -> f64 {
        self.energy_rate(k) / self.norm.e_max
    }

    /// Normalized level of tank `tank` at snapshot `k` (0..=m).
    pub fn normalized_level(&self, tank: usize, k: usize) -> f64 {
        self.norm.level_ranges[tank].normalize(self.states[k].tank_levels[tank])
    }

    /// Named normalized series for the constraint machinery:
    /// `level:<tank id>` has `m + 1` samples, `energy` has `m`.
    pub fn normalized_series(&self, variable: &str) -> Option<Vec<f64>> {
        if variable == "energy" {
            return Some((0..self.m()).map(|k| self.normalized_energy_rate(k)).collect());
        }
        let tank_id = variable.strip_prefix("level:")?;
        let tank = self.norm.tank_ids.iter().position(|id| id == tank_id)?;
        Some((0..=self.m()).map(|k| self.normalized_level(tank, k)).collect())
    }

    pub fn tank_ids(&self) -> &[String] {
        &self.norm.tank_ids
    }

    pub fn level_ranges(&self) -> &[Range] {
        &self.norm.level_ranges
    }

    /// Total pumping energy over the cycle, kWh.
    pub fn total_energy(&self, dt_hours: f64) -> f64 {
        (0..self.m()).map(|k| self.energy_rate(k) * dt_hours).sum()
    }
}

/// One explicit-Euler mass-balance step with externally supplied demand
/// multipliers. This is the physics core shared by the stepper, the
/// sub-interval replay, and the sensitivity screen.
///
/// Per tank j:
///   inflow  Q_j = Σ over pumps targeting j of status·rated_flow·(1 − α·L_j/level_max_j)
///   demand  D_j = Σ over zones sourced at j of base_demand·multiplier
///   L_j' = clamp(L_j + dt·(Q_j − D_j)/area_j, level_min_j, level_max_j)
pub fn step_raw(
    model: &NetworkModel,
    levels: &[f64],
    statuses: &[f64],
    zone_multipliers: &[f64],
    dt_hours: f64,
) -> Result<HydraulicState> {
    let n_tanks = model.tanks.len();
    let n_status = model.pumps.len() + model.valves.len();
    if levels.len() != n_tanks {
        return Err(Error::Dimension(format!(
            "{} tank levels supplied, model has {n_tanks} tanks",
            levels.len()
        )));
    }
    if statuses.len() != n_status {
        return Err(Error::Dimension(format!(
            "{} statuses supplied, model has {n_status} control elements",
            statuses.len()
        )));
    }
    if zone_multipliers.len() != model.demand_zones.len() {
        return Err(Error::Dimension(format!(
            "{} demand multipliers supplied, model has {} zones",
            zone_multipliers.len(),
            model.demand_zones.len()
        )));
    }

    let mut net_flow = vec![0.0; n_tanks];
    let mut per_pump_energy = Vec::with_capacity(model.pumps.len());
    for (p, pump) in model.pumps.iter().enumerate() {
        let status = statuses[p];
        let target = model
            .pump_target_tank(pump)
            .ok_or_else(|| Error::Config(format!("pump '{}' has an unresolvable target", pump.id)))?;
        let tank = &model.tanks[target];
        let head_factor = 1.0 - pump.head_coefficient * levels[target] / tank.level_max;
        net_flow[target] += status * pump.rated_flow * head_factor;
        per_pump_energy.push(status * pump.rated_power);
    }
    for (z, zone) in model.demand_zones.iter().enumerate() {
        let source = model
            .tank_index(&zone.source_tank)
            .ok_or_else(|| Error::Config(format!("zone '{}' has an unknown source tank", zone.id)))?;
        net_flow[source] -= zone.base_demand * zone_multipliers[z];
    }

    let mut clamped = false;
    let mut next_levels = Vec::with_capacity(n_tanks);
    for (j, tank) in model.tanks.iter().enumerate() {
        let unclamped = levels[j] + dt_hours * net_flow[j] / tank.area;
        let level = unclamped.clamp(tank.level_min, tank.level_max);
        if level != unclamped {
            clamped = true;
        }
        next_levels.push(level);
    }

    let energy_rate = per_pump_energy.iter().sum();
    Ok(HydraulicState {
        tank_levels: next_levels,
        energy_rate,
        per_pump_energy,
        clamped,
    })
}

/// Advances the system from the levels at `t_k` to `t_{k+1}` under the
/// status column `statuses`, reading demand patterns at interval `k`.
pub fn simulate_step(
    model: &NetworkModel,
    levels: &[f64],
    statuses: &[f64],
    k: usize,
) -> Result<HydraulicState> {
    if k >= model.horizon.m {
        return Err(Error::Dimension(format!(
            "interval index {k} outside horizon of {} intervals",
            model.horizon.m
        )));
    }
    let multipliers: Vec<f64> = model.demand_zones.iter().map(|z| z.pattern[k]).collect();
    step_raw(model, levels, statuses, &multipliers, model.horizon.dt)
}

/// Extended-period simulation: chains [`simulate_step`] over the whole
/// horizon from the schedule's initial levels. Pure function of its inputs.
pub fn simulate_eps(model: &NetworkModel, schedule: &Schedule) -> Result<Trajectory> {
    simulate_eps_refined(model, schedule, 1)
}

/// Extended-period simulation integrating each control interval in
/// `substeps` equal Euler sub-steps (statuses and demand held constant
/// within the interval). Snapshots are still recorded only at interval
/// boundaries, so constraint evaluation is unchanged; finer sub-steps only
/// sharpen the level integration. `substeps = 1` is the control-resolution
/// simulation used everywhere except post-optimization verification.
pub fn simulate_eps_refined(
    model: &NetworkModel,
    schedule: &Schedule,
    substeps: usize,
) -> Result<Trajectory> {
    if substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".into()));
    }
    let layout = ScheduleLayout::of(model);
    schedule.validate(&layout)?;
    let norm = NormContext::of(model)?;

    let initial = schedule.initial_levels_physical(model, &layout)?;
    let mut states = Vec::with_capacity(model.horizon.m + 1);
    states.push(HydraulicState {
        tank_levels: initial,
        energy_rate: 0.0,
        per_pump_energy: Vec::new(),
        clamped: false,
    });

    let sub_dt = model.horizon.dt / substeps as f64;
    for k in 0..model.horizon.m {
        let statuses = schedule.statuses.column(k);
        let multipliers: Vec<f64> = model.demand_zones.iter().map(|z| z.pattern[k]).collect();
        let mut levels = states.last().unwrap().tank_levels.clone();
        let mut clamped = false;
        let mut energy_rate = 0.0;
        let mut per_pump_energy = Vec::new();
        for _ in 0..substeps {
            let state = step_raw(model, &levels, &statuses, &multipliers, sub_dt)?;
            levels = state.tank_levels;
            clamped |= state.clamped;
            energy_rate = state.energy_rate;
            per_pump_energy = state.per_pump_energy;
        }
        states.push(HydraulicState {
            tank_levels: levels,
            energy_rate,
            per_pump_energy,
            clamped,
        });
    }

    Ok(Trajectory::new(states, schedule.clone(), TrajectorySource::Simulator, norm))
}

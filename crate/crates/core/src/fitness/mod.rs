//! Normalized objective, aggregated constraint violation and penalized
//! fitness for a trajectory.
//!
//! The objective is the tariff-weighted mean of the normalized energy rate
//! over the cycle. Violations come in three classes: per-interval bounds on
//! normalized state variables, end-of-cycle periodicity of selected
//! variables, and per-pump switch limits. Each inequality in standard form
//! g(·) ≤ 0 contributes its positive part, so the total is zero exactly
//! when every active constraint holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NetworkModel, Schedule, ScheduleLayout};
use crate::simulator::Trajectory;

/// Positive part of a standard-form constraint residual: max(0, g).
#[inline]
pub fn bracket(g: f64) -> f64 {
    g.max(0.0)
}

/// Number of on/off transitions along one status row; "on" means a status
/// strictly above zero (a fractional status ran the pump during the
/// interval). No wrap-around to the first interval.
pub fn count_switches(status_row: &[f64]) -> u32 {
    status_row
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count() as u32
}

/// Per-interval bounds on one normalized state variable
/// (`level:<tank id>` or `energy`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBound {
    pub variable: String,
    /// Normalized lower bound per interval, length m; omit for none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    /// Normalized upper bound per interval, length m; omit for none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}

/// End-of-cycle periodicity requirement on one normalized state variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityBound {
    pub variable: String,
    /// Normalized tolerance on |s̄(t_m) − s̄(t_0)|.
    pub tolerance: f64,
}

/// Switch budget for one pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchLimit {
    pub pump: String,
    /// Status-matrix row carrying this pump (resolved against the model).
    pub row: usize,
    pub max_switches: u32,
}

/// The active constraints of a run. Absent entries carry weight zero, per
/// the convention that unconstrained variables simply do not contribute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default)]
    pub time_bounds: Vec<TimeBound>,
    #[serde(default)]
    pub periodicity: Vec<PeriodicityBound>,
    #[serde(default)]
    pub switch_limits: Vec<SwitchLimit>,
}

impl ConstraintSet {
    /// No constraints at all; the penalized fitness then equals the
    /// objective.
    pub fn none() -> Self {
        Self::default()
    }

    /// Derives the constraint set encoded on the model itself: tank level
    /// bounds (emergency reserve, overtopping margin, morning windows),
    /// level periodicity tolerances, and pump switch budgets.
    pub fn from_model(model: &NetworkModel) -> Result<Self> {
        let m = model.horizon.m;
        let mut time_bounds = Vec::new();
        let mut periodicity = Vec::new();
        for tank in &model.tanks {
            let variable = format!("level:{}", tank.id);
            let mut lower: Option<Vec<f64>> = None;
            if tank.emergency_min.is_some() || tank.morning_min.is_some() {
                let base = tank.emergency_min.unwrap_or(0.0);
                let mut bound = vec![base; m];
                if let Some(morning) = &tank.morning_min {
                    for (k, b) in bound.iter_mut().enumerate() {
                        let hour = model.horizon.clock_hour(k);
                        if hour >= morning.start_hour && hour < morning.end_hour {
                            *b = b.max(morning.fraction);
                        }
                    }
                }
                lower = Some(bound);
            }
            let upper = tank.overtop_max.map(|o| vec![o; m]);
            if lower.is_some() || upper.is_some() {
                time_bounds.push(TimeBound {
                    variable: variable.clone(),
                    lower,
                    upper,
                });
            }
            if let Some(tol) = tank.periodicity_tol {
                let range = tank.level_range()?;
                periodicity.push(PeriodicityBound {
                    variable,
                    tolerance: tol / range.span(),
                });
            }
        }
        let layout = ScheduleLayout::of(model);
        let switch_limits = model
            .pumps
            .iter()
            .map(|p| {
                let row = layout
                    .status_row(&p.id)
                    .ok_or_else(|| Error::Config(format!("pump '{}' has no status row", p.id)))?;
                Ok(SwitchLimit {
                    pump: p.id.clone(),
                    row,
                    max_switches: p.max_switches,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            time_bounds,
            periodicity,
            switch_limits,
        })
    }

    /// Checks shapes and variable references against a model.
    pub fn validate(&self, model: &NetworkModel) -> Result<()> {
        let m = model.horizon.m;
        let layout = ScheduleLayout::of(model);
        let known = |variable: &str| {
            variable == "energy"
                || variable
                    .strip_prefix("level:")
                    .is_some_and(|id| model.tank_index(id).is_some())
        };
        for bound in &self.time_bounds {
            if !known(&bound.variable) {
                return Err(Error::Config(format!(
                    "time bound on unknown variable '{}'",
                    bound.variable
                )));
            }
            for (name, series) in [("lower", &bound.lower), ("upper", &bound.upper)] {
                if let Some(series) = series {
                    if series.len() != m {
                        return Err(Error::Config(format!(
                            "{name} bound on '{}' has {} entries, horizon has {m}",
                            bound.variable,
                            series.len()
                        )));
                    }
                }
            }
            if let (Some(lower), Some(upper)) = (&bound.lower, &bound.upper) {
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(Error::Config(format!(
                        "bounds on '{}' cross (lower above upper)",
                        bound.variable
                    )));
                }
            }
        }
        for p in &self.periodicity {
            if !known(&p.variable) {
                return Err(Error::Config(format!(
                    "periodicity bound on unknown variable '{}'",
                    p.variable
                )));
            }
            if !(p.tolerance >= 0.0) {
                return Err(Error::Config(format!(
                    "periodicity tolerance on '{}' must be non-negative",
                    p.variable
                )));
            }
        }
        for limit in &self.switch_limits {
            match layout.status_row(&limit.pump) {
                Some(row) if row == limit.row => {}
                Some(row) => {
                    return Err(Error::Config(format!(
                        "switch limit for '{}' names row {}, model places it at {row}",
                        limit.pump, limit.row
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "switch limit for unknown pump '{}'",
                        limit.pump
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str, model: &NetworkModel) -> Result<Self> {
        let set: ConstraintSet = serde_json::from_str(text)?;
        set.validate(model)?;
        Ok(set)
    }
}

/// Which constraint class a contribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    TimeBound,
    Periodicity,
    Switches,
}

/// One itemized violation term (already weighted exactly as it enters Ḡ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintContribution {
    pub kind: ConstraintKind,
    pub variable: String,
    pub amount: f64,
}

/// Violation total with its itemized breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub total: f64,
    pub items: Vec<ConstraintContribution>,
}

/// Switch count of one pump over the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSwitches {
    pub pump: String,
    pub count: u32,
}

/// Full fitness evaluation of one candidate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    /// Normalized energy cost F̄ in [0, 1].
    pub objective: f64,
    /// Aggregated violation Ḡ ≥ 0.
    pub violation: f64,
    /// Penalized fitness F* = F̄ + 𝒫·Ḡ.
    pub penalized: f64,
    pub per_constraint: Vec<ConstraintContribution>,
    pub switches: Vec<PumpSwitches>,
}

/// Normalized energy cost of a trajectory:
/// F̄ = (1/m) Σ_k C̄(t_k)·Ē_tot(t_k).
pub fn objective(trajectory: &Trajectory, model: &NetworkModel) -> f64 {
    let m = trajectory.m();
    let sum: f64 = (0..m)
        .map(|k| model.normalized_tariff(k) * trajectory.normalized_energy_rate(k))
        .sum();
    sum / m as f64
}

/// Aggregated violation of a trajectory/schedule pair:
///   Ḡ = Σ_i (1/m)·Σ_k [⟨s̄_i(t_k) − s̄_max,i(t_k)⟩ + ⟨s̄_min,i(t_k) − s̄_i(t_k)⟩]
///     + Σ_j ⟨|Δs̄_j| − Δs̄_max,j⟩ + Σ_p ⟨η_p − η_max,p⟩
/// with ⟨g⟩ = max(0, g) and sums running over the constrained variables.
pub fn violation(
    trajectory: &Trajectory,
    schedule: &Schedule,
    constraints: &ConstraintSet,
) -> Result<ViolationReport> {
    let m = trajectory.m();
    let mut items = Vec::new();

    for bound in &constraints.time_bounds {
        let series = trajectory.normalized_series(&bound.variable).ok_or_else(|| {
            Error::Config(format!(
                "trajectory has no series for constrained variable '{}'",
                bound.variable
            ))
        })?;
        if series.len() < m {
            return Err(Error::Dimension(format!(
                "series '{}' has {} samples, horizon has {m}",
                bound.variable,
                series.len()
            )));
        }
        let mut sum = 0.0;
        for k in 0..m {
            if let Some(upper) = &bound.upper {
                sum += bracket(series[k] - upper[k]);
            }
            if let Some(lower) = &bound.lower {
                sum += bracket(lower[k] - series[k]);
            }
        }
        items.push(ConstraintContribution {
            kind: ConstraintKind::TimeBound,
            variable: bound.variable.clone(),
            amount: sum / m as f64,
        });
    }

    for periodic in &constraints.periodicity {
        let series = trajectory.normalized_series(&periodic.variable).ok_or_else(|| {
            Error::Config(format!(
                "trajectory has no series for periodic variable '{}'",
                periodic.variable
            ))
        })?;
        let delta = (series[series.len() - 1] - series[0]).abs();
        items.push(ConstraintContribution {
            kind: ConstraintKind::Periodicity,
            variable: periodic.variable.clone(),
            amount: bracket(delta - periodic.tolerance),
        });
    }

    for limit in &constraints.switch_limits {
        if limit.row >= schedule.statuses.rows() {
            return Err(Error::Dimension(format!(
                "switch limit for '{}' names row {} of a {}-row status matrix",
                limit.pump,
                limit.row,
                schedule.statuses.rows()
            )));
        }
        let count = count_switches(schedule.statuses.row(limit.row));
        items.push(ConstraintContribution {
            kind: ConstraintKind::Switches,
            variable: limit.pump.clone(),
            amount: bracket(count as f64 - limit.max_switches as f64),
        });
    }

    let total = items.iter().map(|i| i.amount).sum();
    Ok(ViolationReport { total, items })
}

/// Additive penalty: F* = F̄ + 𝒫·Ḡ.
#[inline]
pub fn penalized_fitness(objective: f64, violation: f64, penalty_factor: f64) -> f64 {
    objective + penalty_factor * violation
}

/// Per-pump switch counts of a schedule, in pump order.
pub fn pump_switch_counts(schedule: &Schedule, model: &NetworkModel) -> Vec<PumpSwitches> {
    let layout = ScheduleLayout::of(model);
    model
        .pumps
        .iter()
        .map(|p| {
            let row = layout.status_row(&p.id).expect("pumps always own a status row");
            PumpSwitches {
                pump: p.id.clone(),
                count: count_switches(schedule.statuses.row(row)),
            }
        })
        .collect()
}

/// Evaluates objective, violation and penalized fitness in one report.
pub fn evaluate(
    trajectory: &Trajectory,
    model: &NetworkModel,
    constraints: &ConstraintSet,
    penalty_factor: f64,
) -> Result<FitnessReport> {
    let objective = objective(trajectory, model);
    let report = violation(trajectory, &trajectory.schedule, constraints)?;
    let penalized = penalized_fitness(objective, report.total, penalty_factor);
    Ok(FitnessReport {
        objective,
        violation: report.total,
        penalized,
        per_constraint: report.items,
        switches: pump_switch_counts(&trajectory.schedule, model),
    })
}

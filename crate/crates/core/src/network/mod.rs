//! Domain types for the water system, the decision variables and the
//! normalization layer shared by every other module.
//!
//! A [`NetworkModel`] is a static description of tanks, pumps (and
//! optionally valves), demand zones, and the tariff/demand patterns over a
//! control horizon of `m` intervals of `dt` hours. All state variables are
//! mapped to `[0, 1]` with the linear transform in [`normalize`]; physical
//! min/max ranges live on the specs themselves.

mod schedule;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use schedule::{ControlElement, Schedule, ScheduleLayout};

/// Linear map of `value` from `[min, max]` onto `[0, 1]`.
pub fn normalize(value: f64, min: f64, max: f64) -> Result<f64> {
    if !(max > min) {
        return Err(Error::Config(format!(
            "cannot normalize over the degenerate range [{min}, {max}]"
        )));
    }
    Ok((value - min) / (max - min))
}

/// Inverse of [`normalize`].
pub fn denormalize(unit: f64, min: f64, max: f64) -> Result<f64> {
    if !(max > min) {
        return Err(Error::Config(format!(
            "cannot denormalize over the degenerate range [{min}, {max}]"
        )));
    }
    Ok(min + unit * (max - min))
}

/// A validated `[min, max]` range with `max > min`; the infallible fast
/// path used by the simulator and fitness loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(max > min) {
            return Err(Error::Config(format!("invalid range [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn normalize(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn denormalize(&self, unit: f64) -> f64 {
        self.min + unit * (self.max - self.min)
    }

    #[inline]
    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    #[inline]
    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

/// Control horizon: `m` intervals of `dt` hours starting at clock hour `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Clock hour of the first interval (presentation only; constraints and
    /// patterns are indexed by interval).
    pub t0: f64,
    /// Number of control intervals.
    pub m: usize,
    /// Hours per interval.
    pub dt: f64,
}

impl Horizon {
    /// Clock hour at the start of interval `k`, wrapped to [0, 24).
    pub fn clock_hour(&self, k: usize) -> f64 {
        (self.t0 + k as f64 * self.dt).rem_euclid(24.0)
    }
}

/// Lower bound on storage during a clock-hour window (e.g. a morning
/// reserve); outside the window no bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorningMin {
    /// Required fraction of capacity while the window is active.
    pub fraction: f64,
    /// Window start, clock hours in [0, 24).
    pub start_hour: f64,
    /// Window end (exclusive), clock hours in (start_hour, 24].
    pub end_hour: f64,
}

/// Storage tank. Levels are absolute meters; constraint fields are
/// fractions of the `[level_min, level_max]` working range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TankSpec {
    pub id: String,
    /// Cross-section area, m².
    pub area: f64,
    /// Physical floor, m.
    pub level_min: f64,
    /// Physical ceiling, m.
    pub level_max: f64,
    /// Emergency reserve as a fraction of capacity; omit to leave the lower
    /// level unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emergency_min: Option<f64>,
    /// Overtopping margin as a fraction of capacity; omit to leave the
    /// upper level unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overtop_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morning_min: Option<MorningMin>,
    /// End-of-cycle tolerance on the level returning to its initial value,
    /// meters; omit to skip the periodicity requirement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodicity_tol: Option<f64>,
    /// Operating level used when initial levels are not optimized, meters.
    /// When set, the tank is excluded from the decision vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_level_fixed: Option<f64>,
}

impl TankSpec {
    pub fn level_range(&self) -> Result<Range> {
        Range::new(self.level_min, self.level_max)
    }
}

/// Constant-speed (or, with `variable_speed`, settable) pump filling a tank
/// either directly or through a demand zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub id: String,
    /// kW drawn while running.
    pub rated_power: f64,
    /// m³/h delivered at an empty target tank.
    pub rated_flow: f64,
    /// Id of the tank this pump fills, or of a demand zone (the pump then
    /// feeds the zone's source tank).
    pub target_tank: String,
    /// Head-dependence factor α in [0, 1): delivered flow scales with
    /// (1 − α·L/L_max) of the target tank.
    pub head_coefficient: f64,
    /// Maximum allowed on/off transitions per cycle.
    pub max_switches: u32,
    /// Restrict this pump's status genes to {0, 1}.
    pub binary_status: bool,
    /// Adds a speed-setting row to the decision variables. No hydraulic
    /// effect in this simulator; carried for the chromosome layout.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub variable_speed: bool,
}

/// Valve control element. Valves contribute status (and optionally
/// setting) rows to the decision variables but have no effect in the
/// bundled simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValveSpec {
    pub id: String,
    pub binary_status: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub has_setting: bool,
}

/// Consumer demand drawing from one tank, shaped by a per-interval pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandZoneSpec {
    pub id: String,
    pub source_tank: String,
    /// m³/h at pattern multiplier 1.
    pub base_demand: f64,
    /// Non-negative multipliers, one per control interval.
    pub pattern: Vec<f64>,
}

impl DemandZoneSpec {
    /// Demand in m³/h during interval `k`.
    pub fn demand(&self, k: usize) -> f64 {
        self.base_demand * self.pattern[k]
    }

    pub fn pattern_max(&self) -> f64 {
        self.pattern.iter().copied().fold(0.0, f64::max)
    }
}

/// Static description of the water system and the scales used for
/// normalization. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub tanks: Vec<TankSpec>,
    pub pumps: Vec<PumpSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub valves: Vec<ValveSpec>,
    pub demand_zones: Vec<DemandZoneSpec>,
    /// Cost per energy, one entry per control interval.
    pub tariff_pattern: Vec<f64>,
    pub horizon: Horizon,
    /// Energy-rate scale, kW; at least the total rated power so the
    /// normalized energy rate stays within [0, 1].
    pub e_max: f64,
    /// Tariff scale; must equal the tariff pattern's maximum.
    pub c_max: f64,
}

/// One broken model invariant, with a path to the offending field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelViolation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl NetworkModel {
    pub fn m(&self) -> usize {
        self.horizon.m
    }

    pub fn dt(&self) -> f64 {
        self.horizon.dt
    }

    pub fn tank_index(&self, id: &str) -> Option<usize> {
        self.tanks.iter().position(|t| t.id == id)
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.demand_zones.iter().position(|z| z.id == id)
    }

    /// Index of the tank a pump ultimately fills (resolving zone targets
    /// through the zone's source tank).
    pub fn pump_target_tank(&self, pump: &PumpSpec) -> Option<usize> {
        self.tank_index(&pump.target_tank).or_else(|| {
            self.demand_zones
                .iter()
                .find(|z| z.id == pump.target_tank)
                .and_then(|z| self.tank_index(&z.source_tank))
        })
    }

    /// Normalized tariff C̄(t_k) = C(t_k)/C_max.
    pub fn normalized_tariff(&self, k: usize) -> f64 {
        self.tariff_pattern[k] / self.c_max
    }

    /// Checks every structural invariant; returns one entry per breach.
    pub fn validate(&self) -> Vec<ModelViolation> {
        let mut out = Vec::new();
        let mut push = |path: &str, message: String| {
            out.push(ModelViolation {
                path: path.to_string(),
                message,
            });
        };

        let m = self.horizon.m;
        if m < 1 {
            push("horizon.m", "interval count must be at least 1".into());
        }
        if !(self.horizon.dt > 0.0) {
            push("horizon.dt", format!("interval length must be positive, got {}", self.horizon.dt));
        }
        if self.tariff_pattern.len() != m {
            push(
                "tariff_pattern",
                format!("expected {} entries (one per interval), got {}", m, self.tariff_pattern.len()),
            );
        }
        if let Some(c) = self.tariff_pattern.iter().find(|c| !(**c >= 0.0)) {
            push("tariff_pattern", format!("tariff values must be non-negative, got {c}"));
        }

        let tariff_max = self.tariff_pattern.iter().copied().fold(f64::NAN, f64::max);
        if !(self.c_max > 0.0) {
            push("c_max", format!("tariff scale must be positive, got {}", self.c_max));
        } else if !self.tariff_pattern.is_empty() && self.c_max != tariff_max {
            push(
                "c_max",
                format!("must equal the tariff pattern maximum {tariff_max}, got {}", self.c_max),
            );
        }

        let total_power: f64 = self.pumps.iter().map(|p| p.rated_power).sum();
        if !(self.e_max > 0.0) {
            push("e_max", format!("energy scale must be positive, got {}", self.e_max));
        } else if self.e_max < total_power {
            push(
                "e_max",
                format!(
                    "must cover the {total_power} kW that all pumps can draw simultaneously, got {}",
                    self.e_max
                ),
            );
        }

        let mut seen = std::collections::HashSet::new();
        for (section, ids) in [
            ("tanks", self.tanks.iter().map(|t| &t.id).collect::<Vec<_>>()),
            ("pumps", self.pumps.iter().map(|p| &p.id).collect()),
            ("valves", self.valves.iter().map(|v| &v.id).collect()),
            ("demand_zones", self.demand_zones.iter().map(|z| &z.id).collect()),
        ] {
            for id in ids {
                if !seen.insert(id.clone()) {
                    push(section, format!("duplicate element id '{id}'"));
                }
            }
        }

        for (i, tank) in self.tanks.iter().enumerate() {
            let path = format!("tanks[{i}] ({})", tank.id);
            if !(tank.area > 0.0) {
                push(&path, format!("area must be positive, got {}", tank.area));
            }
            if !(tank.level_min < tank.level_max) {
                push(
                    &path,
                    format!("level_min {} must be below level_max {}", tank.level_min, tank.level_max),
                );
            }
            if let Some(e) = tank.emergency_min {
                if !(0.0..=1.0).contains(&e) {
                    push(&path, format!("emergency_min must be a fraction in [0, 1], got {e}"));
                }
            }
            if let Some(o) = tank.overtop_max {
                if !(0.0..=1.0).contains(&o) {
                    push(&path, format!("overtop_max must be a fraction in [0, 1], got {o}"));
                }
            }
            if let (Some(e), Some(o)) = (tank.emergency_min, tank.overtop_max) {
                if !(e < o) {
                    push(&path, format!("emergency_min {e} must be below overtop_max {o}"));
                }
            }
            if let Some(morning) = &tank.morning_min {
                if !(0.0..=1.0).contains(&morning.fraction) {
                    push(&path, format!("morning_min.fraction must be in [0, 1], got {}", morning.fraction));
                }
                if !(morning.start_hour < morning.end_hour)
                    || !(0.0..24.0).contains(&morning.start_hour)
                    || !(morning.end_hour <= 24.0)
                {
                    push(
                        &path,
                        format!(
                            "morning_min window [{}, {}) is not a valid clock-hour range",
                            morning.start_hour, morning.end_hour
                        ),
                    );
                }
            }
            if let Some(tol) = tank.periodicity_tol {
                if !(tol >= 0.0) {
                    push(&path, format!("periodicity_tol must be non-negative, got {tol}"));
                }
            }
            if let Some(init) = tank.initial_level_fixed {
                if init < tank.level_min || init > tank.level_max {
                    push(
                        &path,
                        format!(
                            "initial_level_fixed {init} is outside [{}, {}]",
                            tank.level_min, tank.level_max
                        ),
                    );
                }
            }
        }

        for (i, pump) in self.pumps.iter().enumerate() {
            let path = format!("pumps[{i}] ({})", pump.id);
            if !(pump.rated_power > 0.0) {
                push(&path, format!("rated_power must be positive, got {}", pump.rated_power));
            }
            if !(pump.rated_flow > 0.0) {
                push(&path, format!("rated_flow must be positive, got {}", pump.rated_flow));
            }
            if !(0.0..1.0).contains(&pump.head_coefficient) {
                push(&path, format!("head_coefficient must be in [0, 1), got {}", pump.head_coefficient));
            }
            if self.pump_target_tank(pump).is_none() {
                push(
                    &path,
                    format!("target_tank '{}' matches no tank or demand zone", pump.target_tank),
                );
            }
        }

        for (i, zone) in self.demand_zones.iter().enumerate() {
            let path = format!("demand_zones[{i}] ({})", zone.id);
            if self.tank_index(&zone.source_tank).is_none() {
                push(&path, format!("source_tank '{}' matches no tank", zone.source_tank));
            }
            if !(zone.base_demand >= 0.0) {
                push(&path, format!("base_demand must be non-negative, got {}", zone.base_demand));
            }
            if zone.pattern.len() != m {
                push(
                    &path,
                    format!("pattern must have {} entries (one per interval), got {}", m, zone.pattern.len()),
                );
            }
            if let Some(p) = zone.pattern.iter().find(|p| !(**p >= 0.0)) {
                push(&path, format!("pattern multipliers must be non-negative, got {p}"));
            }
        }

        out
    }

    /// Validates and wraps the first breach into an error; convenience for
    /// call sites that need a checked model.
    pub fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::Config(format!(
                "model has {} invariant violation(s); first: {}",
                violations.len(),
                violations[0]
            )))
        }
    }

    /// Copy with every tank's initial level freed for optimization
    /// (concurrent scheduling and storage optimization).
    pub fn with_all_tanks_free(&self) -> Self {
        let mut model = self.clone();
        for tank in &mut model.tanks {
            tank.initial_level_fixed = None;
        }
        model
    }

    /// Copy with every tank pinned to its operating level; errors if a tank
    /// has no `initial_level_fixed` to pin to.
    pub fn with_all_tanks_fixed(&self) -> Result<Self> {
        for tank in &self.tanks {
            if tank.initial_level_fixed.is_none() {
                return Err(Error::Config(format!(
                    "tank '{}' has no initial_level_fixed; schedule-only mode needs one per tank",
                    tank.id
                )));
            }
        }
        Ok(self.clone())
    }

    /// Content hash tying a trained meta-model to the system it was trained
    /// against. Covers everything that shapes the dynamics; the
    /// initial-level policy is excluded so one meta-model serves both
    /// optimization modes.
    pub fn fingerprint(&self) -> String {
        let canonical = self.with_all_tanks_free();
        let bytes = serde_json::to_vec(&canonical).expect("model serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        hex::encode(digest)
    }

    /// Loads and validates a model from its JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: NetworkModel = serde_json::from_str(text)?;
        model.validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;

    #[test]
    fn normalize_matches_hand_values() {
        assert_eq!(normalize(2.0, 0.0, 4.0).unwrap(), 0.5);
        assert_eq!(normalize(3.0, 3.0, 9.0).unwrap(), 0.0);
        assert_eq!(normalize(0.73, 0.0, 1.0).unwrap(), 0.73);
    }

    #[test]
    fn normalize_rejects_degenerate_range() {
        assert!(normalize(1.0, 2.0, 2.0).is_err());
        assert!(normalize(1.0, 3.0, 2.0).is_err());
        assert!(denormalize(0.5, 2.0, 2.0).is_err());
    }

    #[test]
    fn valid_model_has_no_violations() {
        assert_eq!(scenario::toy_model().validate(), vec![]);
    }

    #[test]
    fn degenerate_tank_range_is_reported_with_its_id() {
        let mut model = scenario::toy_model();
        let pinned = model.tanks[1].initial_level_fixed.unwrap();
        model.tanks[1].level_min = pinned;
        model.tanks[1].level_max = pinned;
        let violations = model.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].path.contains(&model.tanks[1].id));
        assert!(violations[0].message.contains("level_min"));
    }

    #[test]
    fn unknown_pump_target_is_reported_with_its_id() {
        let mut model = scenario::toy_model();
        model.pumps[0].target_tank = "nowhere".into();
        let violations = model.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].path.contains(&model.pumps[0].id));
    }

    #[test]
    fn pump_may_target_a_demand_zone() {
        let mut model = scenario::toy_model();
        let zone = model.demand_zones[0].id.clone();
        let source = model.demand_zones[0].source_tank.clone();
        model.pumps[0].target_tank = zone;
        assert_eq!(model.validate(), vec![]);
        let resolved = model.pump_target_tank(&model.pumps[0]).unwrap();
        assert_eq!(model.tanks[resolved].id, source);
    }

    #[test]
    fn fingerprint_ignores_initial_level_policy() {
        let model = scenario::toy_model();
        let freed = model.with_all_tanks_free();
        assert_eq!(model.fingerprint(), freed.fingerprint());

        let mut other = model.clone();
        other.pumps[0].rated_flow += 1.0;
        assert_ne!(model.fingerprint(), other.fingerprint());
    }

    #[test]
    fn json_round_trip_preserves_model() {
        let model = scenario::toy_model();
        let text = model.to_json();
        let back = NetworkModel::from_json(&text).unwrap();
        assert_eq!(model, back);
    }
}

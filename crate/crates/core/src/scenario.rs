//! Bundled scenarios: the toy three-tank system shipped with the CLI and
//! the small, exhaustively enumerable instances used for oracle checks.

use crate::error::Result;
use crate::network::{
    DemandZoneSpec, Horizon, NetworkModel, PumpSpec, Schedule, ScheduleLayout, TankSpec, ValveSpec,
};

fn two_band_pattern(m: usize, split: usize, low: f64, high: f64) -> Vec<f64> {
    (0..m).map(|k| if k < split { low } else { high }).collect()
}

/// The bundled toy scenario: three tanks, three constant-speed pumps, two
/// demand zones over a 24 h horizon with a two-band tariff (off-peak at
/// half the peak rate during hours 0–7).
///
/// Layout: `reservoir_a` is served by an efficient and a less efficient
/// pump and carries the city demand; `reservoir_b` has one pump and an
/// industrial demand; `reservoir_c` is isolated (no pump, no demand) and
/// only participates through its initial-level decision. Constraints
/// mirror the reference setup: levels within 30–95 % of capacity,
/// periodicity within 10 cm, at most 4 switches per pump per day. The
/// fixed initial levels are chosen so the always-on schedule is feasible.
pub fn toy_model() -> NetworkModel {
    let m = 24;
    NetworkModel {
        tanks: vec![
            TankSpec {
                id: "reservoir_a".into(),
                area: 260.0,
                level_min: 0.0,
                level_max: 5.0,
                emergency_min: Some(0.30),
                overtop_max: Some(0.95),
                morning_min: None,
                periodicity_tol: Some(0.10),
                initial_level_fixed: Some(3.77),
            },
            TankSpec {
                id: "reservoir_b".into(),
                area: 170.0,
                level_min: 0.0,
                level_max: 4.0,
                emergency_min: Some(0.30),
                overtop_max: Some(0.95),
                morning_min: None,
                periodicity_tol: Some(0.10),
                initial_level_fixed: Some(2.97),
            },
            TankSpec {
                id: "reservoir_c".into(),
                area: 45.0,
                level_min: 0.0,
                level_max: 3.0,
                emergency_min: Some(0.30),
                overtop_max: Some(0.95),
                morning_min: None,
                periodicity_tol: Some(0.10),
                initial_level_fixed: Some(1.5),
            },
        ],
        pumps: vec![
            PumpSpec {
                id: "pump_a1".into(),
                rated_power: 10.0,
                rated_flow: 40.0,
                target_tank: "reservoir_a".into(),
                head_coefficient: 0.2,
                max_switches: 4,
                binary_status: true,
                variable_speed: false,
            },
            PumpSpec {
                id: "pump_a2".into(),
                rated_power: 12.0,
                rated_flow: 20.0,
                target_tank: "reservoir_a".into(),
                head_coefficient: 0.2,
                max_switches: 4,
                binary_status: true,
                variable_speed: false,
            },
            PumpSpec {
                id: "pump_b".into(),
                rated_power: 14.0,
                rated_flow: 35.0,
                target_tank: "reservoir_b".into(),
                head_coefficient: 0.2,
                max_switches: 4,
                binary_status: true,
                variable_speed: false,
            },
        ],
        valves: vec![],
        demand_zones: vec![
            DemandZoneSpec {
                id: "zone_city".into(),
                source_tank: "reservoir_a".into(),
                base_demand: 50.5,
                pattern: two_band_pattern(m, 8, 0.75, 1.125),
            },
            DemandZoneSpec {
                id: "zone_works".into(),
                source_tank: "reservoir_b".into(),
                base_demand: 29.5,
                pattern: two_band_pattern(m, 8, 0.75, 1.125),
            },
        ],
        tariff_pattern: two_band_pattern(m, 8, 0.10, 0.20),
        horizon: Horizon { t0: 0.0, m, dt: 1.0 },
        e_max: 36.0,
        c_max: 0.20,
    }
}

/// Everything-on reference schedule: all statuses 1, free initial levels
/// taken from the model's fixed operating levels.
pub fn always_on_schedule(model: &NetworkModel) -> Result<Schedule> {
    let layout = ScheduleLayout::of(model);
    let initial = layout
        .free_tanks
        .iter()
        .map(|&j| {
            let tank = &model.tanks[j];
            let level = tank.initial_level_fixed.ok_or_else(|| {
                crate::error::Error::Config(format!(
                    "tank '{}' has no operating level for the always-on reference",
                    tank.id
                ))
            })?;
            Ok(tank.level_range()?.normalize(level))
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::always_on(&layout, initial)
}

/// One binary pump over four intervals: 16 enumerable schedules. The tank
/// is large enough that nothing clamps, so the cost landscape is the pure
/// tariff-weighted energy.
pub fn one_pump_instance() -> NetworkModel {
    let m = 4;
    NetworkModel {
        tanks: vec![TankSpec {
            id: "tank".into(),
            area: 500.0,
            level_min: 0.0,
            level_max: 6.0,
            emergency_min: None,
            overtop_max: None,
            morning_min: None,
            periodicity_tol: None,
            initial_level_fixed: Some(3.0),
        }],
        pumps: vec![PumpSpec {
            id: "pump".into(),
            rated_power: 10.0,
            rated_flow: 40.0,
            target_tank: "tank".into(),
            head_coefficient: 0.2,
            max_switches: 4,
            binary_status: true,
            variable_speed: false,
        }],
        valves: vec![],
        demand_zones: vec![DemandZoneSpec {
            id: "zone".into(),
            source_tank: "tank".into(),
            base_demand: 20.0,
            pattern: vec![0.5, 1.0, 1.5, 1.0],
        }],
        tariff_pattern: vec![0.05, 0.2, 0.15, 0.1],
        horizon: Horizon { t0: 0.0, m, dt: 6.0 },
        e_max: 10.0,
        c_max: 0.2,
    }
}

/// Two pumps of unequal efficiency over six 4-hour intervals: 4096
/// enumerable schedules, with the full constraint set active. Used both
/// for exhaustive-oracle equivalence and to confirm the cost-saving bar
/// against enumeration.
pub fn two_pump_instance() -> NetworkModel {
    let m = 6;
    NetworkModel {
        tanks: vec![TankSpec {
            id: "tank".into(),
            area: 130.0,
            level_min: 0.0,
            level_max: 5.0,
            emergency_min: Some(0.30),
            overtop_max: Some(0.95),
            morning_min: None,
            periodicity_tol: Some(0.25),
            initial_level_fixed: Some(3.6),
        }],
        pumps: vec![
            PumpSpec {
                id: "pump_fast".into(),
                rated_power: 10.0,
                rated_flow: 40.0,
                target_tank: "tank".into(),
                head_coefficient: 0.2,
                max_switches: 4,
                binary_status: true,
                variable_speed: false,
            },
            PumpSpec {
                id: "pump_slow".into(),
                rated_power: 12.0,
                rated_flow: 20.0,
                target_tank: "tank".into(),
                head_coefficient: 0.2,
                max_switches: 4,
                binary_status: true,
                variable_speed: false,
            },
        ],
        valves: vec![],
        demand_zones: vec![DemandZoneSpec {
            id: "zone".into(),
            source_tank: "tank".into(),
            base_demand: 50.5,
            pattern: vec![0.75, 0.75, 1.125, 1.125, 1.125, 1.125],
        }],
        tariff_pattern: vec![0.10, 0.10, 0.20, 0.20, 0.20, 0.20],
        horizon: Horizon { t0: 0.0, m, dt: 4.0 },
        e_max: 22.0,
        c_max: 0.20,
    }
}

/// Synthetic single-tank helper for unit tests: one pump, one demand zone
/// with a flat pattern, flat tariff, 24 hourly intervals.
pub fn single_tank_model(area: f64, rated_flow: f64, head_coefficient: f64, base_demand: f64) -> NetworkModel {
    let m = 24;
    NetworkModel {
        tanks: vec![TankSpec {
            id: "tank".into(),
            area,
            level_min: 0.0,
            level_max: 5.0,
            emergency_min: Some(0.30),
            overtop_max: Some(0.95),
            morning_min: None,
            periodicity_tol: None,
            initial_level_fixed: Some(2.0),
        }],
        pumps: vec![PumpSpec {
            id: "pump".into(),
            rated_power: 10.0,
            rated_flow,
            target_tank: "tank".into(),
            head_coefficient,
            max_switches: 4,
            binary_status: true,
            variable_speed: false,
        }],
        valves: vec![],
        demand_zones: vec![DemandZoneSpec {
            id: "zone".into(),
            source_tank: "tank".into(),
            base_demand,
            pattern: vec![1.0; m],
        }],
        tariff_pattern: vec![1.0; m],
        horizon: Horizon { t0: 0.0, m, dt: 1.0 },
        e_max: 10.0,
        c_max: 1.0,
    }
}

/// Synthetic model exercising valve rows and setting rows: one binary
/// variable-speed pump, one real-status valve with a setting. Only unit
/// tests use it; the bundled scenario has constant-speed pumps and no
/// valves.
pub fn valve_and_settings_model() -> NetworkModel {
    let mut model = single_tank_model(100.0, 50.0, 0.2, 20.0);
    model.pumps[0].variable_speed = true;
    model.valves = vec![ValveSpec {
        id: "valve".into(),
        binary_status: false,
        has_setting: true,
    }];
    model
}

//! Simulator checks against independent hand oracles: a spreadsheet-style
//! recurrence for the full 24-step trajectory, mass conservation and
//! energy additivity.

use pumpsched::network::ScheduleLayout;
use pumpsched::scenario;
use pumpsched::simulator::{simulate_eps, simulate_step};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent recurrence over the toy system with the always-on schedule.
/// Written directly from the mass-balance definition, cell by cell, the way
/// a spreadsheet would: levels held per tank, one column per hour.
#[test]
fn always_on_trajectory_matches_hand_recurrence() {
    let model = scenario::toy_model();
    let schedule = scenario::always_on_schedule(&model).unwrap();
    let trajectory = simulate_eps(&model, &schedule).unwrap();

    // Tank parameters transcribed from the scenario definition.
    let areas = [260.0, 170.0, 45.0];
    let maxes = [5.0, 4.0, 3.0];
    // (rated flow, target tank, alpha) per pump; all pumps always on.
    let pumps = [(40.0, 0usize, 0.2), (20.0, 0usize, 0.2), (35.0, 1usize, 0.2)];
    // (base demand, source tank) per zone with its two-band pattern.
    let zones = [(50.5, 0usize, 0.75, 1.125), (29.5, 1usize, 0.75, 1.125)];

    let mut levels = [3.77f64, 2.97, 1.5];
    for k in 0..24 {
        let mut next = levels;
        for (tank, (area, max)) in areas.iter().zip(maxes).enumerate() {
            let mut net = 0.0f64;
            for (flow, target, alpha) in pumps {
                if target == tank {
                    net += flow * (1.0 - alpha * levels[tank] / max);
                }
            }
            for (base, source, night, day) in zones {
                if source == tank {
                    let multiplier = if k < 8 { night } else { day };
                    net -= base * multiplier;
                }
            }
            next[tank] = (levels[tank] + net / area).clamp(0.0, max);
        }
        levels = next;
        for tank in 0..3 {
            assert!(
                (trajectory.states[k + 1].tank_levels[tank] - levels[tank]).abs() < 1e-9,
                "hour {k}, tank {tank}: simulator {} vs recurrence {}",
                trajectory.states[k + 1].tank_levels[tank],
                levels[tank]
            );
        }
    }
}

/// Unclamped mass balance: Δ(level·area) == dt·(inflow − demand) per step.
#[test]
fn mass_is_conserved_when_unclamped() {
    let model = scenario::toy_model();
    let layout = ScheduleLayout::of(&model.with_all_tanks_free());
    let free = model.with_all_tanks_free();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..20 {
        let schedule = layout.random_schedule(&mut rng);
        let trajectory = simulate_eps(&free, &schedule).unwrap();
        for k in 0..trajectory.m() {
            if trajectory.states[k + 1].clamped {
                continue;
            }
            let levels = &trajectory.states[k].tank_levels;
            for (j, tank) in free.tanks.iter().enumerate() {
                let mut inflow = 0.0;
                for (p, pump) in free.pumps.iter().enumerate() {
                    if free.pump_target_tank(pump) == Some(j) {
                        inflow += schedule.statuses.get(p, k)
                            * pump.rated_flow
                            * (1.0 - pump.head_coefficient * levels[j] / tank.level_max);
                    }
                }
                let demand: f64 = free
                    .demand_zones
                    .iter()
                    .filter(|z| z.source_tank == tank.id)
                    .map(|z| z.demand(k))
                    .sum();
                let delta_volume =
                    (trajectory.states[k + 1].tank_levels[j] - levels[j]) * tank.area;
                let expected = free.horizon.dt * (inflow - demand);
                assert!(
                    (delta_volume - expected).abs() < 1e-9,
                    "tank {j} step {k}: Δvolume {delta_volume} vs {expected} m³"
                );
            }
        }
    }
}

/// Trajectory total energy equals Σ status·rated_power·dt.
#[test]
fn energy_is_additive_over_pumps_and_steps() {
    let model = scenario::toy_model();
    let free = model.with_all_tanks_free();
    let layout = ScheduleLayout::of(&free);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let schedule = layout.random_schedule(&mut rng);
        let trajectory = simulate_eps(&free, &schedule).unwrap();
        let expected: f64 = (0..free.horizon.m)
            .flat_map(|k| {
                free.pumps
                    .iter()
                    .enumerate()
                    .map(move |(p, pump)| (p, k, pump.rated_power))
            })
            .map(|(p, k, power)| schedule.statuses.get(p, k) * power * free.horizon.dt)
            .sum();
        assert!((trajectory.total_energy(free.horizon.dt) - expected).abs() < 1e-9);
    }
}

/// Raising one status entry never lowers the targeted tank's next level.
#[test]
fn pump_effect_is_monotone() {
    let model = scenario::toy_model();
    let levels = [2.0, 2.0, 1.0];
    for p in 0..3 {
        let target = model.pump_target_tank(&model.pumps[p]).unwrap();
        let mut low = [0.3, 0.3, 0.3];
        let mut high = low;
        low[p] = 0.2;
        high[p] = 0.9;
        // The toy pumps are binary in the schedule, but simulate_step itself
        // accepts fractional statuses.
        let a = simulate_step(&model, &levels, &low, 3).unwrap();
        let b = simulate_step(&model, &levels, &high, 3).unwrap();
        assert!(b.tank_levels[target] >= a.tank_levels[target]);
    }
}

/// Bit-identical repeatability of the whole pipeline entry point.
#[test]
fn simulate_eps_is_deterministic() {
    let model = scenario::toy_model().with_all_tanks_free();
    let layout = ScheduleLayout::of(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let schedule = layout.random_schedule(&mut rng);
    let a = simulate_eps(&model, &schedule).unwrap();
    let b = simulate_eps(&model, &schedule).unwrap();
    assert_eq!(a, b);
}

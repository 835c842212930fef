//! Sensitivity-based input selection.
//!
//! Every candidate input is scored per target by one-at-a-time
//! perturbation: sweep the candidate across its empirical range in the
//! dataset while holding the other inputs at sampled base points, evaluate
//! the target through a single simulator step, and measure the variance of
//! the response. Inputs with no influence score exactly zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::NetworkModel;
use crate::simulator::{
    input_universe, step_raw, Dataset, InputKind, InputVar, TargetTable, ENERGY_TARGET,
};

/// Base points sampled from the dataset per candidate sweep.
const BASE_POINTS: usize = 32;
/// Sweep resolution across the candidate's empirical range.
const GRID_POINTS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedInput {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetRanking {
    pub target: String,
    /// Scores descending; ties broken by declared variable order.
    pub ranked: Vec<RankedInput>,
}

impl TargetRanking {
    pub fn top_ids(&self) -> Vec<String> {
        self.ranked.iter().map(|r| r.id.clone()).collect()
    }
}

/// Evaluates one target from a full candidate-input assignment via a single
/// simulator step.
fn step_response(
    model: &NetworkModel,
    universe: &[InputVar],
    assignment: &[f64],
    target: &str,
) -> Result<f64> {
    let mut levels = vec![0.0; model.tanks.len()];
    let mut statuses = vec![0.0; model.pumps.len() + model.valves.len()];
    let mut multipliers = vec![0.0; model.demand_zones.len()];
    for (var, value) in universe.iter().zip(assignment) {
        match var.kind {
            InputKind::TankLevel(j) => {
                levels[j] = model.tanks[j].level_range()?.denormalize(*value);
            }
            InputKind::Status(r) => statuses[r] = *value,
            InputKind::DemandMultiplier(z) => {
                multipliers[z] = value * model.demand_zones[z].pattern_max();
            }
            // Settings have no hydraulic effect in the bundled simulator.
            InputKind::Setting(_) => {}
        }
    }
    let state = step_raw(model, &levels, &statuses, &multipliers, model.horizon.dt)?;
    if target == ENERGY_TARGET {
        return Ok(state.energy_rate / model.e_max);
    }
    let tank_id = target
        .strip_prefix("level:")
        .ok_or_else(|| Error::Config(format!("unknown target '{target}'")))?;
    let j = model
        .tank_index(tank_id)
        .ok_or_else(|| Error::Config(format!("target '{target}' matches no tank")))?;
    Ok(model.tanks[j].level_range()?.normalize(state.tank_levels[j]))
}

fn population_variance(values: &[f64]) -> f64 {
    // A sweep that never moves the response scores exactly zero; without
    // this, summation rounding leaves ~1e-34 dust that defeats the
    // no-influence test.
    if values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn rank_target(
    model: &NetworkModel,
    universe: &[InputVar],
    table: &TargetTable,
    top_k: usize,
) -> Result<TargetRanking> {
    let n_rows = table.n_rows();
    if n_rows == 0 {
        return Err(Error::Config(format!(
            "dataset for '{}' is empty; cannot screen inputs",
            table.target
        )));
    }
    // Map universe order onto the table's column order (they normally
    // coincide, but hand-edited files may reorder columns).
    let columns: Vec<usize> = universe
        .iter()
        .map(|var| {
            table.input_index(&var.id).ok_or_else(|| {
                Error::Config(format!(
                    "dataset for '{}' lacks candidate input '{}'",
                    table.target, var.id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let stride = (n_rows / BASE_POINTS).max(1);
    let base_rows: Vec<usize> = (0..n_rows).step_by(stride).take(BASE_POINTS).collect();

    let mut scores = Vec::with_capacity(universe.len());
    for (c, _var) in universe.iter().enumerate() {
        let col = columns[c];
        let (lo, hi) = (0..n_rows).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            let v = table.inputs.get(r, col);
            (lo.min(v), hi.max(v))
        });
        if !(hi > lo) {
            scores.push(0.0);
            continue;
        }
        let mut total = 0.0;
        let mut assignment: Vec<f64> = vec![0.0; universe.len()];
        for &row in &base_rows {
            for (a, &src) in assignment.iter_mut().zip(&columns) {
                *a = table.inputs.get(row, src);
            }
            let mut responses = Vec::with_capacity(GRID_POINTS);
            for g in 0..GRID_POINTS {
                let v = lo + (hi - lo) * g as f64 / (GRID_POINTS - 1) as f64;
                assignment[c] = v;
                responses.push(step_response(model, universe, &assignment, &table.target)?);
            }
            total += population_variance(&responses);
        }
        scores.push(total / base_rows.len() as f64);
    }

    let mut order: Vec<usize> = (0..universe.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let ranked = order
        .into_iter()
        .take(top_k.min(universe.len()))
        .map(|i| RankedInput {
            id: universe[i].id.clone(),
            score: scores[i],
        })
        .collect();
    Ok(TargetRanking {
        target: table.target.clone(),
        ranked,
    })
}

/// Ranks candidate inputs per target and keeps the `top_k` strongest.
/// Asking for more candidates than exist returns them all.
pub fn sensitivity_screen(
    model: &NetworkModel,
    dataset: &Dataset,
    top_k: usize,
) -> Result<Vec<TargetRanking>> {
    if top_k < 1 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    if dataset.targets.is_empty() {
        return Err(Error::Config("dataset has no targets".into()));
    }
    let universe = input_universe(model);
    dataset
        .targets
        .iter()
        .map(|table| rank_target(model, &universe, table, top_k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;
    use crate::simulator::generate_dataset;

    /// Tank fed by exactly one pump, α = 0, demand constant (no coupling):
    /// the pump swing exceeds the whole level range, so sweeping the level
    /// at a saturated base leaves the response pinned (variance 0) while
    /// sweeping the pump status moves it across the full range.
    #[test]
    fn dominant_pump_ranks_first_for_its_tank() {
        let model = scenario::single_tank_model(100.0, 1100.0, 0.0, 550.0);
        let dataset = generate_dataset(&model, 20, 3).unwrap();
        let rankings = sensitivity_screen(&model, &dataset, 10).unwrap();
        let level_target = rankings.iter().find(|r| r.target.starts_with("level:")).unwrap();
        assert!(
            level_target.ranked[0].id.starts_with("status:"),
            "expected the pump first, got {:?}",
            level_target.ranked
        );
        assert!(level_target.ranked[0].score > 0.0);
    }

    #[test]
    fn constant_input_scores_zero_and_ranks_last() {
        // The flat demand pattern makes the multiplier column constant.
        let model = scenario::single_tank_model(100.0, 50.0, 0.1, 20.0);
        let dataset = generate_dataset(&model, 10, 4).unwrap();
        let rankings = sensitivity_screen(&model, &dataset, 10).unwrap();
        for ranking in &rankings {
            let demand = ranking.ranked.iter().find(|r| r.id.starts_with("demand:")).unwrap();
            assert_eq!(demand.score, 0.0);
            assert_eq!(ranking.ranked.last().unwrap().score, 0.0);
        }
    }

    #[test]
    fn oversized_top_k_returns_a_permutation_of_candidates() {
        let model = scenario::toy_model();
        let dataset = generate_dataset(&model, 5, 5).unwrap();
        let universe_len = input_universe(&model).len();
        let rankings = sensitivity_screen(&model, &dataset, 999).unwrap();
        for ranking in &rankings {
            assert_eq!(ranking.ranked.len(), universe_len);
            let mut ids = ranking.top_ids();
            ids.sort();
            let mut expected: Vec<String> = input_universe(&model).iter().map(|v| v.id.clone()).collect();
            expected.sort();
            assert_eq!(ids, expected);
        }
    }

    #[test]
    fn energy_target_is_driven_by_statuses_only() {
        let model = scenario::toy_model();
        let dataset = generate_dataset(&model, 5, 6).unwrap();
        let rankings = sensitivity_screen(&model, &dataset, 3).unwrap();
        let energy = rankings.iter().find(|r| r.target == ENERGY_TARGET).unwrap();
        for input in &energy.ranked {
            assert!(
                input.id.starts_with("status:"),
                "energy rate must rank pump statuses first, got {:?}",
                energy.ranked
            );
        }
    }
}

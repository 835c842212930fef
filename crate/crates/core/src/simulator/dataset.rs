//! Training-data generation for the surrogate: random schedules are run
//! through the simulator and every snapshot transition becomes one row per
//! predicted target.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{NetworkModel, ScheduleLayout};
use crate::simulator::simulate_eps;

/// Target id of the aggregate energy-rate predictor.
pub const ENERGY_TARGET: &str = "energy";

/// What a candidate meta-model input reads from the system at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    /// Normalized level of tank `.0` (index into `model.tanks`).
    TankLevel(usize),
    /// Status row `.0` of the schedule (pumps then valves).
    Status(usize),
    /// Demand multiplier of zone `.0`, normalized by the zone's pattern maximum.
    DemandMultiplier(usize),
    /// Setting row `.0` of the schedule.
    Setting(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputVar {
    pub id: String,
    pub kind: InputKind,
}

/// Every candidate input, in declared order: tank levels, statuses, demand
/// multipliers, settings. This order is the tie-breaker of the sensitivity
/// screen and the column order of the dataset files.
pub fn input_universe(model: &NetworkModel) -> Vec<InputVar> {
    let layout = ScheduleLayout::of(model);
    let mut vars = Vec::new();
    for (j, tank) in model.tanks.iter().enumerate() {
        vars.push(InputVar {
            id: format!("level:{}", tank.id),
            kind: InputKind::TankLevel(j),
        });
    }
    for (r, element) in layout.status_elements.iter().enumerate() {
        vars.push(InputVar {
            id: format!("status:{}", element.id),
            kind: InputKind::Status(r),
        });
    }
    for (z, zone) in model.demand_zones.iter().enumerate() {
        vars.push(InputVar {
            id: format!("demand:{}", zone.id),
            kind: InputKind::DemandMultiplier(z),
        });
    }
    for (r, id) in layout.setting_elements.iter().enumerate() {
        vars.push(InputVar {
            id: format!("setting:{id}"),
            kind: InputKind::Setting(r),
        });
    }
    vars
}

/// Predicted outputs: one tank level per tank, plus the aggregate energy
/// rate, in that order.
pub fn target_ids(model: &NetworkModel) -> Vec<String> {
    let mut ids: Vec<String> = model.tanks.iter().map(|t| format!("level:{}", t.id)).collect();
    ids.push(ENERGY_TARGET.to_string());
    ids
}

/// Normalized value of one candidate input at interval `k`.
pub fn input_value(
    model: &NetworkModel,
    var: &InputVar,
    levels_norm: &[f64],
    statuses_col: &[f64],
    settings_col: &[f64],
    k: usize,
) -> f64 {
    match var.kind {
        InputKind::TankLevel(j) => levels_norm[j],
        InputKind::Status(r) => statuses_col[r],
        InputKind::DemandMultiplier(z) => {
            let zone = &model.demand_zones[z];
            let max = zone.pattern_max();
            if max > 0.0 {
                zone.pattern[k] / max
            } else {
                0.0
            }
        }
        InputKind::Setting(r) => settings_col[r],
    }
}

/// Rows for one predicted target: the full candidate input block and the
/// target column. Targets generated together share identical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTable {
    pub target: String,
    pub input_ids: Vec<String>,
    pub inputs: Matrix,
    pub outputs: Vec<f64>,
}

impl TargetTable {
    pub fn n_rows(&self) -> usize {
        self.outputs.len()
    }

    /// Index of a candidate input column by id.
    pub fn input_index(&self, id: &str) -> Option<usize> {
        self.input_ids.iter().position(|i| i == id)
    }
}

/// One table per target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub targets: Vec<TargetTable>,
}

impl Dataset {
    pub fn table(&self, target: &str) -> Option<&TargetTable> {
        self.targets.iter().find(|t| t.target == target)
    }
}

/// Samples `n_samples` random schedules (statuses uniform over the legal
/// gene domain, initial levels uniform in [0, 1] for every tank), runs the
/// simulator, and emits one row per interval per target: inputs at `t_k`,
/// tank-level outputs at `t_{k+1}`, energy output at `t_k`. Reproducible
/// under a fixed seed.
pub fn generate_dataset(model: &NetworkModel, n_samples: usize, seed: u64) -> Result<Dataset> {
    if n_samples < 1 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    // Train with every initial level randomized so the surrogate sees the
    // whole state space regardless of which tanks a mode later pins.
    let free_model = model.with_all_tanks_free();
    let layout = ScheduleLayout::of(&free_model);
    let universe = input_universe(model);
    let targets = target_ids(model);
    let m = model.horizon.m;
    let n_rows = n_samples * m;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Matrix::zeros(n_rows, universe.len());
    let mut outputs: Vec<Vec<f64>> = vec![Vec::with_capacity(n_rows); targets.len()];

    let mut row = 0;
    for _ in 0..n_samples {
        let schedule = layout.random_schedule(&mut rng);
        let trajectory = simulate_eps(&free_model, &schedule)?;
        for k in 0..m {
            let levels_norm: Vec<f64> =
                (0..model.tanks.len()).map(|j| trajectory.normalized_level(j, k)).collect();
            let statuses_col = schedule.statuses.column(k);
            let settings_col = schedule.settings.column(k);
            for (c, var) in universe.iter().enumerate() {
                inputs.set(
                    row,
                    c,
                    input_value(model, var, &levels_norm, &statuses_col, &settings_col, k),
                );
            }
            for (t, _) in model.tanks.iter().enumerate() {
                outputs[t].push(trajectory.normalized_level(t, k + 1));
            }
            outputs[model.tanks.len()].push(trajectory.normalized_energy_rate(k));
            row += 1;
        }
    }

    let input_ids: Vec<String> = universe.iter().map(|v| v.id.clone()).collect();
    let tables = targets
        .into_iter()
        .zip(outputs)
        .map(|(target, outputs)| TargetTable {
            target,
            input_ids: input_ids.clone(),
            inputs: inputs.clone(),
            outputs,
        })
        .collect();
    Ok(Dataset { targets: tables })
}

/// File name for one target's CSV (`:` is not portable in file names).
pub fn dataset_file_name(target: &str) -> String {
    format!("{}.csv", target.replace(':', "_"))
}

/// Writes one target table as CSV: header row naming each input variable
/// and the target, values as decimal text with 9 significant digits.
pub fn write_dataset_csv<W: Write>(table: &TargetTable, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = table.input_ids.iter().map(String::as_str).collect();
    header.push(&table.target);
    writer.write_record(&header)?;
    for r in 0..table.n_rows() {
        let mut record: Vec<String> = table.inputs.row(r).iter().map(|v| format!("{v:.8e}")).collect();
        record.push(format!("{:.8e}", table.outputs[r]));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a target table back from CSV (lines starting with `#` are
/// comments). The last column is the target, named by the header.
pub fn load_dataset_csv<R: Read>(input: R) -> Result<TargetTable> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Config("dataset file needs at least one input column and the target".into()));
    }
    let n_inputs = header.len() - 1;
    let input_ids: Vec<String> = header.iter().take(n_inputs).map(str::to_string).collect();
    let target = header.get(n_inputs).unwrap_or_default().to_string();

    let mut values: Vec<f64> = Vec::new();
    let mut outputs = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Config(format!(
                "dataset row has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("unparsable number '{field}' in dataset")))?;
            if i < n_inputs {
                values.push(v);
            } else {
                outputs.push(v);
            }
        }
    }
    let rows = outputs.len();
    let inputs = Matrix::from_rows(
        &values.chunks(n_inputs).map(<[f64]>::to_vec).collect::<Vec<_>>(),
    )?;
    debug_assert_eq!(inputs.rows(), rows);
    Ok(TargetTable {
        target,
        input_ids,
        inputs,
        outputs,
    })
}

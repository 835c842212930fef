//! CSV formats owned by the CLI: the best-schedule file and the predicted
//! trajectory. All files carry a mandatory header row; lines starting with
//! `#` are comments. Floats are written in Rust's shortest round-trip form,
//! so replaying a schedule reproduces the optimizer's evaluation exactly.

use std::io::Read;

use pumpsched::matrix::Matrix;
use pumpsched::network::{NetworkModel, Schedule, ScheduleLayout};
use pumpsched::simulator::Trajectory;

use crate::CliError;

/// Schedule file: one row per decision block.
///
/// ```text
/// kind,id,v0,...,v{m-1}
/// status,pump_a1,1,0,...          (m values)
/// setting,pump_x,0.5,...          (m values, when present)
/// initial_level,reservoir_a,0.45  (single normalized value, rest empty)
/// ```
/// Initial levels are recorded for every tank (fixed ones included), so the
/// file is a complete, self-contained decision set.
pub fn schedule_to_csv(
    model: &NetworkModel,
    schedule: &Schedule,
    initial_levels_normalized: &[f64],
) -> Result<String, CliError> {
    let layout = ScheduleLayout::of(model);
    let m = model.horizon.m;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["kind".to_string(), "id".to_string()];
    header.extend((0..m).map(|k| format!("v{k}")));
    writer.write_record(&header).map_err(csv_err)?;

    for (row, element) in layout.status_elements.iter().enumerate() {
        let mut record = vec!["status".to_string(), element.id.clone()];
        record.extend(schedule.statuses.row(row).iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(csv_err)?;
    }
    for (row, id) in layout.setting_elements.iter().enumerate() {
        let mut record = vec!["setting".to_string(), id.clone()];
        record.extend(schedule.settings.row(row).iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(csv_err)?;
    }
    for (tank, level) in model.tanks.iter().zip(initial_levels_normalized) {
        let mut record = vec!["initial_level".to_string(), tank.id.clone(), format!("{level}")];
        record.extend(std::iter::repeat_n(String::new(), m - 1));
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is UTF-8"))
}

/// Parses a schedule file against the model, returning a schedule for the
/// all-tanks-free layout (the file always carries every initial level).
pub fn schedule_from_csv<R: Read>(model: &NetworkModel, reader: R) -> Result<Schedule, CliError> {
    let free = model.with_all_tanks_free();
    let layout = ScheduleLayout::of(&free);
    let m = layout.m;

    let mut statuses: Vec<Option<Vec<f64>>> = vec![None; layout.n_status_rows()];
    let mut settings: Vec<Option<Vec<f64>>> = vec![None; layout.n_setting_rows()];
    let mut initial: Vec<Option<f64>> = vec![None; model.tanks.len()];

    let mut csv_reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    for record in csv_reader.records() {
        let record = record.map_err(|e| CliError::usage(format!("malformed schedule file: {e}")))?;
        let kind = record.get(0).unwrap_or_default();
        let id = record.get(1).unwrap_or_default();
        let values: Vec<&str> = (2..record.len()).map(|i| record.get(i).unwrap_or_default()).collect();
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("unparsable value '{s}' for {kind} '{id}'")))
        };
        match kind {
            "status" => {
                let row = layout
                    .status_row(id)
                    .ok_or_else(|| CliError::usage(format!("schedule file names unknown control element '{id}'")))?;
                if values.len() != m {
                    return Err(CliError::usage(format!(
                        "status row '{id}' has {} values, horizon has {m}",
                        values.len()
                    )));
                }
                statuses[row] = Some(values.iter().map(|v| parse(v)).collect::<Result<_, _>>()?);
            }
            "setting" => {
                let row = layout
                    .setting_elements
                    .iter()
                    .position(|e| e == id)
                    .ok_or_else(|| CliError::usage(format!("schedule file names unknown setting element '{id}'")))?;
                if values.len() != m {
                    return Err(CliError::usage(format!(
                        "setting row '{id}' has {} values, horizon has {m}",
                        values.len()
                    )));
                }
                settings[row] = Some(values.iter().map(|v| parse(v)).collect::<Result<_, _>>()?);
            }
            "initial_level" => {
                let tank = model
                    .tank_index(id)
                    .ok_or_else(|| CliError::usage(format!("schedule file names unknown tank '{id}'")))?;
                let first = values
                    .first()
                    .filter(|v| !v.trim().is_empty())
                    .ok_or_else(|| CliError::usage(format!("initial_level row '{id}' has no value")))?;
                initial[tank] = Some(parse(first)?);
            }
            other => {
                return Err(CliError::usage(format!("unknown schedule row kind '{other}'")));
            }
        }
    }

    let status_rows = statuses
        .into_iter()
        .enumerate()
        .map(|(row, values)| {
            values.ok_or_else(|| {
                CliError::usage(format!(
                    "schedule file is missing the status row for '{}'",
                    layout.status_elements[row].id
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let setting_rows = settings
        .into_iter()
        .enumerate()
        .map(|(row, values)| {
            values.ok_or_else(|| {
                CliError::usage(format!(
                    "schedule file is missing the setting row for '{}'",
                    layout.setting_elements[row]
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let initial_levels = initial
        .into_iter()
        .enumerate()
        .map(|(tank, value)| {
            value.ok_or_else(|| {
                CliError::usage(format!(
                    "schedule file is missing the initial level of '{}'",
                    model.tanks[tank].id
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let schedule = Schedule {
        statuses: Matrix::from_rows(&status_rows).map_err(|e| CliError::usage(e.to_string()))?,
        settings: if setting_rows.is_empty() {
            Matrix::zeros(0, m)
        } else {
            Matrix::from_rows(&setting_rows).map_err(|e| CliError::usage(e.to_string()))?
        },
        initial_levels,
    };
    schedule
        .validate(&layout)
        .map_err(|e| CliError::usage(format!("schedule file fails validation: {e}")))?;
    Ok(schedule)
}

/// Trajectory file: one row per snapshot; `energy_rate_kw` covers the
/// interval starting at that snapshot (empty on the final row).
pub fn trajectory_to_csv(trajectory: &Trajectory) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["interval".to_string()];
    header.extend(trajectory.tank_ids().iter().map(|id| format!("level:{id}")));
    header.push("energy_rate_kw".to_string());
    writer.write_record(&header).map_err(csv_err)?;
    for k in 0..=trajectory.m() {
        let mut record = vec![k.to_string()];
        record.extend(trajectory.states[k].tank_levels.iter().map(|v| format!("{v}")));
        record.push(if k < trajectory.m() {
            format!("{}", trajectory.energy_rate(k))
        } else {
            String::new()
        });
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is UTF-8"))
}

/// Levels read back from a trajectory file, keyed by tank id.
pub struct PredictedLevels {
    pub tank_ids: Vec<String>,
    /// `m + 1` rows of absolute levels, tank order as in `tank_ids`.
    pub levels: Vec<Vec<f64>>,
}

pub fn predicted_from_csv<R: Read>(reader: R) -> Result<PredictedLevels, CliError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let header = csv_reader
        .headers()
        .map_err(|e| CliError::usage(format!("malformed trajectory file: {e}")))?
        .clone();
    let tank_ids: Vec<String> = header
        .iter()
        .filter_map(|h| h.strip_prefix("level:").map(str::to_string))
        .collect();
    if tank_ids.is_empty() {
        return Err(CliError::usage("trajectory file has no level columns".into()));
    }
    let mut levels = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| CliError::usage(format!("malformed trajectory file: {e}")))?;
        let mut row = Vec::with_capacity(tank_ids.len());
        for (i, column) in header.iter().enumerate() {
            if column.starts_with("level:") {
                let field = record.get(i).unwrap_or_default();
                row.push(field.trim().parse().map_err(|_| {
                    CliError::usage(format!("unparsable level '{field}' in trajectory file"))
                })?);
            }
        }
        levels.push(row);
    }
    Ok(PredictedLevels { tank_ids, levels })
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::runtime(format!("csv serialization failed: {e}"))
}

//! Implementations of the five subcommands.

use std::fs;
use std::path::Path;

use pumpsched::fitness::{evaluate, ConstraintSet, FitnessReport};
use pumpsched::metamodel::{load_meta, meta_to_json, predict_eps, train_metamodel, TrainParams};
use pumpsched::network::{NetworkModel, ScheduleLayout};
use pumpsched::optimizer::{
    run_ga, write_history_csv, FitnessBackend, GaConfig, MetaModelBackend, SimulatorBackend,
};
use pumpsched::simulator::{
    dataset_file_name, generate_dataset, load_dataset_csv, simulate_eps_refined, target_ids,
    write_dataset_csv, Dataset, Trajectory,
};
use serde::Serialize;

use crate::manifest::{RunContext, MANIFEST_NAME};
use crate::schedule_io::{predicted_from_csv, schedule_from_csv, schedule_to_csv, trajectory_to_csv};
use crate::{Backend, CliError, Mode};

fn load_model(path: &Path) -> Result<NetworkModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read model file '{}': {e}", path.display())))?;
    let model: NetworkModel = serde_json::from_str(&text).map_err(|e| {
        CliError::usage(format!(
            "model file '{}' is not valid JSON for the model schema (line {}, column {}): {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    Ok(model)
}

fn load_valid_model(path: &Path) -> Result<NetworkModel, CliError> {
    let model = load_model(path)?;
    let violations = model.validate();
    if let Some(first) = violations.first() {
        return Err(CliError::usage(format!(
            "model file '{}' breaks {} invariant(s); first: {first}",
            path.display(),
            violations.len()
        )));
    }
    Ok(model)
}

pub fn validate(model_path: &Path) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let violations = model.validate();
    if violations.is_empty() {
        println!("model ok: {} tanks, {} pumps, {} zones, {} intervals",
            model.tanks.len(),
            model.pumps.len(),
            model.demand_zones.len(),
            model.horizon.m
        );
        Ok(())
    } else {
        for violation in &violations {
            println!("violation: {violation}");
        }
        Err(CliError::usage(format!(
            "model has {} invariant violation(s)",
            violations.len()
        )))
    }
}

pub fn generate(model_path: &Path, samples: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let model = load_valid_model(model_path)?;
    let mut ctx = RunContext::new("generate", out, Some(seed))?;
    ctx.record_input("model", model_path)?;
    let dataset = generate_dataset(&model, samples, seed)?;
    for table in &dataset.targets {
        let mut body = Vec::new();
        write_dataset_csv(table, &mut body)?;
        let name = dataset_file_name(&table.target);
        ctx.write_csv_output(&name, "dataset", &String::from_utf8(body).expect("csv is UTF-8"))?;
        println!("{name}: {} rows", table.n_rows());
    }
    ctx.finish()
}

pub struct TrainOptions {
    pub hidden: usize,
    pub top_k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

pub fn train(model_path: &Path, data_dir: &Path, out: &Path, opts: TrainOptions) -> Result<(), CliError> {
    let model = load_valid_model(model_path)?;
    let mut ctx = RunContext::new("train", out, Some(opts.seed))?;
    ctx.record_input("model", model_path)?;

    let mut tables = Vec::new();
    for target in target_ids(&model) {
        let path = data_dir.join(dataset_file_name(&target));
        if !path.exists() {
            return Err(CliError::usage(format!(
                "dataset directory is missing '{}' for target '{target}'",
                path.display()
            )));
        }
        ctx.record_input("dataset", &path)?;
        let file = fs::File::open(&path)
            .map_err(|e| CliError::usage(format!("cannot open '{}': {e}", path.display())))?;
        tables.push(load_dataset_csv(file)?);
    }
    let dataset = Dataset { targets: tables };

    let params = TrainParams {
        hidden: opts.hidden,
        learning_rate: opts.learning_rate,
        epochs: opts.epochs,
        batch_size: opts.batch_size,
        validation_fraction: opts.validation_fraction,
        seed: opts.seed,
        ..TrainParams::default()
    };
    let mut meta = train_metamodel(&model, &dataset, opts.top_k, &params)?;
    meta.manifest = Some(MANIFEST_NAME.to_string());

    ctx.write_output("meta.json", "meta-model", &meta_to_json(&meta)?)?;

    let mut report = csv::Writer::from_writer(Vec::new());
    report
        .write_record(["target", "validation_rmse", "best_epoch", "inputs"])
        .map_err(|e| CliError::runtime(e.to_string()))?;
    for record in &meta.training_report {
        let net = meta.subann(&record.target).expect("one net per report row");
        report
            .write_record(&[
                record.target.clone(),
                format!("{}", record.validation_rmse),
                record.best_epoch.to_string(),
                net.input_ids.join(";"),
            ])
            .map_err(|e| CliError::runtime(e.to_string()))?;
        println!(
            "{}: validation RMSE {:.5} (epoch {}, inputs: {})",
            record.target,
            record.validation_rmse,
            record.best_epoch,
            net.input_ids.join(", ")
        );
    }
    let body = String::from_utf8(report.into_inner().map_err(|e| CliError::runtime(e.to_string()))?)
        .expect("csv is UTF-8");
    ctx.write_csv_output("training_report.csv", "training-report", &body)?;
    ctx.finish()
}

fn effective_model(model: &NetworkModel, mode: Mode) -> Result<NetworkModel, CliError> {
    match mode {
        Mode::ScheduleOnly => model
            .with_all_tanks_fixed()
            .map_err(|e| CliError::usage(e.to_string())),
        Mode::ScheduleAndStorage => Ok(model.with_all_tanks_free()),
    }
}

fn load_constraints(
    path: Option<&Path>,
    model: &NetworkModel,
    ctx: &mut RunContext,
) -> Result<ConstraintSet, CliError> {
    match path {
        Some(path) => {
            ctx.record_input("constraints", path)?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read constraints '{}': {e}", path.display())))?;
            Ok(ConstraintSet::from_json(&text, model)?)
        }
        None => Ok(ConstraintSet::from_model(model)?),
    }
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    manifest: &'a str,
    mode: &'a str,
    backend: &'a str,
    decision_variables: usize,
    generations: usize,
    fitness: &'a FitnessReport,
}

#[allow(clippy::too_many_arguments)]
pub fn optimize(
    model_path: &Path,
    meta_path: Option<&Path>,
    constraints_path: Option<&Path>,
    ga_config_path: Option<&Path>,
    mode: Mode,
    backend_kind: Backend,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let model = load_valid_model(model_path)?;
    let effective = effective_model(&model, mode)?;

    let mut ctx = RunContext::new("optimize", out, seed)?;
    ctx.record_input("model", model_path)?;

    let mut config = match ga_config_path {
        Some(path) => {
            ctx.record_input("ga-config", path)?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read GA config '{}': {e}", path.display())))?;
            GaConfig::from_json(&text)?
        }
        None => GaConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }

    let constraints = load_constraints(constraints_path, &effective, &mut ctx)?;

    let meta = match (backend_kind, meta_path) {
        (Backend::Meta, Some(path)) => {
            ctx.record_input("meta-model", path)?;
            Some(load_meta(path)?)
        }
        (Backend::Meta, None) => {
            return Err(CliError::usage(
                "--meta is required with the meta backend (or pass --backend simulator)".into(),
            ))
        }
        (Backend::Simulator, _) => None,
    };

    let backend: Box<dyn FitnessBackend> = match &meta {
        Some(meta) => Box::new(MetaModelBackend::new(
            meta.clone(),
            effective.clone(),
            constraints.clone(),
            config.penalty_factor,
        )?),
        None => Box::new(SimulatorBackend::new(
            effective.clone(),
            constraints.clone(),
            config.penalty_factor,
        )),
    };

    let layout = ScheduleLayout::of(&effective);
    println!("decision variables: {}", layout.gene_count());
    let result = run_ga(&layout, backend.as_ref(), &config)?;
    let best = &result.best;
    let report = best.fitness.as_ref().expect("run_ga returns evaluated individuals");

    // Replay the winning schedule through the same backend for the
    // trajectory the optimizer believed in.
    let trajectory = match &meta {
        Some(meta) => predict_eps(meta, &effective, &best.schedule)?,
        None => simulate_eps_refined(&effective, &best.schedule, 1)?,
    };

    let initial_norm: Vec<f64> = best
        .schedule
        .initial_levels_physical(&effective, &layout)?
        .iter()
        .zip(effective.tanks.iter())
        .map(|(level, tank)| tank.level_range().map(|r| r.normalize(*level)))
        .collect::<pumpsched::Result<_>>()?;

    ctx.write_csv_output(
        "schedule.csv",
        "best-schedule",
        &schedule_to_csv(&effective, &best.schedule, &initial_norm)?,
    )?;
    ctx.write_csv_output("predicted_trajectory.csv", "predicted-trajectory", &trajectory_to_csv(&trajectory)?)?;

    let mut history = Vec::new();
    write_history_csv(&result.history, &mut history)?;
    ctx.write_csv_output(
        "convergence.csv",
        "convergence-history",
        &String::from_utf8(history).expect("csv is UTF-8"),
    )?;

    let mode_name = match mode {
        Mode::ScheduleOnly => "schedule_only",
        Mode::ScheduleAndStorage => "schedule_and_storage",
    };
    let wrapped = OptimizeReport {
        manifest: MANIFEST_NAME,
        mode: mode_name,
        backend: backend.name(),
        decision_variables: layout.gene_count(),
        generations: result.history.len(),
        fitness: report,
    };
    let text = serde_json::to_string_pretty(&wrapped).map_err(|e| CliError::runtime(e.to_string()))?;
    ctx.write_output("fitness_report.json", "fitness-report", &text)?;

    println!(
        "best ({}): objective {:.6}, violation {:.6}, penalized {:.6}",
        backend.name(),
        report.objective,
        report.violation,
        report.penalized
    );
    for switches in &report.switches {
        println!("switches {}: {}", switches.pump, switches.count);
    }
    ctx.finish()
}

#[derive(Serialize)]
struct EndOfCycleDelta {
    tank: String,
    delta_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_tolerance: Option<bool>,
}

#[derive(Serialize)]
struct SwitchCheck {
    pump: String,
    count: u32,
    max_switches: u32,
    exceeded: bool,
}

#[derive(Serialize)]
struct TankDiscrepancy {
    tank: String,
    max_normalized: f64,
    at_interval: usize,
}

#[derive(Serialize)]
struct DiscrepancyReport {
    predicted_file: String,
    max_normalized: f64,
    per_tank: Vec<TankDiscrepancy>,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    manifest: &'a str,
    step_minutes: u32,
    substeps: usize,
    fitness: &'a FitnessReport,
    end_of_cycle: Vec<EndOfCycleDelta>,
    switch_checks: Vec<SwitchCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrepancy: Option<DiscrepancyReport>,
}

fn verify_levels_csv(
    model: &NetworkModel,
    trajectory: &Trajectory,
    predicted: Option<&crate::schedule_io::PredictedLevels>,
) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["interval".to_string()];
    for tank in &model.tanks {
        header.push(format!("simulated:{}", tank.id));
    }
    if predicted.is_some() {
        for tank in &model.tanks {
            header.push(format!("predicted:{}", tank.id));
        }
        for tank in &model.tanks {
            header.push(format!("abs_error_normalized:{}", tank.id));
        }
    }
    writer.write_record(&header).map_err(|e| CliError::runtime(e.to_string()))?;
    for k in 0..=trajectory.m() {
        let mut record = vec![k.to_string()];
        for level in &trajectory.states[k].tank_levels {
            record.push(format!("{level}"));
        }
        if let Some(predicted) = predicted {
            for (j, _) in model.tanks.iter().enumerate() {
                record.push(format!("{}", predicted.levels[k][j]));
            }
            for (j, tank) in model.tanks.iter().enumerate() {
                let range = tank.level_range().map_err(CliError::from)?;
                let err = (range.normalize(trajectory.states[k].tank_levels[j])
                    - range.normalize(predicted.levels[k][j]))
                .abs();
                record.push(format!("{err}"));
            }
        }
        writer.write_record(&record).map_err(|e| CliError::runtime(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is UTF-8"))
}

pub fn verify(
    model_path: &Path,
    schedule_path: &Path,
    predicted_path: Option<&Path>,
    constraints_path: Option<&Path>,
    step_minutes: u32,
    out: &Path,
) -> Result<(), CliError> {
    let model = load_valid_model(model_path)?;
    let free = model.with_all_tanks_free();

    let mut ctx = RunContext::new("verify", out, None)?;
    ctx.record_input("model", model_path)?;
    ctx.record_input("schedule", schedule_path)?;

    let schedule_file = fs::File::open(schedule_path)
        .map_err(|e| CliError::usage(format!("cannot open schedule '{}': {e}", schedule_path.display())))?;
    let schedule = schedule_from_csv(&model, schedule_file)?;

    let interval_minutes = (model.horizon.dt * 60.0).round() as u32;
    if step_minutes == 0 || interval_minutes % step_minutes != 0 {
        return Err(CliError::usage(format!(
            "--step-minutes {step_minutes} must divide the {interval_minutes}-minute control interval"
        )));
    }
    let substeps = (interval_minutes / step_minutes) as usize;

    let trajectory = simulate_eps_refined(&free, &schedule, substeps)?;
    let constraints = load_constraints(constraints_path, &free, &mut ctx)?;
    // Reference penalty factor; the split into F̄ and Ḡ is what matters here.
    let fitness = evaluate(&trajectory, &free, &constraints, 1000.0)?;

    let end_of_cycle: Vec<EndOfCycleDelta> = model
        .tanks
        .iter()
        .enumerate()
        .map(|(j, tank)| {
            let delta =
                (trajectory.states[trajectory.m()].tank_levels[j] - trajectory.states[0].tank_levels[j]).abs();
            EndOfCycleDelta {
                tank: tank.id.clone(),
                delta_m: delta,
                tolerance_m: tank.periodicity_tol,
                within_tolerance: tank.periodicity_tol.map(|tol| delta <= tol),
            }
        })
        .collect();

    let switch_checks: Vec<SwitchCheck> = fitness
        .switches
        .iter()
        .map(|s| {
            let max = model
                .pumps
                .iter()
                .find(|p| p.id == s.pump)
                .map(|p| p.max_switches)
                .unwrap_or(u32::MAX);
            SwitchCheck {
                pump: s.pump.clone(),
                count: s.count,
                max_switches: max,
                exceeded: s.count > max,
            }
        })
        .collect();

    let default_predicted = schedule_path
        .parent()
        .map(|dir| dir.join("predicted_trajectory.csv"))
        .filter(|p| p.exists());
    let predicted_file = predicted_path.map(Path::to_path_buf).or(default_predicted);
    let predicted = match &predicted_file {
        Some(path) => {
            ctx.record_input("predicted-trajectory", path)?;
            let file = fs::File::open(path)
                .map_err(|e| CliError::usage(format!("cannot open '{}': {e}", path.display())))?;
            let parsed = predicted_from_csv(file)?;
            if parsed.levels.len() != trajectory.m() + 1 {
                return Err(CliError::usage(format!(
                    "predicted trajectory has {} snapshots, expected {}",
                    parsed.levels.len(),
                    trajectory.m() + 1
                )));
            }
            // Reorder predicted columns to model tank order.
            let order: Vec<usize> = model
                .tanks
                .iter()
                .map(|t| {
                    parsed.tank_ids.iter().position(|id| id == &t.id).ok_or_else(|| {
                        CliError::usage(format!("predicted trajectory lacks tank '{}'", t.id))
                    })
                })
                .collect::<Result<_, _>>()?;
            let levels: Vec<Vec<f64>> = parsed
                .levels
                .iter()
                .map(|row| order.iter().map(|&i| row[i]).collect())
                .collect();
            Some(crate::schedule_io::PredictedLevels {
                tank_ids: model.tanks.iter().map(|t| t.id.clone()).collect(),
                levels,
            })
        }
        None => None,
    };

    let discrepancy = match (&predicted, &predicted_file) {
        (Some(predicted), Some(path)) => {
            let mut per_tank = Vec::new();
            let mut overall: f64 = 0.0;
            for (j, tank) in model.tanks.iter().enumerate() {
                let range = tank.level_range().map_err(CliError::from)?;
                let (mut worst, mut at) = (0.0f64, 0usize);
                for k in 0..=trajectory.m() {
                    let err = (range.normalize(trajectory.states[k].tank_levels[j])
                        - range.normalize(predicted.levels[k][j]))
                    .abs();
                    if err > worst {
                        worst = err;
                        at = k;
                    }
                }
                overall = overall.max(worst);
                per_tank.push(TankDiscrepancy {
                    tank: tank.id.clone(),
                    max_normalized: worst,
                    at_interval: at,
                });
            }
            Some(DiscrepancyReport {
                predicted_file: path.display().to_string(),
                max_normalized: overall,
                per_tank,
            })
        }
        _ => None,
    };

    ctx.write_csv_output(
        "verify_levels.csv",
        "verification-levels",
        &verify_levels_csv(&model, &trajectory, predicted.as_ref())?,
    )?;

    let report = VerifyReport {
        manifest: MANIFEST_NAME,
        step_minutes,
        substeps,
        fitness: &fitness,
        end_of_cycle,
        switch_checks,
        discrepancy,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::runtime(e.to_string()))?;
    ctx.write_output("verify_report.json", "verification-report", &text)?;

    println!(
        "verified: objective {:.6}, violation {:.6}",
        fitness.objective, fitness.violation
    );
    for check in &report.switch_checks {
        println!(
            "switches {}: {} of {}{}",
            check.pump,
            check.count,
            check.max_switches,
            if check.exceeded { " EXCEEDED" } else { "" }
        );
    }
    for delta in &report.end_of_cycle {
        match (delta.tolerance_m, delta.within_tolerance) {
            (Some(tol), Some(within)) => println!(
                "periodicity {}: |Δ| = {:.4} m vs {:.4} m{}",
                delta.tank,
                delta.delta_m,
                tol,
                if within { "" } else { " EXCEEDED" }
            ),
            _ => println!("periodicity {}: |Δ| = {:.4} m (unconstrained)", delta.tank, delta.delta_m),
        }
    }
    if let Some(d) = &report.discrepancy {
        println!("max meta-vs-truth level discrepancy: {:.6} normalized", d.max_normalized);
    }
    ctx.finish()
}

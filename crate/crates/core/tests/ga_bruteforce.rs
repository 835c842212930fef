//! GA results against an exhaustive-enumeration oracle on instances small
//! enough to enumerate every schedule.

use pumpsched::fitness::ConstraintSet;
use pumpsched::matrix::Matrix;
use pumpsched::network::{Schedule, ScheduleLayout};
use pumpsched::optimizer::{run_ga, FitnessBackend, GaConfig, SimulatorBackend};
use pumpsched::scenario;

/// Every binary schedule of an n-pump × m-interval instance, by bitmask.
fn enumerate_binary_schedules(n_pumps: usize, m: usize) -> impl Iterator<Item = Schedule> {
    (0u32..1 << (n_pumps * m)).map(move |mask| Schedule {
        statuses: Matrix::from_fn(n_pumps, m, |r, k| ((mask >> (r * m + k)) & 1) as f64),
        settings: Matrix::zeros(0, m),
        initial_levels: vec![],
    })
}

fn brute_force_best(backend: &dyn FitnessBackend, n_pumps: usize, m: usize) -> f64 {
    enumerate_binary_schedules(n_pumps, m)
        .map(|s| backend.evaluate(&s).unwrap().penalized)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn ga_attains_the_enumerated_optimum_on_sixteen_schedules() {
    let model = scenario::one_pump_instance();
    let backend = SimulatorBackend::new(model.clone(), ConstraintSet::none(), 1000.0);
    let layout = ScheduleLayout::of(&model);
    let best = brute_force_best(&backend, 1, 4);
    for seed in [11, 22, 33] {
        let config = GaConfig {
            n_pop: 20,
            n_gen: 50,
            seed,
            ..GaConfig::default()
        };
        let result = run_ga(&layout, &backend, &config).unwrap();
        assert!(
            (result.best.f_star() - best).abs() < 1e-12,
            "seed {seed}: GA {} vs enumeration {best}",
            result.best.f_star()
        );
    }
}

#[test]
fn ga_attains_the_enumerated_optimum_under_constraints() {
    let model = scenario::two_pump_instance();
    let constraints = ConstraintSet::from_model(&model).unwrap();
    let backend = SimulatorBackend::new(model.clone(), constraints, 1000.0);
    let layout = ScheduleLayout::of(&model);
    let best = brute_force_best(&backend, 2, 6);
    for seed in [11, 22] {
        let config = GaConfig {
            n_pop: 20,
            n_gen: 50,
            seed,
            ..GaConfig::default()
        };
        let result = run_ga(&layout, &backend, &config).unwrap();
        assert!(
            (result.best.f_star() - best).abs() < 1e-12,
            "seed {seed}: GA {} vs enumeration {best}",
            result.best.f_star()
        );
    }
}

/// The meta-model backend plugs into the same loop; a short surrogate run
/// must produce a feasible-under-its-own-metric result that beats random.
#[test]
fn meta_backend_drives_the_same_loop() {
    use pumpsched::metamodel::{train_metamodel, TrainParams};
    use pumpsched::optimizer::MetaModelBackend;
    use pumpsched::simulator::generate_dataset;

    let model = scenario::toy_model();
    let dataset = generate_dataset(&model, 120, 9).unwrap();
    let params = TrainParams {
        epochs: 200,
        ..TrainParams::default()
    };
    let meta = train_metamodel(&model, &dataset, 4, &params).unwrap();

    let free = model.with_all_tanks_free();
    let constraints = ConstraintSet::from_model(&free).unwrap();
    let backend = MetaModelBackend::new(meta, free.clone(), constraints, 1000.0).unwrap();
    let layout = ScheduleLayout::of(&free);
    let config = GaConfig {
        n_pop: 50,
        n_gen: 300,
        seed: 3,
        ..GaConfig::default()
    };
    let result = run_ga(&layout, &backend, &config).unwrap();
    let report = result.best.fitness.as_ref().unwrap();
    assert_eq!(report.violation, 0.0, "surrogate-feasible solution expected");
    assert!(
        report.objective < 0.8333,
        "short surrogate run should already beat always-on, got {}",
        report.objective
    );
}

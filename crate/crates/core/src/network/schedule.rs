use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::NetworkModel;

/// One row of the status matrix: a pump or valve, with the gene domain it
/// is allowed to take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlElement {
    pub id: String,
    pub binary: bool,
}

/// Shape of the decision set for one model/mode pairing: which elements
/// own status rows, which own setting rows, and which tanks contribute a
/// free initial level. Row order is pumps before valves, each in model
/// declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleLayout {
    pub m: usize,
    pub status_elements: Vec<ControlElement>,
    pub setting_elements: Vec<String>,
    /// Indices into `model.tanks` for tanks whose initial level is decided
    /// by the optimizer.
    pub free_tanks: Vec<usize>,
}

impl ScheduleLayout {
    /// Layout implied by the model itself: every tank without a fixed
    /// initial level is free.
    pub fn of(model: &NetworkModel) -> Self {
        let mut status_elements: Vec<ControlElement> = model
            .pumps
            .iter()
            .map(|p| ControlElement {
                id: p.id.clone(),
                binary: p.binary_status,
            })
            .collect();
        status_elements.extend(model.valves.iter().map(|v| ControlElement {
            id: v.id.clone(),
            binary: v.binary_status,
        }));

        let mut setting_elements: Vec<String> = model
            .pumps
            .iter()
            .filter(|p| p.variable_speed)
            .map(|p| p.id.clone())
            .collect();
        setting_elements.extend(
            model
                .valves
                .iter()
                .filter(|v| v.has_setting)
                .map(|v| v.id.clone()),
        );

        let free_tanks = model
            .tanks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.initial_level_fixed.is_none())
            .map(|(i, _)| i)
            .collect();

        Self {
            m: model.horizon.m,
            status_elements,
            setting_elements,
            free_tanks,
        }
    }

    pub fn n_status_rows(&self) -> usize {
        self.status_elements.len()
    }

    pub fn n_setting_rows(&self) -> usize {
        self.setting_elements.len()
    }

    pub fn n_free_levels(&self) -> usize {
        self.free_tanks.len()
    }

    /// Total decision-variable count:
    /// (statuses + settings) · m + free initial levels.
    pub fn gene_count(&self) -> usize {
        (self.n_status_rows() + self.n_setting_rows()) * self.m + self.n_free_levels()
    }

    pub fn status_row(&self, id: &str) -> Option<usize> {
        self.status_elements.iter().position(|e| e.id == id)
    }

    /// Uniform random schedule over the legal gene domain: binary rows draw
    /// from {0, 1}, everything else from [0, 1).
    pub fn random_schedule<R: Rng + ?Sized>(&self, rng: &mut R) -> Schedule {
        let statuses = Matrix::from_fn(self.n_status_rows(), self.m, |r, _| {
            if self.status_elements[r].binary {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            } else {
                rng.random::<f64>()
            }
        });
        let settings = Matrix::from_fn(self.n_setting_rows(), self.m, |_, _| rng.random::<f64>());
        let initial_levels = (0..self.n_free_levels()).map(|_| rng.random::<f64>()).collect();
        Schedule {
            statuses,
            settings,
            initial_levels,
        }
    }
}

/// One candidate decision set: pump/valve status matrix, settings matrix
/// and the free initial tank levels, all normalized to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// (n_pumps + n_valves) × m; binary elements hold exactly 0 or 1,
    /// fractional values are the on-fraction of the interval.
    pub statuses: Matrix,
    /// (settable pumps + settable valves) × m.
    pub settings: Matrix,
    /// One normalized level per free tank, in layout order.
    pub initial_levels: Vec<f64>,
}

impl Schedule {
    /// All-off schedule of the right shape.
    pub fn zeros(layout: &ScheduleLayout) -> Self {
        Self {
            statuses: Matrix::zeros(layout.n_status_rows(), layout.m),
            settings: Matrix::zeros(layout.n_setting_rows(), layout.m),
            initial_levels: vec![0.0; layout.n_free_levels()],
        }
    }

    /// Everything-on schedule with mid-range settings and the given free
    /// initial levels.
    pub fn always_on(layout: &ScheduleLayout, initial_levels: Vec<f64>) -> Result<Self> {
        if initial_levels.len() != layout.n_free_levels() {
            return Err(Error::Dimension(format!(
                "expected {} free initial levels, got {}",
                layout.n_free_levels(),
                initial_levels.len()
            )));
        }
        Ok(Self {
            statuses: Matrix::filled(layout.n_status_rows(), layout.m, 1.0),
            settings: Matrix::filled(layout.n_setting_rows(), layout.m, 0.5),
            initial_levels,
        })
    }

    pub fn gene_count(&self) -> usize {
        self.statuses.rows() * self.statuses.cols()
            + self.settings.rows() * self.settings.cols()
            + self.initial_levels.len()
    }

    /// Checks dimensions and gene domains against a layout.
    pub fn validate(&self, layout: &ScheduleLayout) -> Result<()> {
        if self.statuses.rows() != layout.n_status_rows() || self.statuses.cols() != layout.m {
            return Err(Error::Dimension(format!(
                "status matrix is {}x{}, layout expects {}x{}",
                self.statuses.rows(),
                self.statuses.cols(),
                layout.n_status_rows(),
                layout.m
            )));
        }
        if self.settings.rows() != layout.n_setting_rows() || self.settings.cols() != layout.m {
            return Err(Error::Dimension(format!(
                "settings matrix is {}x{}, layout expects {}x{}",
                self.settings.rows(),
                self.settings.cols(),
                layout.n_setting_rows(),
                layout.m
            )));
        }
        if self.initial_levels.len() != layout.n_free_levels() {
            return Err(Error::Dimension(format!(
                "{} initial levels, layout expects {}",
                self.initial_levels.len(),
                layout.n_free_levels()
            )));
        }
        for (r, element) in layout.status_elements.iter().enumerate() {
            for k in 0..layout.m {
                let v = self.statuses.get(r, k);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!(
                        "status of '{}' at interval {k} is {v}, outside [0, 1]",
                        element.id
                    )));
                }
                if element.binary && v != 0.0 && v != 1.0 {
                    return Err(Error::Config(format!(
                        "status of binary element '{}' at interval {k} is {v}, not in {{0, 1}}",
                        element.id
                    )));
                }
            }
        }
        if let Some(v) = self.settings.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!("setting value {v} outside [0, 1]")));
        }
        if let Some(v) = self.initial_levels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!("initial level {v} outside [0, 1]")));
        }
        Ok(())
    }

    /// Absolute initial level (meters) for every tank: free tanks read from
    /// the decision vector, the rest from their fixed operating level.
    pub fn initial_levels_physical(&self, model: &NetworkModel, layout: &ScheduleLayout) -> Result<Vec<f64>> {
        self.validate(layout)?;
        let mut levels = Vec::with_capacity(model.tanks.len());
        for (i, tank) in model.tanks.iter().enumerate() {
            if let Some(slot) = layout.free_tanks.iter().position(|&t| t == i) {
                let range = tank.level_range()?;
                levels.push(range.denormalize(self.initial_levels[slot]));
            } else {
                levels.push(tank.initial_level_fixed.ok_or_else(|| {
                    Error::Config(format!(
                        "tank '{}' is not free but has no initial_level_fixed",
                        tank.id
                    ))
                })?);
            }
        }
        Ok(levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn toy_layout_dimensions() {
        let model = scenario::toy_model();
        let layout = ScheduleLayout::of(&model);
        assert_eq!(layout.n_status_rows(), 3);
        assert_eq!(layout.n_setting_rows(), 0);
        // Toy tanks all carry operating levels, so none are free by default.
        assert_eq!(layout.n_free_levels(), 0);
        assert_eq!(layout.gene_count(), 3 * 24);

        let free = ScheduleLayout::of(&model.with_all_tanks_free());
        assert_eq!(free.n_free_levels(), 3);
        assert_eq!(free.gene_count(), 3 * 24 + 3);
    }

    #[test]
    fn valves_and_settings_extend_the_layout() {
        let model = scenario::valve_and_settings_model();
        let layout = ScheduleLayout::of(&model);
        // 1 pump + 1 valve status rows; 1 variable-speed pump + 1 settable valve.
        assert_eq!(layout.n_status_rows(), 2);
        assert_eq!(layout.n_setting_rows(), 2);
        assert!(!layout.status_elements[1].binary);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let schedule = layout.random_schedule(&mut rng);
        schedule.validate(&layout).unwrap();
        assert_eq!(
            schedule.gene_count(),
            layout.gene_count(),
            "random schedules fill every slot"
        );
    }

    #[test]
    fn random_schedules_honor_gene_domains() {
        let model = scenario::toy_model().with_all_tanks_free();
        let layout = ScheduleLayout::of(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..32 {
            let s = layout.random_schedule(&mut rng);
            s.validate(&layout).unwrap();
            for v in s.statuses.data() {
                assert!(*v == 0.0 || *v == 1.0, "toy pumps are binary");
            }
        }
    }

    #[test]
    fn fractional_status_on_binary_pump_is_rejected() {
        let model = scenario::toy_model();
        let layout = ScheduleLayout::of(&model);
        let mut s = Schedule::zeros(&layout);
        s.statuses.set(0, 0, 0.5);
        assert!(s.validate(&layout).is_err());
    }
}

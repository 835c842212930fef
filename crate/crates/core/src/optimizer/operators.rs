//! Reproduction and mutation operators over mixed binary/real schedules.

use rand::Rng;

use crate::matrix::Matrix;
use crate::network::{Schedule, ScheduleLayout};

/// Linear combination with an explicit factor:
/// real genes take s̄_A + r·(s̄_B − s̄_A) clamped to [0, 1]; binary status
/// genes are copied from a random parent (drawn from `rng`).
pub fn combine_linear_with_factor<R: Rng + ?Sized>(
    parent_a: &Schedule,
    parent_b: &Schedule,
    layout: &ScheduleLayout,
    r_com: impl Fn(&mut R) -> f64,
    rng: &mut R,
) -> Schedule {
    let blend = |a: f64, b: f64, r: f64| (a + r * (b - a)).clamp(0.0, 1.0);
    let statuses = Matrix::from_fn(parent_a.statuses.rows(), parent_a.statuses.cols(), |row, k| {
        let (a, b) = (parent_a.statuses.get(row, k), parent_b.statuses.get(row, k));
        if layout.status_elements[row].binary {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        } else {
            blend(a, b, r_com(rng))
        }
    });
    let settings = Matrix::from_fn(parent_a.settings.rows(), parent_a.settings.cols(), |row, k| {
        blend(parent_a.settings.get(row, k), parent_b.settings.get(row, k), r_com(rng))
    });
    let initial_levels = parent_a
        .initial_levels
        .iter()
        .zip(&parent_b.initial_levels)
        .map(|(a, b)| blend(*a, *b, r_com(rng)))
        .collect();
    Schedule {
        statuses,
        settings,
        initial_levels,
    }
}

/// Linear-combination reproduction: one offspring from two parents with a
/// combination factor R_com uniform in [−ε, 1+ε). With `shared_r_com` a
/// single factor is drawn for the whole event, otherwise one per gene.
pub fn combine_linear<R: Rng + ?Sized>(
    parent_a: &Schedule,
    parent_b: &Schedule,
    layout: &ScheduleLayout,
    epsilon: f64,
    shared_r_com: bool,
    rng: &mut R,
) -> Schedule {
    let draw = move |rng: &mut R| -> f64 { rng.random::<f64>() * (1.0 + 2.0 * epsilon) - epsilon };
    if shared_r_com {
        let r = draw(rng);
        combine_linear_with_factor(parent_a, parent_b, layout, move |_| r, rng)
    } else {
        combine_linear_with_factor(parent_a, parent_b, layout, draw, rng)
    }
}

/// Splices two equally-shaped matrices at `split` along rows or columns:
/// indices below the split come from `a`, the rest from `b`.
fn split_matrix(a: &Matrix, b: &Matrix, row_wise: bool, split: usize) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |r, c| {
        let from_a = if row_wise { r < split } else { c < split };
        if from_a {
            a.get(r, c)
        } else {
            b.get(r, c)
        }
    })
}

/// Single-point crossover: each matrix independently picks a row-wise or
/// column-wise split (50/50) and a uniform split index; the initial-level
/// vector splits along its single axis.
pub fn crossover_split<R: Rng + ?Sized>(
    parent_a: &Schedule,
    parent_b: &Schedule,
    _layout: &ScheduleLayout,
    rng: &mut R,
) -> Schedule {
    let cross = |a: &Matrix, b: &Matrix, rng: &mut R| -> Matrix {
        if a.is_empty() {
            return a.clone();
        }
        let row_wise = rng.random_bool(0.5);
        let limit = if row_wise { a.rows() } else { a.cols() };
        let split = rng.random_range(0..=limit);
        split_matrix(a, b, row_wise, split)
    };
    let statuses = cross(&parent_a.statuses, &parent_b.statuses, rng);
    let settings = cross(&parent_a.settings, &parent_b.settings, rng);
    let initial_levels = if parent_a.initial_levels.is_empty() {
        Vec::new()
    } else {
        let split = rng.random_range(0..=parent_a.initial_levels.len());
        parent_a.initial_levels[..split]
            .iter()
            .chain(&parent_b.initial_levels[split..])
            .copied()
            .collect()
    };
    Schedule {
        statuses,
        settings,
        initial_levels,
    }
}

/// Uniform random mutation: each gene independently mutates with
/// probability `p_mut`; real genes are redrawn uniform in [0, 1), binary
/// genes flip.
pub fn mutate<R: Rng + ?Sized>(
    schedule: &Schedule,
    layout: &ScheduleLayout,
    p_mut: f64,
    rng: &mut R,
) -> Schedule {
    let mut out = schedule.clone();
    for row in 0..out.statuses.rows() {
        let binary = layout.status_elements[row].binary;
        for k in 0..out.statuses.cols() {
            if rng.random::<f64>() < p_mut {
                let v = if binary {
                    1.0 - out.statuses.get(row, k)
                } else {
                    rng.random::<f64>()
                };
                out.statuses.set(row, k, v);
            }
        }
    }
    for v in out.settings.data_mut() {
        if rng.random::<f64>() < p_mut {
            *v = rng.random::<f64>();
        }
    }
    for v in &mut out.initial_levels {
        if rng.random::<f64>() < p_mut {
            *v = rng.random::<f64>();
        }
    }
    out
}

//! Two families of solutions for the shear field `b(x, y) = (y, 0)` on
//! `y >= 0`, `0` below, which start from `e_2 δ_{(0, ∓ε)}` and converge to
//! different limits from the same initial current `e_2 δ_0`.

use serde::{Deserialize, Serialize};

use super::{residual_table, solve_gte, Region, ResidualKind, TransportError};
use crate::currents::{distance, Current, DiracCurrent};
use crate::flows::{least_squares_slope, BoundingBox, FieldSpec, FlowMap, TimeDependentField};
use crate::testforms::{FormDictionary, TimeCutoff};

/// Offsets `ε` of the approximating initial data.
pub const DEMO_EPSILONS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Residual ceilings for the two families.
const FIRST_TOLERANCE: f64 = 1e-10;
const SECOND_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub tolerance: f64,
    pub grid_intervals: usize,
    pub dict_size: usize,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            grid_intervals: 256,
            dict_size: 64,
            seed: 0,
        }
    }
}

/// Measurements for one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub eps: f64,
    /// Largest smooth residual of `T^{1,ε}` over forms and cutoffs.
    pub residual_first: f64,
    /// Largest smooth residual of `T^{2,ε}`.
    pub residual_second: f64,
    /// `max_t dist(T^{1,ε}_t, e_2 δ_0)`.
    pub distance_first_to_limit: f64,
    /// `max_t dist(T^{2,ε}_t, (e_2 + t e_1) δ_0)`.
    pub distance_second_to_limit: f64,
    /// `max_t dist(T^{2,ε}_t, (e_2 + t e_1) δ_{(tε, ε)})`: solver against the
    /// closed form.
    pub solver_error_second: f64,
    /// `dist(T^{1,ε}_0, T^{2,ε}_0)`.
    pub initial_gap: f64,
}

/// Machine-readable outcome of the demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonuniquenessVerdict {
    pub config: DemoConfig,
    pub rows: Vec<EpsilonRow>,
    pub max_residual_first: f64,
    pub max_residual_second: f64,
    pub residual_first_tolerance: f64,
    pub residual_second_tolerance: f64,
    /// `dist(T^1_0, T^2_0)`.
    pub limit_distance_at_start: f64,
    /// `dist(T^1_1, T^2_1)`.
    pub limit_distance_at_end: f64,
    /// `M(T^2_1 − T^1_1)`.
    pub mass_difference_at_end: f64,
    /// Least-squares slope of `log dist(T^{2,ε}, T^2)` against `log ε`.
    pub limit_rate: f64,
    pub residuals_ok: bool,
    pub same_start: bool,
    pub unit_mass_gap: bool,
    pub distinct_limits: bool,
    /// Both families solve the equation, share the initial datum and differ
    /// at `t = 1`.
    pub nonunique: bool,
}

fn tilted(t: f64, point: Vec<f64>) -> Result<Current, TransportError> {
    Ok(DiracCurrent::single(point, &[vec![t, 1.0]], 1.0)?.into())
}

fn vertical(point: Vec<f64>) -> Result<Current, TransportError> {
    tilted(0.0, point)
}

/// The demonstration with [`DemoConfig::default`].
pub fn nonuniqueness_demo() -> Result<NonuniquenessVerdict, TransportError> {
    nonuniqueness_demo_with(DemoConfig::default())
}

pub fn nonuniqueness_demo_with(config: DemoConfig) -> Result<NonuniquenessVerdict, TransportError> {
    let field = TimeDependentField::new(FieldSpec::ShearDeadZone, BoundingBox::cube(2, 1.0))?;
    let flow = FlowMap::new(field, config.tolerance)?;
    let dict = FormDictionary::generate(
        2,
        1,
        config.dict_size,
        config.seed,
        &[-0.5, -0.5],
        &[0.5, 0.5],
    )?;
    let cutoffs = TimeCutoff::standard_family();
    let n = config.grid_intervals.max(2) & !1;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let below = ResidualKind::Smooth {
        region: Region::HalfSpace {
            axis: 1,
            offset: 0.0,
            above: false,
        },
    };
    let above = ResidualKind::Smooth {
        region: Region::HalfSpace {
            axis: 1,
            offset: 0.0,
            above: true,
        },
    };
    let first_limit = vertical(vec![0.0, 0.0])?;

    let mut rows = Vec::with_capacity(DEMO_EPSILONS.len());
    for eps in DEMO_EPSILONS {
        let first = solve_gte(&flow, &vertical(vec![0.0, -eps])?, &grid)?;
        let second = solve_gte(&flow, &vertical(vec![0.0, eps])?, &grid)?;
        let max_res = |traj, kind| -> Result<f64, TransportError> {
            Ok(
                residual_table(traj, flow.field(), kind, &dict.forms, &cutoffs)?
                    .iter()
                    .map(|e| e.residual)
                    .fold(0.0, f64::max),
            )
        };
        let mut row = EpsilonRow {
            eps,
            residual_first: max_res(&first, below)?,
            residual_second: max_res(&second, above)?,
            distance_first_to_limit: 0.0,
            distance_second_to_limit: 0.0,
            solver_error_second: 0.0,
            initial_gap: distance(&first.currents[0], &second.currents[0], &dict)?,
        };
        for (i, &t) in grid.iter().enumerate() {
            let d1 = distance(&first.currents[i], &first_limit, &dict)?;
            let d2 = distance(&second.currents[i], &tilted(t, vec![0.0, 0.0])?, &dict)?;
            let e2 = distance(&second.currents[i], &tilted(t, vec![t * eps, eps])?, &dict)?;
            row.distance_first_to_limit = row.distance_first_to_limit.max(d1);
            row.distance_second_to_limit = row.distance_second_to_limit.max(d2);
            row.solver_error_second = row.solver_error_second.max(e2);
        }
        rows.push(row);
    }

    let second_start = tilted(0.0, vec![0.0, 0.0])?;
    let second_end = tilted(1.0, vec![0.0, 0.0])?;
    let limit_distance_at_start = distance(&first_limit, &second_start, &dict)?;
    let limit_distance_at_end = distance(&first_limit, &second_end, &dict)?;
    let mass_difference_at_end = second_end.combine(1.0, &first_limit, -1.0)?.mass()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.eps.ln(), r.distance_second_to_limit.ln()))
        .collect();
    let max_residual_first = rows.iter().map(|r| r.residual_first).fold(0.0, f64::max);
    let max_residual_second = rows.iter().map(|r| r.residual_second).fold(0.0, f64::max);
    let residuals_ok =
        max_residual_first <= FIRST_TOLERANCE && max_residual_second <= SECOND_TOLERANCE;
    let same_start = limit_distance_at_start <= 1e-12;
    let unit_mass_gap = (mass_difference_at_end - 1.0).abs() <= 1e-9;
    let distinct_limits = limit_distance_at_end > 1e-6;
    Ok(NonuniquenessVerdict {
        config,
        rows,
        max_residual_first,
        max_residual_second,
        residual_first_tolerance: FIRST_TOLERANCE,
        residual_second_tolerance: SECOND_TOLERANCE,
        limit_distance_at_start,
        limit_distance_at_end,
        mass_difference_at_end,
        limit_rate: least_squares_slope(&pts),
        residuals_ok,
        same_start,
        unit_mass_gap,
        distinct_limits,
        nonunique: residuals_ok && same_start && unit_mass_gap && distinct_limits,
    })
}

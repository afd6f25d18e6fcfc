//! Weak-formulation residuals of trajectories and grid-refinement studies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_gte, TransportError};
use crate::currents::{Current, QuadratureAtom, Trajectory};
use crate::exterior::MultiVector;
use crate::flows::{least_squares_slope, FlowMap, TimeDependentField};
use crate::quadrature::simpson_weights;
use crate::testforms::{FormDictionary, TestForm, TimeCutoff};

/// Open set on which a field is smooth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    Everywhere,
    /// `{x_axis > offset}` if `above`, else `{x_axis < offset}`.
    HalfSpace {
        axis: usize,
        offset: f64,
        above: bool,
    },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            Region::Everywhere => true,
            Region::HalfSpace {
                axis,
                offset,
                above,
            } => {
                if above {
                    x[axis] > offset
                } else {
                    x[axis] < offset
                }
            }
        }
    }
}

/// Which weak formulation a residual tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResidualKind {
    /// `∫ ⟨T_t, ω⟩ψ' − ⟨L_{b_t} T_t, ω⟩ψ dt` for normal currents.
    Weak,
    /// `∫ ⟨T_t, ω⟩ψ' + ⟨T_t, L_{b_t} ω⟩ψ dt` with `b` smooth on `region`.
    Smooth { region: Region },
}

impl ResidualKind {
    /// The weak form when `∂T` has finite mass, the smooth one otherwise.
    pub fn for_current(current: &Current, region: Region) -> Self {
        match current {
            Current::Dirac(_) if current.grade() >= 1 => ResidualKind::Smooth { region },
            _ => ResidualKind::Weak,
        }
    }
}

/// Quadrature atoms of one trajectory node.
struct Node {
    t: f64,
    weight: f64,
    atoms: Vec<QuadratureAtom>,
    /// `b ∧ ∂T`, weak kind only.
    drift_boundary: Vec<QuadratureAtom>,
    /// `b ∧ T`, weak kind only.
    drift_current: Vec<QuadratureAtom>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn wedge_drift(
    field: &TimeDependentField,
    t: f64,
    atoms: &[QuadratureAtom],
) -> Result<(Vec<QuadratureAtom>, f64), TransportError> {
    let mut out = Vec::with_capacity(atoms.len());
    let mut total = 0.0;
    for a in atoms {
        let b = field.value(t, &a.point);
        total += a.weight.abs() * norm(&b) * a.orientation.coeff_norm();
        if a.orientation.grade() < a.orientation.dim() {
            out.push(QuadratureAtom {
                point: a.point.clone(),
                orientation: MultiVector::from_vector(&b)?.wedge(&a.orientation)?,
                weight: a.weight,
            });
        }
    }
    Ok((out, total))
}

fn prepare(
    traj: &Trajectory,
    field: &TimeDependentField,
    kind: ResidualKind,
    cutoffs: &[TimeCutoff],
) -> Result<Vec<Node>, TransportError> {
    if traj.len() < 3 || traj.times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TransportError::Invalid(
            "residuals need at least three strictly increasing grid nodes".into(),
        ));
    }
    if traj.currents.iter().any(|c| c.dim() != field.dim()) {
        return Err(TransportError::Invalid(
            "trajectory and field dimensions differ".into(),
        ));
    }
    let weights = simpson_weights(&traj.times);
    let active = |t: f64| cutoffs.iter().any(|c| (t - c.center).abs() < c.radius);
    let mut drift_mass = 0.0;
    let nodes = traj
        .times
        .iter()
        .zip(&traj.currents)
        .zip(&weights)
        .filter(|((t, _), w)| **w != 0.0 && active(**t))
        .map(|((&t, current), &weight)| {
            let atoms = current.atomize()?;
            let mut node = Node {
                t,
                weight,
                atoms,
                drift_boundary: Vec::new(),
                drift_current: Vec::new(),
            };
            match kind {
                ResidualKind::Weak => {
                    let boundary = match current {
                        _ if current.grade() == 0 => Vec::new(),
                        Current::Simplicial(s) => Current::from(s.boundary()?).atomize()?,
                        Current::Dirac(_) => {
                            return Err(TransportError::BoundaryNotNormal(current.grade()))
                        }
                    };
                    let (bd, m1) = wedge_drift(field, t, &boundary)?;
                    let (bt, m2) = wedge_drift(field, t, &node.atoms)?;
                    node.drift_boundary = bd;
                    node.drift_current = bt;
                    Ok((node, weight * (m1 + m2)))
                }
                ResidualKind::Smooth { region } => {
                    if let Some(a) = node.atoms.iter().find(|a| !region.contains(&a.point)) {
                        return Err(TransportError::OutsideRegion {
                            t,
                            point: a.point.clone(),
                        });
                    }
                    Ok((node, 0.0))
                }
            }
        })
        .collect::<Result<Vec<_>, TransportError>>()?
        .into_iter()
        .map(|(n, m)| {
            drift_mass += m;
            n
        })
        .collect();
    if !f64::is_finite(drift_mass) {
        return Err(TransportError::DriftNotIntegrable);
    }
    Ok(nodes)
}

fn pair_atoms(atoms: &[QuadratureAtom], form: &TestForm) -> Result<f64, TransportError> {
    let mut s = 0.0;
    for a in atoms {
        if form.touches(&a.point) {
            s += a.weight * a.orientation.pair(&form.eval(&a.point))?;
        }
    }
    Ok(s)
}

/// Per node: `(t, W, ⟨T, ω⟩, ⟨T, L_b ω⟩)`, where for the weak kind the last
/// entry is `−⟨L_b T, ω⟩ = ⟨b ∧ ∂T, ω⟩ + ⟨b ∧ T, dω⟩`.
fn node_values(
    nodes: &[Node],
    field: &TimeDependentField,
    kind: ResidualKind,
    form: &TestForm,
) -> Result<Vec<(f64, f64, f64, f64)>, TransportError> {
    let dform = form.exterior_derivative();
    nodes
        .iter()
        .map(|n| {
            let a = pair_atoms(&n.atoms, form)?;
            let l = match kind {
                ResidualKind::Weak => {
                    let mut l = pair_atoms(&n.drift_boundary, form)?;
                    if !n.drift_current.is_empty() {
                        l += pair_atoms(&n.drift_current, &dform)?;
                    }
                    l
                }
                ResidualKind::Smooth { .. } => {
                    let slice = field.at(n.t);
                    let lie = form.lie_derivative(&slice);
                    let mut l = 0.0;
                    for at in &n.atoms {
                        if form.touches(&at.point) {
                            l += at.weight * at.orientation.pair(&lie.eval(&at.point)?)?;
                        }
                    }
                    l
                }
            };
            Ok((n.t, n.weight, a, l))
        })
        .collect()
}

/// `(|Σ W (A ψ' + L ψ)|, Σ W (|A ψ'| + |L ψ|))`.
fn combine(values: &[(f64, f64, f64, f64)], psi: &TimeCutoff) -> (f64, f64) {
    let (mut sum, mut scale) = (0.0, 0.0);
    for &(t, w, a, l) in values {
        let (p, dp) = (psi.value(t), psi.derivative(t));
        sum += w * (a * dp + l * p);
        scale += w * ((a * dp).abs() + (l * p).abs());
    }
    (sum.abs(), scale)
}

/// One `(ω, ψ)` residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub form: usize,
    pub cutoff: usize,
    pub residual: f64,
    /// `Σ W (|⟨T, ω⟩ψ'| + |⟨L_b T, ω⟩ψ|)`, the size of the cancelling terms.
    pub scale: f64,
}

/// Residuals of `traj` for every form of `forms` and every cutoff, with
/// composite Simpson weights on the trajectory grid.
pub fn residual_table(
    traj: &Trajectory,
    field: &TimeDependentField,
    kind: ResidualKind,
    forms: &[TestForm],
    cutoffs: &[TimeCutoff],
) -> Result<Vec<ResidualEntry>, TransportError> {
    let grade = traj.currents.first().map_or(0, Current::grade);
    if let Some(f) = forms
        .iter()
        .find(|f| f.grade() != grade || f.dim() != field.dim())
    {
        return Err(TransportError::Invalid(format!(
            "form of grade {} in R^{} against a {grade}-current in R^{}",
            f.grade(),
            f.dim(),
            field.dim()
        )));
    }
    let nodes = prepare(traj, field, kind, cutoffs)?;
    let per_form: Vec<Vec<ResidualEntry>> = forms
        .par_iter()
        .enumerate()
        .map(|(i, form)| {
            let values = node_values(&nodes, field, kind, form)?;
            Ok(cutoffs
                .iter()
                .enumerate()
                .map(|(j, psi)| {
                    let (residual, scale) = combine(&values, psi);
                    ResidualEntry {
                        form: i,
                        cutoff: j,
                        residual,
                        scale,
                    }
                })
                .collect())
        })
        .collect::<Result<_, TransportError>>()?;
    Ok(per_form.into_iter().flatten().collect())
}

/// `|∫ ⟨T_t, ω⟩ψ'(t) − ⟨L_{b_t} T_t, ω⟩ψ(t) dt|` with
/// `⟨L_b T, ω⟩ = −⟨b ∧ ∂T, ω⟩ − ⟨b ∧ T, dω⟩`. Requires `∂T_t` to be a
/// finite-mass current.
pub fn weak_residual(
    traj: &Trajectory,
    field: &TimeDependentField,
    form: &TestForm,
    psi: &TimeCutoff,
) -> Result<f64, TransportError> {
    let t = residual_table(
        traj,
        field,
        ResidualKind::Weak,
        std::slice::from_ref(form),
        &[*psi],
    )?;
    Ok(t[0].residual)
}

/// `|∫ ⟨T_t, ω⟩ψ'(t) + ⟨T_t, L_{b_t} ω⟩ψ(t) dt|` with the classical Lie
/// derivative of `ω`; every support point must stay in `region` while
/// `ψ > 0`.
pub fn smooth_weak_residual(
    traj: &Trajectory,
    field: &TimeDependentField,
    region: Region,
    form: &TestForm,
    psi: &TimeCutoff,
) -> Result<f64, TransportError> {
    let t = residual_table(
        traj,
        field,
        ResidualKind::Smooth { region },
        std::slice::from_ref(form),
        &[*psi],
    )?;
    Ok(t[0].residual)
}

/// Summary of one grid level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualLevel {
    pub grid_intervals: usize,
    pub step: f64,
    pub max_residual: f64,
    pub max_scale: f64,
}

/// One CSV row: a residual at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub grid_intervals: usize,
    pub form: usize,
    pub cutoff: usize,
    pub residual: f64,
}

/// Residuals of `solve_gte` output across uniform grid refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub kind: ResidualKind,
    pub dictionary_size: usize,
    pub cutoffs: Vec<TimeCutoff>,
    pub levels: Vec<ResidualLevel>,
    pub rows: Vec<ResidualRow>,
    /// Residuals below this level are treated as round-off.
    pub noise_floor: f64,
    /// Observed order: minus the least-squares slope of `log r` against
    /// `log N` over levels above the noise floor; `None` when fewer than two
    /// levels are above it.
    pub slope: Option<f64>,
    pub final_max_residual: f64,
}

impl ResidualReport {
    /// Final residual at most `max_final`, and observed order at least
    /// `min_slope` unless the residuals already sit at the noise floor.
    pub fn passes(&self, min_slope: f64, max_final: f64) -> bool {
        self.final_max_residual <= max_final && self.slope.is_none_or(|s| s >= min_slope)
    }

    /// One row per `(ω, ψ, refinement)`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Observed order from `(N, r)` pairs, ignoring residuals at or below `floor`.
pub fn refinement_slope(levels: &[(usize, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|(_, r)| *r > floor)
        .map(|&(n, r)| ((n as f64).ln(), r.ln()))
        .collect();
    (pts.len() >= 2).then(|| -least_squares_slope(&pts))
}

/// Runs `solve_gte` on uniform grids with the given numbers of intervals and
/// evaluates every `(ω, ψ)` residual at each level.
pub fn residual_study(
    flow: &FlowMap,
    initial: &Current,
    kind: ResidualKind,
    dict: &FormDictionary,
    cutoffs: &[TimeCutoff],
    grid_intervals: &[usize],
) -> Result<ResidualReport, TransportError> {
    if grid_intervals.is_empty() || grid_intervals.iter().any(|&n| n < 2 || n % 2 == 1) {
        return Err(TransportError::Invalid(
            "grid sizes must be even and at least 2".into(),
        ));
    }
    let mut levels = Vec::new();
    let mut rows = Vec::new();
    for &n in grid_intervals {
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let traj = solve_gte(flow, initial, &grid)?;
        let table = residual_table(&traj, flow.field(), kind, &dict.forms, cutoffs)?;
        levels.push(ResidualLevel {
            grid_intervals: n,
            step: 1.0 / n as f64,
            max_residual: table.iter().map(|e| e.residual).fold(0.0, f64::max),
            max_scale: table.iter().map(|e| e.scale).fold(0.0, f64::max),
        });
        rows.extend(table.into_iter().map(|e| ResidualRow {
            grid_intervals: n,
            form: e.form,
            cutoff: e.cutoff,
            residual: e.residual,
        }));
    }
    let scale = levels.iter().map(|l| l.max_scale).fold(0.0, f64::max);
    let noise_floor = scale * (1e-9 + 10.0 * flow.tolerance()) + 1e-14;
    let pairs: Vec<(usize, f64)> = levels
        .iter()
        .map(|l| (l.grid_intervals, l.max_residual))
        .collect();
    Ok(ResidualReport {
        kind,
        dictionary_size: dict.len(),
        cutoffs: cutoffs.to_vec(),
        slope: refinement_slope(&pairs, noise_floor),
        final_max_residual: levels.last().map_or(0.0, |l| l.max_residual),
        levels,
        rows,
        noise_floor,
    })
}

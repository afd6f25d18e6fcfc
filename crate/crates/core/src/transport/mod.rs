//! Pushforward of currents along flows and AC_t Lip_x maps, the solution
//! formula `T_t = (Φ_t^0)_* T̄`, weak-formulation residuals, space-time
//! currents and the finite-mass non-uniqueness example.

mod demo;
mod residual;
mod spacetime;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::acreg::{ACLipApproximation, ACLipFunction, AcregError};
use crate::currents::{
    Current, CurrentError, DiracAtom, DiracCurrent, SimplicialCurrent, Trajectory,
};
use crate::exterior::{ExteriorError, MultiVector};
use crate::flows::{richardson, DirectionalDerivative, FlowError, FlowMap};
use crate::testforms::FormError;

pub use demo::{
    nonuniqueness_demo, nonuniqueness_demo_with, DemoConfig, EpsilonRow, NonuniquenessVerdict,
    DEMO_EPSILONS,
};
pub use residual::{
    refinement_slope, residual_study, residual_table, smooth_weak_residual, weak_residual, Region,
    ResidualEntry, ResidualKind, ResidualLevel, ResidualReport, ResidualRow,
};
pub use spacetime::{
    approx_pushforward_sequence, interior_forms, spacetime_cylinder, ApproxSequence,
    SpaceTimeCurrent, SpaceTimeCylinder,
};

/// Default largest finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Acreg(#[from] AcregError),
    #[error("the boundary of a Dirac {0}-current has no finite mass; use smooth_weak_residual")]
    BoundaryNotNormal(usize),
    #[error("support point {point:?} leaves the smooth region at t = {t}")]
    OutsideRegion { t: f64, point: Vec<f64> },
    #[error("mass {mass} at t = {t} exceeds the bound {bound}")]
    MassBound { t: f64, mass: f64, bound: f64 },
    #[error("drift integral ∫|b| d(‖T‖ + ‖∂T‖) dt is not finite")]
    DriftNotIntegrable,
    #[error("structure precondition violated: {0}")]
    Structure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// A map `f: R^n → R^m` with directional derivatives.
pub trait PointMap: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, TransportError>;

    /// Largest finite-difference step usable at `x`.
    fn max_step(&self, _x: &[f64]) -> f64 {
        DEFAULT_STEP
    }

    /// Derivative of the map at `x` along the unit vector `v`.
    fn derivative(&self, x: &[f64], v: &[f64]) -> Result<DirectionalDerivative, TransportError> {
        central_richardson(|p| self.apply(p), x, v, self.max_step(x))
    }
}

/// Central differences with steps `h0, h0/2, h0/4` and Richardson
/// extrapolation.
pub fn central_richardson(
    f: impl Fn(&[f64]) -> Result<Vec<f64>, TransportError>,
    x: &[f64],
    v: &[f64],
    h0: f64,
) -> Result<DirectionalDerivative, TransportError> {
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(TransportError::Invalid(format!(
            "finite-difference step {h0} at {x:?}"
        )));
    }
    let mut q = Vec::with_capacity(3);
    for k in 0..3 {
        let h = h0 / f64::from(1u32 << k);
        let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
        let (p, m) = (f(&plus)?, f(&minus)?);
        q.push(
            p.iter()
                .zip(&m)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    Ok(richardson(&q))
}

/// `x ↦ Φ_t^s(x)`.
#[derive(Clone, Copy)]
pub struct FlowAt<'a> {
    pub flow: &'a FlowMap,
    pub s: f64,
    pub t: f64,
}

impl PointMap for FlowAt<'_> {
    fn input_dim(&self) -> usize {
        self.flow.dim()
    }

    fn output_dim(&self) -> usize {
        self.flow.dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, TransportError> {
        Ok(self.flow.flow(self.s, self.t, x)?)
    }

    fn derivative(&self, x: &[f64], v: &[f64]) -> Result<DirectionalDerivative, TransportError> {
        Ok(self
            .flow
            .flow_directional_derivative(self.s, self.t, x, v)?)
    }
}

/// `Ψ⁻¹(t, y) = (t, Φ_0^t(y))` as a map on `R^{1+d}`.
#[derive(Clone, Copy)]
pub struct PsiInverse<'a>(pub &'a FlowMap);

impl PointMap for PsiInverse<'_> {
    fn input_dim(&self) -> usize {
        1 + self.0.dim()
    }

    fn output_dim(&self) -> usize {
        1 + self.0.dim()
    }

    fn apply(&self, p: &[f64]) -> Result<Vec<f64>, TransportError> {
        Ok(self.0.psi_inverse(p[0], &p[1..])?.to_vec())
    }

    fn max_step(&self, p: &[f64]) -> f64 {
        window_step(p[0], (0.0, 1.0))
    }
}

/// A linear map `x ↦ A x`, with exact derivatives.
#[derive(Debug, Clone)]
pub struct LinearMap(pub DMatrix<f64>);

impl PointMap for LinearMap {
    fn input_dim(&self) -> usize {
        self.0.ncols()
    }

    fn output_dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, TransportError> {
        if x.len() != self.0.ncols() {
            return Err(TransportError::Invalid(format!(
                "point of dimension {}",
                x.len()
            )));
        }
        Ok((&self.0 * nalgebra::DVector::from_column_slice(x))
            .as_slice()
            .to_vec())
    }

    fn derivative(&self, _x: &[f64], v: &[f64]) -> Result<DirectionalDerivative, TransportError> {
        Ok(DirectionalDerivative {
            value: self.apply(v)?,
            error_estimate: 0.0,
            converged: true,
        })
    }
}

fn window_step(t: f64, (lo, hi): (f64, f64)) -> f64 {
    DEFAULT_STEP.min((t - lo) / 4.0).min((hi - t) / 4.0)
}

/// An AC_t Lip_x map read as a map on `R^{1+d}`: `(t, x) ↦ f(t, x)`.
#[derive(Clone, Copy)]
pub struct AcLipMap<'a> {
    f: &'a ACLipFunction,
    output_dim: usize,
}

impl<'a> AcLipMap<'a> {
    pub fn new(f: &'a ACLipFunction) -> Self {
        let (lo, _) = f.box_bounds();
        let output_dim = f.eval(f.upper_gradient().window().0, lo).len();
        Self { f, output_dim }
    }
}

impl PointMap for AcLipMap<'_> {
    fn input_dim(&self) -> usize {
        1 + self.f.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn apply(&self, p: &[f64]) -> Result<Vec<f64>, TransportError> {
        Ok(self.f.eval(p[0], &p[1..]))
    }

    fn max_step(&self, p: &[f64]) -> f64 {
        window_step(p[0], self.f.upper_gradient().window())
    }
}

/// The approximation `f_j` of an AC_t Lip_x map, read as a map on `R^{1+d}`.
#[derive(Clone, Copy)]
pub struct AcLipApproxMap<'a> {
    f: &'a ACLipApproximation,
    output_dim: usize,
}

impl<'a> AcLipApproxMap<'a> {
    pub fn new(f: &'a ACLipApproximation) -> Self {
        Self {
            f,
            output_dim: AcLipMap::new(f.source()).output_dim,
        }
    }
}

impl PointMap for AcLipApproxMap<'_> {
    fn input_dim(&self) -> usize {
        1 + self.f.source().input_dim()
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn apply(&self, p: &[f64]) -> Result<Vec<f64>, TransportError> {
        Ok(self.f.eval(p[0], &p[1..]))
    }

    fn max_step(&self, p: &[f64]) -> f64 {
        window_step(p[0], self.f.source().upper_gradient().window())
    }
}

/// Factors `v_1, .., v_k` with `τ = v_1 ∧ .. ∧ v_k`.
pub fn witness_vectors(tau: &MultiVector) -> Result<Vec<Vec<f64>>, TransportError> {
    if let Some(w) = tau.witness() {
        return Ok(w.to_vec());
    }
    let (n, k) = (tau.dim(), tau.grade());
    match k {
        0 => Ok(Vec::new()),
        1 => Ok(vec![tau.coeffs().to_vec()]),
        _ if k == n => Ok((0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = if i == 0 { tau.coeffs()[0] } else { 1.0 };
                e
            })
            .collect()),
        _ => Err(ExteriorError::MassUndefined.into()),
    }
}

/// Result of a pushforward.
#[derive(Debug, Clone)]
pub struct Pushforward {
    pub current: Current,
    /// Atoms whose derivative failed the Richardson ratio test.
    pub flagged_atoms: usize,
    pub max_error_estimate: f64,
    /// Whether a simplicial current was subdivided once before mapping.
    pub refined: bool,
}

/// Edge-length distortion above which a simplicial current is refined once.
pub const DISTORTION_LIMIT: f64 = 2.0;

/// `Λ^k Df[v_1 ∧ .. ∧ v_k]` along the witness of `τ`.
fn push_orientation(
    map: &(impl PointMap + ?Sized),
    x: &[f64],
    tau: &MultiVector,
) -> Result<(MultiVector, bool, f64), TransportError> {
    let m = map.output_dim();
    if tau.grade() == 0 {
        return Ok((MultiVector::scalar(m, tau.coeffs()[0])?, false, 0.0));
    }
    let mut images = Vec::with_capacity(tau.grade());
    let (mut flagged, mut err) = (false, 0.0f64);
    for v in witness_vectors(tau)? {
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len == 0.0 {
            images.push(vec![0.0; m]);
            continue;
        }
        let unit: Vec<f64> = v.iter().map(|c| c / len).collect();
        let d = map.derivative(x, &unit)?;
        flagged |= !d.converged;
        err = err.max(d.error_estimate * len);
        images.push(d.value.iter().map(|c| c * len).collect());
    }
    Ok((MultiVector::from_vectors(m, &images)?, flagged, err))
}

fn max_distortion(before: &SimplicialCurrent, after: &SimplicialCurrent) -> f64 {
    let len = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    let mut worst = 1.0f64;
    for (s, _) in before.simplices() {
        for (i, &a) in s.iter().enumerate() {
            for &b in &s[i + 1..] {
                let l0 = len(&before.vertices()[a], &before.vertices()[b]);
                let l1 = len(&after.vertices()[a], &after.vertices()[b]);
                if l0 > 0.0 && l1 > 0.0 {
                    worst = worst.max(l1 / l0).max(l0 / l1);
                } else if l0 != l1 {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    worst
}

/// `f_* T`. Dirac atoms move to `f(x)` with orienting vector
/// `Λ^k Df(x)[τ]` along the witness and unchanged weight; simplicial
/// currents move their vertices, with one level of refinement when an edge
/// is stretched or shrunk by more than [`DISTORTION_LIMIT`].
pub fn pushforward(
    map: &(impl PointMap + ?Sized),
    current: &Current,
) -> Result<Pushforward, TransportError> {
    if map.input_dim() != current.dim() {
        return Err(CurrentError::DimensionMismatch(map.input_dim(), current.dim()).into());
    }
    match current {
        Current::Dirac(c) => {
            let moved: Vec<(DiracAtom, bool, f64)> = c
                .atoms()
                .par_iter()
                .map(|a| {
                    let point = map.apply(&a.point)?;
                    let (orientation, flagged, err) =
                        push_orientation(map, &a.point, &a.orientation)?;
                    Ok((
                        DiracAtom {
                            point,
                            orientation,
                            weight: a.weight,
                        },
                        flagged,
                        err,
                    ))
                })
                .collect::<Result<_, TransportError>>()?;
            let flagged_atoms = moved.iter().filter(|m| m.1).count();
            let max_error_estimate = moved.iter().map(|m| m.2).fold(0.0, f64::max);
            let atoms = moved.into_iter().map(|m| m.0).collect();
            Ok(Pushforward {
                current: DiracCurrent::new(map.output_dim(), current.grade(), atoms)?.into(),
                flagged_atoms,
                max_error_estimate,
                refined: false,
            })
        }
        Current::Simplicial(c) => {
            let move_all = |s: &SimplicialCurrent| -> Result<SimplicialCurrent, TransportError> {
                let images: Vec<Vec<f64>> = s
                    .vertices()
                    .par_iter()
                    .map(|v| map.apply(v))
                    .collect::<Result<_, _>>()?;
                Ok(SimplicialCurrent::new(
                    map.output_dim(),
                    s.grade(),
                    images,
                    s.simplices().to_vec(),
                )?)
            };
            let mut moved = move_all(c)?;
            let mut refined = false;
            if c.grade() >= 1 && c.grade() <= 3 && max_distortion(c, &moved) > DISTORTION_LIMIT {
                moved = move_all(&c.refine()?)?;
                refined = true;
            }
            Ok(Pushforward {
                current: moved.into(),
                flagged_atoms: 0,
                max_error_estimate: 0.0,
                refined,
            })
        }
    }
}

/// Relative slack on the mass bound `M(T_t) <= e^{k∫Lip} M(T̄)`.
pub const MASS_SLACK: f64 = 1e-6;

/// `T_{t_i} = (Φ_{t_i}^0)_* T̄` on the grid, with the mass bound of the
/// Gronwall estimate asserted at every node.
pub fn solve_gte(
    flow: &FlowMap,
    initial: &Current,
    grid: &[f64],
) -> Result<Trajectory, TransportError> {
    if grid.is_empty()
        || grid.iter().any(|t| !(0.0..=1.0).contains(t))
        || grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(TransportError::Invalid(
            "time grid must be strictly increasing inside [0, 1]".into(),
        ));
    }
    if initial.dim() != flow.dim() {
        return Err(CurrentError::DimensionMismatch(flow.dim(), initial.dim()).into());
    }
    let k = initial.grade() as f64;
    let mass0 = initial.mass()?;
    let pushed: Vec<Pushforward> = grid
        .par_iter()
        .map(|&t| {
            let p = pushforward(&FlowAt { flow, s: 0.0, t }, initial)?;
            let bound =
                (k * flow.field().lip_integral(0.0, t)?).exp() * mass0 * (1.0 + MASS_SLACK) + 1e-12;
            let mass = p.current.mass()?;
            if mass > bound {
                return Err(TransportError::MassBound { t, mass, bound });
            }
            Ok(p)
        })
        .collect::<Result<_, TransportError>>()?;
    let flagged: usize = pushed.iter().map(|p| p.flagged_atoms).sum();
    let mut traj = Trajectory::new(
        grid.to_vec(),
        pushed.into_iter().map(|p| p.current).collect(),
    )?;
    traj.flagged_atoms = flagged;
    Ok(traj)
}

//! Flow maps `Φ_t^s` integrated in budget time.
//!
//! The interval of integration is cut into cells carrying equal increments of
//! `Λ(t) = ∫_0^t λ`, `λ = 1 + ‖b_t‖ + Lip(b_t)`. Each cell is reparametrized
//! by a monotone cubic `θ(σ)` whose endpoint slopes follow `1/λ`, which turns
//! an integrable singularity of the time profile at a cell end into a smooth
//! integrand in `σ`. The ODE in `σ` is solved with the two-stage Gauss–Legendre
//! method (never evaluated at cell ends) and step doubling.

use rayon::prelude::*;

use super::field::TimeDependentField;
use super::FlowError;
use crate::quadrature;

const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const MIN_CELLS: usize = 32;
const MAX_SUBSTEPS: usize = 1 << 16;

/// Limits on bisecting a step across a kink: depth, and the time width below
/// which a step is taken as is.
const MAX_SPLIT_DEPTH: usize = 48;
const MIN_SPLIT_WIDTH: f64 = 1e-10;

/// One two-stage Gauss–Legendre step of size `h` from `sigma`, solving the
/// stage equations by fixed-point iteration. Returns the new state and the
/// stage points.
fn gl_step<F>(rhs: &F, sigma: f64, h: f64, y: &[f64]) -> Option<(Vec<f64>, [Vec<f64>; 2])>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let d = y.len();
    let (c1, c2) = (0.5 - SQRT3_6, 0.5 + SQRT3_6);
    let (a11, a12, a21, a22) = (0.25, 0.25 - SQRT3_6, 0.25 + SQRT3_6, 0.25);
    let mut x1 = vec![0.0; d];
    let mut x2 = vec![0.0; d];
    let mut k1 = rhs(sigma + c1 * h, y);
    let mut k2 = rhs(sigma + c2 * h, y);
    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut done = false;
    let mut last = f64::INFINITY;
    for _ in 0..80 {
        for i in 0..d {
            x1[i] = y[i] + h * (a11 * k1[i] + a12 * k2[i]);
            x2[i] = y[i] + h * (a21 * k1[i] + a22 * k2[i]);
        }
        let n1 = rhs(sigma + c1 * h, &x1);
        let n2 = rhs(sigma + c2 * h, &x2);
        let change = k1
            .iter()
            .zip(&n1)
            .chain(k2.iter().zip(&n2))
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
            * h;
        k1 = n1;
        k2 = n2;
        if change <= 2.0 * f64::EPSILON * scale {
            done = true;
            break;
        }
        last = change;
    }
    if !done && last > 1e-13 * scale {
        return None;
    }
    let next: Vec<f64> = (0..d).map(|i| y[i] + 0.5 * h * (k1[i] + k2[i])).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((next, [x1, x2]))
}

/// A point of space-time `R × R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: Vec<f64>,
}

impl SpaceTimePoint {
    /// `ι_t(x) = (t, x)`.
    pub fn immerse(t: f64, x: &[f64]) -> Self {
        Self { t, x: x.to_vec() }
    }

    /// Time projection `𝐭`.
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Space projection `𝐩`.
    pub fn space(&self) -> &[f64] {
        &self.x
    }

    /// `(t, x_1, .., x_d)`.
    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.t)
            .chain(self.x.iter().copied())
            .collect()
    }
}

/// Finite-difference derivative with its Richardson error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalDerivative {
    pub value: Vec<f64>,
    pub error_estimate: f64,
    /// False when the Richardson ratio test failed.
    pub converged: bool,
}

/// Convergence study of `[Ψ⁻¹((t,y) + h(1, b_t(y))) − Ψ⁻¹(t,y)] / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientStudy {
    pub steps: Vec<f64>,
    /// Space-time quotients `(q_t, q_x)`.
    pub quotients: Vec<Vec<f64>>,
    /// `|q − (1, 0)|` per step.
    pub errors: Vec<f64>,
    /// Noise level of each error due to the integrator tolerance.
    pub noise: Vec<f64>,
    /// Least-squares slope of `log error` against `log h` over the steps
    /// above the noise level, if at least three remain.
    pub order: Option<f64>,
    /// Either `order >= 0.5`, or every error is already at the noise level.
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Evaluator of `Φ_t^s(x)` and of the space-time maps `Ψ`, `Ψ⁻¹`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    field: TimeDependentField,
    tolerance: f64,
    /// Cell boundaries on `[0, 1]`, including singular times and breakpoints.
    nodes: Vec<f64>,
    /// `Λ` at each node.
    budget: Vec<f64>,
    /// Spacing of the uniform cells used outside `[0, 1]`.
    outside_step: f64,
}

impl FlowMap {
    pub fn new(field: TimeDependentField, tolerance: f64) -> Result<Self, FlowError> {
        if !(tolerance > 0.0) {
            return Err(FlowError::InvalidParameter(format!(
                "tolerance {tolerance} must be positive"
            )));
        }
        let density = |t: f64| 1.0 + field.sup(t) + field.lip(t);
        let pieces = field.pieces(0.0, 1.0);
        let piece_budget: Vec<f64> = pieces
            .iter()
            .map(|&(a, b)| {
                quadrature::adaptive(density, a, b, 1e-12)
                    .map_err(|e| FlowError::NotInClassL(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let total: f64 = piece_budget.iter().sum();
        if !total.is_finite() {
            return Err(FlowError::NotInClassL(format!(
                "budget integral is {total}"
            )));
        }
        let cells = MIN_CELLS.max((2.0 * total).ceil() as usize);
        let mut nodes = vec![0.0];
        let mut budget = vec![0.0];
        for (&(a, b), &pb) in pieces.iter().zip(&piece_budget) {
            let m = ((cells as f64 * pb / total).ceil() as usize).max(1);
            let base = *budget.last().unwrap();
            let mut left = a;
            let mut left_budget = 0.0;
            for k in 1..m {
                let target = pb * k as f64 / m as f64;
                // bisection for ∫_a^τ λ = target, integrating from the last node
                let (mut lo, mut hi) = (left, b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let v = left_budget
                        + quadrature::adaptive(density, left, mid, 1e-13)
                            .map_err(|e| FlowError::NotInClassL(e.to_string()))?;
                    if v < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                left_budget += quadrature::adaptive(density, left, tau, 1e-13)
                    .map_err(|e| FlowError::NotInClassL(e.to_string()))?;
                left = tau;
                nodes.push(tau);
                budget.push(base + left_budget);
            }
            nodes.push(b);
            budget.push(base + pb);
        }
        Ok(Self {
            field,
            tolerance,
            nodes,
            budget,
            outside_step: 1.0 / cells as f64,
        })
    }

    pub fn field(&self) -> &TimeDependentField {
        &self.field
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// `Λ(t) = ∫_0^t (1 + ‖b_r‖ + Lip(b_r)) dr` for `t ∈ [0, 1]`.
    pub fn budget(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let k = self.nodes.partition_point(|&n| n <= t).saturating_sub(1);
        let k = k.min(self.nodes.len() - 2);
        self.budget[k] + self.cell_budget(self.nodes[k], t)
    }

    /// Budget table nodes on `[0, 1]`.
    pub fn budget_nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn density(&self, t: f64) -> f64 {
        1.0 + self.field.sup(t) + self.field.lip(t)
    }

    fn cell_budget(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        quadrature::adaptive(|t| self.density(t), a.min(b), a.max(b), 1e-13)
            .unwrap_or(f64::INFINITY)
    }

    /// Ordered cell boundaries from `s` to `t`.
    fn cell_ends(&self, s: f64, t: f64) -> Vec<f64> {
        let (lo, hi) = (s.min(t), s.max(t));
        let mut pts = vec![lo];
        if lo < 0.0 {
            let mut k = (lo / self.outside_step).floor() + 1.0;
            while k * self.outside_step < hi.min(0.0) {
                pts.push(k * self.outside_step);
                k += 1.0;
            }
        }
        pts.extend(self.nodes.iter().copied().filter(|&n| n > lo && n < hi));
        if hi > 1.0 {
            let mut k = 1.0;
            while 1.0 + k * self.outside_step < hi {
                if 1.0 + k * self.outside_step > lo {
                    pts.push(1.0 + k * self.outside_step);
                }
                k += 1.0;
            }
        }
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if s > t {
            pts.reverse();
        }
        pts
    }

    /// One-sided budget density at the cell end `e`, looking into the cell
    /// towards `other`.
    fn end_density(&self, e: f64, other: f64) -> f64 {
        if self.field.singular_times().contains(&e) {
            return f64::INFINITY;
        }
        if self.field.breakpoints().contains(&e) || e == 0.0 || e == 1.0 {
            return self.density(e + 1e-12 * (other - e));
        }
        self.density(e)
    }

    /// Hermite endpoint slopes of `θ` on the cell `[a, b]`.
    fn cell_slopes(&self, a: f64, b: f64) -> (f64, f64) {
        let width = (b - a).abs();
        let db = self.cell_budget(a, b);
        let mut alpha = db / (self.end_density(a, b) * width);
        let mut beta = db / (self.end_density(b, a) * width);
        if !alpha.is_finite() {
            alpha = 1.0;
        }
        if !beta.is_finite() {
            beta = 1.0;
        }
        let r = alpha.hypot(beta);
        if r > 3.0 {
            alpha *= 3.0 / r;
            beta *= 3.0 / r;
        }
        (alpha, beta)
    }

    /// Integrates `n` Gauss–Legendre steps on every cell from `s` to `t`.
    fn integrate_fixed(
        &self,
        cells: &[(f64, f64, f64, f64)],
        x: &[f64],
        n: usize,
    ) -> Option<Vec<f64>> {
        let mut y = x.to_vec();
        for &(a, b, alpha, beta) in cells {
            self.integrate_cell(a, b, alpha, beta, &mut y, n)?;
        }
        Some(y)
    }

    fn integrate_cell(
        &self,
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        y: &mut [f64],
        n: usize,
    ) -> Option<()> {
        let d = y.len();
        let delta = b - a;
        let rhs = |sigma: f64, x: &[f64]| -> Vec<f64> {
            let s2 = sigma * sigma;
            let s3 = s2 * sigma;
            let h = alpha * (s3 - 2.0 * s2 + sigma) + (3.0 * s2 - 2.0 * s3) + beta * (s3 - s2);
            let dh = alpha * (3.0 * s2 - 4.0 * sigma + 1.0)
                + 6.0 * (sigma - s2)
                + beta * (3.0 * s2 - 2.0 * sigma);
            let theta = a + delta * h;
            let dtheta = delta * dh;
            if dtheta == 0.0 {
                return vec![0.0; d];
            }
            self.field
                .value(theta, x)
                .into_iter()
                .map(|v| v * dtheta)
                .collect()
        };
        let h = 1.0 / n as f64;
        let kinked = self.field.spatial_piece(y).is_some();
        for step in 0..n {
            let sigma = step as f64 * h;
            if kinked {
                self.split_step(&rhs, sigma, h, delta.abs(), y, 0)?;
            } else {
                let (next, _) = gl_step(&rhs, sigma, h, y)?;
                y.copy_from_slice(&next);
            }
        }
        Some(())
    }

    /// One step on a field with kinks, bisected while the step and its stage
    /// points straddle different smooth pieces.
    fn split_step<F>(
        &self,
        rhs: &F,
        sigma: f64,
        h: f64,
        width: f64,
        y: &mut [f64],
        depth: usize,
    ) -> Option<()>
    where
        F: Fn(f64, &[f64]) -> Vec<f64>,
    {
        let (next, stages) = gl_step(rhs, sigma, h, y)?;
        let piece = self.field.spatial_piece(y);
        let straddles = [&next, &stages[0], &stages[1]]
            .iter()
            .any(|p| self.field.spatial_piece(p) != piece);
        if straddles && depth < MAX_SPLIT_DEPTH && h * width > MIN_SPLIT_WIDTH {
            self.split_step(rhs, sigma, 0.5 * h, width, y, depth + 1)?;
            return self.split_step(rhs, sigma + 0.5 * h, 0.5 * h, width, y, depth + 1);
        }
        y.copy_from_slice(&next);
        Some(())
    }

    fn cells(&self, s: f64, t: f64) -> Vec<(f64, f64, f64, f64)> {
        self.cell_ends(s, t)
            .windows(2)
            .map(|w| {
                let (alpha, beta) = self.cell_slopes(w[0], w[1]);
                (w[0], w[1], alpha, beta)
            })
            .collect()
    }

    /// Extrapolated solution with `n` and `2n` substeps per cell and the
    /// step-doubling error estimate. The estimate is the raw gap between the
    /// two solutions: fields that are only Lipschitz in space lose the
    /// fourth order the extrapolation assumes.
    fn extrapolated(
        &self,
        cells: &[(f64, f64, f64, f64)],
        x: &[f64],
        n: usize,
    ) -> Option<(Vec<f64>, f64)> {
        let coarse = self.integrate_fixed(cells, x, n)?;
        let fine = self.integrate_fixed(cells, x, 2 * n)?;
        let err = dist(&coarse, &fine);
        let value = fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| f + (f - c) / 15.0)
            .collect();
        Some((value, err))
    }

    fn check_point(&self, x: &[f64]) -> Result<(), FlowError> {
        if x.len() != self.dim() {
            return Err(FlowError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `Φ_t^s(x)` together with the substep count that met the tolerance.
    pub fn flow_with_steps(
        &self,
        s: f64,
        t: f64,
        x: &[f64],
    ) -> Result<(Vec<f64>, usize), FlowError> {
        self.check_point(x)?;
        if s == t {
            return Ok((x.to_vec(), 1));
        }
        let cells = self.cells(s, t);
        // two consecutive passing estimates, so that an accidental agreement
        // of coarse and fine solutions (e.g. across a kink) is not accepted
        let mut n = 1;
        let mut previous_passed = false;
        while n <= MAX_SUBSTEPS {
            let passed = match self.extrapolated(&cells, x, n) {
                Some((value, err)) if err <= self.tolerance => {
                    if previous_passed {
                        return Ok((value, n));
                    }
                    true
                }
                _ => false,
            };
            previous_passed = passed;
            n *= 2;
        }
        Err(FlowError::NotConverged { s, t })
    }

    /// `Φ_t^s(x)`.
    pub fn flow(&self, s: f64, t: f64, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.flow_with_steps(s, t, x).map(|(v, _)| v)
    }

    /// `Φ_t^s` applied to many points in parallel.
    pub fn flow_batch(&self, s: f64, t: f64, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FlowError> {
        xs.par_iter().map(|x| self.flow(s, t, x)).collect()
    }

    /// `Φ_0^t(y)`, the inverse of `Φ_t^0`.
    pub fn flow_inverse(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.flow(t, 0.0, y)
    }

    /// `Ψ(t, x) = (t, Φ_t^0(x))`.
    pub fn psi(&self, t: f64, x: &[f64]) -> Result<SpaceTimePoint, FlowError> {
        Ok(SpaceTimePoint {
            t,
            x: self.flow(0.0, t, x)?,
        })
    }

    /// `Ψ⁻¹(s, y) = (s, Φ_0^s(y))`.
    pub fn psi_inverse(&self, s: f64, y: &[f64]) -> Result<SpaceTimePoint, FlowError> {
        Ok(SpaceTimePoint {
            t: s,
            x: self.flow(s, 0.0, y)?,
        })
    }

    /// Directional derivative of `x ↦ Φ_t^s(x)` along the unit vector `v`,
    /// with steps `h, h/2, h/4` for `h = 1e-3`.
    pub fn flow_directional_derivative(
        &self,
        s: f64,
        t: f64,
        x: &[f64],
        v: &[f64],
    ) -> Result<DirectionalDerivative, FlowError> {
        self.flow_directional_derivative_with_step(s, t, x, v, 1e-3)
    }

    /// As [`FlowMap::flow_directional_derivative`] with a custom largest step.
    pub fn flow_directional_derivative_with_step(
        &self,
        s: f64,
        t: f64,
        x: &[f64],
        v: &[f64],
        h0: f64,
    ) -> Result<DirectionalDerivative, FlowError> {
        self.check_point(x)?;
        self.check_point(v)?;
        if (norm(v) - 1.0).abs() > 1e-12 {
            return Err(FlowError::InvalidParameter(format!(
                "direction {v:?} is not a unit vector"
            )));
        }
        // translations have DΦ = I
        if s == t || matches!(self.field.family(), "zero" | "constant") {
            return Ok(DirectionalDerivative {
                value: v.to_vec(),
                error_estimate: 0.0,
                converged: true,
            });
        }
        let (_, n) = self.flow_with_steps(s, t, x)?;
        let cells = self.cells(s, t);
        // the same substep count for every evaluation keeps the map smooth in x
        let eval = |p: Vec<f64>| -> Result<Vec<f64>, FlowError> {
            self.extrapolated(&cells, &p, n)
                .map(|(value, _)| value)
                .ok_or(FlowError::NotConverged { s, t })
        };
        let mut quotients = Vec::with_capacity(3);
        for k in 0..3 {
            let h = h0 / f64::from(1u32 << k);
            let plus = eval(x.iter().zip(v).map(|(a, b)| a + h * b).collect())?;
            let minus = eval(x.iter().zip(v).map(|(a, b)| a - h * b).collect())?;
            quotients.push(
                plus.iter()
                    .zip(&minus)
                    .map(|(p, m)| (p - m) / (2.0 * h))
                    .collect::<Vec<f64>>(),
            );
        }
        Ok(richardson(&quotients))
    }

    /// `DΨ(t, x)[(1, 0)] = (1, b_t(Φ_t^0(x)))`.
    pub fn dpsi_time_direction(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        let y = self.flow(0.0, t, x)?;
        Ok(std::iter::once(1.0)
            .chain(self.field.value(t, &y))
            .collect())
    }

    /// Forward difference quotient `[Ψ(t + h, x) − Ψ(t, x)] / h`.
    pub fn psi_time_quotient(&self, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>, FlowError> {
        let a = self.psi(t, x)?;
        let b = self.flow(t, t + h, &a.x)?;
        Ok(std::iter::once((t + h - t) / h)
            .chain(b.iter().zip(&a.x).map(|(p, q)| (p - q) / h))
            .collect())
    }

    /// Difference quotients of `Ψ⁻¹` at `(t, y)` along `(1, b_t(y))`, which
    /// converge to `(1, 0)` at Lebesgue times.
    pub fn dpsi_inverse_flow_direction(
        &self,
        t: f64,
        y: &[f64],
    ) -> Result<QuotientStudy, FlowError> {
        self.check_point(y)?;
        let b = self.field.value(t, y);
        let base = self.psi_inverse(t, y)?;
        let h0 = 0.05f64.min(t.abs() / 4.0).max(1e-6);
        let mut study = QuotientStudy {
            steps: Vec::new(),
            quotients: Vec::new(),
            errors: Vec::new(),
            noise: Vec::new(),
            order: None,
            converged: false,
        };
        for k in 0..8 {
            let h = h0 / f64::from(1u32 << k);
            let moved: Vec<f64> = y.iter().zip(&b).map(|(p, q)| p + h * q).collect();
            let img = self.psi_inverse(t + h, &moved)?;
            let q: Vec<f64> = std::iter::once((img.t - base.t) / h)
                .chain(img.x.iter().zip(&base.x).map(|(p, q)| (p - q) / h))
                .collect();
            let err = (q[0] - 1.0).hypot(norm(&q[1..]));
            study.steps.push(h);
            study.quotients.push(q);
            study.errors.push(err);
            study.noise.push(20.0 * self.tolerance / h + 1e-14);
        }
        let usable: Vec<(f64, f64)> = study
            .steps
            .iter()
            .zip(&study.errors)
            .zip(&study.noise)
            .filter(|((_, e), n)| **e > **n)
            .map(|((h, e), _)| (h.ln(), e.ln()))
            .collect();
        if usable.len() >= 3 {
            study.order = Some(least_squares_slope(&usable));
        }
        study.converged = match study.order {
            Some(p) => p >= 0.5,
            None => {
                usable.is_empty()
                    || study
                        .errors
                        .last()
                        .zip(study.noise.last())
                        .is_some_and(|(e, n)| e <= n)
            }
        };
        Ok(study)
    }

    /// `exp(∫_s^{t1} Lip(b_r) dr)|x − y| + ∫_{t1}^{t2} ‖b_r‖_C0 dr`, a bound
    /// for `|Φ_{t1}^s(x) − Φ_{t2}^s(y)|` while trajectories stay in the box.
    pub fn gronwall_bound(
        &self,
        s: f64,
        t1: f64,
        t2: f64,
        x: &[f64],
        y: &[f64],
    ) -> Result<f64, FlowError> {
        let lip = self.field.lip_integral(s.min(t1), s.max(t1))?;
        let drift = if t1 == t2 {
            0.0
        } else {
            self.field.sup_integral(t1.min(t2), t1.max(t2))?
        };
        Ok(lip.exp() * dist(x, y) + drift)
    }

    /// `n` sample times avoiding the declared singular set of the field.
    ///
    /// The avoided set is Lebesgue-null, so almost every returned time is a
    /// Lebesgue point of the field's profiles. Smooth fields use the
    /// midpoints of a uniform grid of `[0, 1]`; fields with singular times use
    /// the same construction on `[δ, 1]`, `δ = 1e-3`; gridded fields use time
    /// cell midpoints (cycled if `n` exceeds the cell count).
    pub fn lebesgue_time_sampler(&self, n: usize) -> Vec<f64> {
        lebesgue_time_sampler(&self.field, n)
    }
}

/// See [`FlowMap::lebesgue_time_sampler`].
pub fn lebesgue_time_sampler(field: &TimeDependentField, n: usize) -> Vec<f64> {
    let breaks = field.breakpoints();
    if breaks.len() >= 2 {
        let mids: Vec<f64> = breaks.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        if n <= mids.len() {
            // spread the picks over all cells
            return (0..n).map(|i| mids[i * mids.len() / n.max(1)]).collect();
        }
        // subdivide each cell uniformly so every sample stays off the breaks
        let per = n.div_ceil(mids.len());
        let mut out = Vec::new();
        for w in breaks.windows(2) {
            for k in 0..per {
                out.push(w[0] + (w[1] - w[0]) * (k as f64 + 0.5) / per as f64);
            }
        }
        out.truncate(n);
        return out;
    }
    let lo = if field.singular_times().is_empty() {
        0.0
    } else {
        1e-3
    };
    (0..n)
        .map(|i| lo + (1.0 - lo) * (i as f64 + 0.5) / n as f64)
        .collect()
}

pub(crate) fn richardson(q: &[Vec<f64>]) -> DirectionalDerivative {
    let d = q[0].len();
    let mut value = vec![0.0; d];
    let mut err: f64 = 0.0;
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for i in 0..d {
        let r1 = (4.0 * q[1][i] - q[0][i]) / 3.0;
        let r2 = (4.0 * q[2][i] - q[1][i]) / 3.0;
        value[i] = (16.0 * r2 - r1) / 15.0;
        err = err.max((value[i] - r2).abs());
        e1 = e1.max((q[0][i] - q[1][i]).abs());
        e2 = e2.max((q[1][i] - q[2][i]).abs());
    }
    let scale = 1.0 + norm(&value);
    let converged = e2 <= 1e-9 * scale || (2.5..=6.5).contains(&(e1 / e2));
    DirectionalDerivative {
        value,
        error_estimate: err + 1e-12 * scale,
        converged,
    }
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

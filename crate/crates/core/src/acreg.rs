//! One-dimensional uncentered maximal functions and Lipschitz approximation
//! of absolutely continuous functions.
//!
//! Everything lives on a bounded window; upper gradients are extended by zero
//! outside it. The maximal function is taken over grid-aligned intervals,
//! which is exact at the nodes for piecewise-constant `g`.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AcregError {
    #[error("grid must have at least two strictly increasing finite nodes")]
    BadGrid,
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("value {value} at index {index} is negative or not finite")]
    NegativeValue { index: usize, value: f64 },
    #[error("the closed set is empty")]
    EmptySet,
    #[error("upper gradient check failed on cell {cell}: |Δf| = {increment} > ∫g = {integral}")]
    NotUpperGradient {
        cell: usize,
        increment: f64,
        integral: f64,
    },
    #[error("AC_t Lip_x spot check failed at t={t}, s={s}: {lhs} > {rhs}")]
    SpotCheck { t: f64, s: f64, lhs: f64, rhs: f64 },
    #[error("grids differ")]
    GridMismatch,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// How values of a [`Sampled1D`] are read between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// One value per node, linear in between.
    Linear,
    /// One value per cell `[t_i, t_{i+1})`.
    CellConstant,
}

/// Samples of a function on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled1D {
    grid: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl Sampled1D {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self, AcregError> {
        if grid.len() < 2
            || grid.iter().any(|t| !t.is_finite())
            || grid.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(AcregError::BadGrid);
        }
        let expected = match interpolation {
            Interpolation::Linear => grid.len(),
            Interpolation::CellConstant => grid.len() - 1,
        };
        if values.len() != expected {
            return Err(AcregError::ValueCount {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            interpolation,
        })
    }

    /// Piecewise-linear samples `f(t_i)`.
    pub fn linear(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, AcregError> {
        Self::new(grid, values, Interpolation::Linear)
    }

    /// Nonnegative cell values, as required of an upper gradient.
    pub fn density(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, AcregError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(AcregError::NegativeValue { index, value });
        }
        Self::new(grid, values, Interpolation::CellConstant)
    }

    /// Samples `f` at the nodes of `grid`.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self, AcregError> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::linear(grid, values)
    }

    /// Cell averages of `g` by 8-point Gauss–Legendre quadrature per cell.
    pub fn density_from_fn(grid: Vec<f64>, g: impl Fn(f64) -> f64) -> Result<Self, AcregError> {
        let (x, w) = crate::quadrature::gauss_legendre(8);
        let values = grid
            .windows(2)
            .map(|c| {
                let (mid, half) = (0.5 * (c[0] + c[1]), 0.5 * (c[1] - c[0]));
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| 0.5 * wi * g(mid + half * xi))
                    .sum()
            })
            .collect();
        Self::density(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn window(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    fn cell_of(&self, t: f64) -> usize {
        self.grid
            .partition_point(|&n| n <= t)
            .clamp(1, self.grid.len() - 1)
            - 1
    }

    /// Value at `t` (clamped to the window).
    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.window();
        let t = t.clamp(lo, hi);
        let i = self.cell_of(t);
        match self.interpolation {
            Interpolation::CellConstant => self.values[i],
            Interpolation::Linear => {
                let (a, b) = (self.grid[i], self.grid[i + 1]);
                let u = (t - a) / (b - a);
                self.values[i] * (1.0 - u) + self.values[i + 1] * u
            }
        }
    }

    /// `∫ |g|` for densities, `∫ |f|` for piecewise-linear samples.
    pub fn l1_norm(&self) -> f64 {
        match self.interpolation {
            Interpolation::CellConstant => self
                .grid
                .windows(2)
                .zip(&self.values)
                .map(|(c, v)| v.abs() * (c[1] - c[0]))
                .sum(),
            Interpolation::Linear => self
                .grid
                .windows(2)
                .zip(self.values.windows(2))
                .map(|(c, v)| {
                    let h = c[1] - c[0];
                    if v[0] * v[1] >= 0.0 {
                        0.5 * h * (v[0].abs() + v[1].abs())
                    } else {
                        0.5 * h * (v[0] * v[0] + v[1] * v[1]) / (v[0].abs() + v[1].abs())
                    }
                })
                .sum(),
        }
    }

    /// Prefix integrals `P_i = ∫_{t_0}^{t_i} g` of a cell-constant density.
    fn prefix(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.grid.len());
        p.push(0.0);
        let mut acc = 0.0;
        for (c, v) in self.grid.windows(2).zip(&self.values) {
            acc += v * (c[1] - c[0]);
            p.push(acc);
        }
        p
    }

    /// `∫_a^b g` for a cell-constant density, `a <= b` inside the window.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.window();
        let (a, b) = (a.clamp(lo, hi), b.clamp(lo, hi));
        if b <= a {
            return 0.0;
        }
        let (ia, ib) = (self.cell_of(a), self.cell_of(b));
        if ia == ib {
            return self.values[ia] * (b - a);
        }
        let mut s =
            self.values[ia] * (self.grid[ia + 1] - a) + self.values[ib] * (b - self.grid[ib]);
        for k in ia + 1..ib {
            s += self.values[k] * (self.grid[k + 1] - self.grid[k]);
        }
        s
    }

    /// Writes `node,value` rows; cell-constant data repeats its last value
    /// on the final node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AcregError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["node", "value"])?;
        for (i, t) in self.grid.iter().enumerate() {
            let v = self.values[i.min(self.values.len() - 1)];
            wr.write_record([format!("{t:?}"), format!("{v:?}")])?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads `node,value` rows written by [`Sampled1D::write_csv`].
    pub fn read_csv<R: Read>(r: R, interpolation: Interpolation) -> Result<Self, AcregError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for rec in rd.deserialize() {
            let (t, v): (f64, f64) = rec?;
            grid.push(t);
            values.push(v);
        }
        if interpolation == Interpolation::CellConstant {
            values.pop();
            return Self::density(grid, values);
        }
        Self::new(grid, values, interpolation)
    }
}

fn check_density(g: &Sampled1D) -> Result<(), AcregError> {
    if g.interpolation != Interpolation::CellConstant {
        return Err(AcregError::ValueCount {
            expected: g.grid.len() - 1,
            got: g.values.len(),
        });
    }
    if let Some((index, &value)) = g.values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(AcregError::NegativeValue { index, value });
    }
    Ok(())
}

/// Uncentered maximal function at the nodes,
/// `Mg(t_i) = max_{a < b, t_a <= t_i <= t_b} (1/(t_b - t_a)) ∫_{t_a}^{t_b} g`.
///
/// An average over `[t_a, t_b]` is a mediant of the averages over
/// `[t_a, t_i]` and `[t_i, t_b]`, so one endpoint can be taken at `t_i`.
/// Each one-sided maximum is the slope of a tangent from `(t_i, P_i)` to the
/// upper convex hull of the prefix integral on the far side, maintained as a
/// stack while sweeping; every point is pushed and popped at most once.
pub fn maximal_function(g: &Sampled1D) -> Result<Sampled1D, AcregError> {
    check_density(g)?;
    let t = &g.grid;
    let p = g.prefix();
    let n = t.len();
    let slope = |a: usize, b: usize| (p[b] - p[a]) / (t[b] - t[a]);

    let mut right = vec![0.0; n];
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in (0..n).rev() {
        // hull holds indices > i, leftmost on top; its top is the tangent point
        while hull.len() >= 2 {
            let (h0, h1) = (hull[hull.len() - 1], hull[hull.len() - 2]);
            if slope(i, h0) <= slope(h0, h1) {
                hull.pop();
            } else {
                break;
            }
        }
        if let Some(&h0) = hull.last() {
            right[i] = slope(i, h0);
        }
        hull.push(i);
    }

    let mut left = vec![0.0; n];
    hull.clear();
    for i in 0..n {
        // mirror image with the lower hull of the points to the left
        while hull.len() >= 2 {
            let (h0, h1) = (hull[hull.len() - 1], hull[hull.len() - 2]);
            if slope(h1, h0) >= slope(h0, i) {
                hull.pop();
            } else {
                break;
            }
        }
        if let Some(&h0) = hull.last() {
            left[i] = slope(h0, i);
        }
        hull.push(i);
    }

    let values = left.iter().zip(&right).map(|(l, r)| l.max(*r)).collect();
    Sampled1D::linear(t.clone(), values)
}

/// Quadratic-time reference for [`maximal_function`] (parallel over nodes).
pub fn maximal_function_reference(g: &Sampled1D) -> Result<Sampled1D, AcregError> {
    check_density(g)?;
    let t = &g.grid;
    let p = g.prefix();
    let n = t.len();
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for a in 0..i {
                best = best.max((p[i] - p[a]) / (t[i] - t[a]));
            }
            for b in i + 1..n {
                best = best.max((p[b] - p[i]) / (t[b] - t[i]));
            }
            best
        })
        .collect();
    Sampled1D::linear(t.clone(), values)
}

/// Exact `|{Mg > λ}|` within the window for the continuous uncentered
/// maximal function of the cell-constant density `g`.
///
/// With `G(x) = ∫_{t_0}^x (g - λ)`, a point lies outside `{Mg > λ}` iff
/// `G(x)` is a running minimum from the left and a running maximum from the
/// right; on each cell this is an interval computed in closed form.
pub fn superlevel_measure(g: &Sampled1D, lambda: f64) -> Result<f64, AcregError> {
    check_density(g)?;
    let t = &g.grid;
    let n = t.len();
    let mut big_g = vec![0.0; n];
    for i in 0..n - 1 {
        big_g[i + 1] = big_g[i] + (g.values[i] - lambda) * (t[i + 1] - t[i]);
    }
    let mut right_max = vec![f64::NEG_INFINITY; n + 1];
    for i in (0..n).rev() {
        right_max[i] = right_max[i + 1].max(big_g[i]);
    }
    let mut left_min = f64::INFINITY;
    let mut outside = 0.0;
    for i in 0..n - 1 {
        left_min = left_min.min(big_g[i]);
        let s = g.values[i] - lambda;
        let (hi_bound, lo_bound) = (left_min, right_max[i + 1]);
        let h = t[i + 1] - t[i];
        if s > 0.0 {
            continue;
        }
        if s == 0.0 {
            if big_g[i] <= hi_bound && big_g[i] >= lo_bound {
                outside += h;
            }
            continue;
        }
        // G(x) = G_i + s (x - t_i), decreasing; need lo_bound <= G(x) <= hi_bound
        let x_from = ((hi_bound - big_g[i]) / s).clamp(0.0, h);
        let x_to = ((lo_bound - big_g[i]) / s).clamp(0.0, h);
        if x_to > x_from {
            outside += x_to - x_from;
        }
    }
    let (lo, hi) = g.window();
    Ok(hi - lo - outside)
}

/// A finite union of disjoint closed intervals inside a window, with its
/// complement stored as open gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSet1D {
    window: (f64, f64),
    intervals: Vec<(f64, f64)>,
    gaps: Vec<(f64, f64)>,
}

impl ClosedSet1D {
    /// Builds the set from sorted, disjoint closed intervals.
    pub fn from_intervals(window: (f64, f64), mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(a, b)| a <= b);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let mut gaps = Vec::new();
        let mut prev = window.0;
        for &(a, b) in &merged {
            if a > prev {
                gaps.push((prev, a));
            }
            prev = b;
        }
        if prev < window.1 {
            gaps.push((prev, window.1));
        }
        Self {
            window,
            intervals: merged,
            gaps,
        }
    }

    pub fn whole(window: (f64, f64)) -> Self {
        Self::from_intervals(window, vec![window])
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// The complement components `I_ℓ = (r_ℓ, s_ℓ)` within the window.
    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= t && t <= b)
    }

    pub fn complement_measure(&self) -> f64 {
        self.gaps.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_subset_of(&self, other: &ClosedSet1D) -> bool {
        self.intervals
            .iter()
            .all(|&(a, b)| other.intervals.iter().any(|&(c, d)| c <= a && b <= d))
    }

    /// The same set with both window endpoints added, so every gap has its
    /// endpoints in the set.
    pub fn clamped(&self) -> Self {
        let (lo, hi) = self.window;
        let mut iv = self.intervals.clone();
        iv.push((lo, lo));
        iv.push((hi, hi));
        Self::from_intervals(self.window, iv)
    }
}

impl fmt::Display for ClosedSet1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(a, b)| format!("[{a}, {b}]"))
            .collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

/// `{Mg <= λ}` with `Mg` read piecewise linearly; crossings inside a cell are
/// located by linear interpolation and belong to the set.
pub fn sublevel_closed(mg: &Sampled1D, lambda: f64) -> ClosedSet1D {
    let t = &mg.grid;
    let v = &mg.values;
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if v[0] <= lambda { Some(t[0]) } else { None };
    for i in 0..t.len() - 1 {
        let (a, b) = (v[i], v[i + 1]);
        let cross = |level: f64| t[i] + (t[i + 1] - t[i]) * (level - a) / (b - a);
        match (a <= lambda, b <= lambda) {
            (true, false) => {
                intervals.push((start.take().unwrap(), cross(lambda)));
            }
            (false, true) => {
                start = Some(cross(lambda));
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push((s, *t.last().unwrap()));
    }
    ClosedSet1D::from_intervals(mg.window(), intervals)
}

/// `L(f, E)`: equal to `f` on `E`, affine on each gap through the values at
/// its endpoints. The window endpoints are added to `E` first.
pub fn interpolate_l(f: &Sampled1D, e: &ClosedSet1D) -> Result<Sampled1D, AcregError> {
    if e.is_empty() {
        return Err(AcregError::EmptySet);
    }
    let e = e.clamped();
    let mut grid: Vec<f64> = f.grid.clone();
    for &(r, s) in e.gaps() {
        grid.push(r);
        grid.push(s);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values = grid
        .iter()
        .map(|&t| chord_value(&e, t, |u| f.eval(u)))
        .collect();
    Sampled1D::linear(grid, values)
}

/// Value of `L(f, E)` at `t` for an arbitrary evaluator `f`.
fn chord_value(e: &ClosedSet1D, t: f64, f: impl Fn(f64) -> f64) -> f64 {
    match gap_containing(e, t) {
        Some((r, s)) => {
            let u = (t - r) / (s - r);
            f(r) * (1.0 - u) + f(s) * u
        }
        None => f(t),
    }
}

fn gap_containing(e: &ClosedSet1D, t: f64) -> Option<(f64, f64)> {
    let gaps = e.gaps();
    let k = gaps.partition_point(|g| g.1 <= t);
    gaps.get(k).copied().filter(|&(r, s)| r < t && t < s)
}

/// Measurements of one step of the AC approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub j: u32,
    /// `|E_j^c|`.
    pub complement_measure: f64,
    /// Empirical weak-type constant of `g` (see [`weak_type_constant`]).
    pub weak_constant: f64,
    /// `‖f_j − f‖_∞`.
    pub sup_error: f64,
    /// `2 max_ℓ ∫_{I_ℓ} g`.
    pub sup_bound: f64,
    /// `∫ |f_j′ − f′|`.
    pub l1_derivative_error: f64,
    /// `2 ∫_{E_j^c} |f′|`.
    pub l1_derivative_bound: f64,
    /// Largest difference quotient of `f` between nodes of `E_j`.
    pub lipschitz_on_set: f64,
}

/// Result of [`approximate_ac`].
#[derive(Debug, Clone)]
pub struct AcApproximation {
    pub fj: Sampled1D,
    pub set: ClosedSet1D,
    pub report: ApproxReport,
}

/// Geometric grid of levels used to measure weak-type constants.
pub fn weak_type_levels(g: &Sampled1D) -> Vec<f64> {
    let top = g.values.iter().fold(0.0f64, |m, v| m.max(*v));
    let (lo, hi) = g.window();
    let bottom = g.l1_norm() / (hi - lo);
    if top <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut l = bottom.max(top * 1e-6) * 0.5;
    while l <= top * 1.01 {
        out.push(l);
        l *= 2f64.powf(0.25);
    }
    out
}

/// `sup_λ λ |{Mg > λ}| / ‖g‖_1` over [`weak_type_levels`] and the extra
/// levels given, with the exact superlevel measure.
pub fn weak_type_constant(g: &Sampled1D, extra_levels: &[f64]) -> Result<f64, AcregError> {
    let norm = g.l1_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for l in weak_type_levels(g)
        .into_iter()
        .chain(extra_levels.iter().copied())
    {
        if l > 0.0 {
            best = best.max(l * superlevel_measure(g, l)? / norm);
        }
    }
    Ok(best)
}

fn check_upper_gradient(f: &Sampled1D, g: &Sampled1D) -> Result<(), AcregError> {
    if f.grid != g.grid {
        return Err(AcregError::GridMismatch);
    }
    for (cell, (fv, (c, gv))) in f
        .values
        .windows(2)
        .zip(g.grid.windows(2).zip(&g.values))
        .enumerate()
    {
        let increment = (fv[1] - fv[0]).abs();
        let integral = gv * (c[1] - c[0]);
        if increment > integral + 1e-10 {
            return Err(AcregError::NotUpperGradient {
                cell,
                increment,
                integral,
            });
        }
    }
    Ok(())
}

fn sup_and_l1_slope_difference(a: &Sampled1D, b: &Sampled1D) -> (f64, f64) {
    let mut grid: Vec<f64> = a.grid.iter().chain(&b.grid).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diff: Vec<f64> = grid.iter().map(|&t| a.eval(t) - b.eval(t)).collect();
    let sup = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // the difference is affine per cell, so Σ|Δdiff| = ∫|a′ − b′|
    let l1 = diff.windows(2).map(|d| (d[1] - d[0]).abs()).sum();
    (sup, l1)
}

/// Lemma-style approximation `f_j = L(f, E_j)` with `E_j = {Mg <= j}`.
pub fn approximate_ac(f: &Sampled1D, g: &Sampled1D, j: u32) -> Result<AcApproximation, AcregError> {
    check_upper_gradient(f, g)?;
    let mg = maximal_function(g)?;
    approximate_ac_with(f, g, &mg, j)
}

fn approximate_ac_with(
    f: &Sampled1D,
    g: &Sampled1D,
    mg: &Sampled1D,
    j: u32,
) -> Result<AcApproximation, AcregError> {
    let lambda = f64::from(j);
    let set = sublevel_closed(mg, lambda);
    if set.is_empty() {
        return Err(AcregError::EmptySet);
    }
    let fj = interpolate_l(f, &set)?;
    let (sup_error, l1_derivative_error) = sup_and_l1_slope_difference(&fj, f);
    let clamped = set.clamped();
    let sup_bound = 2.0
        * clamped
            .gaps()
            .iter()
            .map(|&(r, s)| g.integral(r, s))
            .fold(0.0, f64::max);
    let l1_derivative_bound = 2.0
        * clamped
            .gaps()
            .iter()
            .map(|&(r, s)| slope_mass(f, r, s))
            .sum::<f64>();
    let nodes_in: Vec<usize> = (0..f.grid.len())
        .filter(|&i| mg.values[i] <= lambda)
        .collect();
    let lipschitz_on_set = nodes_in
        .windows(2)
        .map(|w| (f.values[w[1]] - f.values[w[0]]).abs() / (f.grid[w[1]] - f.grid[w[0]]))
        .fold(0.0, f64::max);
    let report = ApproxReport {
        j,
        complement_measure: set.complement_measure(),
        weak_constant: weak_type_constant(g, &[lambda])?,
        sup_error,
        sup_bound,
        l1_derivative_error,
        l1_derivative_bound,
        lipschitz_on_set,
    };
    Ok(AcApproximation { fj, set, report })
}

/// `∫_r^s |f′|` for piecewise-linear `f`.
fn slope_mass(f: &Sampled1D, r: f64, s: f64) -> f64 {
    let mut pts = vec![r];
    pts.extend(f.grid.iter().copied().filter(|&t| t > r && t < s));
    pts.push(s);
    pts.windows(2)
        .map(|w| (f.eval(w[1]) - f.eval(w[0])).abs())
        .sum()
}

/// Reports for several `j` sharing one maximal function.
pub fn approximate_ac_sequence(
    f: &Sampled1D,
    g: &Sampled1D,
    js: &[u32],
) -> Result<Vec<ApproxReport>, AcregError> {
    check_upper_gradient(f, g)?;
    let mg = maximal_function(g)?;
    js.iter()
        .map(|&j| approximate_ac_with(f, g, &mg, j).map(|a| a.report))
        .collect()
}

type Evaluator = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

/// A map `f(t, x)`, Lipschitz in `x` with constant `lip_x` and absolutely
/// continuous in `t` with the shared upper gradient `g`.
#[derive(Clone)]
pub struct ACLipFunction {
    eval: Arc<Evaluator>,
    g: Sampled1D,
    lip_x: f64,
    input_dim: usize,
    box_lo: Vec<f64>,
    box_hi: Vec<f64>,
}

impl fmt::Debug for ACLipFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ACLipFunction")
            .field("lip_x", &self.lip_x)
            .field("input_dim", &self.input_dim)
            .field("window", &self.g.window())
            .finish()
    }
}

impl ACLipFunction {
    /// Builds the function and spot-checks
    /// `|f(t,x) − f(s,y)| <= Lip_x |x − y| + ∫_s^t g` on 64 seeded random
    /// quadruples from the window and the box.
    pub fn new(
        eval: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        g: Sampled1D,
        lip_x: f64,
        box_lo: Vec<f64>,
        box_hi: Vec<f64>,
    ) -> Result<Self, AcregError> {
        check_density(&g)?;
        let f = Self {
            eval: Arc::new(eval),
            g,
            lip_x,
            input_dim: box_lo.len(),
            box_lo,
            box_hi,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (lo, hi) = f.g.window();
        for _ in 0..64 {
            let (t, s) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
            let x = f.random_point(&mut rng);
            let y = f.random_point(&mut rng);
            let lhs = dist(&f.eval(t, &x), &f.eval(s, &y));
            let rhs = lip_x * dist(&x, &y) + f.g.integral(t.min(s), t.max(s));
            if lhs > rhs * (1.0 + 1e-9) + 1e-12 {
                return Err(AcregError::SpotCheck { t, s, lhs, rhs });
            }
        }
        Ok(f)
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.box_lo
            .iter()
            .zip(&self.box_hi)
            .map(|(a, b)| rng.gen_range(*a..=*b))
            .collect()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Vec<f64> {
        (self.eval)(t, x)
    }

    /// The line `f_x(t) = f(t, x)`, component `c`, sampled on the grid of `g`.
    pub fn line(&self, x: &[f64], c: usize) -> Sampled1D {
        let grid = self.g.grid.clone();
        let values = grid.iter().map(|&t| self.eval(t, x)[c]).collect();
        Sampled1D::linear(grid, values).expect("grid of g is valid")
    }

    pub fn upper_gradient(&self) -> &Sampled1D {
        &self.g
    }

    pub fn lip_x(&self) -> f64 {
        self.lip_x
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn box_bounds(&self) -> (&[f64], &[f64]) {
        (&self.box_lo, &self.box_hi)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `f_j(t, x) = L(f_x, E_j)(t)` with one shared `E_j = {Mg <= j}`.
#[derive(Debug, Clone)]
pub struct ACLipApproximation {
    pub j: u32,
    pub set: ClosedSet1D,
    f: ACLipFunction,
}

impl ACLipApproximation {
    /// `f_j(t, x)` for any `x`: `f` on `E_j`, the chord in `t` on each gap.
    pub fn eval(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match gap_containing(&self.set, t) {
            Some((r, s)) => {
                let u = (t - r) / (s - r);
                let (a, b) = (self.f.eval(r, x), self.f.eval(s, x));
                a.iter()
                    .zip(&b)
                    .map(|(p, q)| p * (1.0 - u) + q * u)
                    .collect()
            }
            None => self.f.eval(t, x),
        }
    }

    pub fn source(&self) -> &ACLipFunction {
        &self.f
    }
}

/// Checks made by [`approximate_ac_lip`] on the probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACLipReport {
    pub j: u32,
    pub complement_measure: f64,
    /// Largest `|f_j(t,x) − f_j(t,y)| / |x − y|` over probe pairs and sample times.
    pub lip_x_measured: f64,
    pub lip_x_source: f64,
    /// Largest `|f_j − f|` at sample times in `E_j` on the probes.
    pub agreement_on_set: f64,
    /// Largest time difference quotient of `f_j` between consecutive grid
    /// nodes and gap endpoints on the probes.
    pub time_lipschitz: f64,
    /// Largest `|f_j − f|` on the probes over the grid of `g`.
    pub sup_error: f64,
}

/// Shared-set approximation of an AC_t Lip_x map, with per-probe checks.
pub fn approximate_ac_lip(
    f: &ACLipFunction,
    j: u32,
    probes: &[Vec<f64>],
) -> Result<(ACLipApproximation, ACLipReport), AcregError> {
    let mg = maximal_function(&f.g)?;
    let set = sublevel_closed(&mg, f64::from(j)).clamped();
    if set.is_empty() {
        return Err(AcregError::EmptySet);
    }
    let approx = ACLipApproximation {
        j,
        set,
        f: f.clone(),
    };

    let mut times: Vec<f64> = f.g.grid.clone();
    for &(r, s) in approx.set.gaps() {
        times.push(r);
        times.push(s);
    }
    times.sort_by(f64::total_cmp);
    times.dedup();

    let per_probe: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = probes
        .par_iter()
        .map(|x| {
            let fj: Vec<Vec<f64>> = times.iter().map(|&t| approx.eval(t, x)).collect();
            let fx: Vec<Vec<f64>> = times.iter().map(|&t| f.eval(t, x)).collect();
            (fj, fx)
        })
        .collect();

    let mut report = ACLipReport {
        j,
        complement_measure: approx.set.complement_measure(),
        lip_x_measured: 0.0,
        lip_x_source: f.lip_x,
        agreement_on_set: 0.0,
        time_lipschitz: 0.0,
        sup_error: 0.0,
    };
    for (fj, fx) in &per_probe {
        for (k, &t) in times.iter().enumerate() {
            let e = dist(&fj[k], &fx[k]);
            report.sup_error = report.sup_error.max(e);
            if approx.set.contains(t) {
                report.agreement_on_set = report.agreement_on_set.max(e);
            }
            if k > 0 {
                let q = dist(&fj[k], &fj[k - 1]) / (t - times[k - 1]);
                report.time_lipschitz = report.time_lipschitz.max(q);
            }
        }
    }
    for a in 0..probes.len() {
        for b in a + 1..probes.len() {
            let dx = dist(&probes[a], &probes[b]);
            if dx == 0.0 {
                continue;
            }
            for k in 0..times.len() {
                let q = dist(&per_probe[a].0[k], &per_probe[b].0[k]) / dx;
                report.lip_x_measured = report.lip_x_measured.max(q);
            }
        }
    }
    Ok((approx, report))
}

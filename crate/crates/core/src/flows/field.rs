//! Time-dependent vector fields in the class (L).

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::mollify::Mollifier;
use super::FlowError;
use crate::quadrature;
use crate::testforms::SmoothField;

/// Scalar time modulation `a(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Const {
        value: f64,
    },
    /// `1 / (2 sqrt(t))`: integrable on `[0, 1]`, unbounded at `0`.
    HalfInvSqrt,
    /// `offset + amplitude * sin(2π frequency t)`.
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Const { value } => value,
            TimeProfile::HalfInvSqrt => {
                if t > 0.0 {
                    0.5 / t.sqrt()
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            TimeProfile::Sine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin(),
        }
    }

    /// `∫_s^t a(r) dr` in closed form.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        match *self {
            TimeProfile::Const { value } => value * (t - s),
            TimeProfile::HalfInvSqrt => t.max(0.0).sqrt() - s.max(0.0).sqrt(),
            TimeProfile::Sine {
                offset,
                amplitude,
                frequency,
            } => {
                let w = 2.0 * std::f64::consts::PI * frequency;
                if w == 0.0 {
                    return offset * (t - s);
                }
                offset * (t - s) - amplitude / w * ((w * t).cos() - (w * s).cos())
            }
        }
    }

    fn singular_times(&self) -> Vec<f64> {
        match self {
            TimeProfile::HalfInvSqrt => vec![0.0],
            _ => Vec::new(),
        }
    }
}

/// Axis-aligned box where currents live; `‖b_t‖_C0` is measured on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FlowError> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(FlowError::InvalidParameter(format!(
                "bounding box lo={lo:?} hi={hi:?} is empty or malformed"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn enlarged(&self, by: f64) -> Self {
        Self {
            lo: self.lo.iter().map(|v| v - by).collect(),
            hi: self.hi.iter().map(|v| v + by).collect(),
        }
    }

    /// Largest Euclidean norm of a point in the box.
    pub fn max_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Field on a regular spatial grid, piecewise constant in time and
/// multilinear in space (clamped outside the grid). Zero outside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedField {
    /// Time cell boundaries `0 = τ_0 < .. < τ_M = 1`.
    pub time_breaks: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Nodes per axis (at least 2).
    pub nodes: Vec<usize>,
    /// `values[cell][node][component]`, nodes in row-major order with the
    /// first axis varying slowest.
    pub values: Vec<Vec<Vec<f64>>>,
}

impl GriddedField {
    fn validate(&self, dim: usize) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidParameter(format!("gridded field: {m}")));
        if self.nodes.len() != dim || self.lo.len() != dim || self.hi.len() != dim {
            return bad("axis count does not match dimension");
        }
        if self.nodes.iter().any(|&n| n < 2) {
            return bad("need at least two nodes per axis");
        }
        if self.time_breaks.len() < 2 || self.time_breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("time breaks must be strictly increasing");
        }
        if self.values.len() != self.time_breaks.len() - 1 {
            return bad("one value block per time cell expected");
        }
        let total: usize = self.nodes.iter().product();
        if self
            .values
            .iter()
            .any(|blk| blk.len() != total || blk.iter().any(|v| v.len() != dim))
        {
            return bad("value block shape mismatch");
        }
        Ok(())
    }

    fn cell(&self, t: f64) -> Option<usize> {
        let m = self.time_breaks.len() - 1;
        if t < self.time_breaks[0] || t > self.time_breaks[m] {
            return None;
        }
        Some(
            self.time_breaks[1..m]
                .iter()
                .position(|&b| t < b)
                .unwrap_or(m - 1),
        )
    }

    fn eval(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let Some(cell) = self.cell(t) else {
            return vec![0.0; d];
        };
        let block = &self.values[cell];
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let n = self.nodes[a];
            let h = (self.hi[a] - self.lo[a]) / (n - 1) as f64;
            let u = ((x[a] - self.lo[a]) / h).clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let mut out = vec![0.0; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0usize;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * self.nodes[a] + base[a] + bit;
            }
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(&block[idx]) {
                    *o += w * v;
                }
            }
        }
        out
    }

    /// Index of the grid cell containing `x`; points outside the grid get
    /// indices `-1` or `n - 1` along the offending axis.
    fn spatial_cell(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .enumerate()
            .map(|(a, &xa)| {
                let n = self.nodes[a];
                let h = (self.hi[a] - self.lo[a]) / (n - 1) as f64;
                ((xa - self.lo[a]) / h).floor().clamp(-1.0, (n - 1) as f64) as i64
            })
            .collect()
    }

    fn cell_sup(&self, cell: usize) -> f64 {
        self.values[cell]
            .iter()
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    fn cell_lip(&self, cell: usize) -> f64 {
        let d = self.nodes.len();
        let block = &self.values[cell];
        let total: usize = self.nodes.iter().product();
        let mut slopes = vec![vec![0.0f64; d]; d]; // [component][axis]
        let strides: Vec<usize> = (0..d)
            .map(|a| self.nodes[a + 1..].iter().product())
            .collect();
        for idx in 0..total {
            for a in 0..d {
                let pos = (idx / strides[a]) % self.nodes[a];
                if pos + 1 >= self.nodes[a] {
                    continue;
                }
                let h = (self.hi[a] - self.lo[a]) / (self.nodes[a] - 1) as f64;
                let next = &block[idx + strides[a]];
                for c in 0..d {
                    slopes[c][a] = slopes[c][a].max(((next[c] - block[idx][c]) / h).abs());
                }
            }
        }
        slopes.iter().flatten().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Family of a [`TimeDependentField`], with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero {
        dim: usize,
    },
    Constant {
        c: Vec<f64>,
    },
    /// `a(t) A x`.
    Linear {
        profile: TimeProfile,
        matrix: Vec<Vec<f64>>,
    },
    /// `b(x, y) = (y, 0)` for `y >= 0` and `0` otherwise.
    ShearDeadZone,
    /// `a(t) v(x)` with `v_i(x) = amplitude * sin(wave * x_{i+1 mod d})`.
    Modulated {
        dim: usize,
        profile: TimeProfile,
        amplitude: f64,
        wave: f64,
    },
    Gridded(GriddedField),
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    Zero,
    Constant(Vec<f64>),
    Linear {
        profile: TimeProfile,
        matrix: DMatrix<f64>,
        norm: f64,
    },
    Shear,
    Modulated {
        profile: TimeProfile,
        amplitude: f64,
        wave: f64,
    },
    Gridded(GriddedField),
    Mollified(Arc<Mollifier>),
}

/// A field `b(t, x)` together with its Lipschitz and sup-norm profiles.
#[derive(Debug, Clone)]
pub struct TimeDependentField {
    dim: usize,
    kind: Kind,
    bbox: BoundingBox,
    spec: Option<FieldSpec>,
}

impl TimeDependentField {
    /// Builds the field and checks that `∫_0^1 (‖b_t‖ + Lip(b_t)) dt` is finite.
    pub fn new(spec: FieldSpec, bbox: BoundingBox) -> Result<Self, FlowError> {
        let (dim, kind) = match &spec {
            FieldSpec::Zero { dim } => (*dim, Kind::Zero),
            FieldSpec::Constant { c } => (c.len(), Kind::Constant(c.clone())),
            FieldSpec::Linear { profile, matrix } => {
                let d = matrix.len();
                if d == 0 || matrix.iter().any(|r| r.len() != d) {
                    return Err(FlowError::InvalidParameter(
                        "linear field needs a square matrix".into(),
                    ));
                }
                let m = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
                let norm = m.clone().singular_values().max();
                (
                    d,
                    Kind::Linear {
                        profile: profile.clone(),
                        matrix: m,
                        norm,
                    },
                )
            }
            FieldSpec::ShearDeadZone => (2, Kind::Shear),
            FieldSpec::Modulated {
                dim,
                profile,
                amplitude,
                wave,
            } => (
                *dim,
                Kind::Modulated {
                    profile: profile.clone(),
                    amplitude: *amplitude,
                    wave: *wave,
                },
            ),
            FieldSpec::Gridded(g) => {
                g.validate(g.nodes.len())?;
                (g.nodes.len(), Kind::Gridded(g.clone()))
            }
        };
        if dim == 0 {
            return Err(FlowError::InvalidParameter(
                "field dimension must be positive".into(),
            ));
        }
        if bbox.dim() != dim {
            return Err(FlowError::DimensionMismatch {
                expected: dim,
                got: bbox.dim(),
            });
        }
        let field = Self {
            dim,
            kind,
            bbox,
            spec: Some(spec),
        };
        field.check_class_l()?;
        Ok(field)
    }

    pub(crate) fn from_kind(dim: usize, kind: Kind, bbox: BoundingBox) -> Result<Self, FlowError> {
        let field = Self {
            dim,
            kind,
            bbox,
            spec: None,
        };
        field.check_class_l()?;
        Ok(field)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(FieldSpec::Zero { dim }, BoundingBox::cube(dim, 1.0)).expect("zero field")
    }

    /// The spec the field was built from; `None` for mollified fields.
    pub fn spec(&self) -> Option<&FieldSpec> {
        self.spec.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Zero => "zero",
            Kind::Constant(_) => "constant",
            Kind::Linear { .. } => "linear",
            Kind::Shear => "shear_dead_zone",
            Kind::Modulated { .. } => "modulated",
            Kind::Gridded(_) => "gridded",
            Kind::Mollified(_) => "mollified",
        }
    }

    /// Label of the smooth piece of space containing `x`, for fields with
    /// known kinks; `None` otherwise.
    pub(crate) fn spatial_piece(&self, x: &[f64]) -> Option<Vec<i64>> {
        match &self.kind {
            Kind::Gridded(g) => Some(g.spatial_cell(x)),
            _ => None,
        }
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn value(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Zero => vec![0.0; self.dim],
            Kind::Constant(c) => c.clone(),
            Kind::Linear {
                profile, matrix, ..
            } => {
                let a = profile.value(t);
                (0..self.dim)
                    .map(|i| a * (0..self.dim).map(|j| matrix[(i, j)] * x[j]).sum::<f64>())
                    .collect()
            }
            Kind::Shear => {
                if x[1] >= 0.0 {
                    vec![x[1], 0.0]
                } else {
                    vec![0.0, 0.0]
                }
            }
            Kind::Modulated {
                profile,
                amplitude,
                wave,
            } => {
                let a = profile.value(t) * amplitude;
                (0..self.dim)
                    .map(|i| a * (wave * x[(i + 1) % self.dim]).sin())
                    .collect()
            }
            Kind::Gridded(g) => g.eval(t, x),
            Kind::Mollified(m) => m.value(t, x),
        }
    }

    /// Jacobian `J[i][j] = ∂b_i/∂x_j` where the field is differentiable.
    /// `None` on the non-smooth set of the dead-zone shear and for gridded
    /// fields.
    pub fn jacobian(&self, t: f64, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let d = self.dim;
        match &self.kind {
            Kind::Zero | Kind::Constant(_) => Some(vec![vec![0.0; d]; d]),
            Kind::Linear {
                profile, matrix, ..
            } => {
                let a = profile.value(t);
                Some(
                    (0..d)
                        .map(|i| (0..d).map(|j| a * matrix[(i, j)]).collect())
                        .collect(),
                )
            }
            Kind::Shear => {
                if x[1] > 0.0 {
                    Some(vec![vec![0.0, 1.0], vec![0.0, 0.0]])
                } else if x[1] < 0.0 {
                    Some(vec![vec![0.0; 2]; 2])
                } else {
                    None
                }
            }
            Kind::Modulated {
                profile,
                amplitude,
                wave,
            } => {
                let a = profile.value(t) * amplitude * wave;
                let mut j = vec![vec![0.0; d]; d];
                for (i, row) in j.iter_mut().enumerate() {
                    let k = (i + 1) % d;
                    row[k] += a * (wave * x[k]).cos();
                }
                Some(j)
            }
            Kind::Gridded(_) => None,
            Kind::Mollified(m) => m.jacobian(t, x),
        }
    }

    /// `Lip(b_t)`.
    pub fn lip(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Zero | Kind::Constant(_) => 0.0,
            Kind::Linear { profile, norm, .. } => profile.value(t).abs() * norm,
            Kind::Shear => 1.0,
            Kind::Modulated {
                profile,
                amplitude,
                wave,
            } => (profile.value(t) * amplitude * wave).abs(),
            Kind::Gridded(g) => g.cell(t).map_or(0.0, |c| g.cell_lip(c)),
            Kind::Mollified(m) => m.lip(t),
        }
    }

    /// `‖b_t‖_C0` over the bounding box.
    pub fn sup(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Constant(c) => c.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Kind::Linear { profile, norm, .. } => {
                profile.value(t).abs() * norm * self.bbox.max_norm()
            }
            Kind::Shear => self.bbox.hi[1].max(0.0),
            Kind::Modulated {
                profile, amplitude, ..
            } => (profile.value(t) * amplitude).abs() * (self.dim as f64).sqrt(),
            Kind::Gridded(g) => g.cell(t).map_or(0.0, |c| g.cell_sup(c)),
            Kind::Mollified(m) => m.sup(t),
        }
    }

    /// Times where the profiles are unbounded.
    pub fn singular_times(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Linear { profile, .. } | Kind::Modulated { profile, .. } => {
                profile.singular_times()
            }
            _ => Vec::new(),
        }
    }

    /// Times where the field may jump in `t`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Gridded(g) => g.time_breaks.clone(),
            _ => Vec::new(),
        }
    }

    /// Splits `[a, b]` at singular times and breakpoints.
    pub(crate) fn pieces(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut cuts: Vec<f64> = self
            .singular_times()
            .into_iter()
            .chain(self.breakpoints())
            .filter(|&c| c > lo && c < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        let mut prev = lo;
        for c in cuts {
            out.push((prev, c));
            prev = c;
        }
        out.push((prev, hi));
        out
    }

    /// `∫ f` over `[a, b]` (orientation ignored), split at irregular times.
    pub(crate) fn integrate_profile<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<f64, FlowError> {
        let mut total = 0.0;
        for (lo, hi) in self.pieces(a, b) {
            total += quadrature::adaptive(&f, lo, hi, tol)
                .map_err(|e| FlowError::NotInClassL(e.to_string()))?;
        }
        Ok(total)
    }

    /// `∫_a^b Lip(b_r) dr` for `a <= b`.
    pub fn lip_integral(&self, a: f64, b: f64) -> Result<f64, FlowError> {
        if let Kind::Linear { profile, norm, .. } = &self.kind {
            if let TimeProfile::HalfInvSqrt | TimeProfile::Const { .. } = profile {
                return Ok((profile.integral(a.min(b), a.max(b)) * norm).abs());
            }
        }
        self.integrate_profile(|t| self.lip(t), a, b, 1e-13)
    }

    /// `∫_a^b ‖b_r‖_C0 dr` for `a <= b`.
    pub fn sup_integral(&self, a: f64, b: f64) -> Result<f64, FlowError> {
        if let Kind::Linear { profile, norm, .. } = &self.kind {
            if let TimeProfile::HalfInvSqrt | TimeProfile::Const { .. } = profile {
                return Ok(
                    (profile.integral(a.min(b), a.max(b)) * norm * self.bbox.max_norm()).abs(),
                );
            }
        }
        self.integrate_profile(|t| self.sup(t), a, b, 1e-13)
    }

    fn check_class_l(&self) -> Result<(), FlowError> {
        let total = self.integrate_profile(|t| self.sup(t) + self.lip(t), 0.0, 1.0, 1e-10)?;
        if !total.is_finite() {
            return Err(FlowError::NotInClassL(format!(
                "budget integral is {total}"
            )));
        }
        Ok(())
    }

    /// The spatial field `b_t` at a frozen time.
    pub fn at(&self, t: f64) -> FieldSlice<'_> {
        FieldSlice { field: self, t }
    }
}

/// `b_t` for a fixed `t`.
#[derive(Clone, Copy)]
pub struct FieldSlice<'a> {
    field: &'a TimeDependentField,
    t: f64,
}

impl SmoothField for FieldSlice<'_> {
    fn dim(&self) -> usize {
        self.field.dim
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.field.value(self.t, x)
    }

    fn jacobian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.field.jacobian(self.t, x)
    }
}

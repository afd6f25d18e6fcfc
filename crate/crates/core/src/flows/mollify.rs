//! Space-time mollification `b^ε = b * (φ^ε ψ^ε)` by tensor Gauss–Legendre
//! quadrature against the standard bump.

use std::sync::Arc;

use super::field::{FieldSpec, Kind, TimeDependentField, TimeProfile};
use super::FlowError;
use crate::quadrature::gauss_legendre_on;

/// Default number of Gauss–Legendre nodes per axis.
pub const DEFAULT_MOLLIFIER_NODES: usize = 16;

/// Time nodes per spatial node. The time window is clipped at `0` and `1`,
/// where the kernel has to be integrated over part of its support.
const TIME_NODE_FACTOR: usize = 6;

fn bump(u2: f64) -> f64 {
    if u2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u2)).exp()
    }
}

#[derive(Debug)]
pub(crate) struct Mollifier {
    base: TimeDependentField,
    /// Copy of `base` on a box enlarged by `ε`, for the sup profile.
    widened: TimeDependentField,
    /// Spatial part of a separable base `a(t) v(x)` (with `a ≡ 1`), if any.
    spatial: Option<TimeDependentField>,
    eps: f64,
    /// Gauss–Legendre rule on `[-1, 1]` used for the time convolution.
    time_rule: (Vec<f64>, Vec<f64>),
    /// Discrete mass of the time kernel over the full window `[t − ε, t + ε]`.
    time_mass: f64,
    space_rule: Vec<(Vec<f64>, f64)>,
}

impl Mollifier {
    /// Nodes `r` and weights of `∫ ψ^ε(t − r) (·)(r) dr` over
    /// `[t − ε, t + ε] ∩ [0, 1]`. Clipping the interval rather than the nodes
    /// keeps `b^ε` continuous in `t` near the ends of `[0, 1]`.
    fn time_nodes(&self, t: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = ((t - self.eps).max(0.0), (t + self.eps).min(1.0));
        if !(hi > lo) {
            return Vec::new();
        }
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        self.time_rule
            .0
            .iter()
            .zip(&self.time_rule.1)
            .map(|(x, w)| {
                let r = mid + half * x;
                (
                    r,
                    half * w * bump(((t - r) / self.eps).powi(2)) / self.time_mass,
                )
            })
            .filter(|(_, w)| *w > 0.0)
            .collect()
    }

    fn time_weight_sum(&self, t: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.time_nodes(t).into_iter().map(|(r, w)| w * f(r)).sum()
    }

    fn time_factor(&self, t: f64) -> f64 {
        match self.base.kind() {
            Kind::Linear { profile, .. } | Kind::Modulated { profile, .. } => {
                self.time_weight_sum(t, |r| profile.value(r))
            }
            _ => self.time_weight_sum(t, |_| 1.0),
        }
    }

    fn spatial_average<F: Fn(&[f64]) -> Vec<f64>>(&self, x: &[f64], f: F) -> Vec<f64> {
        let d = x.len();
        let mut out = vec![0.0; d];
        let mut y = vec![0.0; d];
        for (z, w) in &self.space_rule {
            for a in 0..d {
                y[a] = x[a] - z[a];
            }
            for (o, v) in out.iter_mut().zip(f(&y)) {
                *o += w * v;
            }
        }
        out
    }

    pub(crate) fn value(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.spatial {
            Some(v) => {
                let a = self.time_factor(t);
                if a == 0.0 {
                    return vec![0.0; x.len()];
                }
                self.spatial_average(x, |y| v.value(0.5, y))
                    .into_iter()
                    .map(|c| a * c)
                    .collect()
            }
            None => {
                let d = x.len();
                let mut out = vec![0.0; d];
                for (r, ws) in self.time_nodes(t) {
                    let inner = self.spatial_average(x, |y| self.base.value(r, y));
                    for (o, v) in out.iter_mut().zip(inner) {
                        *o += ws * v;
                    }
                }
                out
            }
        }
    }

    pub(crate) fn jacobian(&self, t: f64, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let v = self.spatial.as_ref()?;
        let d = x.len();
        let a = self.time_factor(t);
        let mut out = vec![vec![0.0; d]; d];
        let mut y = vec![0.0; d];
        for (z, w) in &self.space_rule {
            for k in 0..d {
                y[k] = x[k] - z[k];
            }
            let j = v.jacobian(0.5, &y)?;
            for (orow, jrow) in out.iter_mut().zip(j) {
                for (o, val) in orow.iter_mut().zip(jrow) {
                    *o += a * w * val;
                }
            }
        }
        Some(out)
    }

    pub(crate) fn lip(&self, t: f64) -> f64 {
        self.time_weight_sum(t, |r| self.base.lip(r))
    }

    pub(crate) fn sup(&self, t: f64) -> f64 {
        self.time_weight_sum(t, |r| self.widened.sup(r))
    }
}

/// Separable bases `a(t) v(x)`: returns the field `v` (profile set to 1).
fn spatial_part(base: &TimeDependentField) -> Option<TimeDependentField> {
    let one = TimeProfile::Const { value: 1.0 };
    let spec = match base.spec()? {
        FieldSpec::Linear { matrix, .. } => FieldSpec::Linear {
            profile: one,
            matrix: matrix.clone(),
        },
        FieldSpec::Modulated {
            dim,
            amplitude,
            wave,
            ..
        } => FieldSpec::Modulated {
            dim: *dim,
            profile: one,
            amplitude: *amplitude,
            wave: *wave,
        },
        FieldSpec::Gridded(_) => return None,
        other => other.clone(),
    };
    TimeDependentField::new(spec, base.bounding_box().clone()).ok()
}

/// `b^ε` with `n` Gauss–Legendre nodes per axis in time and space. The
/// field is extended by zero outside `t ∈ [0, 1]`.
pub fn mollify_with_nodes(
    field: &TimeDependentField,
    eps: f64,
    n: usize,
) -> Result<TimeDependentField, FlowError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(FlowError::BadEpsilon(eps));
    }
    if n == 0 {
        return Err(FlowError::InvalidParameter(
            "mollifier needs at least one node".into(),
        ));
    }
    let d = field.dim();
    let (nodes, weights) = gauss_legendre_on(n, -eps, eps);
    let time_rule = gauss_legendre_on(TIME_NODE_FACTOR * n, -1.0, 1.0);
    let time_mass: f64 = eps
        * time_rule
            .0
            .iter()
            .zip(&time_rule.1)
            .map(|(s, w)| w * bump(s * s))
            .sum::<f64>();

    let mut space_rule = Vec::new();
    let mut idx = vec![0usize; d];
    'outer: loop {
        let z: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
        let w: f64 = idx.iter().map(|&i| weights[i]).product::<f64>()
            * bump(z.iter().map(|v| v * v).sum::<f64>() / (eps * eps));
        if w > 0.0 {
            space_rule.push((z, w));
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < n {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    let total: f64 = space_rule.iter().map(|(_, w)| w).sum();
    space_rule.iter_mut().for_each(|(_, w)| *w /= total);

    let widened = match field.spec() {
        Some(spec) => TimeDependentField::new(spec.clone(), field.bounding_box().enlarged(eps))?,
        None => field.clone(),
    };
    let m = Mollifier {
        base: field.clone(),
        widened,
        spatial: spatial_part(field),
        eps,
        time_rule,
        time_mass,
        space_rule,
    };
    TimeDependentField::from_kind(
        d,
        Kind::Mollified(Arc::new(m)),
        field.bounding_box().clone(),
    )
}

/// `b^ε` with [`DEFAULT_MOLLIFIER_NODES`] nodes per axis.
pub fn mollify(field: &TimeDependentField, eps: f64) -> Result<TimeDependentField, FlowError> {
    mollify_with_nodes(field, eps, DEFAULT_MOLLIFIER_NODES)
}

impl TimeDependentField {
    /// Mollification radius, for mollified fields.
    pub fn mollifier_radius(&self) -> Option<f64> {
        match self.kind() {
            Kind::Mollified(m) => Some(m.eps),
            _ => None,
        }
    }
}

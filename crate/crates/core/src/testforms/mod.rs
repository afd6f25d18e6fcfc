//! Smooth compactly supported test forms.
//!
//! Every coefficient of a [`TestForm`] is a polynomial times the standard bump
//! `B(x) = exp(-1 / (1 - |z|²))`, `z = (x - c) / r`, sharing one center `c` and
//! radius `r` per form. Derivatives of such coefficients leave the class, so
//! internally a coefficient is a short series `Σ_m P_m(x) s(x)^{-m} B(x)` with
//! `s = 1 - |z|²`; that class is closed under partial differentiation, which
//! keeps exterior derivatives exact.

mod poly;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior::{basis, basis_rank, mask_indices, CoVector, ExteriorError, MAX_DIM};

pub use poly::{Monomial, Poly};

/// Degree cap for user-constructed coefficient polynomials.
pub const MAX_POLY_DEGREE: usize = 3;

/// Radii used by generated dictionaries.
pub const DICTIONARY_RADII: [f64; 3] = [0.25, 0.5, 1.0];

/// Default dictionary size.
pub const DEFAULT_DICTIONARY_SIZE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("bump radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("polynomial degree {0} exceeds the cap of {MAX_POLY_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("time cutoff support ({lo}, {hi}) is not contained in (0, 1)")]
    CutoffSupport { lo: f64, hi: f64 },
    #[error("vector field provides no Jacobian at {0:?}")]
    NoJacobian(Vec<f64>),
    #[error("point has dimension {got}, form lives in R^{expected}")]
    PointDimension { got: usize, expected: usize },
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// `Σ_m P_m(x) s(x)^{-m}`, multiplied by the bump of the owning form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BumpSeries {
    polys: Vec<Poly>,
}

impl BumpSeries {
    fn is_zero(&self) -> bool {
        self.polys.iter().all(Poly::is_zero)
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.polys.len().max(other.polys.len());
        let dim = self
            .polys
            .first()
            .or(other.polys.first())
            .map_or(0, Poly::dim);
        let polys = (0..n)
            .map(|m| match (self.polys.get(m), other.polys.get(m)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => Poly::zero(dim),
            })
            .collect();
        Self { polys }
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            polys: self.polys.iter().map(|p| p.scale(s)).collect(),
        }
    }

    fn eval(&self, x: &[f64], s: f64) -> f64 {
        let inv = 1.0 / s;
        let mut pow = 1.0;
        let mut acc = 0.0;
        for p in &self.polys {
            if !p.is_zero() {
                acc += p.eval(x) * pow;
            }
            pow *= inv;
        }
        acc
    }

    /// `∂_i` of `series · B`, divided again by `B`.
    fn partial(&self, i: usize, center: &[f64], radius: f64) -> Self {
        let dim = center.len();
        // ∂_i s = -2 (x_i - c_i) / r²
        let ds = Poly::from_terms(dim, {
            let mut e = [0u8; MAX_DIM];
            e[i] = 1;
            let r2 = radius * radius;
            [(e, -2.0 / r2), ([0u8; MAX_DIM], 2.0 * center[i] / r2)]
        });
        let mut polys = vec![Poly::zero(dim); self.polys.len() + 2];
        for (m, p) in self.polys.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            polys[m] = polys[m].add(&p.partial(i));
            let q = ds.mul(p);
            if m > 0 {
                polys[m + 1] = polys[m + 1].add(&q.scale(-(m as f64)));
            }
            polys[m + 2] = polys[m + 2].add(&q);
        }
        while polys.last().is_some_and(Poly::is_zero) {
            polys.pop();
        }
        Self { polys }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FormTerm {
    indices: Vec<usize>,
    series: BumpSeries,
}

/// A smooth differential `k`-form on `R^d` supported in the closed ball
/// `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestForm {
    dim: usize,
    grade: usize,
    center: Vec<f64>,
    radius: f64,
    terms: Vec<FormTerm>,
    #[serde(default)]
    flagged: bool,
}

/// Value of the bump ratio `s = 1 - |z|²` and the bump itself, or `None`
/// outside the support or where the bump underflows.
fn bump_at(x: &[f64], center: &[f64], radius: f64) -> Option<(f64, f64)> {
    let z2: f64 = x
        .iter()
        .zip(center)
        .map(|(xi, ci)| (xi - ci) * (xi - ci))
        .sum::<f64>()
        / (radius * radius);
    let s = 1.0 - z2;
    if s <= 0.0 || 1.0 / s > 745.0 {
        return None;
    }
    Some((s, (-1.0 / s).exp()))
}

impl TestForm {
    /// Builds `Σ poly_j(x) B(x) dx_{I_j}`. Index tuples are canonicalized with
    /// their permutation sign; tuples with a repeated index are dropped.
    pub fn new(
        dim: usize,
        grade: usize,
        center: Vec<f64>,
        radius: f64,
        terms: Vec<(Vec<usize>, Poly)>,
    ) -> Result<Self, FormError> {
        CoVector::zero(dim, grade)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(FormError::BadRadius(radius));
        }
        if center.len() != dim {
            return Err(FormError::PointDimension {
                got: center.len(),
                expected: dim,
            });
        }
        let mut merged: Vec<Option<BumpSeries>> = vec![None; basis(dim, grade).len()];
        for (indices, p) in terms {
            if p.degree() > MAX_POLY_DEGREE {
                return Err(FormError::DegreeTooHigh(p.degree()));
            }
            if indices.len() != grade {
                return Err(ExteriorError::GradeMismatch(indices.len(), grade).into());
            }
            let unit = CoVector::from_indices(dim, &indices, 1.0)?;
            let Some(pos) = unit.coeffs().iter().position(|&c| c != 0.0) else {
                continue;
            };
            let series = BumpSeries {
                polys: vec![p.scale(unit.coeffs()[pos])],
            };
            merged[pos] = Some(match merged[pos].take() {
                Some(s) => s.add(&series),
                None => series,
            });
        }
        Ok(Self::assemble(dim, grade, center, radius, merged, false))
    }

    fn assemble(
        dim: usize,
        grade: usize,
        center: Vec<f64>,
        radius: f64,
        merged: Vec<Option<BumpSeries>>,
        flagged: bool,
    ) -> Self {
        let terms = basis(dim, grade)
            .iter()
            .zip(merged)
            .filter_map(|(&mask, s)| {
                s.filter(|s| !s.is_zero()).map(|series| FormTerm {
                    indices: mask_indices(mask),
                    series,
                })
            })
            .collect();
        Self {
            dim,
            grade,
            center,
            radius,
            terms,
            flagged,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Set on the zero form returned by differentiating a top-degree form.
    pub fn is_flagged(&self) -> bool {
        self.flagged
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if `x` lies strictly inside the support ball.
    pub fn touches(&self, x: &[f64]) -> bool {
        bump_at(x, &self.center, self.radius).is_some()
    }

    pub fn eval(&self, x: &[f64]) -> CoVector {
        let mut coeffs = vec![0.0; basis(self.dim, self.grade).len()];
        if let Some((s, b)) = bump_at(x, &self.center, self.radius) {
            for t in &self.terms {
                coeffs[self.rank(&t.indices)] = b * t.series.eval(x, s);
            }
        }
        CoVector::from_coeffs(self.dim, self.grade, coeffs).expect("shape checked at construction")
    }

    /// Form value together with the covectors of coefficientwise partial
    /// derivatives `∂_l ω`, `l = 0..d`.
    pub fn jet(&self, x: &[f64]) -> (CoVector, Vec<CoVector>) {
        let len = basis(self.dim, self.grade).len();
        let mut value = vec![0.0; len];
        let mut partials = vec![vec![0.0; len]; self.dim];
        if let Some((s, b)) = bump_at(x, &self.center, self.radius) {
            for t in &self.terms {
                let r = self.rank(&t.indices);
                value[r] = b * t.series.eval(x, s);
                for (l, p) in partials.iter_mut().enumerate() {
                    p[r] = b * t.series.partial(l, &self.center, self.radius).eval(x, s);
                }
            }
        }
        let wrap = |c| CoVector::from_coeffs(self.dim, self.grade, c).expect("shape");
        (wrap(value), partials.into_iter().map(wrap).collect())
    }

    fn rank(&self, indices: &[usize]) -> usize {
        basis_rank(self.dim, indices.iter().fold(0u16, |m, &i| m | (1 << i)))
    }

    /// Exact exterior derivative. For `k = d` this is the zero form of
    /// grade `d`, flagged.
    pub fn exterior_derivative(&self) -> TestForm {
        let n = self.dim;
        if self.grade == n {
            return Self::assemble(n, n, self.center.clone(), self.radius, vec![None], true);
        }
        let mut merged: Vec<Option<BumpSeries>> = vec![None; basis(n, self.grade + 1).len()];
        for t in &self.terms {
            let mask = t.indices.iter().fold(0u16, |m, &i| m | (1 << i));
            for l in 0..n {
                if mask & (1 << l) != 0 {
                    continue;
                }
                // dx_l ∧ dx_I = (-1)^{#{i in I: i < l}} dx_{I ∪ {l}}
                let below = (mask & ((1u16 << l) - 1)).count_ones();
                let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
                let d = t.series.partial(l, &self.center, self.radius).scale(sign);
                let pos = basis_rank(n, mask | (1 << l));
                merged[pos] = Some(match merged[pos].take() {
                    Some(s) => s.add(&d),
                    None => d,
                });
            }
        }
        Self::assemble(
            n,
            self.grade + 1,
            self.center.clone(),
            self.radius,
            merged,
            self.flagged,
        )
    }

    /// Pointwise evaluator of the Lie derivative `L_b ω` along a smooth field.
    pub fn lie_derivative<'a, F: SmoothField + ?Sized>(
        &'a self,
        field: &'a F,
    ) -> LieDerivative<'a, F> {
        LieDerivative {
            form: self,
            d_form: self.exterior_derivative(),
            field,
        }
    }
}

/// A vector field on `R^d` with pointwise values and, where it is smooth,
/// its Jacobian `J[i][j] = ∂b_i / ∂x_j`.
pub trait SmoothField {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>>;
}

/// Evaluator of `L_b ω = d(i_b ω) + i_b(dω)`.
pub struct LieDerivative<'a, F: SmoothField + ?Sized> {
    form: &'a TestForm,
    d_form: TestForm,
    field: &'a F,
}

impl<F: SmoothField + ?Sized> LieDerivative<'_, F> {
    pub fn eval(&self, x: &[f64]) -> Result<CoVector, FormError> {
        let n = self.form.dim;
        if x.len() != n {
            return Err(FormError::PointDimension {
                got: x.len(),
                expected: n,
            });
        }
        let b = self.field.value(x);
        let jac = self
            .field
            .jacobian(x)
            .ok_or_else(|| FormError::NoJacobian(x.to_vec()))?;
        let mut out = self.d_form.eval(x).contract(&b)?;
        if self.form.grade == 0 {
            // d(i_b ω) vanishes for functions
            return Ok(out);
        }
        let (omega, partials) = self.form.jet(x);
        for l in 0..n {
            let db: Vec<f64> = (0..n).map(|i| jac[i][l]).collect();
            // ∂_l (i_b ω) = i_{∂_l b} ω + i_b ∂_l ω
            let dl = omega.contract(&db)?.add(&partials[l].contract(&b)?)?;
            let dx = CoVector::from_indices(n, &[l], 1.0)?;
            out = out.add(&dx.wedge(&dl)?)?;
        }
        Ok(out)
    }
}

/// Smooth cutoff `ψ(t)` supported in `(center - radius, center + radius) ⊂ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCutoff {
    pub center: f64,
    pub radius: f64,
}

impl TimeCutoff {
    pub fn new(center: f64, radius: f64) -> Result<Self, FormError> {
        if !(radius > 0.0) {
            return Err(FormError::BadRadius(radius));
        }
        let (lo, hi) = (center - radius, center + radius);
        if lo < 0.0 || hi > 1.0 {
            return Err(FormError::CutoffSupport { lo, hi });
        }
        Ok(Self { center, radius })
    }

    fn parts(&self, t: f64) -> Option<(f64, f64, f64)> {
        let u = (t - self.center) / self.radius;
        let s = 1.0 - u * u;
        if s <= 0.0 || 1.0 / s > 745.0 {
            return None;
        }
        Some((u, s, (-1.0 / s).exp()))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.parts(t).map_or(0.0, |(_, _, psi)| psi)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.parts(t)
            .map_or(0.0, |(u, s, psi)| psi * (-2.0 * u) / (self.radius * s * s))
    }

    /// Symmetric cutoffs centered at `1/2` used by residual studies.
    pub fn standard_family() -> Vec<TimeCutoff> {
        [0.3, 0.35, 0.4, 0.45]
            .iter()
            .map(|&r| TimeCutoff::new(0.5, r).expect("inside (0,1)"))
            .collect()
    }
}

/// A finite, seeded family of test forms. The induced test-form metric is
/// `dist(S, T) = max_ω |⟨S - T, ω⟩|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormDictionary {
    pub seed: u64,
    pub forms: Vec<TestForm>,
}

impl FormDictionary {
    /// Generates `size` forms of the given grade with centers on a lattice
    /// covering `[lo, hi]` (per axis), radii cycling through
    /// [`DICTIONARY_RADII`] and random polynomial coefficients of degree at
    /// most 2 in `x - center`.
    pub fn generate(
        dim: usize,
        grade: usize,
        size: usize,
        seed: u64,
        lo: &[f64],
        hi: &[f64],
    ) -> Result<Self, FormError> {
        CoVector::zero(dim, grade)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let per_axis = if dim == 0 {
            1
        } else {
            ((size as f64).powf(1.0 / dim as f64).ceil() as usize).max(2)
        };
        let lattice_len = per_axis.pow(dim as u32);
        let basis_len = basis(dim, grade).len();
        let mut forms = Vec::with_capacity(size);
        for i in 0..size {
            // spread consecutive forms over the lattice
            let cell = (i * 7919) % lattice_len.max(1);
            let mut rest = cell;
            let center: Vec<f64> = (0..dim)
                .map(|a| {
                    let j = rest % per_axis;
                    rest /= per_axis;
                    lo[a] + (hi[a] - lo[a]) * j as f64 / (per_axis - 1) as f64
                })
                .collect();
            let radius = DICTIONARY_RADII[i % DICTIONARY_RADII.len()];
            let mut terms = Vec::new();
            let n_terms = 1 + rng.gen_range(0..basis_len.min(2));
            for _ in 0..n_terms {
                let mask = basis(dim, grade)[rng.gen_range(0..basis_len)];
                terms.push((mask_indices(mask), random_poly(dim, &center, &mut rng)));
            }
            forms.push(TestForm::new(dim, grade, center, radius, terms)?);
        }
        Ok(Self { seed, forms })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

// 1 + a·(x-c) + (x-c)ᵀ B (x-c) with small random a, B, expanded in x.
fn random_poly(dim: usize, center: &[f64], rng: &mut ChaCha8Rng) -> Poly {
    let shifted: Vec<Poly> = (0..dim)
        .map(|i| Poly::coordinate(dim, i).add(&Poly::constant(dim, -center[i])))
        .collect();
    let mut p = Poly::constant(dim, 1.0 + rng.gen_range(-0.5..0.5));
    for i in 0..dim {
        p = p.add(&shifted[i].scale(rng.gen_range(-1.0..1.0)));
        for j in i..dim {
            p = p.add(&shifted[i].mul(&shifted[j]).scale(rng.gen_range(-1.0..1.0)));
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shear;

    impl SmoothField for Shear {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> Vec<f64> {
            vec![x[1], 0.0]
        }
        fn jacobian(&self, _x: &[f64]) -> Option<Vec<Vec<f64>>> {
            Some(vec![vec![0.0, 1.0], vec![0.0, 0.0]])
        }
    }

    struct Rough;

    impl SmoothField for Rough {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> Vec<f64> {
            vec![x[1].abs(), 0.0]
        }
        fn jacobian(&self, _x: &[f64]) -> Option<Vec<Vec<f64>>> {
            None
        }
    }

    fn one_form() -> TestForm {
        // (1 + x1 - 2 x1 x2) B dx1 + x2² B dx2
        let x = Poly::coordinate(2, 0);
        let y = Poly::coordinate(2, 1);
        let p = Poly::constant(2, 1.0).add(&x).add(&x.mul(&y).scale(-2.0));
        TestForm::new(
            2,
            1,
            vec![0.1, -0.2],
            0.8,
            vec![(vec![0], p), (vec![1], y.mul(&y))],
        )
        .unwrap()
    }

    #[test]
    fn value_at_center_is_poly_times_inverse_e() {
        let x = Poly::coordinate(2, 0);
        let p = Poly::constant(2, 2.0).add(&x);
        let c = vec![0.5, -1.0];
        let w = TestForm::new(2, 1, c.clone(), 0.3, vec![(vec![0], p)]).unwrap();
        let v = w.eval(&c);
        assert!((v.coeffs()[0] - 2.5 * (-1f64).exp()).abs() < 1e-15);
        assert_eq!(v.coeffs()[1], 0.0);
    }

    #[test]
    fn zero_outside_support() {
        let w = one_form();
        for i in 0..50 {
            let a = i as f64 * 0.4;
            let x = [0.1 + 0.8 * a.cos(), -0.2 + 0.8 * a.sin()];
            assert!(w.eval(&x).is_zero());
            let far = [0.1 + 3.0 * a.cos(), -0.2 + 1.5 * a.sin()];
            assert!(w.eval(&far).is_zero());
        }
        let zero =
            TestForm::new(2, 1, vec![0.0, 0.0], 1.0, vec![(vec![0], Poly::zero(2))]).unwrap();
        assert!(zero.eval(&[0.1, 0.1]).is_zero());
    }

    #[test]
    fn gradient_of_bump_vanishes_at_center() {
        let w = TestForm::new(
            3,
            0,
            vec![1.0, 2.0, 3.0],
            0.5,
            vec![(vec![], Poly::constant(3, 1.0))],
        )
        .unwrap();
        let dw = w.exterior_derivative();
        assert_eq!(dw.grade(), 1);
        assert!(dw.eval(&[1.0, 2.0, 3.0]).max_abs() < 1e-15);
    }

    #[test]
    fn exterior_derivative_matches_central_differences() {
        // d(x1 B dx2) has the dx1∧dx2 coefficient ∂_1 (x1 B)
        let w = TestForm::new(
            2,
            1,
            vec![0.0, 0.0],
            1.0,
            vec![(vec![1], Poly::coordinate(2, 0))],
        )
        .unwrap();
        let dw = w.exterior_derivative();
        let h = 1e-5;
        for p in [[0.3, 0.2], [-0.1, 0.5], [0.6, -0.4]] {
            let f = |x: f64| w.eval(&[x, p[1]]).coeffs()[1];
            let fd = (f(p[0] + h) - f(p[0] - h)) / (2.0 * h);
            assert!((dw.eval(&p).coeffs()[0] - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn top_degree_derivative_is_flagged_zero() {
        let w = TestForm::new(
            2,
            2,
            vec![0.0, 0.0],
            1.0,
            vec![(vec![0, 1], Poly::constant(2, 1.0))],
        )
        .unwrap();
        let dw = w.exterior_derivative();
        assert!(dw.is_flagged());
        assert!(dw.eval(&[0.1, 0.1]).is_zero());
    }

    #[test]
    fn degree_cap_is_enforced() {
        let x = Poly::coordinate(2, 0);
        let p = x.mul(&x).mul(&x).mul(&x);
        assert_eq!(
            TestForm::new(2, 0, vec![0.0, 0.0], 1.0, vec![(vec![], p)]),
            Err(FormError::DegreeTooHigh(4))
        );
    }

    #[test]
    fn lie_derivative_of_function_is_directional_derivative() {
        let x = Poly::coordinate(2, 0);
        let w = TestForm::new(
            2,
            0,
            vec![0.2, 0.3],
            0.9,
            vec![(vec![], x.mul(&x).add(&Poly::constant(2, 1.0)))],
        )
        .unwrap();
        let lie = w.lie_derivative(&Shear);
        let dw = w.exterior_derivative();
        for p in [[0.1, 0.4], [0.5, 0.1], [-0.2, 0.6]] {
            let grad = dw.eval(&p);
            let expected = grad.coeffs()[0] * p[1];
            assert!((lie.eval(&p).unwrap().coeffs()[0] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn lie_derivative_matches_flow_pullback() {
        // Φ_h(x, y) = (x + h y, y) for the shear, so (Φ_h)^*ω = ω(Φ_h x) ∘ DΦ_h
        let w = one_form();
        let lie = w.lie_derivative(&Shear);
        let p = [0.2, 0.15];
        let exact = lie.eval(&p).unwrap();
        let pullback = |h: f64| {
            let v = w.eval(&[p[0] + h * p[1], p[1]]);
            let (a, b) = (v.coeffs()[0], v.coeffs()[1]);
            // DΦ_h = [[1, h], [0, 1]]: (Φ^*ω)_1 = a, (Φ^*ω)_2 = h a + b
            [a, h * a + b]
        };
        let base = w.eval(&p);
        let mut prev = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let q = pullback(h);
            let err = (0..2)
                .map(|i| ((q[i] - base.coeffs()[i]) / h - exact.coeffs()[i]).abs())
                .fold(0.0, f64::max);
            assert!(err < prev * 0.6, "first-order convergence");
            prev = err;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn lie_derivative_requires_jacobian() {
        let w = one_form();
        assert!(matches!(
            w.lie_derivative(&Rough).eval(&[0.1, 0.1]),
            Err(FormError::NoJacobian(_))
        ));
    }

    #[test]
    fn time_cutoff_support_and_derivative() {
        assert!(TimeCutoff::new(0.1, 0.2).is_err());
        let psi = TimeCutoff::new(0.4, 0.3).unwrap();
        assert_eq!(psi.value(0.05), 0.0);
        assert_eq!(psi.derivative(0.75), 0.0);
        let h = 1e-6;
        for t in [0.2, 0.35, 0.5, 0.65] {
            let fd = (psi.value(t + h) - psi.value(t - h)) / (2.0 * h);
            assert!((psi.derivative(t) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn dictionary_is_deterministic_and_round_trips() {
        let a = FormDictionary::generate(2, 1, 64, 7, &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let b = FormDictionary::generate(2, 1, 64, 7, &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        let back = FormDictionary::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        for f in &a.forms {
            assert!(DICTIONARY_RADII.contains(&f.radius()));
        }
    }
}

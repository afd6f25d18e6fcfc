//! Finite-mass `k`-currents in `R^d`: weighted Dirac atoms and oriented
//! simplicial chains.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior::{ExteriorError, MultiVector};
use crate::quadrature::simplex_rule;
use crate::testforms::{FormDictionary, TestForm};

/// Largest number of atoms or simplices a current may hold.
pub const MAX_ELEMENTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurrentError {
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("current has {0} elements, above the limit of {MAX_ELEMENTS}")]
    TooLarge(usize),
    #[error("grade mismatch: current has grade {current}, form has grade {form}")]
    GradeMismatch { current: usize, form: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("orienting vector of atom {0} has no simple witness")]
    NotSimple(usize),
    #[error("simplex {index} has {got} vertices, expected {expected}")]
    SimplexArity {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("vertex index {0} out of range")]
    VertexIndex(usize),
    #[error("the boundary of a 0-current is not defined")]
    BoundaryOfPoint,
    #[error("cannot combine a Dirac current with a simplicial one")]
    MixedKinds,
    #[error("refinement is implemented for simplices of dimension at most 3")]
    RefineGrade,
}

/// One weighted Dirac atom `w τ δ_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracAtom {
    pub point: Vec<f64>,
    pub orientation: MultiVector,
    pub weight: f64,
}

/// `Σ w_i τ_i δ_{x_i}` with simple, witnessed orienting vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracCurrent {
    dim: usize,
    grade: usize,
    atoms: Vec<DiracAtom>,
}

impl DiracCurrent {
    pub fn new(dim: usize, grade: usize, atoms: Vec<DiracAtom>) -> Result<Self, CurrentError> {
        MultiVector::zero(dim, grade)?;
        if atoms.len() > MAX_ELEMENTS {
            return Err(CurrentError::TooLarge(atoms.len()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.point.len() != dim || a.orientation.dim() != dim {
                return Err(CurrentError::DimensionMismatch(dim, a.point.len()));
            }
            if a.orientation.grade() != grade {
                return Err(ExteriorError::GradeMismatch(grade, a.orientation.grade()).into());
            }
            if grade > 1 && grade < dim && a.orientation.witness().is_none() {
                return Err(CurrentError::NotSimple(i));
            }
        }
        Ok(Self { dim, grade, atoms })
    }

    /// `w (v1 ∧ .. ∧ vk) δ_x`.
    pub fn single(
        point: Vec<f64>,
        vectors: &[Vec<f64>],
        weight: f64,
    ) -> Result<Self, CurrentError> {
        let dim = point.len();
        let orientation = MultiVector::from_vectors(dim, vectors)?;
        Self::new(
            dim,
            vectors.len(),
            vec![DiracAtom {
                point,
                orientation,
                weight,
            }],
        )
    }

    pub fn zero(dim: usize, grade: usize) -> Result<Self, CurrentError> {
        Self::new(dim, grade, Vec::new())
    }

    pub fn atoms(&self) -> &[DiracAtom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }
}

/// Oriented simplices `[v_0, .., v_k]` over a shared vertex list with real
/// multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialCurrent {
    dim: usize,
    grade: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<(Vec<usize>, f64)>,
}

impl SimplicialCurrent {
    pub fn new(
        dim: usize,
        grade: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<(Vec<usize>, f64)>,
    ) -> Result<Self, CurrentError> {
        MultiVector::zero(dim, grade)?;
        if simplices.len() > MAX_ELEMENTS {
            return Err(CurrentError::TooLarge(simplices.len()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(CurrentError::DimensionMismatch(dim, v.len()));
        }
        for (index, (s, _)) in simplices.iter().enumerate() {
            if s.len() != grade + 1 {
                return Err(CurrentError::SimplexArity {
                    index,
                    got: s.len(),
                    expected: grade + 1,
                });
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= vertices.len()) {
                return Err(CurrentError::VertexIndex(bad));
            }
        }
        Ok(Self {
            dim,
            grade,
            vertices,
            simplices,
        })
    }

    /// The oriented segment `[a, b]`.
    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self, CurrentError> {
        let dim = a.len();
        Self::new(dim, 1, vec![a, b], vec![(vec![0, 1], 1.0)])
    }

    /// The closed polygon through `points` (1-current).
    pub fn polygon(points: Vec<Vec<f64>>) -> Result<Self, CurrentError> {
        let dim = points.first().map_or(0, Vec::len);
        let n = points.len();
        let simplices = (0..n).map(|i| (vec![i, (i + 1) % n], 1.0)).collect();
        Self::new(dim, 1, points, simplices)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[(Vec<usize>, f64)] {
        &self.simplices
    }

    /// Edge vectors `v_i − v_0` of a simplex.
    pub fn edge_vectors(&self, simplex: &[usize]) -> Vec<Vec<f64>> {
        let v0 = &self.vertices[simplex[0]];
        simplex[1..]
            .iter()
            .map(|&i| {
                self.vertices[i]
                    .iter()
                    .zip(v0)
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect()
    }

    /// `k!`-scaled orienting vector `(v_1 − v_0) ∧ .. ∧ (v_k − v_0)`.
    pub fn simplex_orientation(&self, simplex: &[usize]) -> Result<MultiVector, CurrentError> {
        Ok(MultiVector::from_vectors(
            self.dim,
            &self.edge_vectors(simplex),
        )?)
    }

    /// `k`-volume of a simplex.
    pub fn simplex_volume(&self, simplex: &[usize]) -> Result<f64, CurrentError> {
        let k = simplex.len() - 1;
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        Ok(self.simplex_orientation(simplex)?.simple_mass()? / fact)
    }

    /// `∂[v_0..v_k] = Σ_i (−1)^i [v_0..v̂_i..v_k]`, faces merged up to
    /// orientation. Contributions that cancel down to rounding are dropped.
    pub fn boundary(&self) -> Result<SimplicialCurrent, CurrentError> {
        if self.grade == 0 {
            return Err(CurrentError::BoundaryOfPoint);
        }
        let mut faces: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
        for (s, m) in &self.simplices {
            for i in 0..s.len() {
                let mut face: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != i)
                    .map(|(_, &v)| v)
                    .collect();
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 } * sort_with_sign(&mut face);
                let entry = faces.entry(face).or_insert((0.0, 0.0));
                entry.0 += sign * m;
                entry.1 += m.abs();
            }
        }
        let simplices = faces
            .into_iter()
            .filter(|(_, (m, scale))| m.abs() > 4.0 * f64::EPSILON * scale)
            .map(|(f, (m, _))| (f, m))
            .collect();
        SimplicialCurrent::new(self.dim, self.grade - 1, self.vertices.clone(), simplices)
    }

    /// One level of midpoint subdivision (`k <= 3`); children keep the
    /// orientation of their parent.
    pub fn refine(&self) -> Result<SimplicialCurrent, CurrentError> {
        if self.grade > 3 {
            return Err(CurrentError::RefineGrade);
        }
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                let p = vertices[a]
                    .iter()
                    .zip(&vertices[b])
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                vertices.push(p);
                vertices.len() - 1
            })
        };
        let mut children: Vec<(Vec<usize>, f64, Vec<usize>)> = Vec::new();
        for (s, m) in &self.simplices {
            let kids: Vec<Vec<usize>> = match s.len() {
                1 => vec![s.clone()],
                2 => {
                    let c = mid(s[0], s[1], &mut vertices);
                    vec![vec![s[0], c], vec![c, s[1]]]
                }
                3 => {
                    let (a, b, c) = (s[0], s[1], s[2]);
                    let (ab, ac, bc) = (
                        mid(a, b, &mut vertices),
                        mid(a, c, &mut vertices),
                        mid(b, c, &mut vertices),
                    );
                    vec![
                        vec![a, ab, ac],
                        vec![ab, b, bc],
                        vec![ac, bc, c],
                        vec![ab, bc, ac],
                    ]
                }
                _ => {
                    let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
                    let ab = mid(a, b, &mut vertices);
                    let ac = mid(a, c, &mut vertices);
                    let ad = mid(a, d, &mut vertices);
                    let bc = mid(b, c, &mut vertices);
                    let bd = mid(b, d, &mut vertices);
                    let cd = mid(c, d, &mut vertices);
                    vec![
                        vec![a, ab, ac, ad],
                        vec![ab, b, bc, bd],
                        vec![ac, bc, c, cd],
                        vec![ad, bd, cd, d],
                        vec![ab, ac, ad, bd],
                        vec![ab, ac, bc, bd],
                        vec![ac, ad, bd, cd],
                        vec![ac, bc, bd, cd],
                    ]
                }
            };
            for k in kids {
                children.push((k, *m, s.clone()));
            }
        }
        let probe = SimplicialCurrent {
            dim: self.dim,
            grade: self.grade,
            vertices,
            simplices: Vec::new(),
        };
        let mut simplices = Vec::with_capacity(children.len());
        for (mut kid, m, parent) in children {
            if kid.len() >= 2 {
                let a = probe.simplex_orientation(&kid)?;
                let b = probe.simplex_orientation(&parent)?;
                let dot: f64 = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum();
                if dot < 0.0 {
                    kid.swap(0, 1);
                }
            }
            simplices.push((kid, m));
        }
        SimplicialCurrent::new(self.dim, self.grade, probe.vertices, simplices)
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(
        &self,
        f: impl Fn(&[f64]) -> Vec<f64> + Sync,
    ) -> Result<SimplicialCurrent, CurrentError> {
        let vertices: Vec<Vec<f64>> = self.vertices.par_iter().map(|v| f(v)).collect();
        let dim = vertices.first().map_or(self.dim, Vec::len);
        SimplicialCurrent::new(dim, self.grade, vertices, self.simplices.clone())
    }
}

/// Sorts in place and returns the permutation sign.
fn sort_with_sign(v: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

/// A finite-mass current.
#[derive(Debug, Clone, PartialEq)]
pub enum Current {
    Dirac(DiracCurrent),
    Simplicial(SimplicialCurrent),
}

/// A quadrature atom `w τ δ_x` approximating a current against smooth forms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureAtom {
    pub point: Vec<f64>,
    pub orientation: MultiVector,
    pub weight: f64,
}

impl From<DiracCurrent> for Current {
    fn from(c: DiracCurrent) -> Self {
        Current::Dirac(c)
    }
}

impl From<SimplicialCurrent> for Current {
    fn from(c: SimplicialCurrent) -> Self {
        Current::Simplicial(c)
    }
}

impl Current {
    pub fn dim(&self) -> usize {
        match self {
            Current::Dirac(c) => c.dim,
            Current::Simplicial(c) => c.dim,
        }
    }

    pub fn grade(&self) -> usize {
        match self {
            Current::Dirac(c) => c.grade,
            Current::Simplicial(c) => c.grade,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Current::Dirac(c) => c.atoms.len(),
            Current::Simplicial(c) => c.simplices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature atoms: Dirac atoms as they are, simplices through the
    /// degree-5 rule on the reference simplex.
    pub fn atomize(&self) -> Result<Vec<QuadratureAtom>, CurrentError> {
        match self {
            Current::Dirac(c) => Ok(c
                .atoms
                .iter()
                .map(|a| QuadratureAtom {
                    point: a.point.clone(),
                    orientation: a.orientation.clone(),
                    weight: a.weight,
                })
                .collect()),
            Current::Simplicial(c) => {
                let rule = simplex_rule(c.grade);
                let mut out = Vec::with_capacity(c.simplices.len() * rule.len());
                for (s, m) in &c.simplices {
                    let w = c.simplex_orientation(s)?;
                    let v0 = &c.vertices[s[0]];
                    let edges = c.edge_vectors(s);
                    for (u, qw) in &rule {
                        let mut p = v0.clone();
                        for (ui, e) in u.iter().zip(&edges) {
                            for (pi, ei) in p.iter_mut().zip(e) {
                                *pi += ui * ei;
                            }
                        }
                        out.push(QuadratureAtom {
                            point: p,
                            orientation: w.clone(),
                            weight: m * qw,
                        });
                    }
                }
                Ok(out)
            }
        }
    }

    /// `⟨T, ω⟩`.
    pub fn evaluate(&self, form: &TestForm) -> Result<f64, CurrentError> {
        if form.grade() != self.grade() {
            return Err(CurrentError::GradeMismatch {
                current: self.grade(),
                form: form.grade(),
            });
        }
        if form.dim() != self.dim() {
            return Err(CurrentError::DimensionMismatch(self.dim(), form.dim()));
        }
        let atoms = self.atomize()?;
        let term = |a: &QuadratureAtom| -> Result<f64, CurrentError> {
            if !form.touches(&a.point) {
                return Ok(0.0);
            }
            Ok(a.weight * a.orientation.pair(&form.eval(&a.point))?)
        };
        if atoms.len() > 512 {
            atoms.par_iter().map(term).sum()
        } else {
            atoms.iter().map(term).sum()
        }
    }

    /// `⟨∂T, η⟩ = ⟨T, dη⟩` without building `∂T`.
    pub fn weak_boundary_eval(&self, eta: &TestForm) -> Result<f64, CurrentError> {
        if self.grade() == 0 {
            return Err(CurrentError::BoundaryOfPoint);
        }
        self.evaluate(&eta.exterior_derivative())
    }

    /// Mass. Dirac atoms at the same point are merged first; simplicial mass
    /// is `Σ |m_σ| vol(σ)`.
    pub fn mass(&self) -> Result<f64, CurrentError> {
        match self {
            Current::Dirac(c) => {
                let mut groups: Vec<(Vec<f64>, Vec<&DiracAtom>)> = Vec::new();
                for a in &c.atoms {
                    match groups.iter_mut().find(|(p, _)| *p == a.point) {
                        Some((_, g)) => g.push(a),
                        None => groups.push((a.point.clone(), vec![a])),
                    }
                }
                let mut total = 0.0;
                for (_, g) in groups {
                    if g.len() == 1 {
                        total += g[0].weight.abs() * g[0].orientation.simple_mass()?;
                        continue;
                    }
                    let mut sum = MultiVector::zero(c.dim, c.grade)?;
                    for a in &g {
                        sum = sum.add(&a.orientation.scale(a.weight))?;
                    }
                    if c.grade <= 1 || c.grade == c.dim {
                        total += sum.coeff_norm();
                    } else if sum.is_zero() {
                        continue;
                    } else {
                        return Err(ExteriorError::MassUndefined.into());
                    }
                }
                Ok(total)
            }
            Current::Simplicial(c) => c
                .simplices
                .iter()
                .map(|(s, m)| Ok(m.abs() * c.simplex_volume(s)?))
                .sum(),
        }
    }

    /// `a·self + b·other` for currents of the same kind.
    pub fn combine(&self, a: f64, other: &Current, b: f64) -> Result<Current, CurrentError> {
        if self.dim() != other.dim() {
            return Err(CurrentError::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.grade() != other.grade() {
            return Err(ExteriorError::GradeMismatch(self.grade(), other.grade()).into());
        }
        match (self, other) {
            (Current::Dirac(s), Current::Dirac(o)) => {
                let atoms = s
                    .atoms
                    .iter()
                    .map(|x| (x, a))
                    .chain(o.atoms.iter().map(|x| (x, b)))
                    .map(|(x, c)| DiracAtom {
                        weight: x.weight * c,
                        ..x.clone()
                    })
                    .collect();
                Ok(DiracCurrent::new(s.dim, s.grade, atoms)?.into())
            }
            (Current::Simplicial(s), Current::Simplicial(o)) => {
                let offset = s.vertices.len();
                let vertices = s.vertices.iter().chain(&o.vertices).cloned().collect();
                let simplices = s
                    .simplices
                    .iter()
                    .map(|(x, m)| (x.clone(), a * m))
                    .chain(
                        o.simplices
                            .iter()
                            .map(|(x, m)| (x.iter().map(|i| i + offset).collect(), b * m)),
                    )
                    .collect();
                Ok(SimplicialCurrent::new(s.dim, s.grade, vertices, simplices)?.into())
            }
            _ => Err(CurrentError::MixedKinds),
        }
    }

    /// The current moved by a constant vector.
    pub fn translate(&self, v: &[f64]) -> Current {
        let shift = |p: &[f64]| -> Vec<f64> { p.iter().zip(v).map(|(a, b)| a + b).collect() };
        match self {
            Current::Dirac(c) => Current::Dirac(DiracCurrent {
                atoms: c
                    .atoms
                    .iter()
                    .map(|a| DiracAtom {
                        point: shift(&a.point),
                        ..a.clone()
                    })
                    .collect(),
                ..c.clone()
            }),
            Current::Simplicial(c) => Current::Simplicial(SimplicialCurrent {
                vertices: c.vertices.iter().map(|p| shift(p)).collect(),
                ..c.clone()
            }),
        }
    }

    /// All points carrying the current (atoms or vertices).
    pub fn support_points(&self) -> Vec<Vec<f64>> {
        match self {
            Current::Dirac(c) => c.atoms.iter().map(|a| a.point.clone()).collect(),
            Current::Simplicial(c) => c.vertices.clone(),
        }
    }

    pub fn to_spec(&self) -> CurrentSpec {
        match self {
            Current::Dirac(c) => CurrentSpec::Dirac {
                dim: c.dim,
                grade: c.grade,
                points: c.atoms.iter().map(|a| a.point.clone()).collect(),
                orientations: c
                    .atoms
                    .iter()
                    .map(|a| {
                        a.orientation
                            .witness()
                            .map(<[_]>::to_vec)
                            .unwrap_or_default()
                    })
                    .collect(),
                weights: c.atoms.iter().map(|a| a.weight).collect(),
            },
            Current::Simplicial(c) => CurrentSpec::Simplicial {
                dim: c.dim,
                grade: c.grade,
                vertices: c.vertices.clone(),
                simplices: c.simplices.iter().map(|(s, _)| s.clone()).collect(),
                multiplicities: c.simplices.iter().map(|(_, m)| *m).collect(),
            },
        }
    }

    pub fn from_spec(spec: &CurrentSpec) -> Result<Current, CurrentError> {
        match spec {
            CurrentSpec::Dirac {
                dim,
                grade,
                points,
                orientations,
                weights,
            } => {
                if points.len() != orientations.len() || points.len() != weights.len() {
                    return Err(CurrentError::DimensionMismatch(points.len(), weights.len()));
                }
                let mut atoms = Vec::with_capacity(points.len());
                for ((p, o), w) in points.iter().zip(orientations).zip(weights) {
                    if o.len() != *grade {
                        return Err(ExteriorError::GradeMismatch(*grade, o.len()).into());
                    }
                    atoms.push(DiracAtom {
                        point: p.clone(),
                        orientation: MultiVector::from_vectors(*dim, o)?,
                        weight: *w,
                    });
                }
                Ok(DiracCurrent::new(*dim, *grade, atoms)?.into())
            }
            CurrentSpec::Simplicial {
                dim,
                grade,
                vertices,
                simplices,
                multiplicities,
            } => {
                if simplices.len() != multiplicities.len() {
                    return Err(CurrentError::DimensionMismatch(
                        simplices.len(),
                        multiplicities.len(),
                    ));
                }
                let s = simplices
                    .iter()
                    .cloned()
                    .zip(multiplicities.iter().copied())
                    .collect();
                Ok(SimplicialCurrent::new(*dim, *grade, vertices.clone(), s)?.into())
            }
        }
    }
}

/// JSON form of a [`Current`]. Orientations are witness vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurrentSpec {
    Dirac {
        dim: usize,
        grade: usize,
        points: Vec<Vec<f64>>,
        orientations: Vec<Vec<Vec<f64>>>,
        weights: Vec<f64>,
    },
    Simplicial {
        dim: usize,
        grade: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        multiplicities: Vec<f64>,
    },
}

impl Serialize for Current {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Current {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let spec = CurrentSpec::deserialize(d)?;
        Current::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

/// `max_ω |⟨S, ω⟩ − ⟨T, ω⟩|` over a dictionary.
pub fn distance(s: &Current, t: &Current, dict: &FormDictionary) -> Result<f64, CurrentError> {
    dict.forms
        .par_iter()
        .map(|w| Ok((s.evaluate(w)? - t.evaluate(w)?).abs()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Currents on a time grid with a uniform mass bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub currents: Vec<Current>,
    pub mass_bound: f64,
    /// Atoms whose pushed orientation came from a flagged derivative.
    #[serde(default)]
    pub flagged_atoms: usize,
}

impl Trajectory {
    /// Records `m = max_i M(T_{t_i})`.
    pub fn new(times: Vec<f64>, currents: Vec<Current>) -> Result<Self, CurrentError> {
        if times.len() != currents.len() {
            return Err(CurrentError::DimensionMismatch(times.len(), currents.len()));
        }
        let mass_bound = currents
            .iter()
            .map(Current::mass)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Self {
            times,
            currents,
            mass_bound,
            flagged_atoms: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

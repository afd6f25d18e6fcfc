//! Space-time currents `∫ (1, b̃_t) ∧ τ_t dμ_t dt` in `R^{1+d}`, cylinders
//! `[0,1] × T̄`, and the pushforward sequence `(f_j)_* T → f_* T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pushforward, witness_vectors, AcLipApproxMap, AcLipMap, TransportError};
use crate::acreg::{approximate_ac_lip, ACLipFunction};
use crate::currents::{distance, Current, DiracAtom, DiracCurrent, SimplicialCurrent, Trajectory};
use crate::exterior::{basis, mask_indices, MultiVector};
use crate::flows::TimeDependentField;
use crate::quadrature::simpson_weights;
use crate::testforms::{FormDictionary, Poly, TestForm};

/// A `(k+1)`-current in `R^{1+d}` stored as weighted time slices of spatial
/// `k`-currents, each quadrature atom carrying its drift `b̃_t(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeCurrent {
    dim: usize,
    grade: usize,
    times: Vec<f64>,
    weights: Vec<f64>,
    slices: Vec<Current>,
    drifts: Vec<Vec<Vec<f64>>>,
}

impl SpaceTimeCurrent {
    /// Slices `T_i` at `t_i` with time weights `W_i` and drift `b̃`.
    pub fn new(
        times: Vec<f64>,
        weights: Vec<f64>,
        slices: Vec<Current>,
        drift: impl Fn(f64, &[f64]) -> Vec<f64>,
    ) -> Result<Self, TransportError> {
        if times.is_empty() || times.len() != weights.len() || times.len() != slices.len() {
            return Err(TransportError::Structure(
                "times, weights and slices must have equal nonzero length".into(),
            ));
        }
        let (dim, grade) = (slices[0].dim(), slices[0].grade());
        if slices.iter().any(|s| s.dim() != dim || s.grade() != grade) {
            return Err(TransportError::Structure(
                "slices differ in dimension or grade".into(),
            ));
        }
        if grade + 1 > dim + 1 {
            return Err(TransportError::Structure("grade too high".into()));
        }
        let mut drifts = Vec::with_capacity(slices.len());
        for (t, s) in times.iter().zip(&slices) {
            let row: Vec<Vec<f64>> = s.atomize()?.iter().map(|a| drift(*t, &a.point)).collect();
            if row.iter().any(|b| b.len() != dim) {
                return Err(TransportError::Structure(
                    "drift has the wrong dimension".into(),
                ));
            }
            drifts.push(row);
        }
        Ok(Self {
            dim,
            grade,
            times,
            weights,
            slices,
            drifts,
        })
    }

    /// The current `∫ (1, b_t) ∧ T_t dt` of a trajectory, with Simpson
    /// weights on its grid.
    pub fn from_trajectory(
        traj: &Trajectory,
        field: &TimeDependentField,
    ) -> Result<Self, TransportError> {
        let w = simpson_weights(&traj.times);
        Self::new(traj.times.clone(), w, traj.currents.clone(), |t, x| {
            field.value(t, x)
        })
    }

    /// Spatial dimension `d`.
    pub fn spatial_dim(&self) -> usize {
        self.dim
    }

    /// Grade of the slices; the space-time current has grade one more.
    pub fn slice_grade(&self) -> usize {
        self.grade
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn slices(&self) -> &[Current] {
        &self.slices
    }

    pub fn drifts(&self) -> &[Vec<Vec<f64>>] {
        &self.drifts
    }

    /// `max_i M(T_i)`.
    pub fn mass_bound(&self) -> Result<f64, TransportError> {
        let mut m: f64 = 0.0;
        for s in &self.slices {
            m = m.max(s.mass()?);
        }
        Ok(m)
    }

    /// Dirac atoms `W_i w (1, b̃) ∧ (0, τ) δ_{(t_i, x)}` in `R^{1+d}`.
    pub fn to_dirac(&self) -> Result<DiracCurrent, TransportError> {
        let n = self.dim + 1;
        let mut atoms = Vec::new();
        for (((t, w), s), drift) in self
            .times
            .iter()
            .zip(&self.weights)
            .zip(&self.slices)
            .zip(&self.drifts)
        {
            for (a, b) in s.atomize()?.iter().zip(drift) {
                let mut vectors = vec![std::iter::once(1.0)
                    .chain(b.iter().copied())
                    .collect::<Vec<f64>>()];
                let mut sign = 1.0;
                if self.grade == 0 {
                    sign = a.orientation.coeffs()[0];
                }
                for v in witness_vectors(&a.orientation)? {
                    vectors.push(std::iter::once(0.0).chain(v).collect());
                }
                let mut point = vec![*t];
                point.extend_from_slice(&a.point);
                atoms.push(DiracAtom {
                    point,
                    orientation: MultiVector::from_vectors(n, &vectors)?,
                    weight: w * a.weight * sign,
                });
            }
        }
        Ok(DiracCurrent::new(n, self.grade + 1, atoms)?)
    }

    /// `⟨T, ω⟩` for a `(k+1)`-form on `R^{1+d}`.
    pub fn evaluate(&self, form: &TestForm) -> Result<f64, TransportError> {
        Ok(Current::from(self.to_dirac()?).evaluate(form)?)
    }
}

/// `[0,1] × T̄` as time slices and as a prism triangulation over the grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeCylinder {
    pub slices: SpaceTimeCurrent,
    pub prism: SimplicialCurrent,
    /// `dist(∂C, −[0,1] × ∂T̄)` over forms supported in `(0,1) × R^d`.
    pub boundary_defect: f64,
}

/// `(k+1)`-forms on `R^{1+d}` supported in `(0,1) × R^d`: bumps of radius
/// `0.25` centered at times in `[0.3, 0.7]` and points in `[lo, hi]`, with
/// random affine coefficients.
pub fn interior_forms(
    spatial_dim: usize,
    grade: usize,
    size: usize,
    seed: u64,
    lo: &[f64],
    hi: &[f64],
) -> Result<FormDictionary, TransportError> {
    let n = spatial_dim + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks = basis(n, grade);
    if masks.is_empty() {
        return Err(TransportError::Invalid(format!(
            "no {grade}-forms on R^{n}"
        )));
    }
    let mut forms = Vec::with_capacity(size);
    for i in 0..size {
        let mut center = vec![0.3 + 0.4 * (i as f64 + 0.5) / size as f64];
        center.extend((0..spatial_dim).map(|a| rng.gen_range(lo[a]..=hi[a])));
        let mut poly = Poly::constant(n, 1.0);
        for (a, c) in center.iter().enumerate() {
            let lin = Poly::coordinate(n, a).add(&Poly::constant(n, -c));
            poly = poly.add(&lin.scale(rng.gen_range(-1.0..1.0)));
        }
        let idx = mask_indices(masks[rng.gen_range(0..masks.len())]);
        forms.push(TestForm::new(n, grade, center, 0.25, vec![(idx, poly)])?);
    }
    Ok(FormDictionary { seed, forms })
}

/// Product of the grid with a simplicial current: each prism
/// `[t_l, t_{l+1}] × σ` is split into `k+1` simplices oriented as `e_0 ∧ τ_σ`.
fn prism(current: &SimplicialCurrent, grid: &[f64]) -> Result<SimplicialCurrent, TransportError> {
    let (d, k) = (current.dim(), current.grade());
    let n = d + 1;
    let nv = current.vertices().len();
    let mut vertices = Vec::with_capacity(nv * grid.len());
    for &t in grid {
        for v in current.vertices() {
            vertices.push(
                std::iter::once(t)
                    .chain(v.iter().copied())
                    .collect::<Vec<f64>>(),
            );
        }
    }
    let mut simplices = Vec::new();
    for l in 0..grid.len().saturating_sub(1) {
        for (s, m) in current.simplices() {
            let mut reference = vec![{
                let mut e0 = vec![0.0; n];
                e0[0] = 1.0;
                e0
            }];
            for e in current.edge_vectors(s) {
                reference.push(std::iter::once(0.0).chain(e).collect());
            }
            let reference = MultiVector::from_vectors(n, &reference)?;
            for j in 0..=k {
                let mut simplex: Vec<usize> = s[..=j].iter().map(|&v| l * nv + v).collect();
                simplex.extend(s[j..].iter().map(|&v| (l + 1) * nv + v));
                let edges: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|&v| {
                        vertices[v]
                            .iter()
                            .zip(&vertices[simplex[0]])
                            .map(|(a, b)| a - b)
                            .collect()
                    })
                    .collect();
                let w = MultiVector::from_vectors(n, &edges)?;
                let dot: f64 = w
                    .coeffs()
                    .iter()
                    .zip(reference.coeffs())
                    .map(|(a, b)| a * b)
                    .sum();
                if dot < 0.0 {
                    let last = simplex.len() - 1;
                    simplex.swap(last - 1, last);
                }
                simplices.push((simplex, *m));
            }
        }
    }
    Ok(SimplicialCurrent::new(n, k + 1, vertices, simplices)?)
}

/// `C = [0,1] × T̄` on the grid. The boundary identity
/// `∂C ↾ (0,1) × R^d = −[0,1] × ∂T̄` is measured on 32 interior forms.
pub fn spacetime_cylinder(
    initial: &Current,
    grid: &[f64],
) -> Result<SpaceTimeCylinder, TransportError> {
    let Current::Simplicial(t0) = initial else {
        return Err(TransportError::Structure(
            "the cylinder is built over simplicial currents".into(),
        ));
    };
    if grid.len() < 2
        || grid.windows(2).any(|w| w[0] >= w[1])
        || grid[0] < 0.0
        || grid[grid.len() - 1] > 1.0
    {
        return Err(TransportError::Invalid(
            "grid must be strictly increasing inside [0, 1]".into(),
        ));
    }
    let d = t0.dim();
    let slices = SpaceTimeCurrent::new(
        grid.to_vec(),
        simpson_weights(grid),
        vec![initial.clone(); grid.len()],
        |_, _| vec![0.0; d],
    )?;
    let c = prism(t0, grid)?;
    let boundary_defect = if t0.simplices().is_empty() {
        0.0
    } else {
        let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
        for v in t0.vertices() {
            for a in 0..d {
                lo[a] = lo[a].min(v[a] - 0.25);
                hi[a] = hi[a].max(v[a] + 0.25);
            }
        }
        let forms = interior_forms(d, t0.grade(), 32, 7, &lo, &hi)?;
        let dc = Current::from(c.boundary()?);
        if t0.grade() == 0 {
            let zero = Current::from(SimplicialCurrent::new(d + 1, 0, Vec::new(), Vec::new())?);
            distance(&dc, &zero, &forms)?
        } else {
            let side = Current::from(prism(&t0.boundary()?, grid)?);
            let expected = side.combine(-1.0, &side, 0.0)?;
            distance(&dc, &expected, &forms)?
        }
    };
    Ok(SpaceTimeCylinder {
        slices,
        prism: c,
        boundary_defect,
    })
}

/// Distances `dist((f_j)_* T, f_* T)` for a list of `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxSequence {
    pub js: Vec<u32>,
    pub distances: Vec<f64>,
    /// `|E_j^c|` for each `j`.
    pub complement_measures: Vec<f64>,
    /// Atoms of `(f_j)_* T` with a flagged derivative.
    pub flagged_atoms: Vec<usize>,
    /// Atoms of `f_* T` with a flagged derivative.
    pub limit_flagged_atoms: usize,
    pub limit: Current,
    pub currents: Vec<Current>,
}

impl ApproxSequence {
    /// The last distance is at most `tol` and below the first one.
    pub fn converges_below(&self, tol: f64) -> bool {
        match (self.distances.first(), self.distances.last()) {
            (Some(a), Some(b)) => *b <= tol && b <= a,
            _ => false,
        }
    }
}

/// `(f_j)_* T` for `f_j` the shared-set approximations of `f`, compared with
/// `f_* T` computed directly from derivatives of `f`.
pub fn approx_pushforward_sequence(
    f: &ACLipFunction,
    current: &SpaceTimeCurrent,
    js: &[u32],
    dict: &FormDictionary,
) -> Result<ApproxSequence, TransportError> {
    if f.input_dim() != current.spatial_dim() {
        return Err(TransportError::Structure(format!(
            "map takes points of R^{}, slices live in R^{}",
            f.input_dim(),
            current.spatial_dim()
        )));
    }
    let (lo, hi) = f.upper_gradient().window();
    if current.times().iter().any(|t| *t <= lo || *t >= hi) {
        return Err(TransportError::Structure(
            "slice times must lie inside the time window of f".into(),
        ));
    }
    if current.weights().iter().any(|w| *w < 0.0) {
        return Err(TransportError::Structure(
            "time weights must be nonnegative".into(),
        ));
    }
    if !current.mass_bound()?.is_finite() {
        return Err(TransportError::Structure(
            "slice masses are not uniformly bounded".into(),
        ));
    }
    let t = Current::from(current.to_dirac()?);
    let limit = pushforward(&AcLipMap::new(f), &t)?;
    let mut probes: Vec<Vec<f64>> = Vec::new();
    for s in current.slices() {
        for p in s.support_points() {
            if probes.len() < 64 && !probes.contains(&p) {
                probes.push(p);
            }
        }
    }
    if probes.is_empty() {
        probes.push(f.box_bounds().0.to_vec());
    }
    let mut out = ApproxSequence {
        js: js.to_vec(),
        distances: Vec::new(),
        complement_measures: Vec::new(),
        flagged_atoms: Vec::new(),
        limit_flagged_atoms: limit.flagged_atoms,
        limit: limit.current.clone(),
        currents: Vec::new(),
    };
    for &j in js {
        let (approx, report) = approximate_ac_lip(f, j, &probes)?;
        let p = pushforward(&AcLipApproxMap::new(&approx), &t)?;
        out.distances
            .push(distance(&p.current, &limit.current, dict).map_err(TransportError::from)?);
        out.complement_measures.push(report.complement_measure);
        out.flagged_atoms.push(p.flagged_atoms);
        out.currents.push(p.current);
    }
    Ok(out)
}

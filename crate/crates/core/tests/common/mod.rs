//! Fields and currents shared by the integration tests.
#![allow(dead_code)]

use geotransport::currents::{Current, DiracCurrent, SimplicialCurrent};
use geotransport::flows::{BoundingBox, FieldSpec, GriddedField, TimeDependentField, TimeProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.gen_range(-half_width..=half_width))
        .collect()
}

pub fn rotation() -> Vec<Vec<f64>> {
    vec![vec![0.0, -1.0], vec![1.0, 0.0]]
}

pub fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

/// The residual corpus: zero, constant, linear, `x / (2 sqrt t)` and shear.
pub fn residual_fields() -> Vec<(&'static str, FieldSpec)> {
    vec![
        ("zero", FieldSpec::Zero { dim: 2 }),
        ("constant", FieldSpec::Constant { c: vec![0.3, -0.2] }),
        (
            "linear",
            FieldSpec::Linear {
                profile: TimeProfile::Const { value: 1.0 },
                matrix: rotation(),
            },
        ),
        (
            "sqrt",
            FieldSpec::Linear {
                profile: TimeProfile::HalfInvSqrt,
                matrix: identity(2),
            },
        ),
        ("shear", FieldSpec::ShearDeadZone),
    ]
}

/// Dirac 0- and 1-currents, a segment and a triangle boundary in the upper
/// half-plane; simplicial members are refined four times.
pub fn residual_currents() -> Vec<(&'static str, Current)> {
    let refine4 = |mut s: SimplicialCurrent| {
        for _ in 0..4 {
            s = s.refine().unwrap();
        }
        Current::from(s)
    };
    vec![
        (
            "dirac0",
            DiracCurrent::single(vec![0.2, 0.3], &[], 1.0)
                .unwrap()
                .into(),
        ),
        (
            "dirac1",
            DiracCurrent::single(vec![0.2, 0.3], &[vec![0.0, 1.0]], 1.0)
                .unwrap()
                .into(),
        ),
        (
            "segment",
            refine4(SimplicialCurrent::segment(vec![-0.1, 0.2], vec![0.3, 0.4]).unwrap()),
        ),
        (
            "triangle",
            refine4(
                SimplicialCurrent::polygon(vec![vec![0.0, 0.1], vec![0.3, 0.2], vec![0.1, 0.4]])
                    .unwrap(),
            ),
        ),
    ]
}

/// A seeded gridded field on `[-2, 2]^2` with three time cells.
pub fn gridded(seed: u64) -> FieldSpec {
    let mut r = rng(seed);
    let nodes = vec![5, 5];
    let values = (0..3)
        .map(|_| {
            (0..25)
                .map(|_| vec![r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)])
                .collect()
        })
        .collect();
    FieldSpec::Gridded(GriddedField {
        time_breaks: vec![0.0, 0.3, 0.7, 1.0],
        lo: vec![-2.0, -2.0],
        hi: vec![2.0, 2.0],
        nodes,
        values,
    })
}

/// Every built-in analytic family in two dimensions, plus a gridded field.
pub fn all_families() -> Vec<(&'static str, FieldSpec)> {
    vec![
        ("zero", FieldSpec::Zero { dim: 2 }),
        ("constant", FieldSpec::Constant { c: vec![0.3, -0.2] }),
        (
            "linear",
            FieldSpec::Linear {
                profile: TimeProfile::Sine {
                    offset: 1.0,
                    amplitude: 0.5,
                    frequency: 1.0,
                },
                matrix: rotation(),
            },
        ),
        (
            "sqrt",
            FieldSpec::Linear {
                profile: TimeProfile::HalfInvSqrt,
                matrix: identity(2),
            },
        ),
        ("shear", FieldSpec::ShearDeadZone),
        (
            "modulated",
            FieldSpec::Modulated {
                dim: 2,
                profile: TimeProfile::Sine {
                    offset: 0.5,
                    amplitude: 0.5,
                    frequency: 2.0,
                },
                amplitude: 0.8,
                wave: 2.0,
            },
        ),
        ("gridded", gridded(11)),
    ]
}

pub fn field(spec: FieldSpec, half_width: f64) -> TimeDependentField {
    let dim = match &spec {
        FieldSpec::Zero { dim } | FieldSpec::Modulated { dim, .. } => *dim,
        FieldSpec::Constant { c } => c.len(),
        FieldSpec::Linear { matrix, .. } => matrix.len(),
        FieldSpec::ShearDeadZone => 2,
        FieldSpec::Gridded(g) => g.nodes.len(),
    };
    TimeDependentField::new(spec, BoundingBox::cube(dim, half_width)).unwrap()
}

mod common;

use common::*;
use geotransport::acreg::{ACLipFunction, Sampled1D};
use geotransport::currents::{distance, Current, DiracCurrent, SimplicialCurrent};
use geotransport::exterior::MultiVector;
use geotransport::flows::{FieldSpec, FlowMap, TimeProfile};
use geotransport::testforms::{FormDictionary, TimeCutoff};
use geotransport::transport::{
    approx_pushforward_sequence, pushforward, residual_study, solve_gte, spacetime_cylinder,
    FlowAt, LinearMap, ResidualKind, SpaceTimeCurrent,
};
use nalgebra::DMatrix;

fn flow_of(spec: FieldSpec, tol: f64) -> FlowMap {
    FlowMap::new(field(spec, 3.0), tol).unwrap()
}

fn dirac_atom(c: &Current) -> (Vec<f64>, MultiVector, f64) {
    match c {
        Current::Dirac(d) => {
            let a = &d.atoms()[0];
            (a.point.clone(), a.orientation.clone(), a.weight)
        }
        Current::Simplicial(_) => panic!("expected a Dirac current"),
    }
}

fn coeff_gap(a: &MultiVector, b: &MultiVector, wa: f64, wb: f64) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (wa * x - wb * y).abs())
        .fold(0.0, f64::max)
}

fn grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

#[test]
fn linear_pushforward_is_the_induced_map_on_multivectors() {
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 0.5, 0.0, 2.0]);
    let vs = [vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.5]];
    let d = Current::from(DiracCurrent::single(vec![0.1, 0.2, 0.3], &vs, 0.5).unwrap());
    let pushed = pushforward(&LinearMap(a.clone()), &d).unwrap();
    let (p, tau, w) = dirac_atom(&pushed.current);
    let expected = MultiVector::from_vectors(3, &vs)
        .unwrap()
        .push_linear(&a)
        .unwrap();
    assert!(dist(&p, &[0.5, -0.1, 0.65]) < 1e-15);
    assert!(coeff_gap(&tau, &expected, w, 0.5) < 1e-14);

    let tri = SimplicialCurrent::new(
        3,
        2,
        vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ],
        vec![(vec![0, 1, 2], 1.0)],
    )
    .unwrap();
    let pushed = pushforward(&LinearMap(a.clone()), &Current::from(tri.clone())).unwrap();
    // edge distortion above the limit subdivides once before mapping
    assert!(pushed.refined);
    let direct = Current::from(
        tri.refine()
            .unwrap()
            .map_vertices(|x| {
                (&a * nalgebra::DVector::from_column_slice(x))
                    .as_slice()
                    .to_vec()
            })
            .unwrap(),
    );
    let dict = FormDictionary::generate(3, 2, 24, 3, &[-1.0; 3], &[2.0; 3]).unwrap();
    assert!(distance(&pushed.current, &direct, &dict).unwrap() < 1e-12);
}

#[test]
fn constant_field_translates_currents() {
    let c = [0.3, -0.2];
    let flow = flow_of(FieldSpec::Constant { c: c.to_vec() }, 1e-12);
    let seg = Current::from(SimplicialCurrent::segment(vec![0.0, 0.0], vec![0.4, 0.5]).unwrap());
    let times = grid(8);
    let traj = solve_gte(&flow, &seg, &times).unwrap();
    for (t, cur) in traj.times.iter().zip(&traj.currents) {
        let expected = seg.translate(&[c[0] * t, c[1] * t]);
        for (a, b) in cur.support_points().iter().zip(expected.support_points()) {
            assert!(dist(a, &b) < 1e-12, "t {t}");
        }
        assert!((cur.mass().unwrap() - seg.mass().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn linear_field_pushes_orientations_by_the_matrix_exponential() {
    let a = vec![vec![0.2, -0.9], vec![0.4, -0.1]];
    let m = DMatrix::from_fn(2, 2, |i, j| a[i][j]);
    let flow = flow_of(
        FieldSpec::Linear {
            profile: TimeProfile::Const { value: 1.0 },
            matrix: a,
        },
        1e-12,
    );
    let v = vec![0.6, 0.8];
    let x = vec![0.3, -0.1];
    let d = Current::from(DiracCurrent::single(x.clone(), std::slice::from_ref(&v), 1.0).unwrap());
    let traj = solve_gte(&flow, &d, &grid(4)).unwrap();
    for (&t, cur) in traj.times.iter().zip(&traj.currents) {
        let e = (&m * t).exp();
        let ex = &e * nalgebra::DVector::from_vec(x.clone());
        let ev = &e * nalgebra::DVector::from_vec(v.clone());
        let (p, tau, w) = dirac_atom(cur);
        assert!(dist(&p, ex.as_slice()) < 1e-10, "t {t}");
        let expected = MultiVector::from_vector(ev.as_slice()).unwrap();
        assert!(coeff_gap(&tau, &expected, w, 1.0) < 1e-7, "t {t}");
    }
}

#[test]
fn pushforward_along_flows_is_functorial() {
    let flow = flow_of(
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
        1e-12,
    );
    let d = Current::from(DiracCurrent::single(vec![0.2, -0.3], &[vec![1.0, 0.5]], 1.0).unwrap());
    let dict = FormDictionary::generate(2, 1, 32, 9, &[-1.0; 2], &[1.0; 2]).unwrap();
    for &(s, t) in &[(0.3, 0.8), (0.7, 0.2), (0.5, 1.0)] {
        let first = pushforward(
            &FlowAt {
                flow: &flow,
                s: 0.0,
                t: s,
            },
            &d,
        )
        .unwrap()
        .current;
        let two = pushforward(&FlowAt { flow: &flow, s, t }, &first)
            .unwrap()
            .current;
        let one = pushforward(
            &FlowAt {
                flow: &flow,
                s: 0.0,
                t,
            },
            &d,
        )
        .unwrap()
        .current;
        let (p2, tau2, w2) = dirac_atom(&two);
        let (p1, tau1, w1) = dirac_atom(&one);
        assert!(dist(&p1, &p2) < 1e-10);
        assert!(coeff_gap(&tau1, &tau2, w1, w2) < 1e-7, "s {s} t {t}");
        assert!(distance(&one, &two, &dict).unwrap() < 1e-7);
    }
}

#[test]
fn sqrt_field_scales_mass_by_exp_sqrt_t() {
    let flow = flow_of(
        FieldSpec::Linear {
            profile: TimeProfile::HalfInvSqrt,
            matrix: identity(2),
        },
        1e-11,
    );
    let d = Current::from(DiracCurrent::single(vec![0.2, 0.1], &[vec![0.0, 2.0]], 1.0).unwrap());
    let traj = solve_gte(&flow, &d, &grid(8)).unwrap();
    for (t, cur) in traj.times.iter().zip(&traj.currents) {
        let expected = 2.0 * t.sqrt().exp();
        assert!(
            (cur.mass().unwrap() - expected).abs() < 1e-6 * expected,
            "t {t}"
        );
    }
    assert!((traj.mass_bound - 2.0 * 1f64.exp()).abs() < 1e-5);
}

#[test]
fn shear_tilts_a_vertical_vector() {
    let flow = flow_of(FieldSpec::ShearDeadZone, 1e-12);
    let eps = 0.1;
    let d = Current::from(DiracCurrent::single(vec![0.0, eps], &[vec![0.0, 1.0]], 1.0).unwrap());
    let traj = solve_gte(&flow, &d, &grid(4)).unwrap();
    for (&t, cur) in traj.times.iter().zip(&traj.currents) {
        let (p, tau, w) = dirac_atom(cur);
        assert!(dist(&p, &[t * eps, eps]) < 1e-10, "t {t}");
        let expected = MultiVector::from_vector(&[t, 1.0]).unwrap();
        assert!(coeff_gap(&tau, &expected, w, 1.0) < 1e-7, "t {t}");
    }
}

#[test]
fn cylinder_boundary_is_minus_time_times_boundary() {
    let seg = Current::from(SimplicialCurrent::segment(vec![0.0, 0.0], vec![0.5, 0.3]).unwrap());
    let c = spacetime_cylinder(&seg, &grid(8)).unwrap();
    assert!(c.boundary_defect < 1e-12, "{}", c.boundary_defect);
    assert!(c.slices.mass_bound().unwrap() >= seg.mass().unwrap() - 1e-15);
}

#[test]
fn residuals_of_a_translated_segment_are_small() {
    let flow = flow_of(FieldSpec::Constant { c: vec![0.3, -0.2] }, 1e-12);
    let mut seg = SimplicialCurrent::segment(vec![0.0, 0.0], vec![0.4, 0.5]).unwrap();
    for _ in 0..6 {
        seg = seg.refine().unwrap();
    }
    let seg = Current::from(seg);
    let dict = FormDictionary::generate(2, 1, 16, 2, &[-0.5; 2], &[1.0; 2]).unwrap();
    let report = residual_study(
        &flow,
        &seg,
        ResidualKind::Weak,
        &dict,
        &TimeCutoff::standard_family(),
        &[16, 32, 64, 128],
    )
    .unwrap();
    assert!(
        report.passes(1.0, 1e-4),
        "{:?} slope {:?}",
        report.levels,
        report.slope
    );
}

/// `Ψ⁻¹`-style map `(t, y) ↦ (t, y e^{−√t})` applied to the space-time
/// current of `x' = x / (2√t)` started at `(0.7, 0)`: the image is the static
/// segment direction `e_1` at `(t, 0.7, 0)`.
#[test]
fn lipschitz_approximations_push_forward_convergently() {
    let ymax = 2.0f64;
    let g_grid: Vec<f64> = (0..=2000)
        .map(|i| (f64::from(i) / 2000.0).powi(2))
        .collect();
    let g = Sampled1D::density_from_fn(g_grid, |t| 1.0 + ymax * 2f64.sqrt() / (2.0 * t.sqrt()))
        .unwrap();
    let f = ACLipFunction::new(
        |t, y: &[f64]| {
            let s = (-t.sqrt()).exp();
            vec![t, y[0] * s, y[1] * s]
        },
        g,
        1.0,
        vec![-ymax, -ymax],
        vec![ymax, ymax],
    )
    .unwrap();
    let n = 400;
    // midpoints graded like the √t singularity, with exact cell widths
    let times: Vec<f64> = (0..n)
        .map(|i| ((f64::from(i) + 0.5) / f64::from(n)).powi(2))
        .collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| (f64::from(i + 1) / f64::from(n)).powi(2) - (f64::from(i) / f64::from(n)).powi(2))
        .collect();
    let slices: Vec<Current> = times
        .iter()
        .map(|t| {
            let e = t.sqrt().exp();
            DiracCurrent::single(vec![0.7 * e, 0.0], &[vec![e, 0.0]], 1.0)
                .unwrap()
                .into()
        })
        .collect();
    let st = SpaceTimeCurrent::new(times, weights, slices, |t, y| {
        y.iter().map(|v| v / (2.0 * t.sqrt())).collect()
    })
    .unwrap();
    let dict = FormDictionary::generate(3, 2, 64, 5, &[0.0, 0.0, -0.5], &[1.0, 1.5, 0.5]).unwrap();
    let js = [4, 8, 16, 32, 64, 128, 256];
    let seq = approx_pushforward_sequence(&f, &st, &js, &dict).unwrap();
    assert!(seq.converges_below(1e-4), "{:?}", seq.distances);
    for (j, d) in js.iter().zip(&seq.distances) {
        if *j >= 64 {
            assert!(*d < 1e-4, "j {j}: {d:e}");
        }
    }
    assert!(seq.complement_measures.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn bad_time_grids_are_rejected() {
    let flow = flow_of(FieldSpec::Zero { dim: 2 }, 1e-10);
    let d = Current::from(DiracCurrent::single(vec![0.0, 0.0], &[], 1.0).unwrap());
    assert!(solve_gte(&flow, &d, &[0.0, 0.5, 0.5]).is_err());
    assert!(solve_gte(&flow, &d, &[0.0, 1.5]).is_err());
    assert!(solve_gte(&flow, &d, &[]).is_err());
    assert!(spacetime_cylinder(&d, &grid(4)).is_err());
}

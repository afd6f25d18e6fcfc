mod common;

use common::rng;
use geotransport::acreg::{
    approximate_ac, approximate_ac_sequence, maximal_function, maximal_function_reference,
    superlevel_measure, weak_type_constant, Interpolation, Sampled1D,
};
use rand::Rng;

fn random_density(seed: u64, cells: usize) -> Sampled1D {
    let mut r = rng(seed);
    let mut grid = vec![0.0];
    for _ in 0..cells {
        let last = *grid.last().unwrap();
        grid.push(last + r.gen_range(0.01..0.2));
    }
    let values = (0..cells)
        .map(|_| {
            if r.gen_bool(0.3) {
                0.0
            } else {
                r.gen_range(0.0..5.0f64).powi(2)
            }
        })
        .collect();
    Sampled1D::density(grid, values).unwrap()
}

/// `1_[0,1]` on `[-2, 3]` with cells of width `0.01`.
fn indicator() -> Sampled1D {
    let grid: Vec<f64> = (0..=500).map(|i| -2.0 + 0.01 * f64::from(i)).collect();
    let values = grid
        .windows(2)
        .map(|c| {
            if (0.0..1.0).contains(&(0.5 * (c[0] + c[1]))) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Sampled1D::density(grid, values).unwrap()
}

#[test]
fn hull_sweep_matches_the_quadratic_reference() {
    for seed in 0..20 {
        let g = random_density(seed, 300);
        let fast = maximal_function(&g).unwrap();
        let slow = maximal_function_reference(&g).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!(
                (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
                "seed {seed}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn maximal_function_of_an_indicator_has_closed_form() {
    let g = indicator();
    let mg = maximal_function(&g).unwrap();
    for (&t, &m) in g.grid().iter().zip(mg.values()) {
        let expected = if t > 1.0 {
            1.0 / t
        } else if t < 0.0 {
            1.0 / (1.0 - t)
        } else {
            1.0
        };
        assert!((m - expected).abs() < 1e-12, "t {t}: {m} vs {expected}");
    }
}

#[test]
fn superlevel_measure_of_an_indicator_is_two_over_lambda_minus_one() {
    let g = indicator();
    for &l in &[0.34, 0.4, 0.5, 0.75, 0.9, 0.999] {
        let measured = superlevel_measure(&g, l).unwrap();
        assert!(
            (measured - (2.0 / l - 1.0)).abs() < 1e-12,
            "λ {l}: {measured}"
        );
    }
    assert_eq!(superlevel_measure(&g, 1.0).unwrap(), 0.0);
    let c = weak_type_constant(&g, &[1.0 / 3.0 + 1e-9]).unwrap();
    assert!(c <= 2.0 + 1e-12 && c > 1.66, "{c}");
}

#[test]
fn weak_type_constant_never_exceeds_two() {
    for seed in 0..30 {
        let g = random_density(100 + seed, 200);
        let c = weak_type_constant(&g, &[]).unwrap();
        assert!(c <= 2.0 + 1e-9, "seed {seed}: {c}");
    }
}

#[test]
fn ac_approximation_meets_its_bounds() {
    let grid: Vec<f64> = (0..=4000).map(|i| f64::from(i) / 4000.0).collect();
    let f = Sampled1D::from_fn(grid.clone(), f64::sqrt).unwrap();
    // cell averages of 1 / (2 sqrt t) are exact increments of sqrt
    let g = Sampled1D::density(
        grid.clone(),
        grid.windows(2)
            .map(|c| (c[1].sqrt() - c[0].sqrt()) / (c[1] - c[0]))
            .collect(),
    )
    .unwrap();
    let norm = g.l1_norm();
    let mut last_sup = f64::INFINITY;
    for j in [2u32, 4, 8, 16, 32] {
        let a = approximate_ac(&f, &g, j).unwrap();
        let r = &a.report;
        assert!(r.sup_error <= r.sup_bound + 1e-12, "j {j}: {r:?}");
        assert!(
            r.l1_derivative_error <= r.l1_derivative_bound + 1e-12,
            "j {j}: {r:?}"
        );
        assert!(r.lipschitz_on_set <= f64::from(j) + 1e-9, "j {j}: {r:?}");
        assert!(
            r.complement_measure <= 2.0 * norm / f64::from(j) + 1e-9,
            "j {j}: {r:?}"
        );
        assert!(r.sup_error <= last_sup + 1e-15);
        last_sup = r.sup_error;
        for &t in &grid {
            if a.set.contains(t) {
                assert!((a.fj.eval(t) - f.eval(t)).abs() < 1e-12, "j {j} t {t}");
            }
        }
    }
    let reports = approximate_ac_sequence(&f, &g, &[2, 4, 8, 16, 32]).unwrap();
    assert_eq!(reports[4], approximate_ac(&f, &g, 32).unwrap().report);
}

#[test]
fn csv_round_trip_is_exact() {
    let g = random_density(7, 50);
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let back = Sampled1D::read_csv(buf.as_slice(), Interpolation::CellConstant).unwrap();
    assert_eq!(back, g);
    let f = Sampled1D::from_fn(g.grid().to_vec(), f64::sin).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    assert_eq!(
        Sampled1D::read_csv(buf.as_slice(), Interpolation::Linear).unwrap(),
        f
    );
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Sampled1D::linear(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    assert!(Sampled1D::linear(vec![0.0, 1.0], vec![1.0]).is_err());
    assert!(Sampled1D::density(vec![0.0, 1.0], vec![-1.0]).is_err());
    let f = Sampled1D::linear(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
    let g = Sampled1D::density(vec![0.0, 1.0], vec![1.0]).unwrap();
    assert!(approximate_ac(&f, &g, 4).is_err());
}

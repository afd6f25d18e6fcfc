//! Quadrature rules shared by the other modules.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error(
        "adaptive quadrature did not converge on [{a}, {b}] (estimate {estimate}, error {error})"
    )]
    NotConverged {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },
    #[error("integrand is not finite near t = {0}")]
    NonFinite(f64),
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature: the interval with the
/// largest error estimate is bisected until the summed estimate meets `tol`.
/// Endpoints are never evaluated, so integrable endpoint singularities and
/// jumps are fine.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (est, err) = kronrod15(&f, lo, hi);
    if !est.is_finite() {
        return Err(QuadratureError::NonFinite(0.5 * (lo + hi)));
    }
    // (error, x0, x1, estimate)
    let mut parts: Vec<(f64, f64, f64, f64)> = vec![(err, lo, hi, est)];
    loop {
        let total: f64 = parts.iter().map(|p| p.3).sum();
        let total_err: f64 = parts.iter().map(|p| p.0).sum();
        if total_err <= tol.max(4.0 * f64::EPSILON * total.abs()) {
            return Ok(sign * total);
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (e, x0, x1, est) = parts[worst];
        let m = 0.5 * (x0 + x1);
        if parts.len() >= MAX_INTERVALS || m <= x0 || m >= x1 {
            return Err(QuadratureError::NotConverged {
                a: x0,
                b: x1,
                estimate: est,
                error: e,
            });
        }
        let (el, rl) = kronrod15(&f, x0, m);
        let (er, rr) = kronrod15(&f, m, x1);
        if !el.is_finite() || !er.is_finite() {
            return Err(QuadratureError::NonFinite(m));
        }
        parts[worst] = (rl, x0, m, el);
        parts.push((rr, m, x1, er));
    }
}

/// Composite Simpson weights on a uniform grid with an even number of
/// intervals; trapezoid on the last interval otherwise.
pub fn simpson_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 1
    };
    let mut i = 0;
    while i + 2 <= simpson_end {
        let h = times[i + 2] - times[i];
        w[i] += h / 6.0;
        w[i + 1] += 4.0 * h / 6.0;
        w[i + 2] += h / 6.0;
        i += 2;
    }
    if simpson_end < intervals {
        let h = times[intervals] - times[intervals - 1];
        w[intervals - 1] += 0.5 * h;
        w[intervals] += 0.5 * h;
    }
    w
}

/// Quadrature rule on the reference `k`-simplex `{u_i >= 0, Σ u_i <= 1}`,
/// exact for polynomials of degree 5. Returns barycentric-free coordinates
/// `u` (length `k`) and weights summing to `1/k!`.
pub fn simplex_rule(k: usize) -> Vec<(Vec<f64>, f64)> {
    match k {
        0 => vec![(vec![], 1.0)],
        1 => {
            let (x, w) = gauss_legendre_on(3, 0.0, 1.0);
            x.into_iter().zip(w).map(|(x, w)| (vec![x], w)).collect()
        }
        _ => collapsed_rule(k),
    }
}

// Conical product (Duffy) rule: the Jacobian adds up to k-1 to the degree,
// so the 1-D rules must be exact to degree 5 + k - 1.
fn collapsed_rule(k: usize) -> Vec<(Vec<f64>, f64)> {
    let points = (5 + k).div_ceil(2);
    let (x, w) = gauss_legendre_on(points, 0.0, 1.0);
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        // u_1 = s_1, u_2 = (1 - s_1) s_2, ..., jacobian Π (1 - s_i)^{k-1-i}
        let mut u = vec![0.0; k];
        let mut remaining = 1.0;
        let mut weight = 1.0;
        for i in 0..k {
            let s = x[idx[i]];
            weight *= w[idx[i]];
            u[i] = remaining * s;
            if i + 1 < k {
                weight *= (1.0 - s).powi((k - 1 - i) as i32);
            }
            remaining *= 1.0 - s;
        }
        out.push((u, weight));
        let mut pos = 0;
        loop {
            if pos == k {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

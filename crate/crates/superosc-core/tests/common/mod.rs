//! Shared oracles for the integration suites. Everything here is computed
//! by routes independent of the library paths under test: double-exponential
//! quadrature, Brioschi curvature from metric samples, and divided
//! differences for polynomial-degree detection.

#![allow(dead_code)]

use superosc_core::metrisability::MetricTensorField;

/// Double-exponential (tanh-sinh) quadrature of `f(v, 1-v)` over (0, 1);
/// handles integrable endpoint singularities. The complement `1-v` is
/// computed directly (`1/(1+e^{2s})`), never by subtraction, so fractional
/// endpoint singularities keep their full tails.
pub fn tanh_sinh_01<F: Fn(f64, f64) -> f64>(f: F) -> f64 {
    let h = 1.0 / 64.0;
    let t_max = 6.5;
    let m = (t_max / h) as i64;
    let mut sum = 0.0;
    for i in -m..=m {
        let t = i as f64 * h;
        let s = (core::f64::consts::PI / 2.0) * t.sinh();
        let v = 1.0 / (1.0 + (-2.0 * s).exp());
        let omv = 1.0 / (1.0 + (2.0 * s).exp());
        let w = (core::f64::consts::PI / 4.0) * t.cosh() / s.cosh().powi(2);
        if v > 0.0 && omv > 0.0 && w > 1e-300 {
            let fv = f(v, omv);
            if fv.is_finite() {
                sum += w * fv;
            }
        }
    }
    sum * h
}

/// 2F1(a, 1; c; z) through Euler's integral (c > 1, z < 1):
/// `(c-1) * Int_0^1 (1-v)^(c-2) (1-zv)^(-a) dv`.
pub fn hyp2f1_b1_oracle(a: f64, c: f64, z: f64) -> f64 {
    (c - 1.0) * tanh_sinh_01(|_v, omv| omv.powf(c - 2.0) * (omv * z + (1.0 - z)).powf(-a))
}

/// 2F1(a, b; b+1; z) through Euler's integral (b > 0, z < 1):
/// `b * Int_0^1 v^(b-1) (1-zv)^(-a) dv`.
pub fn hyp2f1_cb1_oracle(a: f64, b: f64, z: f64) -> f64 {
    b * tanh_sinh_01(|v, _omv| v.powf(b - 1.0) * (1.0 - z * v).powf(-a))
}

/// erf by quadrature of the Gaussian.
pub fn erf_oracle(x: f64) -> f64 {
    let two_over_sqrt_pi = core::f64::consts::FRAC_2_SQRT_PI;
    two_over_sqrt_pi * x * tanh_sinh_01(|v, _| (-(x * v) * (x * v)).exp())
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian curvature by the Brioschi formula with finite-difference
/// derivatives of the metric components only (independent of any analytic
/// curvature expression and of the stored metric partials).
pub fn brioschi_curvature_fd(g: &MetricTensorField, x: f64, y: f64, h: f64) -> Option<f64> {
    let comp = |x: f64, y: f64| g.eval(x, y).map(|j| j.g);
    let c0 = comp(x, y)?;
    let cxp = comp(x + h, y)?;
    let cxm = comp(x - h, y)?;
    let cyp = comp(x, y + h)?;
    let cym = comp(x, y - h)?;
    let cpp = comp(x + h, y + h)?;
    let cpm = comp(x + h, y - h)?;
    let cmp_ = comp(x - h, y + h)?;
    let cmm = comp(x - h, y - h)?;

    let d_x = |i: usize| (cxp[i] - cxm[i]) / (2.0 * h);
    let d_y = |i: usize| (cyp[i] - cym[i]) / (2.0 * h);
    let d_xx = |i: usize| (cxp[i] - 2.0 * c0[i] + cxm[i]) / (h * h);
    let d_yy = |i: usize| (cyp[i] - 2.0 * c0[i] + cym[i]) / (h * h);
    let d_xy = |i: usize| (cpp[i] - cpm[i] - cmp_[i] + cmm[i]) / (4.0 * h * h);

    let (e, f, g_) = (c0[0], c0[1], c0[2]);
    let m1 = det3([
        [
            -0.5 * d_yy(0) + d_xy(1) - 0.5 * d_xx(2),
            0.5 * d_x(0),
            d_x(1) - 0.5 * d_y(0),
        ],
        [d_y(1) - 0.5 * d_x(2), e, f],
        [0.5 * d_y(2), f, g_],
    ]);
    let m2 = det3([
        [0.0, 0.5 * d_y(0), 0.5 * d_x(2)],
        [0.5 * d_y(0), e, f],
        [0.5 * d_x(2), f, g_],
    ]);
    let den = e * g_ - f * f;
    Some((m1 - m2) / (den * den))
}

/// Newton divided-difference coefficients `f[x0..xj]` for tabulated data;
/// for a polynomial of degree `d`, orders above `d` vanish and order `d`
/// equals the leading coefficient.
pub fn divided_differences(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut table = ys.to_vec();
    let mut out = Vec::with_capacity(n);
    out.push(table[0]);
    for order in 1..n {
        for i in 0..(n - order) {
            table[i] = (table[i + 1] - table[i]) / (xs[i + order] - xs[i]);
        }
        out.push(table[0]);
    }
    out
}

/// Degree of a sampled univariate polynomial: the largest order with a
/// divided difference above `tol` (nodes should be O(1)-scaled).
pub fn polynomial_degree(xs: &[f64], ys: &[f64], tol: f64) -> usize {
    let dd = divided_differences(xs, ys);
    let mut deg = 0;
    for (j, c) in dd.iter().enumerate() {
        if c.abs() > tol {
            deg = j;
        }
    }
    deg
}

/// Chebyshev nodes for stable interpolation.
pub fn cheb_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let theta = core::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n as f64);
            0.5 * (a + b) + 0.5 * (b - a) * theta.cos()
        })
        .collect()
}

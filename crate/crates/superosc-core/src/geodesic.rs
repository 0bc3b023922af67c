//! The superintegrable two-dimensional metric attached to the oscillator,
//! its geodesic flow, and the first-integral family.
//!
//! The conformal factor is `P(y) = 2 C1 delta y^(n+1) + C2` (power branch)
//! or `Q(y) = 2 delta C1 ln y + C2` (log branch, the `n = -1` case). The
//! Hamiltonian is taken as definitional for all integral checks:
//!
//! - power: `H = P (C1 p1^2/2 + P p2^2/2)`
//! - log:   `H = C1 Q (C1 p1^2/2 + Q p2^2/2)`
//!
//! (the metric inverse differs from the power-branch `H` by a constant
//! factor when `C1 != 1`, which only reparametrizes time; tests default to
//! `C1 = 1` where both readings coincide).
//!
//! Integrals: `L = p1` (cyclic x), `R` rational (a function of `H` and `L`),
//! `T` transcendental (the lift of the oscillator's non-autonomous integral
//! via `y_x = H_p2 / H_p1`), and the polynomial `T_k` of degree `2k+2` at
//! `n = -(2k+3)/(2k+1)`.

use core::fmt;

use crate::fp;
use crate::numkit::drift::{measure_drift, DriftReport, DriftSample};
use crate::numkit::fd::{fd_gradient, FdError};
use crate::numkit::linalg::singular_values_3x4;
use crate::numkit::ode::{integrate_ode, OdeError, OdeProblem, Trajectory};
use crate::numkit::special::{binomial, hyp2f1, pochhammer, HypError};
use crate::oscillator::{n2, OscError, OscParams, PhaseState};

/// Cotangent state `(x, y, p1, p2)`; `p1` conjugate to `x`, `p2` to `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoState {
    pub x: f64,
    pub y: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CoState {
    pub fn new(x: f64, y: f64, p1: f64, p2: f64) -> Self {
        CoState { x, y, p1, p2 }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        CoState::new(s[0], s[1], s[2], s[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.p1, self.p2]
    }
}

/// Value and first partials of a Hamiltonian at a cotangent point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HJet {
    pub h: f64,
    pub hx: f64,
    pub hy: f64,
    pub hp1: f64,
    pub hp2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeoError {
    InvalidParams { msg: &'static str },
    /// Conformal factor not positive at the queried `y`.
    OutsideDomain { y: f64 },
    /// An integral that divides by `p1` was evaluated at `p1 = 0`.
    P1Zero,
    /// The requested operation only exists on the power branch.
    PowerBranchOnly,
    /// `n` does not match the requested polynomial index `k`.
    KMismatch { expected_n: f64 },
    Osc(OscError),
    Hyp(HypError),
}

impl fmt::Display for GeoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeoError::InvalidParams { msg } => write!(f, "invalid metric parameters: {msg}"),
            GeoError::OutsideDomain { y } => write!(f, "metric not positive-definite at y = {y}"),
            GeoError::P1Zero => write!(f, "integral undefined at p1 = 0"),
            GeoError::PowerBranchOnly => write!(f, "operation defined on the power branch only"),
            GeoError::KMismatch { expected_n } => {
                write!(f, "polynomial integral needs n = {expected_n}")
            }
            GeoError::Osc(e) => write!(f, "{e}"),
            GeoError::Hyp(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeoError {}

impl From<OscError> for GeoError {
    fn from(e: OscError) -> Self {
        GeoError::Osc(e)
    }
}

impl From<HypError> for GeoError {
    fn from(e: HypError) -> Self {
        GeoError::Hyp(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Branch {
    /// `P(y) = 2 C1 delta y^(n+1) + C2`
    Power { osc: OscParams },
    /// `Q(y) = 2 delta C1 ln y + C2` (the `n = -1` metric)
    Log { delta: f64 },
}

/// The two-parameter metric family: conformal factors and Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSpec {
    c1: f64,
    c2: f64,
    branch: Branch,
}

impl MetricSpec {
    /// Power-branch metric with parameters `(C1, C2)` over the oscillator.
    pub fn new(c1: f64, c2: f64, osc: OscParams) -> Result<Self, GeoError> {
        if c1 == 0.0 || !c1.is_finite() || !c2.is_finite() {
            return Err(GeoError::InvalidParams {
                msg: "C1 must be finite nonzero",
            });
        }
        if osc.is_log_case() {
            return Err(GeoError::InvalidParams {
                msg: "n = -1 uses the log-branch constructor",
            });
        }
        Ok(MetricSpec {
            c1,
            c2,
            branch: Branch::Power { osc },
        })
    }

    /// Log-branch metric (`n = -1`).
    pub fn log_branch(c1: f64, c2: f64, delta: f64) -> Result<Self, GeoError> {
        if c1 == 0.0 || !c1.is_finite() || !c2.is_finite() {
            return Err(GeoError::InvalidParams {
                msg: "C1 must be finite nonzero",
            });
        }
        if delta == 0.0 {
            return Err(GeoError::InvalidParams {
                msg: "delta must be nonzero",
            });
        }
        Ok(MetricSpec {
            c1,
            c2,
            branch: Branch::Log { delta },
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn is_log_branch(&self) -> bool {
        matches!(self.branch, Branch::Log { .. })
    }

    pub fn osc(&self) -> Result<OscParams, GeoError> {
        match self.branch {
            Branch::Power { osc } => Ok(osc),
            Branch::Log { .. } => Err(GeoError::PowerBranchOnly),
        }
    }

    pub fn delta(&self) -> f64 {
        match self.branch {
            Branch::Power { osc } => osc.delta(),
            Branch::Log { delta } => delta,
        }
    }

    /// Conformal factor and its derivative at `y`.
    pub fn factor(&self, y: f64) -> Result<(f64, f64), GeoError> {
        match self.branch {
            Branch::Power { osc } => {
                let n = osc.n();
                let p = 2.0 * self.c1 * osc.delta() * osc.pow_y(y, n + 1.0)? + self.c2;
                let dp = 2.0 * self.c1 * osc.delta() * (n + 1.0) * osc.pow_y(y, n)?;
                Ok((p, dp))
            }
            Branch::Log { delta } => {
                if y <= 0.0 {
                    return Err(GeoError::OutsideDomain { y });
                }
                let q = 2.0 * delta * self.c1 * fp::ln(y) + self.c2;
                Ok((q, 2.0 * delta * self.c1 / y))
            }
        }
    }

    /// Positive-definiteness at `y`: factor and `C1` both positive.
    pub fn domain_ok(&self, y: f64) -> bool {
        self.c1 > 0.0 && matches!(self.factor(y), Ok((p, _)) if p > 0.0)
    }

    /// Covariant metric components `(g11, g12, g22)` and their y-derivatives,
    /// per the conformal form `ds^2 = (P dx^2 + C1 dy^2) / (C1^2 P^2)`.
    pub fn tensor(&self, y: f64) -> Result<([f64; 3], [f64; 3]), GeoError> {
        let (p, dp) = self.factor(y)?;
        if p <= 0.0 {
            return Err(GeoError::OutsideDomain { y });
        }
        let c1 = self.c1;
        let g11 = 1.0 / (c1 * c1 * p);
        let g22 = 1.0 / (c1 * p * p);
        let dg11 = -dp / (c1 * c1 * p * p);
        let dg22 = -2.0 * dp / (c1 * p * p * p);
        Ok(([g11, 0.0, g22], [dg11, 0.0, dg22]))
    }

    /// Hamiltonian and partials at a cotangent point.
    pub fn h_jet(&self, s: &CoState) -> Result<HJet, GeoError> {
        let (p, dp) = self.factor(s.y)?;
        let c1 = self.c1;
        match self.branch {
            Branch::Power { .. } => Ok(HJet {
                h: p * (c1 * s.p1 * s.p1 / 2.0 + p * s.p2 * s.p2 / 2.0),
                hx: 0.0,
                hy: dp * (c1 * s.p1 * s.p1 / 2.0 + p * s.p2 * s.p2),
                hp1: p * c1 * s.p1,
                hp2: p * p * s.p2,
            }),
            Branch::Log { .. } => Ok(HJet {
                h: c1 * p * (c1 * s.p1 * s.p1 / 2.0 + p * s.p2 * s.p2 / 2.0),
                hx: 0.0,
                hy: c1 * dp * (c1 * s.p1 * s.p1 / 2.0 + p * s.p2 * s.p2),
                hp1: c1 * c1 * p * s.p1,
                hp2: c1 * p * p * s.p2,
            }),
        }
    }
}

/// Hamiltonian value at a cotangent point.
pub fn hamiltonian(m: &MetricSpec, s: &CoState) -> Result<f64, GeoError> {
    Ok(m.h_jet(s)?.h)
}

/// Integrate Hamilton's equations of an arbitrary jet over `[0, t1]`.
pub fn hamiltonian_flow<'a, J>(
    jet: J,
    s0: &CoState,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, OdeError>
where
    J: Fn(&CoState) -> Option<HJet> + 'a,
{
    let problem = OdeProblem::new(
        move |_t, st, dst| match jet(&CoState::from_slice(st)) {
            Some(j) => {
                dst[0] = j.hp1;
                dst[1] = j.hp2;
                dst[2] = -j.hx;
                dst[3] = -j.hy;
            }
            None => dst.fill(f64::NAN),
        },
        0.0,
        t1,
        &s0.to_array(),
    )
    .tolerances(rtol, atol);
    integrate_ode(problem)
}

/// Geodesic flow of the metric from `s0` over `[0, t1]`; truncates if the
/// trajectory leaves the metric domain (conformal factor must stay positive).
pub fn geodesic_flow(
    m: &MetricSpec,
    s0: &CoState,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, OdeError> {
    let metric = *m;
    let guard = *m;
    let problem = OdeProblem::new(
        move |_t, st, dst| match metric.h_jet(&CoState::from_slice(st)) {
            Ok(j) => {
                dst[0] = j.hp1;
                dst[1] = j.hp2;
                dst[2] = -j.hx;
                dst[3] = -j.hy;
            }
            Err(_) => dst.fill(f64::NAN),
        },
        0.0,
        t1,
        &s0.to_array(),
    )
    .tolerances(rtol, atol)
    .stop_when(move |_t, st| !guard.domain_ok(st[1]));
    integrate_ode(problem)
}

/// The linear integral of the cyclic coordinate: `L = p1`.
pub fn integral_l(s: &CoState) -> f64 {
    s.p1
}

/// The rational lift of the autonomous integral:
/// `R = (P/C1)^2 (p2/p1)^2 + 2 delta y^(n+1)`; a function of `H` and `L`.
pub fn integral_r(m: &MetricSpec, s: &CoState) -> Result<f64, GeoError> {
    let osc = m.osc()?;
    if s.p1 == 0.0 {
        return Err(GeoError::P1Zero);
    }
    let (p, _) = m.factor(s.y)?;
    let ratio = p / m.c1() * s.p2 / s.p1;
    Ok(ratio * ratio + 2.0 * osc.delta() * osc.pow_y(s.y, osc.n() + 1.0)?)
}

/// The transcendental lift:
/// `T = x - y v / W * 2F1(a, 1; c; 1/W)` with
/// `v = (1 + C2/(2 C1 delta y^(n+1))) p2/p1` and `W = 1 + 2 delta y^(n+1) v^2`.
pub fn integral_t(m: &MetricSpec, s: &CoState) -> Result<f64, GeoError> {
    let osc = m.osc()?;
    if s.p1 == 0.0 {
        return Err(GeoError::P1Zero);
    }
    let ynp1 = osc.pow_y(s.y, osc.n() + 1.0)?;
    let two_d_ynp1 = 2.0 * osc.delta() * ynp1;
    let v = if m.c2() == 0.0 {
        s.p2 / s.p1
    } else {
        if two_d_ynp1 == 0.0 {
            return Err(GeoError::OutsideDomain { y: s.y });
        }
        (1.0 + m.c2() / (m.c1() * two_d_ynp1)) * s.p2 / s.p1
    };
    if v == 0.0 {
        // turning point: the prefactor vanishes as written
        return Ok(s.x);
    }
    let w = 1.0 + two_d_ynp1 * v * v;
    let n = osc.n();
    let (a, c) = ((n + 3.0) / (2.0 * n + 2.0), (n + 2.0) / (n + 1.0));
    let f = hyp2f1(a, 1.0, c, 1.0 / w)?;
    Ok(s.x - s.y * v / w * f)
}

/// Polynomial first integral of momentum degree `2k+2` at
/// `n = -(2k+3)/(2k+1)`:
///
/// `T_k = x A^(k+1) - y vt sum_s (-1)^s C(k,s) (2 delta)^s s!/(1/2-k)_s
///        y^(-2s/(2k+1)) A^(k-s) p1^(2s+1)`
///
/// with `vt = (C2/C1 + 2 delta y^(-2/(2k+1))) p2` and
/// `A = vt^2 + 2 delta y^(-2/(2k+1)) p1^2` (the printed inner expression's
/// stray exponent placement is read this way; validated by the drift and
/// bracket tests).
pub fn integral_tk(m: &MetricSpec, k: u32, s: &CoState) -> Result<f64, GeoError> {
    let osc = m.osc()?;
    let expected_n = -((2.0 * k as f64 + 3.0) / (2.0 * k as f64 + 1.0));
    if (osc.n() - expected_n).abs() > 1e-12 {
        return Err(GeoError::KMismatch { expected_n });
    }
    let e = -2.0 / (2.0 * k as f64 + 1.0);
    let ye = osc.pow_y(s.y, e)?;
    let delta = osc.delta();
    let vt = (m.c2() / m.c1() + 2.0 * delta * ye) * s.p2;
    let a = vt * vt + 2.0 * delta * ye * s.p1 * s.p1;
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for j in 0..=k {
        if j > 0 {
            factorial *= j as f64;
        }
        let coef = if j % 2 == 0 { 1.0 } else { -1.0 }
            * binomial(k, j)
            * fp::powi(2.0 * delta, j as i32)
            * factorial
            / pochhammer(0.5 - k as f64, j);
        sum += coef
            * osc.pow_y(s.y, e * j as f64)?
            * fp::powi(a, (k - j) as i32)
            * fp::powi(s.p1, 2 * j as i32 + 1);
    }
    Ok(s.x * fp::powi(a, k as i32 + 1) - s.y * vt * sum)
}

/// The quartic example at `n = -5/3`, `delta = 1`, `C1 = 1`, `C2 = 0`
/// (first-term denominator read as `y^(4/3)`; the printed `y^(2/3)` fails
/// the bracket test, see `brackets_vanish_for_integrals`):
///
/// `T1 = x/y^(4/3) p1^4 - 3/y^(1/3) p2 p1^3 + 4x/y^2 p2^2 p1^2
///       - 2/y p1 p2^3 + 4x/y^(8/3) p2^4`.
pub fn t1_quartic(s: &CoState) -> f64 {
    let y = s.y;
    let (p1, p2) = (s.p1, s.p2);
    s.x / fp::powf(y, 4.0 / 3.0) * fp::powi(p1, 4)
        - 3.0 / fp::powf(y, 1.0 / 3.0) * p2 * fp::powi(p1, 3)
        + 4.0 * s.x / (y * y) * p2 * p2 * p1 * p1
        - 2.0 / y * p1 * fp::powi(p2, 3)
        + 4.0 * s.x / fp::powf(y, 8.0 / 3.0) * fp::powi(p2, 4)
}

/// The sextic example at `n = -7/5`, `delta = 1`, `C1 = 1`, `C2 = 0` with a
/// parameterized `p2^5 p1` coefficient `c/y` (the printed value is garbled;
/// [`solve_t2_coefficient`] recovers `c = -4` from the bracket condition):
///
/// `T2 = x/y^(6/5) p1^6 - 5/y^(1/5) p2 p1^5 + 6x/y^(8/5) p2^2 p1^4
///       - 20/(3 y^(3/5)) p2^3 p1^3 + 12x/y^2 p2^4 p1^2 + c/y p2^5 p1
///       + 8x/y^(12/5) p2^6`.
pub fn t2_sextic_with(s: &CoState, c: f64) -> f64 {
    let y = s.y;
    let (p1, p2) = (s.p1, s.p2);
    s.x / fp::powf(y, 1.2) * fp::powi(p1, 6)
        - 5.0 / fp::powf(y, 0.2) * p2 * fp::powi(p1, 5)
        + 6.0 * s.x / fp::powf(y, 1.6) * p2 * p2 * fp::powi(p1, 4)
        - 20.0 / (3.0 * fp::powf(y, 0.6)) * fp::powi(p2, 3) * fp::powi(p1, 3)
        + 12.0 * s.x / (y * y) * fp::powi(p2, 4) * p1 * p1
        + c / y * fp::powi(p2, 5) * p1
        + 8.0 * s.x / fp::powf(y, 2.4) * fp::powi(p2, 6)
}

/// The sextic integral with the recovered coefficient.
pub fn t2_sextic(s: &CoState) -> f64 {
    t2_sextic_with(s, -4.0)
}

/// Recover the garbled `p2^5 p1` coefficient of the sextic integral by
/// requiring `{T2, H} = 0`: the bracket is affine in the coefficient, so one
/// generic state determines it.
pub fn solve_t2_coefficient(m: &MetricSpec, s: &CoState, h_fd: f64) -> Result<f64, GeoError> {
    let b0 = poisson_bracket(
        |st| t2_sextic_with(st, 0.0),
        |st| hamiltonian(m, st).unwrap_or(f64::NAN),
        s,
        h_fd,
    )
    .map_err(|_| GeoError::OutsideDomain { y: s.y })?;
    let b1 = poisson_bracket(
        |st| t2_sextic_with(st, 1.0),
        |st| hamiltonian(m, st).unwrap_or(f64::NAN),
        s,
        h_fd,
    )
    .map_err(|_| GeoError::OutsideDomain { y: s.y })?;
    Ok(-b0 / (b1 - b0))
}

/// Gaussian curvature of the power-branch metric:
/// `K = (n+1) C1^2 delta (C2 n y^(n-1) + delta C1 (n-1) y^(2n))`.
pub fn curvature(m: &MetricSpec, y: f64) -> Result<f64, GeoError> {
    let osc = m.osc()?;
    let (p, _) = m.factor(y)?;
    if p <= 0.0 {
        return Err(GeoError::OutsideDomain { y });
    }
    let n = osc.n();
    let d = osc.delta();
    Ok((n + 1.0)
        * m.c1()
        * m.c1()
        * d
        * (m.c2() * n * osc.pow_y(y, n - 1.0)? + d * m.c1() * (n - 1.0) * osc.pow_y(y, 2.0 * n)?))
}

/// Canonical Poisson bracket `{F, G}` at `s` via central finite differences
/// of both fields (step `h`).
pub fn poisson_bracket<F, G>(f: F, g: G, s: &CoState, h: f64) -> Result<f64, FdError>
where
    F: Fn(&CoState) -> f64,
    G: Fn(&CoState) -> f64,
{
    let point = s.to_array();
    let gf = fd_gradient(|p| f(&CoState::from_slice(p)), &point, h)?;
    let gg = fd_gradient(|p| g(&CoState::from_slice(p)), &point, h)?;
    // coordinates (x, y) pair with momenta (p1, p2)
    Ok(gf[0] * gg[2] - gf[2] * gg[0] + gf[1] * gg[3] - gf[3] * gg[1])
}

/// `{F, G}` normalized by the product of gradient norms.
pub fn poisson_bracket_normalized<F, G>(f: F, g: G, s: &CoState, h: f64) -> Result<f64, FdError>
where
    F: Fn(&CoState) -> f64,
    G: Fn(&CoState) -> f64,
{
    let point = s.to_array();
    let gf = fd_gradient(|p| f(&CoState::from_slice(p)), &point, h)?;
    let gg = fd_gradient(|p| g(&CoState::from_slice(p)), &point, h)?;
    let bracket = gf[0] * gg[2] - gf[2] * gg[0] + gf[1] * gg[3] - gf[3] * gg[1];
    let nf = fp::sqrt(gf.iter().map(|v| v * v).sum());
    let ng = fp::sqrt(gg.iter().map(|v| v * v).sum());
    Ok(bracket / (nf * ng).max(1e-300))
}

/// Singular values of the 3x4 Jacobi matrix of three scalar fields at `s`
/// (finite-difference rows).
pub fn jacobi_singular_values<F1, F2, F3>(
    f1: F1,
    f2: F2,
    f3: F3,
    s: &CoState,
    h: f64,
) -> Result<[f64; 3], FdError>
where
    F1: Fn(&CoState) -> f64,
    F2: Fn(&CoState) -> f64,
    F3: Fn(&CoState) -> f64,
{
    let point = s.to_array();
    let r1 = fd_gradient(|p| f1(&CoState::from_slice(p)), &point, h)?;
    let r2 = fd_gradient(|p| f2(&CoState::from_slice(p)), &point, h)?;
    let r3 = fd_gradient(|p| f3(&CoState::from_slice(p)), &point, h)?;
    let to4 = |v: &[f64]| [v[0], v[1], v[2], v[3]];
    Ok(singular_values_3x4([to4(&r1), to4(&r2), to4(&r3)]))
}

/// Lift of the `n = -1` erf-integral along the log-branch flow, using
/// `y_x = H_p2 / H_p1`.
pub fn lifted_n2(m: &MetricSpec, s: &CoState) -> Result<f64, GeoError> {
    if !m.is_log_branch() {
        return Err(GeoError::InvalidParams {
            msg: "lifted n2 is the log-branch integral",
        });
    }
    if s.p1 == 0.0 {
        return Err(GeoError::P1Zero);
    }
    let j = m.h_jet(s)?;
    let yx = j.hp2 / j.hp1;
    Ok(n2(&PhaseState::new(s.x, s.y, yx), m.delta())?)
}

/// Drift of the Hamiltonian along a trajectory.
pub fn h_drift(m: &MetricSpec, traj: &Trajectory, n_samples: usize) -> DriftReport {
    let metric = *m;
    measure_drift(traj, n_samples, 3, move |_t, st| {
        hamiltonian(&metric, &CoState::from_slice(st))
            .ok()
            .map(|value| DriftSample { value, branch: 0 })
    })
}

/// Drift of the transcendental integral `T`, split at `p2` sign changes.
pub fn t_drift(m: &MetricSpec, traj: &Trajectory, n_samples: usize) -> DriftReport {
    let metric = *m;
    measure_drift(traj, n_samples, 3, move |_t, st| {
        let s = CoState::from_slice(st);
        if s.p2.abs() < 1e-6 * s.p1.abs().max(1e-6) {
            return None;
        }
        integral_t(&metric, &s).ok().map(|value| DriftSample {
            value,
            branch: if s.p2 > 0.0 { 1 } else { -1 },
        })
    })
}

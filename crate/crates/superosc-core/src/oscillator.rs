//! The anharmonic oscillator `y'' + delta*(n+1)*y^n = 0` and its first
//! integrals.
//!
//! `i1` is the autonomous energy-like integral; `i2` the non-autonomous
//! hypergeometric one, with `i2_alt` the Euler-integral form (the two agree
//! where `y_x > 0` and mirror across turning points). At
//! `n = -(2k+3)/(2k+1)` the transcendental integral degenerates and
//! `i2_poly` gives the polynomial of degree `2k+2` in `y_x`. The special
//! case `n = -1` has the log/erf pair `n1`, `n2`.
//!
//! `explicit_geodesic` and `degenerate_geodesic` are the closed-form curves
//! obtained by eliminating `y_x` between `i1 = C3` and `i2 = C4`; both are
//! exposed with explicit +/- branch flags since trajectories glue the two
//! signs at turning points.

use core::fmt;

use crate::fp::{self, PowerMode};
use crate::numkit::drift::{measure_drift, DriftReport, DriftSample};
use crate::numkit::ode::{integrate_ode, OdeError, OdeProblem, Trajectory};
use crate::numkit::special::{binomial, erf_fn, hyp2f1, pochhammer, HypError};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Exponent and coefficient of the oscillator; `n` outside {0, 1} and
/// `delta` nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscParams {
    n: f64,
    delta: f64,
    mode: PowerMode,
}

/// Oscillator state `(x, y, u)` with `u = y_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub u: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, u: f64) -> Self {
        PhaseState { x, y, u }
    }
}

/// Which sign of the square root a geodesic curve takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OscError {
    /// `n` in {0, 1} (linear equation) or `delta = 0`.
    InvalidParams { msg: &'static str },
    /// `y` outside the power-law domain for the requested exponent.
    DomainPower { y: f64, r: f64 },
    /// The autonomous integral vanishes: the transcendental integral is on
    /// its degenerate branch, use the `C3 = 0` curves instead.
    DegenerateBranch,
    /// Hypergeometric argument left the admissible branch (turning point or
    /// `i1 < 0`).
    BranchArg,
    /// `n` does not equal `-(2k+3)/(2k+1)` for the requested `k`.
    KMismatch { expected_n: f64 },
    /// `n2` needs `delta > 0` for real square roots.
    NeedsPositiveDelta,
    /// `n = -1` has its own integrals (`n1`, `n2`), not `i1`/`i2`.
    LogCase,
    Hyp(HypError),
}

impl fmt::Display for OscError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OscError::InvalidParams { msg } => write!(f, "invalid oscillator parameters: {msg}"),
            OscError::DomainPower { y, r } => write!(f, "y = {y} outside domain of y^{r}"),
            OscError::DegenerateBranch => {
                write!(f, "i1 = 0: degenerate branch, use the C3 = 0 geodesics")
            }
            OscError::BranchArg => write!(f, "hypergeometric argument outside branch"),
            OscError::KMismatch { expected_n } => {
                write!(f, "polynomial integral needs n = {expected_n}")
            }
            OscError::NeedsPositiveDelta => write!(f, "n2 requires delta > 0"),
            OscError::LogCase => write!(f, "n = -1: use the n1/n2 integrals"),
            OscError::Hyp(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OscError {}

impl From<HypError> for OscError {
    fn from(e: HypError) -> Self {
        OscError::Hyp(e)
    }
}

impl OscParams {
    pub fn new(n: f64, delta: f64) -> Result<Self, OscError> {
        if n == 0.0 || n == 1.0 {
            return Err(OscError::InvalidParams {
                msg: "n in {0, 1} makes the equation linear",
            });
        }
        if delta == 0.0 || !delta.is_finite() || !n.is_finite() {
            return Err(OscError::InvalidParams {
                msg: "delta must be finite nonzero",
            });
        }
        Ok(OscParams {
            n,
            delta,
            mode: PowerMode::PositiveBase,
        })
    }

    /// Extend fractional powers to `y < 0` as `sign(y)|y|^r`.
    pub fn with_odd_denominator(mut self) -> Self {
        self.mode = PowerMode::OddDenominator;
        self
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `n = -1` routes to the logarithmic integrals `n1`/`n2`.
    pub fn is_log_case(&self) -> bool {
        self.n == -1.0
    }

    pub fn pow_y(&self, y: f64, r: f64) -> Result<f64, OscError> {
        fp::powr(y, r, self.mode).ok_or(OscError::DomainPower { y, r })
    }
}

/// Right-hand side of the oscillator: `y_xx = -delta*(n+1)*y^n`.
pub fn osc_rhs(p: &OscParams, s: &PhaseState) -> Result<f64, OscError> {
    Ok(-p.delta * (p.n + 1.0) * p.pow_y(s.y, p.n)?)
}

/// Integrate the oscillator from `ic` to `x1`, with an optional cap on
/// `max(|y|, |u|)` that truncates the trajectory before blow-up.
pub fn integrate(
    p: &OscParams,
    ic: &PhaseState,
    x1: f64,
    rtol: f64,
    atol: f64,
    cap: Option<f64>,
) -> Result<Trajectory, OdeError> {
    let params = *p;
    let mut problem = OdeProblem::new(
        move |_x, y, dy| {
            dy[0] = y[1];
            dy[1] = osc_rhs(&params, &PhaseState::new(0.0, y[0], y[1])).unwrap_or(f64::NAN);
        },
        ic.x,
        x1,
        &[ic.y, ic.u],
    )
    .tolerances(rtol, atol);
    if let Some(c) = cap {
        problem = problem.stop_when(move |_, y| y[0].abs() > c || y[1].abs() > c);
    }
    integrate_ode(problem)
}

/// Autonomous integral `i1 = y_x^2 + 2 delta y^(n+1)`.
pub fn i1(p: &OscParams, s: &PhaseState) -> Result<f64, OscError> {
    Ok(s.u * s.u + 2.0 * p.delta * p.pow_y(s.y, p.n + 1.0)?)
}

/// Hypergeometric parameters `(a, c)` of the oscillator family:
/// `a = (n+3)/(2n+2)`, `c = (n+2)/(n+1)` (second series parameter is 1).
fn hyp_params(n: f64) -> (f64, f64) {
    ((n + 3.0) / (2.0 * n + 2.0), (n + 2.0) / (n + 1.0))
}

/// Non-autonomous transcendental integral
/// `i2 = x - y y_x / i1 * 2F1(a, 1; c; 2 delta y^(n+1) / i1)`.
///
/// Defined per branch: errors at turning points (`y_x = 0`), on `i1 <= 0`,
/// and in the log case `n = -1`.
pub fn i2(p: &OscParams, s: &PhaseState) -> Result<f64, OscError> {
    if p.is_log_case() {
        return Err(OscError::LogCase);
    }
    let first = i1(p, s)?;
    if first.abs() < 1e-14 {
        return Err(OscError::DegenerateBranch);
    }
    if first < 0.0 || s.u == 0.0 {
        return Err(OscError::BranchArg);
    }
    let tau = 2.0 * p.delta * p.pow_y(s.y, p.n + 1.0)? / first;
    let (a, c) = hyp_params(p.n);
    let f = hyp2f1(a, 1.0, c, tau)?;
    Ok(s.x - s.y * s.u / first * f)
}

/// The Euler-integral form of the non-autonomous integral:
/// `x - y / sqrt(i1) * 2F1(1/2, 1/(n+1); (n+2)/(n+1); 2 delta y^(n+1)/i1)`.
///
/// Equals [`i2`] where `y_x > 0`; across a turning point the two differ by
/// the mirrored prefactor sign.
pub fn i2_alt(p: &OscParams, s: &PhaseState) -> Result<f64, OscError> {
    if p.is_log_case() {
        return Err(OscError::LogCase);
    }
    let first = i1(p, s)?;
    if first.abs() < 1e-14 {
        return Err(OscError::DegenerateBranch);
    }
    if first <= 0.0 {
        return Err(OscError::BranchArg);
    }
    let tau = 2.0 * p.delta * p.pow_y(s.y, p.n + 1.0)? / first;
    let b = 1.0 / (p.n + 1.0);
    let f = hyp2f1(0.5, b, b + 1.0, tau)?;
    Ok(s.x - s.y / fp::sqrt(first) * f)
}

/// Polynomial first integral of degree `2k+2` in `y_x` at
/// `n = -(2k+3)/(2k+1)`:
///
/// `i2_poly = x A^(k+1) - y y_x sum_s (-1)^s C(k,s) (2 delta)^s s! / (1/2-k)_s
///            y^(-2s/(2k+1)) A^(k-s)`,  with `A = y_x^2 + 2 delta y^(-2/(2k+1))`.
pub fn i2_poly(p: &OscParams, k: u32, s: &PhaseState) -> Result<f64, OscError> {
    let expected_n = -((2.0 * k as f64 + 3.0) / (2.0 * k as f64 + 1.0));
    if (p.n - expected_n).abs() > 1e-12 {
        return Err(OscError::KMismatch { expected_n });
    }
    let e = -2.0 / (2.0 * k as f64 + 1.0);
    let a = s.u * s.u + 2.0 * p.delta * p.pow_y(s.y, e)?;
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for j in 0..=k {
        if j > 0 {
            factorial *= j as f64;
        }
        let coef = if j % 2 == 0 { 1.0 } else { -1.0 }
            * binomial(k, j)
            * fp::powi(2.0 * p.delta, j as i32)
            * factorial
            / pochhammer(0.5 - k as f64, j);
        sum += coef * p.pow_y(s.y, e * j as f64)? * fp::powi(a, (k - j) as i32);
    }
    Ok(s.x * fp::powi(a, k as i32 + 1) - s.y * s.u * sum)
}

/// Autonomous integral at `n = -1`: `n1 = y_x^2 + 2 delta ln y`.
pub fn n1(s: &PhaseState, delta: f64) -> Result<f64, OscError> {
    if s.y <= 0.0 {
        return Err(OscError::DomainPower { y: s.y, r: -1.0 });
    }
    Ok(s.u * s.u + 2.0 * delta * fp::ln(s.y))
}

/// Non-autonomous integral at `n = -1`:
/// `n2 = x + sqrt(pi/(2 delta)) y exp(y_x^2/(2 delta)) erf(y_x/sqrt(2 delta))`.
pub fn n2(s: &PhaseState, delta: f64) -> Result<f64, OscError> {
    if delta <= 0.0 {
        return Err(OscError::NeedsPositiveDelta);
    }
    if s.y <= 0.0 {
        return Err(OscError::DomainPower { y: s.y, r: -1.0 });
    }
    let root = fp::sqrt(2.0 * delta);
    Ok(s.x + SQRT_PI / root * s.y * fp::exp(s.u * s.u / (2.0 * delta)) * erf_fn(s.u / root))
}

/// Explicit geodesic curves `x(y)` from eliminating `y_x` between `i1 = C3`
/// and `i2 = C4` (`C3 != 0`):
///
/// `x = C4 +/- (y/C3) sqrt(C3 - 2 delta y^(n+1)) 2F1(a, 1; c; 2 delta y^(n+1)/C3)`.
pub fn explicit_geodesic(
    p: &OscParams,
    c3: f64,
    c4: f64,
    y: f64,
    branch: Branch,
) -> Result<f64, OscError> {
    if c3 == 0.0 {
        return Err(OscError::DegenerateBranch);
    }
    let ynp1 = p.pow_y(y, p.n + 1.0)?;
    let slope_sq = c3 - 2.0 * p.delta * ynp1;
    if slope_sq <= 0.0 {
        return Err(OscError::BranchArg);
    }
    let tau = 2.0 * p.delta * ynp1 / c3;
    let (a, c) = hyp_params(p.n);
    let f = hyp2f1(a, 1.0, c, tau)?;
    Ok(c4 + branch.sign() * y / c3 * fp::sqrt(slope_sq) * f)
}

/// Degenerate (`C3 = 0`) geodesics, real only for `delta < 0`:
/// `x = C5 +/- 2/((1-n) sqrt(-2 delta)) y^((1-n)/2)`.
pub fn degenerate_geodesic(
    p: &OscParams,
    c5: f64,
    y: f64,
    branch: Branch,
) -> Result<f64, OscError> {
    if p.delta >= 0.0 {
        return Err(OscError::InvalidParams {
            msg: "C3 = 0 geodesics need delta < 0",
        });
    }
    let e = (1.0 - p.n) / 2.0;
    let ypow = p.pow_y(y, e)?;
    Ok(c5 + branch.sign() * 2.0 / ((1.0 - p.n) * fp::sqrt(-2.0 * p.delta)) * ypow)
}

/// Drift of `i1` along a trajectory (uniform samples).
pub fn i1_drift(p: &OscParams, traj: &Trajectory, n_samples: usize) -> DriftReport {
    let params = *p;
    measure_drift(traj, n_samples, 3, move |x, state| {
        i1(&params, &PhaseState::new(x, state[0], state[1]))
            .ok()
            .map(|value| DriftSample { value, branch: 0 })
    })
}

/// Drift of `i2` along a trajectory, split at turning points and branch
/// violations.
pub fn i2_drift(p: &OscParams, traj: &Trajectory, n_samples: usize) -> DriftReport {
    let params = *p;
    measure_drift(traj, n_samples, 3, move |x, state| {
        let s = PhaseState::new(x, state[0], state[1]);
        // stay a little away from the turning-point singularity
        let first = i1(&params, &s).ok()?;
        if first <= 0.0 || state[1].abs() < 1e-6 * fp::sqrt(first) {
            return None;
        }
        i2(&params, &s).ok().map(|value| DriftSample {
            value,
            branch: if state[1] > 0.0 { 1 } else { -1 },
        })
    })
}

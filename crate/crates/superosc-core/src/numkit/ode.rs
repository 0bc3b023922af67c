//! Adaptive explicit Runge-Kutta integration: the Dormand-Prince 5(4) pair
//! with PI step-size control and 4th-order dense output.
//!
//! Conservation tests in this crate measure drift of first integrals, so the
//! defaults are tight (`rtol = 1e-10`, `atol = 1e-12`); symplecticity is not
//! needed for that.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fp;

/// Right-hand side: `dy/dt = f(t, y)` written into `dydt`.
pub type Rhs<'a> = Box<dyn Fn(f64, &[f64], &mut [f64]) + 'a>;

/// Optional stop predicate evaluated at accepted steps; returning `true`
/// truncates the trajectory there (normal completion, `Status::Stopped`).
pub type StopFn<'a> = Box<dyn Fn(f64, &[f64]) -> bool + 'a>;

/// An initial value problem on a finite span.
pub struct OdeProblem<'a> {
    pub rhs: Rhs<'a>,
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub stop: Option<StopFn<'a>>,
}

impl<'a> OdeProblem<'a> {
    pub fn new<F>(rhs: F, t0: f64, t1: f64, y0: &[f64]) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + 'a,
    {
        OdeProblem {
            rhs: Box::new(rhs),
            t0,
            t1,
            y0: y0.to_vec(),
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
            stop: None,
        }
    }

    pub fn tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn stop_when<F>(mut self, stop: F) -> Self
    where
        F: Fn(f64, &[f64]) -> bool + 'a,
    {
        self.stop = Some(Box::new(stop));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Tolerances outside [1e-14, 1e-2] or a non-finite span/state.
    BadInput { msg: &'static str },
    /// Step size underflowed: the solution has a singularity (or is
    /// unresolvably stiff) near `t`. Carries the partial trajectory.
    StepUnderflow { t: f64, partial: Trajectory },
    /// The right-hand side returned NaN/inf at `t` and the step could not be
    /// shrunk out of it. Carries the partial trajectory.
    NonFiniteRhs { t: f64, partial: Trajectory },
    /// `max_steps` exceeded before reaching the end of the span.
    MaxSteps { t: f64, partial: Trajectory },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::BadInput { msg } => write!(f, "bad ODE input: {msg}"),
            OdeError::StepUnderflow { t, .. } => write!(f, "step size underflow near t = {t}"),
            OdeError::NonFiniteRhs { t, .. } => write!(f, "non-finite rhs near t = {t}"),
            OdeError::MaxSteps { t, .. } => write!(f, "max step count reached at t = {t}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OdeError {}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Reached `t1`.
    Completed,
    /// A stop predicate fired.
    Stopped,
}

/// One accepted step's dense-output segment.
#[derive(Debug, Clone, PartialEq)]
struct Segment {
    t: f64,
    h: f64,
    // cont[0..5]: Dormand-Prince 4th-order interpolant coefficients
    cont: [Vec<f64>; 5],
}

/// Solution with a strictly monotone time grid and a continuous dense-output
/// evaluator over the integrated span.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    ts: Vec<f64>,
    ys: Vec<Vec<f64>>,
    segments: Vec<Segment>,
    status: Status,
    n_steps: usize,
    n_rejected: usize,
}

impl Trajectory {
    pub fn status(&self) -> Status {
        self.status
    }

    pub fn dim(&self) -> usize {
        self.ys.first().map(|y| y.len()).unwrap_or(0)
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.ys
    }

    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn last_state(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    pub fn accepted_steps(&self) -> usize {
        self.n_steps
    }

    /// Dense-output evaluation; `t` is clamped to the integrated span.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let dim = self.dim();
        if self.segments.is_empty() {
            return self.ys[0].clone();
        }
        let dir = (self.t_end() - self.t_start()).signum();
        let tc = if (t - self.t_start()) * dir < 0.0 {
            self.t_start()
        } else if (t - self.t_end()) * dir > 0.0 {
            self.t_end()
        } else {
            t
        };
        // binary search for the segment containing tc
        let mut lo = 0usize;
        let mut hi = self.segments.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let seg = &self.segments[mid];
            if (tc - (seg.t + seg.h)) * dir > 0.0 {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let seg = &self.segments[lo];
        // grid nodes reproduce the stored states bit-exactly
        if tc == seg.t {
            return self.ys[lo].clone();
        }
        if tc == seg.t + seg.h {
            return self.ys[lo + 1].clone();
        }
        let theta = (tc - seg.t) / seg.h;
        let th1 = 1.0 - theta;
        let mut out = vec![0.0; dim];
        for (i, o) in out.iter_mut().enumerate() {
            *o = seg.cont[0][i]
                + theta
                    * (seg.cont[1][i]
                        + th1 * (seg.cont[2][i] + theta * (seg.cont[3][i] + th1 * seg.cont[4][i])));
        }
        out
    }

    /// `m + 1` dense samples at uniform times across the span.
    pub fn sample_uniform(&self, m: usize) -> Vec<(f64, Vec<f64>)> {
        let (a, b) = (self.t_start(), self.t_end());
        (0..=m)
            .map(|i| {
                let t = a + (b - a) * (i as f64) / (m as f64);
                (t, self.eval(t))
            })
            .collect()
    }
}

// Dormand-Prince RK5(4)7FM coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Integrate an initial value problem; on singularities or blow-up the error
/// carries the partial trajectory up to the last accepted step.
pub fn integrate_ode(problem: OdeProblem<'_>) -> Result<Trajectory, OdeError> {
    let dim = problem.y0.len();
    if dim == 0 {
        return Err(OdeError::BadInput { msg: "empty state" });
    }
    if !(problem.rtol >= 1e-14 && problem.rtol <= 1e-2) || !(problem.atol >= 1e-14 && problem.atol <= 1e-2) {
        return Err(OdeError::BadInput {
            msg: "tolerances must lie in [1e-14, 1e-2]",
        });
    }
    if !problem.t0.is_finite() || !problem.t1.is_finite() || problem.t0 == problem.t1 {
        return Err(OdeError::BadInput { msg: "degenerate span" });
    }
    if problem.y0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::BadInput { msg: "non-finite initial state" });
    }

    let dir = (problem.t1 - problem.t0).signum();
    let rhs = &problem.rhs;
    let mut t = problem.t0;
    let mut y = problem.y0.clone();

    let mut traj = Trajectory {
        ts: vec![t],
        ys: vec![y.clone()],
        segments: Vec::new(),
        status: Status::Completed,
        n_steps: 0,
        n_rejected: 0,
    };

    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; dim]);
    let mut f0 = vec![0.0; dim];
    rhs(t, &y, &mut f0);
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteRhs { t, partial: traj });
    }
    k[0].copy_from_slice(&f0);

    let mut h = initial_step(rhs, t, &y, &f0, dir, problem.rtol, problem.atol, problem.t1);
    let expo1 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut ytmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    for _step in 0..problem.max_steps {
        if (t - problem.t1) * dir >= 0.0 {
            return Ok(traj);
        }
        // do not overshoot
        if (t + h - problem.t1) * dir > 0.0 {
            h = problem.t1 - t;
        }
        let h_floor = 1e-14 * t.abs().max(1.0);
        if h.abs() < h_floor {
            traj.status = Status::Completed;
            return Err(OdeError::StepUnderflow { t, partial: traj });
        }

        // stages 2..7 (k[0] is FSAL from the previous step)
        let mut rhs_finite = true;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            rhs(t + C[s] * h, &ytmp, &mut k[s]);
            if k[s].iter().any(|v| !v.is_finite()) {
                rhs_finite = false;
                break;
            }
        }
        // stage 7 state is the 5th-order solution (FSAL)
        if rhs_finite {
            y_new.copy_from_slice(&ytmp);
        }

        if !rhs_finite || y_new.iter().any(|v| !v.is_finite()) {
            // shrink and retry; a persistent failure ends in step underflow
            h *= 0.25;
            traj.n_rejected += 1;
            last_rejected = true;
            if h.abs() < h_floor {
                return Err(OdeError::NonFiniteRhs { t, partial: traj });
            }
            continue;
        }

        // embedded error estimate
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = problem.atol + problem.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = fp::sqrt(err_sq / dim as f64);

        let fac11 = fp::powf(err.max(1e-30), expo1);
        let mut fac = fac11 / fp::powf(facold, BETA);
        fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;

        if err <= 1.0 {
            // accept
            facold = err.max(1e-4);
            let seg = make_segment(t, h, &y, &y_new, &k);
            traj.segments.push(seg);
            t += h;
            y.copy_from_slice(&y_new);
            // FSAL: k7 is f at (t_new, y_new)
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            traj.ts.push(t);
            traj.ys.push(y.clone());
            traj.n_steps += 1;

            if let Some(stop) = &problem.stop {
                if stop(t, &y) {
                    traj.status = Status::Stopped;
                    return Ok(traj);
                }
            }
            if last_rejected {
                h_new = if h_new.abs() < h.abs() { h_new } else { h };
            }
            last_rejected = false;
            h = h_new;
        } else {
            traj.n_rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
        }
    }
    Err(OdeError::MaxSteps { t, partial: traj })
}

fn make_segment(t: f64, h: f64, y: &[f64], y_new: &[f64], k: &[Vec<f64>; 7]) -> Segment {
    let dim = y.len();
    let mut cont: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; dim]);
    for i in 0..dim {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        cont[0][i] = y[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k[6][i] - bspl;
        let mut d = 0.0;
        for (j, kj) in k.iter().enumerate() {
            d += D[j] * kj[i];
        }
        cont[4][i] = h * d;
    }
    Segment { t, h, cont }
}

#[allow(clippy::too_many_arguments)]
fn initial_step(
    rhs: &Rhs<'_>,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    dir: f64,
    rtol: f64,
    atol: f64,
    t1: f64,
) -> f64 {
    let dim = y0.len();
    let sc: Vec<f64> = y0.iter().map(|v| atol + rtol * v.abs()).collect();
    let d0 = fp::sqrt(y0.iter().zip(&sc).map(|(v, s)| (v / s) * (v / s)).sum::<f64>() / dim as f64);
    let d1 = fp::sqrt(f0.iter().zip(&sc).map(|(v, s)| (v / s) * (v / s)).sum::<f64>() / dim as f64);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min((t1 - t0).abs());
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let mut f1 = vec![0.0; dim];
    rhs(t0 + dir * h0, &y1, &mut f1);
    let d2 = fp::sqrt(
        f1.iter()
            .zip(f0)
            .zip(&sc)
            .map(|((a, b), s)| ((a - b) / s) * ((a - b) / s))
            .sum::<f64>()
            / dim as f64,
    ) / h0;
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        fp::powf(0.01 / d_max, 0.2)
    };
    (100.0 * h0).min(h1).min((t1 - t0).abs()) * dir
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn cosine_oracle_at_pi() {
        let traj = integrate_ode(OdeProblem::new(harmonic, 0.0, core::f64::consts::PI, &[1.0, 0.0]))
            .unwrap();
        let end = traj.last_state();
        assert!((end[0] + 1.0).abs() < 1e-8, "y(pi) = {}", end[0]);
        assert!(end[1].abs() < 1e-8);
    }

    #[test]
    fn constant_solution_stays_put() {
        let traj = integrate_ode(OdeProblem::new(|_, _, dy| dy[0] = 0.0, 0.0, 7.3, &[3.7])).unwrap();
        assert_eq!(traj.last_state()[0], 3.7);
        for (_, y) in traj.sample_uniform(17) {
            assert_eq!(y[0], 3.7);
        }
    }

    #[test]
    fn energy_drift_on_harmonic_oscillator() {
        let traj = integrate_ode(OdeProblem::new(harmonic, 0.0, 20.0, &[1.0, 0.0])).unwrap();
        let e0 = 1.0;
        for (_, y) in traj.sample_uniform(400) {
            let e = y[0] * y[0] + y[1] * y[1];
            assert!((e - e0).abs() < 1e-8, "energy drifted to {e}");
        }
    }

    #[test]
    fn dense_output_matches_grid_nodes_exactly() {
        let traj = integrate_ode(OdeProblem::new(harmonic, 0.0, 3.0, &[0.3, -0.2])).unwrap();
        for (t, y) in traj.times().iter().zip(traj.states()) {
            let interp = traj.eval(*t);
            for i in 0..2 {
                assert_eq!(interp[i], y[i], "node mismatch at t={t}");
            }
        }
    }

    #[test]
    fn dense_output_accuracy_between_nodes() {
        let traj = integrate_ode(OdeProblem::new(harmonic, 0.0, 6.0, &[1.0, 0.0])).unwrap();
        for (t, y) in traj.sample_uniform(313) {
            assert!((y[0] - fp::cos(t)).abs() < 1e-8, "at t={t}");
        }
    }

    #[test]
    fn singular_rhs_reports_underflow_with_partial() {
        // y' = 1/(1-t) blows up at t = 1
        let res = integrate_ode(OdeProblem::new(
            |t, _, dy| dy[0] = 1.0 / (1.0 - t),
            0.0,
            2.0,
            &[0.0],
        ));
        match res {
            Err(OdeError::StepUnderflow { t, partial }) | Err(OdeError::NonFiniteRhs { t, partial }) => {
                assert!(t <= 1.0 + 1e-9);
                assert!(partial.t_end() <= 1.0);
                assert!(partial.accepted_steps() > 0);
            }
            other => panic!("expected singularity diagnostics, got {other:?}"),
        }
    }

    #[test]
    fn bad_tolerances_rejected() {
        let p = OdeProblem::new(harmonic, 0.0, 1.0, &[1.0, 0.0]).tolerances(1e-16, 1e-12);
        assert!(matches!(integrate_ode(p), Err(OdeError::BadInput { .. })));
    }

    #[test]
    fn stop_predicate_truncates() {
        let p = OdeProblem::new(harmonic, 0.0, 10.0, &[1.0, 0.0]).stop_when(|_, y| y[0] < 0.0);
        let traj = integrate_ode(p).unwrap();
        assert_eq!(traj.status(), Status::Stopped);
        assert!(traj.t_end() < 10.0);
    }

    #[test]
    fn backward_integration_works() {
        let traj = integrate_ode(OdeProblem::new(harmonic, 0.0, -core::f64::consts::PI, &[1.0, 0.0]))
            .unwrap();
        assert!((traj.last_state()[0] + 1.0).abs() < 1e-8);
        let mid = traj.eval(-core::f64::consts::FRAC_PI_2);
        assert!(mid[0].abs() < 1e-8);
    }
}

//! Central finite differences, used as the verification instrument for
//! analytic gradients, Poisson brackets, and curve residuals.

use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdError {
    /// The function returned a non-finite value at a stencil point.
    NonFiniteSample,
}

impl fmt::Display for FdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FdError::NonFiniteSample => write!(f, "non-finite sample in finite-difference stencil"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FdError {}

/// O(h^2) central-difference gradient of a scalar function of `point.len()`
/// reals.
pub fn fd_gradient<F>(f: F, point: &[f64], h: f64) -> Result<Vec<f64>, FdError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(point.len());
    let mut buf = point.to_vec();
    for i in 0..point.len() {
        let x = point[i];
        buf[i] = x + h;
        let fp = f(&buf);
        buf[i] = x - h;
        let fm = f(&buf);
        buf[i] = x;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(FdError::NonFiniteSample);
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// O(h^2) central second derivative of a scalar function of one real.
pub fn fd_second<F>(f: F, x: f64, h: f64) -> Result<f64, FdError>
where
    F: Fn(f64) -> f64,
{
    let (fm, f0, fp) = (f(x - h), f(x), f(x + h));
    if !fm.is_finite() || !f0.is_finite() || !fp.is_finite() {
        return Err(FdError::NonFiniteSample);
    }
    Ok((fp - 2.0 * f0 + fm) / (h * h))
}

/// O(h^4) five-point first derivative, for residual checks that need more
/// accuracy than the plain central stencil.
pub fn fd_first5<F>(f: F, x: f64, h: f64) -> Result<f64, FdError>
where
    F: Fn(f64) -> f64,
{
    let samples = [f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h)];
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(FdError::NonFiniteSample);
    }
    Ok((samples[0] - 8.0 * samples[1] + 8.0 * samples[2] - samples[3]) / (12.0 * h))
}

/// Second derivative of tabulated samples at unequal spacing, exact on
/// quadratics: three-point divided-difference formula.
pub fn second_derivative_nonuniform(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    2.0 * (d12 - d01) / (x[2] - x[0])
}

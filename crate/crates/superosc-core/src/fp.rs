//! Float math shim: `std` intrinsics when available, `libm` otherwise.
//!
//! All transcendental calls in this crate go through these functions so the
//! core stays `no_std`-compatible.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        x.powi(n)
    }
    #[inline]
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    #[inline]
    pub fn round(x: f64) -> f64 {
        x.round()
    }
    #[inline]
    pub fn cbrt(x: f64) -> f64 {
        x.cbrt()
    }
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        y.atan2(x)
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        libm::pow(x, y)
    }
    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        libm::pow(x, n as f64)
    }
    #[inline]
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline]
    pub fn round(x: f64) -> f64 {
        libm::round(x)
    }
    #[inline]
    pub fn cbrt(x: f64) -> f64 {
        libm::cbrt(x)
    }
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        libm::atan2(y, x)
    }
}

pub use imp::*;

/// `x^r` with a configurable domain for negative bases.
///
/// Integer exponents use the sign of `x` as usual. Fractional exponents are
/// defined for `x > 0` only in [`PowerMode::PositiveBase`]; in
/// [`PowerMode::OddDenominator`] they extend to `x < 0` as `sign(x)*|x|^r`
/// (the real branch for rationals with odd denominator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    #[default]
    PositiveBase,
    OddDenominator,
}

/// Real power `x^r` under `mode`; `None` when outside the domain.
pub fn powr(x: f64, r: f64, mode: PowerMode) -> Option<f64> {
    if x > 0.0 {
        return Some(powf(x, r));
    }
    let ri = round(r);
    if (r - ri).abs() < 1e-12 && ri.abs() < 2_147_483_647.0 {
        // integer exponent: 0^neg is a pole, otherwise sign comes from parity
        if x == 0.0 && ri < 0.0 {
            return None;
        }
        return Some(powi(x, ri as i32));
    }
    if x == 0.0 {
        return if r > 0.0 { Some(0.0) } else { None };
    }
    match mode {
        PowerMode::PositiveBase => None,
        PowerMode::OddDenominator => Some(-powf(-x, r)),
    }
}

//! Special functions: Gauss hypergeometric 2F1 on the real branch, the error
//! function, log-gamma, Pochhammer symbols and binomial coefficients.
//!
//! 2F1 evaluation strategy (real z < 1):
//! - terminating series when `a` or `b` is a nonpositive integer, any z;
//! - Euler transformation to a terminating series when `c-a` or `c-b` is a
//!   nonpositive integer;
//! - direct Gauss series for 0 <= z <= 1/2;
//! - Pfaff transformation z -> z/(z-1) for z < 0;
//! - the 1-z connection formula for 1/2 < z < 1 (fails only in the
//!   logarithmic case `c-a-b` integer, which the integrals built here never
//!   hit: their `c-a-b` is identically -1/2).

use core::fmt;

use crate::fp;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const FRAC_2_SQRT_PI: f64 = core::f64::consts::FRAC_2_SQRT_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypError {
    /// `c` is zero or a negative integer.
    CPole,
    /// z >= 1 and the series does not terminate.
    BranchArg,
    /// `c-a-b` is an integer and z lies in (1/2, 1): the connection formula
    /// degenerates (logarithmic case, not implemented).
    LogCase,
    /// Series failed to converge (should not happen for |z| <= 1/2).
    NoConvergence,
}

impl fmt::Display for HypError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypError::CPole => write!(f, "hyp2f1: c is a nonpositive integer"),
            HypError::BranchArg => write!(f, "hyp2f1: z >= 1 outside terminating cases"),
            HypError::LogCase => write!(f, "hyp2f1: logarithmic case c-a-b integer at z in (1/2,1)"),
            HypError::NoConvergence => write!(f, "hyp2f1: series did not converge"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HypError {}

fn nonpositive_int(x: f64) -> Option<u32> {
    if x > 1e-12 {
        return None;
    }
    let r = fp::round(x);
    if (x - r).abs() < 1e-12 && r >= -1e9 {
        Some((-r) as u32)
    } else {
        None
    }
}

/// Rising factorial `(a)_s = a (a+1) ... (a+s-1)`.
pub fn pochhammer(a: f64, s: u32) -> f64 {
    let mut p = 1.0;
    for i in 0..s {
        p *= a + i as f64;
    }
    p
}

/// Binomial coefficient `C(n, k)` as f64 (exact for the small arguments used
/// in the polynomial first integrals).
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..k {
        num *= (n - i) as f64;
        den *= (i + 1) as f64;
    }
    num / den
}

/// Natural log of |Gamma(x)| via the Lanczos approximation (g = 7, n = 9),
/// together with the sign of Gamma(x). Poles return (+inf, 0 sign).
pub fn ln_gamma(x: f64) -> (f64, f64) {
    // published Lanczos constants, kept at full printed precision
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x <= 0.0 && (x - fp::round(x)).abs() < 1e-300 {
        return (f64::INFINITY, 0.0);
    }
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let (lg, sg) = ln_gamma(1.0 - x);
        let s = fp::sin(core::f64::consts::PI * x);
        let sign = if s < 0.0 { -sg } else { sg };
        return (fp::ln(core::f64::consts::PI / s.abs()) - lg, sign);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    let lg = 0.5 * fp::ln(2.0 * core::f64::consts::PI) + (z + 0.5) * fp::ln(t) - t + fp::ln(acc);
    (lg, 1.0)
}

/// Gamma(x) with sign; +/-inf at poles.
pub fn gamma(x: f64) -> f64 {
    let (lg, sg) = ln_gamma(x);
    if sg == 0.0 {
        return f64::INFINITY;
    }
    sg * fp::exp(lg)
}

/// Error function, accurate to ~1e-15: Maclaurin series for |x| <= 2,
/// continued fraction for erfc beyond.
pub fn erf_fn(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_fn(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= 2.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x2 / kf;
            let contrib = term / (2.0 * kf + 1.0);
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        FRAC_2_SQRT_PI * sum
    } else {
        1.0 - erfc_cf(x)
    }
}

/// erfc(x) for x >= 2 via the Laplace continued fraction
/// sqrt(pi) e^{x^2} erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    fp::exp(-x * x) / (SQRT_PI * f)
}

/// Gauss hypergeometric function 2F1(a, b; c; z) on the principal real
/// branch z < 1 (z >= 1 only in terminating cases).
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, HypError> {
    if nonpositive_int(c).is_some() {
        // a terminating numerator can still rescue c at a pole if it cuts
        // the series off first
        let na = nonpositive_int(a);
        let nb = nonpositive_int(b);
        let nc = nonpositive_int(c).unwrap();
        let cut = match (na, nb) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y),
            (None, None) => None,
        };
        match cut {
            Some(n) if n < nc => return terminating_series(a, b, c, z, n),
            _ => return Err(HypError::CPole),
        }
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    if let Some(n) = nonpositive_int(a) {
        return terminating_series(a, b, c, z, n);
    }
    if let Some(n) = nonpositive_int(b) {
        return terminating_series(b, a, c, z, n);
    }
    // Euler transformation turns c-a or c-b at a nonpositive integer into a
    // terminating series; needs the (1-z)^{c-a-b} prefactor, so z < 1.
    let ca = nonpositive_int(c - a);
    let cb = nonpositive_int(c - b);
    if ca.is_some() || cb.is_some() {
        if z >= 1.0 {
            return Err(HypError::BranchArg);
        }
        let n = match (ca, cb) {
            (Some(x), Some(y)) => x.min(y),
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (None, None) => unreachable!(),
        };
        let inner = if ca.map(|x| x == n).unwrap_or(false) {
            terminating_series(c - a, c - b, c, z, n)?
        } else {
            terminating_series(c - b, c - a, c, z, n)?
        };
        return Ok(fp::powf(1.0 - z, c - a - b) * inner);
    }
    if z >= 1.0 {
        return Err(HypError::BranchArg);
    }
    if z < 0.0 {
        // Pfaff: 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))
        let w = z / (z - 1.0);
        let inner = hyp2f1(a, c - b, c, w)?;
        return Ok(fp::powf(1.0 - z, -a) * inner);
    }
    if z <= 0.5 {
        return gauss_series(a, b, c, z);
    }
    connection_1mz(a, b, c, z)
}

fn terminating_series(a: f64, b: f64, c: f64, z: f64, n: u32) -> Result<f64, HypError> {
    // a = -n; sum_{s=0}^{n} (a)_s (b)_s / ((c)_s s!) z^s exactly
    let mut sum = 1.0;
    let mut term = 1.0;
    for s in 0..n {
        let sf = s as f64;
        let cs = c + sf;
        if cs.abs() < 1e-14 {
            return Err(HypError::CPole);
        }
        term *= (a + sf) * (b + sf) / (cs * (sf + 1.0)) * z;
        sum += term;
    }
    Ok(sum)
}

fn gauss_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, HypError> {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut small_twice = false;
    for s in 0..500 {
        let sf = s as f64;
        term *= (a + sf) * (b + sf) / ((c + sf) * (sf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            if small_twice {
                return Ok(sum);
            }
            small_twice = true;
        } else {
            small_twice = false;
        }
    }
    Err(HypError::NoConvergence)
}

/// Connection formula at z -> 1-z for 1/2 < z < 1 (DLMF 15.8.4).
fn connection_1mz(a: f64, b: f64, c: f64, z: f64) -> Result<f64, HypError> {
    let s = c - a - b;
    if (s - fp::round(s)).abs() < 1e-10 {
        return Err(HypError::LogCase);
    }
    let w = 1.0 - z;
    let coef1 = gamma_ratio(&[c, s], &[c - a, c - b]);
    let coef2 = gamma_ratio(&[c, -s], &[a, b]);
    let f1 = gauss_series(a, b, 1.0 - s, w)?;
    let f2 = gauss_series(c - a, c - b, s + 1.0, w)?;
    Ok(coef1 * f1 + fp::powf(w, s) * coef2 * f2)
}

/// Product of Gammas over product of Gammas with pole-aware signs;
/// a pole in the denominator sends the ratio to zero.
fn gamma_ratio(num: &[f64], den: &[f64]) -> f64 {
    let mut lg = 0.0;
    let mut sign = 1.0;
    for &x in num {
        let (l, s) = ln_gamma(x);
        if s == 0.0 {
            return f64::INFINITY;
        }
        lg += l;
        sign *= s;
    }
    for &x in den {
        let (l, s) = ln_gamma(x);
        if s == 0.0 {
            return 0.0;
        }
        lg -= l;
        sign *= s;
    }
    sign * fp::exp(lg)
}

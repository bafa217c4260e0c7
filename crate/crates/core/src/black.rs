//! Undiscounted Black formula on forwards, its inverse, and forward deltas.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{norm_cdf, norm_pdf, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

impl std::str::FromStr for OptionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c" | "call" => Ok(OptionKind::Call),
            "p" | "put" => Ok(OptionKind::Put),
            other => Err(invalid(format!("unknown option kind '{other}'"))),
        }
    }
}

fn d1<T: Real>(forward: T, strike: T, total_vol: T) -> T {
    (forward / strike).ln() / total_vol + total_vol / T::lit(2.0)
}

fn check<T: Real>(forward: T, strike: T, expiry: T) -> Result<()> {
    if !(forward > T::zero() && strike > T::zero() && expiry > T::zero()) {
        return Err(invalid(format!("forward {forward}, strike {strike}, expiry {expiry} must be positive")));
    }
    Ok(())
}

fn intrinsic<T: Real>(forward: T, strike: T, kind: OptionKind) -> T {
    match kind {
        OptionKind::Call => (forward - strike).max(T::zero()),
        OptionKind::Put => (strike - forward).max(T::zero()),
    }
}

fn price_total<T: Real>(forward: T, strike: T, w: T, kind: OptionKind) -> T {
    if w <= T::zero() {
        return intrinsic(forward, strike, kind);
    }
    let d = d1(forward, strike, w);
    match kind {
        OptionKind::Call => forward * norm_cdf(d) - strike * norm_cdf(d - w),
        OptionKind::Put => strike * norm_cdf(w - d) - forward * norm_cdf(-d),
    }
}

/// Undiscounted Black price.
pub fn bs_price<T: Real>(forward: T, strike: T, expiry: T, vol: T, kind: OptionKind) -> Result<T> {
    check(forward, strike, expiry)?;
    if !(vol >= T::zero()) {
        return Err(invalid(format!("vol {vol} must be non-negative")));
    }
    Ok(price_total(forward, strike, vol * expiry.sqrt(), kind))
}

/// `∂price/∂σ` (undiscounted).
pub fn bs_vega<T: Real>(forward: T, strike: T, expiry: T, vol: T) -> T {
    let rt = expiry.sqrt();
    let w = vol * rt;
    if w <= T::zero() {
        return T::zero();
    }
    forward * norm_pdf(d1(forward, strike, w)) * rt
}

/// Forward delta: `N(d1)` for calls, `N(d1) − 1` for puts.
pub fn bs_delta<T: Real>(forward: T, strike: T, expiry: T, vol: T, kind: OptionKind) -> Result<T> {
    check(forward, strike, expiry)?;
    let w = vol * expiry.sqrt();
    let n = if w > T::zero() {
        norm_cdf(d1(forward, strike, w))
    } else if forward > strike {
        T::one()
    } else {
        T::zero()
    };
    Ok(match kind {
        OptionKind::Call => n,
        OptionKind::Put => n - T::one(),
    })
}

/// Implied volatility by safeguarded Newton on total volatility with bisection fallback.
pub fn implied_vol<T: Real>(price: T, forward: T, strike: T, expiry: T, kind: OptionKind) -> Result<T> {
    check(forward, strike, expiry)?;
    let lower = intrinsic(forward, strike, kind);
    let upper = match kind {
        OptionKind::Call => forward,
        OptionKind::Put => strike,
    };
    if !(price > lower && price < upper) {
        return Err(Error::PriceOutOfBounds { price: price.f64(), lower: lower.f64(), upper: upper.f64() });
    }
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(64.0)) * forward.max(strike);
    let (mut lo, mut hi) = (T::zero(), T::one());
    while price_total(forward, strike, hi, kind) < price {
        hi = hi * T::lit(2.0);
        if hi > T::lit(64.0) {
            break;
        }
    }
    // start from the ATM approximation, clipped into the bracket
    let mut w = (T::lit(2.0) * T::PI()).sqrt() * price / forward.max(strike);
    if !(w > lo && w < hi) {
        w = (lo + hi) / T::lit(2.0);
    }
    for _ in 0..200 {
        let p = price_total(forward, strike, w, kind);
        let diff = p - price;
        if diff.abs() < tol {
            return Ok(w / expiry.sqrt());
        }
        if diff > T::zero() {
            hi = w;
        } else {
            lo = w;
        }
        let vega = forward * norm_pdf(d1(forward, strike, w));
        let step = if vega > T::zero() { w - diff / vega } else { T::nan() };
        w = if step > lo && step < hi { step } else { (lo + hi) / T::lit(2.0) };
        if hi - lo < T::epsilon() * hi {
            return Ok(w / expiry.sqrt());
        }
    }
    Ok(w / expiry.sqrt())
}

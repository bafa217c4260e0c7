//! Model-free log-return moments from strips of out-of-the-money options.
//!
//! ```text
//! M1 = −e^{rT} ∫ OTM(K)/K² dK
//! M2 = 2 e^{rT} ∫ (1 − log(K/S₀)) OTM(K)/K² dK
//! M3 = e^{rT} ∫ (K/S₀ − 1) OTM(K)/K² dK
//! ```
//!
//! integrated with the trapezoidal rule on the quoted strikes, truncated at the
//! lowest and highest strike.

use serde::{Deserialize, Serialize};

use crate::bg_expansion::{ImpliedMomentTriple, LogMoments};
use crate::black::{bs_delta, implied_vol, OptionKind};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Minimum number of OTM strikes required on each side of the forward.
pub const MIN_STRIKES_PER_SIDE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote<T> {
    pub strike: T,
    pub kind: OptionKind,
    /// Mid price (spot premium, i.e. discounted).
    pub mid: T,
    pub implied_vol: Option<T>,
    pub delta: Option<T>,
}

impl<T: Real> OptionQuote<T> {
    pub fn new(strike: T, kind: OptionKind, mid: T) -> Self {
        Self { strike, kind, mid, implied_vol: None, delta: None }
    }
}

/// Quotes of one expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionChain<T> {
    pub expiry_years: T,
    pub forward: T,
    /// Continuously compounded rate.
    pub rate: T,
    quotes: Vec<OptionQuote<T>>,
}

impl<T: Real> OptionChain<T> {
    /// Sorts quotes by strike and validates them.
    pub fn new(expiry_years: T, forward: T, rate: T, mut quotes: Vec<OptionQuote<T>>) -> Result<Self> {
        if !(expiry_years > T::zero() && expiry_years.is_finite()) {
            return Err(invalid(format!("expiry {expiry_years} must be positive")));
        }
        if !(forward > T::zero() && forward.is_finite()) {
            return Err(invalid(format!("forward {forward} must be positive")));
        }
        if !rate.is_finite() {
            return Err(invalid("rate must be finite"));
        }
        for q in &quotes {
            if !(q.strike > T::zero() && q.strike.is_finite()) {
                return Err(invalid(format!("strike {} must be positive", q.strike)));
            }
            if !(q.mid >= T::zero() && q.mid.is_finite()) {
                return Err(invalid(format!("mid price {} at strike {} must be non-negative", q.mid, q.strike)));
            }
        }
        // puts first at equal strikes so the merged strip takes the put at the forward
        quotes.sort_by(|a, b| {
            a.strike.partial_cmp(&b.strike).unwrap().then_with(|| (a.kind == OptionKind::Call).cmp(&(b.kind == OptionKind::Call)))
        });
        for kind in [OptionKind::Call, OptionKind::Put] {
            let ks: Vec<T> = quotes.iter().filter(|q| q.kind == kind).map(|q| q.strike).collect();
            if ks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!("duplicate {kind:?} strikes")));
            }
        }
        Ok(Self { expiry_years, forward, rate, quotes })
    }

    pub fn quotes(&self) -> &[OptionQuote<T>] {
        &self.quotes
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    fn is_otm(&self, q: &OptionQuote<T>) -> bool {
        match q.kind {
            OptionKind::Put => q.strike <= self.forward,
            OptionKind::Call => q.strike >= self.forward,
        }
    }

    /// Copy with every quote multiplied in strike and price (and forward) by `c`.
    pub fn rescaled(&self, c: T) -> Self {
        let quotes = self.quotes.iter().map(|q| OptionQuote { strike: q.strike * c, mid: q.mid * c, ..*q }).collect();
        Self { expiry_years: self.expiry_years, forward: self.forward * c, rate: self.rate, quotes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureWeights<T> {
    pub weights: Vec<T>,
}

/// Trapezoid weights on strictly increasing abscissae.
pub fn trapezoid_weights<T: Real>(xs: &[T]) -> Result<QuadratureWeights<T>> {
    if xs.len() < 2 {
        return Err(invalid("trapezoid rule needs at least two abscissae"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("abscissae must be strictly increasing"));
    }
    let n = xs.len();
    let half = T::lit(0.5);
    let weights = (0..n)
        .map(|i| match i {
            0 => half * (xs[1] - xs[0]),
            i if i == n - 1 => half * (xs[n - 1] - xs[n - 2]),
            i => half * (xs[i + 1] - xs[i - 1]),
        })
        .collect();
    Ok(QuadratureWeights { weights })
}

/// Keeps OTM quotes (puts with `K ≤ S₀`, calls with `K ≥ S₀`) whose `|Δ|` lies in
/// `[delta_lo, delta_hi]`. Deltas missing from a quote are computed from its implied vol.
pub fn select_otm<T: Real>(chain: &OptionChain<T>, delta_lo: T, delta_hi: T) -> Result<OptionChain<T>> {
    if !(delta_lo >= T::zero() && delta_hi <= T::one() && delta_lo <= delta_hi) {
        return Err(invalid(format!("delta range [{delta_lo}, {delta_hi}] must lie within [0, 1]")));
    }
    let mut kept = Vec::new();
    for q in chain.quotes.iter().filter(|q| chain.is_otm(q)) {
        let delta = match (q.delta, q.implied_vol) {
            (Some(d), _) => d,
            (None, Some(v)) => bs_delta(chain.forward, q.strike, chain.expiry_years, v, q.kind)?,
            (None, None) => {
                return Err(invalid(format!("quote at strike {} has neither delta nor implied vol", q.strike)))
            }
        };
        if delta.abs() >= delta_lo && delta.abs() <= delta_hi {
            kept.push(OptionQuote { delta: Some(delta), ..*q });
        }
    }
    OptionChain::new(chain.expiry_years, chain.forward, chain.rate, kept)
}

/// Fills implied vol and forward delta of OTM quotes that lack them, from the mid
/// price grown at the chain's rate. Quotes whose price admits no implied vol are
/// dropped and reported by strike.
pub fn complete_quotes<T: Real>(chain: &OptionChain<T>) -> Result<(OptionChain<T>, Vec<T>)> {
    let growth = (chain.rate * chain.expiry_years).exp();
    let mut kept = Vec::with_capacity(chain.quotes.len());
    let mut dropped = Vec::new();
    for q in &chain.quotes {
        if !chain.is_otm(q) || q.delta.is_some() {
            kept.push(*q);
            continue;
        }
        let vol = match q.implied_vol {
            Some(v) => Ok(v),
            None => implied_vol(q.mid * growth, chain.forward, q.strike, chain.expiry_years, q.kind),
        };
        match vol {
            Ok(v) => {
                let delta = bs_delta(chain.forward, q.strike, chain.expiry_years, v, q.kind)?;
                kept.push(OptionQuote { implied_vol: Some(v), delta: Some(delta), ..*q });
            }
            Err(_) => dropped.push(q.strike),
        }
    }
    Ok((OptionChain::new(chain.expiry_years, chain.forward, chain.rate, kept)?, dropped))
}

/// Replicated moments with strip diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication<T> {
    pub moments: LogMoments<T>,
    pub puts: usize,
    pub calls: usize,
    pub strike_min: T,
    pub strike_max: T,
    /// Share of the `M1` strip carried by the two outermost strikes; large values
    /// signal sensitivity to the truncation range.
    pub tail_share: T,
}

/// The merged OTM strip: puts below the forward, calls above; at a strike quoted on
/// both sides (only possible at the forward) the put is used.
fn otm_strip<T: Real>(chain: &OptionChain<T>) -> (Vec<(T, T)>, usize, usize) {
    let mut strip: Vec<(T, T)> = Vec::new();
    let (mut puts, mut calls) = (0, 0);
    for q in chain.quotes.iter().filter(|q| chain.is_otm(q)) {
        if let Some(last) = strip.last() {
            if last.0 == q.strike {
                continue;
            }
        }
        match q.kind {
            OptionKind::Put => puts += 1,
            OptionKind::Call => calls += 1,
        }
        strip.push((q.strike, q.mid));
    }
    (strip, puts, calls)
}

pub fn replicate_moments<T: Real>(chain: &OptionChain<T>) -> Result<LogMoments<T>> {
    Ok(replicate_with_diagnostics(chain)?.moments)
}

/// Trapezoid integration over the merged OTM strip. The segment between the last put
/// and the first call is included, so the strip covers `[K_min, K_max]` without a gap.
pub fn replicate_with_diagnostics<T: Real>(chain: &OptionChain<T>) -> Result<Replication<T>> {
    let (strip, puts, calls) = otm_strip(chain);
    let need = MIN_STRIKES_PER_SIDE;
    if puts < need || calls < need {
        return Err(Error::TooFewStrikes { puts, calls, need });
    }
    let ks: Vec<T> = strip.iter().map(|s| s.0).collect();
    let w = trapezoid_weights(&ks)?.weights;
    let s0 = chain.forward;
    let growth = (chain.rate * chain.expiry_years).exp();
    let (mut i1, mut i2, mut i3) = (T::zero(), T::zero(), T::zero());
    let mut contrib = Vec::with_capacity(ks.len());
    for ((&(k, p), &wk), _) in strip.iter().zip(&w).zip(0..) {
        let base = wk * p / (k * k);
        contrib.push(base);
        i1 = i1 + base;
        i2 = i2 + base * (T::one() - (k / s0).ln());
        i3 = i3 + base * (k / s0 - T::one());
    }
    let tail = contrib[0] + contrib[contrib.len() - 1];
    let tail_share = if i1 > T::zero() { tail / i1 } else { T::zero() };
    Ok(Replication {
        moments: LogMoments { m1: -growth * i1, m2: T::lit(2.0) * growth * i2, m3: growth * i3 },
        puts,
        calls,
        strike_min: ks[0],
        strike_max: ks[ks.len() - 1],
        tail_share,
    })
}

/// Normalized moments from replicated raw moments.
pub fn market_moment_triple<T: Real>(m: &LogMoments<T>, expiry: T) -> Result<ImpliedMomentTriple<T>> {
    if !(m.m1 < T::zero()) {
        return Err(Error::Arbitrage(format!("M1 = {} must be negative", m.m1)));
    }
    if !(expiry > T::zero()) {
        return Err(invalid(format!("expiry {expiry} must be positive")));
    }
    let two = T::lit(2.0);
    let var = -two * m.m1;
    let rt = expiry.sqrt();
    Ok(ImpliedMomentTriple {
        vswap_vol: (var / expiry).sqrt(),
        skew_m: two * m.m3 / (rt * var.powf(T::lit(1.5))),
        kurt_m: (two * m.m3 + m.m2 - m.m1 * m.m1 + two * m.m1) / (rt * var.powf(T::lit(2.5))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::black::{bs_price, implied_vol};
    use crate::quadrature::{composite_nodes, GaussLegendre};

    /// Black-Scholes chain with `n` strikes spanning ±`width` standard deviations.
    pub(crate) fn bs_chain(sigma: f64, t: f64, n: usize, width: f64) -> OptionChain<f64> {
        let f = 100.0;
        let sd = sigma * t.sqrt();
        let quotes = (0..n)
            .flat_map(|i| {
                let z = -width + 2.0 * width * i as f64 / (n - 1) as f64;
                let k = f * (z * sd).exp();
                [OptionKind::Call, OptionKind::Put].map(|kind| OptionQuote {
                    strike: k,
                    kind,
                    mid: bs_price(f, k, t, sigma, kind).unwrap(),
                    implied_vol: Some(sigma),
                    delta: None,
                })
            })
            .collect();
        OptionChain::new(t, f, 0.0, quotes).unwrap()
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_weights(&[0.0, 1.0, 2.0]).unwrap().weights, vec![0.5, 1.0, 0.5]);
        assert_eq!(trapezoid_weights(&[0.0, 1.0]).unwrap().weights, vec![0.5, 0.5]);
        assert_eq!(trapezoid_weights(&[0.0, 1.0, 4.0]).unwrap().weights, vec![0.5, 2.0, 1.5]);
        assert!(trapezoid_weights(&[0.0, 1.0, 1.0]).is_err());
        let xs = [0.3, 0.7, 1.9, 2.0, 5.5];
        let total: f64 = trapezoid_weights(&xs).unwrap().weights.iter().sum();
        assert!((total - 5.2).abs() < 1e-12);
    }

    #[test]
    fn lognormal_variance_swap() {
        let chain = bs_chain(0.2, 0.25, 200, 6.0);
        let m = replicate_moments(&chain).unwrap();
        let triple = market_moment_triple(&m, 0.25).unwrap();
        assert!((triple.vswap_vol - 0.2).abs() < 5e-4, "{}", triple.vswap_vol);
    }

    #[test]
    fn lognormal_third_moment() {
        let (sigma, t) = (0.2, 0.25);
        let chain = bs_chain(sigma, t, 200, 6.0);
        let m = replicate_moments(&chain).unwrap();
        // E[(e^x + 1) x] with x ~ N(−v/2, v), by quadrature over ±10 sd
        let v = sigma * sigma * t;
        let rule = GaussLegendre::new(32);
        let mut direct = 0.0;
        for (z, w) in composite_nodes(&rule, -10.0, 10.0, 0.5) {
            let x = -v / 2.0 + v.sqrt() * z;
            direct += w * ((x.exp() + 1.0) * x) * (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        }
        assert!(direct.abs() < 1e-12);
        // the exact value is zero, so the tolerance is relative to the M1 scale
        assert!((m.m3 - direct).abs() < 1e-3 * m.m1.abs(), "{} vs {direct}", m.m3);
    }

    #[test]
    fn skew_vanishes_under_refinement() {
        let coarse = market_moment_triple(&replicate_moments(&bs_chain(0.2, 0.25, 50, 6.0)).unwrap(), 0.25).unwrap();
        let fine = market_moment_triple(&replicate_moments(&bs_chain(0.2, 0.25, 400, 6.0)).unwrap(), 0.25).unwrap();
        assert!(fine.skew_m.abs() < coarse.skew_m.abs());
        assert!(fine.skew_m.abs() < 1e-3);
    }

    #[test]
    fn trapezoid_error_is_second_order() {
        let err = |n| {
            let m = replicate_moments(&bs_chain(0.2, 0.25, n, 6.0)).unwrap();
            (m.m1 + 0.5 * 0.04 * 0.25).abs()
        };
        let (e1, e2) = (err(101), err(201));
        let order = (e1 / e2).log2();
        assert!(order > 1.7 && order < 2.3, "order {order}");
    }

    #[test]
    fn zero_prices_give_zero_moments() {
        let mut chain = bs_chain(0.2, 0.25, 20, 3.0);
        chain.quotes.iter_mut().for_each(|q| q.mid = 0.0);
        let m = replicate_moments(&chain).unwrap();
        assert_eq!((m.m1, m.m2, m.m3), (0.0, 0.0, 0.0));
        assert!(matches!(market_moment_triple(&m, 0.25), Err(Error::Arbitrage(_))));
    }

    #[test]
    fn moneyness_invariance() {
        let chain = bs_chain(0.3, 0.5, 60, 5.0);
        let a = market_moment_triple(&replicate_moments(&chain).unwrap(), 0.5).unwrap();
        let b = market_moment_triple(&replicate_moments(&chain.rescaled(10.0)).unwrap(), 0.5).unwrap();
        assert!((a.vswap_vol - b.vswap_vol).abs() < 1e-13);
        assert!((a.skew_m - b.skew_m).abs() < 1e-10);
        assert!((a.kurt_m - b.kurt_m).abs() < 1e-10);
    }

    #[test]
    fn too_few_strikes() {
        let chain = bs_chain(0.2, 0.25, 4, 2.0);
        assert!(matches!(replicate_moments(&chain), Err(Error::TooFewStrikes { puts: 2, calls: 2, .. })));
    }

    #[test]
    fn otm_selection() {
        let chain = bs_chain(0.2, 0.25, 41, 4.0);
        let all = select_otm(&chain, 0.0, 1.0).unwrap();
        assert!(all.quotes().iter().all(|q| chain.is_otm(q)));
        // the middle strike sits at the forward and is OTM on both sides
        assert_eq!(all.len(), 42);
        let narrow = select_otm(&chain, 0.01, 0.5).unwrap();
        assert!(narrow.len() < all.len());
        for q in narrow.quotes() {
            let d = q.delta.unwrap().abs();
            assert!((0.01..=0.5).contains(&d));
            assert!(!(q.kind == OptionKind::Call && q.strike < chain.forward));
        }
        let bare = OptionChain::new(0.25, 100.0, 0.0, vec![OptionQuote::new(90.0, OptionKind::Put, 1.0)]).unwrap();
        assert!(select_otm(&bare, 0.0, 1.0).is_err());
    }

    #[test]
    fn discounting_is_undone() {
        let mut chain = bs_chain(0.2, 0.25, 200, 6.0);
        let base = replicate_moments(&chain).unwrap();
        chain.rate = 0.05;
        let df = (-0.05f64 * 0.25).exp();
        chain.quotes.iter_mut().for_each(|q| q.mid *= df);
        let disc = replicate_moments(&chain).unwrap();
        assert!((base.m1 - disc.m1).abs() < 1e-14);
    }

    #[test]
    fn implied_vols_round_trip_on_chain() {
        let chain = bs_chain(0.25, 1.0, 21, 3.0);
        for q in chain.quotes().iter().filter(|q| chain.is_otm(q)) {
            let v = implied_vol(q.mid, chain.forward, q.strike, 1.0, q.kind).unwrap();
            assert!((v - 0.25).abs() < 1e-8);
        }
    }

    #[test]
    fn completed_quotes_select_by_delta() {
        let chain = bs_chain(0.2, 0.25, 60, 6.0);
        let bare: Vec<OptionQuote<f64>> = chain.quotes().iter().map(|q| OptionQuote::new(q.strike, q.kind, q.mid)).collect();
        let bare = OptionChain::new(0.25, chain.forward, 0.0, bare).unwrap();
        let (full, dropped) = complete_quotes(&bare).unwrap();
        for q in full.quotes().iter().filter(|q| q.delta.is_some_and(|d| d.abs() > 1e-4)) {
            assert!((q.implied_vol.unwrap() - 0.2).abs() < 1e-6, "{q:?}");
        }
        // far wings carry prices at the rounding floor and may be dropped; the body may not
        assert!(dropped.iter().all(|&k| (k / chain.forward).ln().abs() > 0.5), "{dropped:?}");
        let sel = select_otm(&full, 0.01, 0.5).unwrap();
        assert!(sel.quotes().iter().all(|q| q.delta.unwrap().abs() >= 0.01 && q.delta.unwrap().abs() <= 0.5));
        assert!(sel.len() < full.len());
    }
}

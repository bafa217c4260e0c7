//! Pooled maximum likelihood for the filter weights and lengths on a panel of
//! normalized return series.
//!
//! Estimation works in daily units of the normalized returns `r̃ = r / Std[r]`.
//! The first filter is the constant `X¹ ≡ 1`; its weight is `1 − Σ_{i≥2} α_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filters::{filter_input, FilterKind, FilterSpec, GarchSpec, ReturnSeries};
use crate::noise::NoiseModel;
use crate::optim::nelder_mead;

/// Leading observations per series that only warm up the filters.
pub const WARM_UP: usize = 60;

/// Objective value returned when a candidate produces a non-positive variance.
pub const PENALTY: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    names: Vec<String>,
    series: Vec<Vec<f64>>,
}

impl ReturnPanel {
    /// Normalizes every series to unit sample standard deviation.
    pub fn new(series: Vec<(String, ReturnSeries<f64>)>) -> Result<Self> {
        if series.is_empty() {
            return Err(invalid("panel needs at least one series"));
        }
        let mut names = Vec::with_capacity(series.len());
        let mut out = Vec::with_capacity(series.len());
        for (name, s) in series {
            let r = s.returns();
            if r.len() <= WARM_UP + 1 {
                return Err(Error::Data(format!("series '{name}' has {} returns, need more than {}", r.len(), WARM_UP + 1)));
            }
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(Error::Data(format!("series '{name}' has zero or undefined variance")));
            }
            out.push(r.iter().map(|x| x / sd).collect());
            names.push(name);
        }
        Ok(Self { names, series: out })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn series(&self) -> &[Vec<f64>] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// Free parameters: the non-constant filters. The constant's weight is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleParams {
    pub filters: Vec<FilterSpec<f64>>,
}

impl MleParams {
    pub fn new(filters: Vec<FilterSpec<f64>>) -> Result<Self> {
        if filters.is_empty() {
            return Err(invalid("need at least one free filter"));
        }
        for (i, f) in filters.iter().enumerate() {
            if !(f.weight >= 0.0 && f.weight <= 1.0) {
                return Err(invalid(format!("free filter {i}: weight {} outside [0, 1]", f.weight)));
            }
            if !(f.length_days > 1.0 && f.length_days.is_finite()) {
                return Err(invalid(format!("free filter {i}: length {} must exceed 1", f.length_days)));
            }
        }
        let p = Self { filters };
        if p.constant_weight() < -1e-12 {
            return Err(invalid("free weights sum above 1"));
        }
        Ok(p)
    }

    /// One symmetric (36 days) and one asymmetric (6 days) filter.
    pub fn two_plus_one() -> Self {
        Self { filters: vec![FilterSpec::symmetric(36.0, 0.4), FilterSpec::asymmetric(6.0, 0.5)] }
    }

    pub fn constant_weight(&self) -> f64 {
        1.0 - self.filters.iter().map(|f| f.weight).sum::<f64>()
    }

    /// Pricing spec with the constant replaced by a long symmetric EMA.
    pub fn to_spec(&self, long_length_days: f64) -> Result<GarchSpec<f64>> {
        let mut filters = vec![FilterSpec::symmetric(long_length_days, self.constant_weight().max(0.0))];
        filters.extend(self.filters.iter().copied());
        GarchSpec::daily(filters)
    }

    fn encode(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.filters.iter().map(|f| f.weight).collect();
        x.extend(self.filters.iter().map(|f| f.length_days.ln()));
        x
    }

    fn decode(&self, x: &[f64]) -> Self {
        let n = self.filters.len();
        Self {
            filters: (0..n).map(|i| FilterSpec::new(x[n + i].exp(), x[i], self.filters[i].kind)).collect(),
        }
    }
}

/// Per-series log-likelihood contribution averaged over its observations (negated).
fn series_nll(r: &[f64], p: &MleParams, noise: &NoiseModel, const_w: f64) -> f64 {
    let n = p.filters.len();
    let mut x = vec![1.0; n];
    let mut total = 0.0;
    let mut count = 0usize;
    for (t, &rt) in r.iter().enumerate() {
        let nu = const_w + p.filters.iter().zip(&x).map(|(f, v)| f.weight * v).sum::<f64>();
        if !(nu > 0.0) {
            return PENALTY;
        }
        if t >= WARM_UP {
            total += 0.5 * nu.ln() - noise.log_density(rt / nu.sqrt());
            count += 1;
        }
        for (f, v) in p.filters.iter().zip(x.iter_mut()) {
            *v += (filter_input(f.kind, rt) - *v) / f.length_days;
        }
    }
    total / count as f64
}

/// `Σ_series (1/n) Σ_t [½ log ν_{t−1} − log ρ(r̃_t/√ν_{t−1})]`, skipping the warm-up.
pub fn pooled_nll(params: &MleParams, panel: &ReturnPanel, noise: &NoiseModel) -> f64 {
    let c = params.constant_weight();
    if c < -1e-12 || params.filters.iter().any(|f| !(f.weight >= 0.0) || !(f.length_days >= 1.0)) {
        return PENALTY;
    }
    let parts: Vec<f64> = panel.series.par_iter().map(|r| series_nll(r, params, noise, c.max(0.0))).collect();
    parts.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleBounds {
    pub weight: (f64, f64),
    pub length_days: (f64, f64),
}

impl Default for MleBounds {
    fn default() -> Self {
        Self { weight: (0.0, 1.0), length_days: (1.5, 1000.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub restarts: usize,
    pub seed: u64,
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { restarts: 3, seed: 1, ftol: 1e-6, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub params: MleParams,
    pub nll: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Simplex search from `init`, then from random starts, then a polish from the best point.
pub fn fit_garch(panel: &ReturnPanel, noise: &NoiseModel, init: &MleParams, bounds: &MleBounds, opts: &MleOptions) -> Result<MleFit> {
    noise.validate()?;
    let n = init.filters.len();
    let (wl, wu) = bounds.weight;
    let (ll, lu) = bounds.length_days;
    if !(0.0 <= wl && wl < wu && wu <= 1.0 && 1.0 < ll && ll < lu) {
        return Err(invalid("invalid estimation bounds"));
    }
    if init.filters.iter().any(|f| f.weight < wl || f.weight > wu || f.length_days < ll || f.length_days > lu) {
        return Err(invalid("initial parameters outside the bounds"));
    }
    let mut lower = vec![wl; n];
    lower.extend(std::iter::repeat_n(ll.ln(), n));
    let mut upper = vec![wu; n];
    upper.extend(std::iter::repeat_n(lu.ln(), n));
    let objective = |x: &[f64]| {
        let p = init.decode(x);
        if p.constant_weight() < 0.0 {
            // a smooth wall keeps the simplex moving back inside
            return PENALTY * (1.0 - p.constant_weight());
        }
        pooled_nll(&p, panel, noise)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![init.encode()];
    for _ in 0..opts.restarts {
        // random weights on the simplex, random log-lengths
        let raw: Vec<f64> = (0..=n).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
        let s: f64 = raw.iter().sum();
        let mut x: Vec<f64> = raw[..n].iter().map(|w| (w / s).clamp(wl, wu)).collect();
        x.extend((0..n).map(|_| rng.random_range(ll.ln()..lu.ln())));
        starts.push(x);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut all_converged = true;
    for s in starts {
        let r = nelder_mead(objective, &s, &lower, &upper, opts.ftol, opts.max_iter);
        iterations += r.iterations;
        all_converged &= r.converged;
        if best.as_ref().is_none_or(|b| r.value < b.1) {
            best = Some((r.x, r.value));
        }
    }
    let (bx, _) = best.expect("at least one start");
    let polish = nelder_mead(objective, &bx, &lower, &upper, opts.ftol, opts.max_iter);
    iterations += polish.iterations;
    let mut warnings = Vec::new();
    if !polish.converged {
        warnings.push(format!("simplex did not converge within {} iterations", opts.max_iter));
    }
    if !all_converged {
        warnings.push("some restarts hit the iteration limit".to_string());
    }
    let params = init.decode(&polish.x);
    if params.filters.iter().any(|f| (f.length_days - lu).abs() < 1e-6 * lu || (f.length_days - ll).abs() < 1e-6) {
        warnings.push("a filter length sits on its bound".to_string());
    }
    Ok(MleFit { nll: polish.value, params, converged: polish.converged, iterations, warnings })
}

/// Simulates a panel from the estimation model in normalized daily units after `burn_in` days.
pub fn simulate_panel(params: &MleParams, noise: &NoiseModel, n_series: usize, n_days: usize, burn_in: usize, seed: u64) -> Result<ReturnPanel> {
    noise.validate()?;
    let c = params.constant_weight();
    if c < 0.0 {
        return Err(invalid("free weights sum above 1"));
    }
    let series: Vec<(String, ReturnSeries<f64>)> = (0..n_series)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut x = vec![1.0; params.filters.len()];
            let mut r = Vec::with_capacity(n_days);
            for t in 0..burn_in + n_days {
                let nu = c + params.filters.iter().zip(&x).map(|(f, v)| f.weight * v).sum::<f64>();
                let rt = nu.max(0.0).sqrt() * noise.sample(&mut rng);
                for (f, v) in params.filters.iter().zip(x.iter_mut()) {
                    *v += (filter_input(f.kind, rt) - *v) / f.length_days;
                }
                if t >= burn_in {
                    r.push(rt);
                }
            }
            ReturnSeries::from_returns(r).map(|s| (format!("sim{k:03}"), s))
        })
        .collect::<Result<_>>()?;
    ReturnPanel::new(series)
}

/// Kinds of the free filters, for callers that build `MleParams` from config.
pub fn kinds(params: &MleParams) -> Vec<FilterKind> {
    params.filters.iter().map(|f| f.kind).collect()
}

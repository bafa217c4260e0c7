//! Monte Carlo for the pricing-measure model and a real-world drift check of the
//! variance-swap premium.
//!
//! Per step of length `h`:
//!
//! ```text
//! ν      = max(Σ α_i X^i, ε_ν)
//! log S += −½(1+λ₂)ν h + √((1+λ₂)ν h) z_W
//! X^i   += θ_i(δ_i ν − X^i) h + ξ_i ν √h (ℓ_i · z)
//! ```
//!
//! with `z = (z_W, z_Z, z_Z⁺, z_Z⁻)` independent standard normals and `ℓ_i` the
//! factor loadings. Paths are generated in blocks; block `b` draws from a ChaCha
//! stream keyed by `(seed, b)`, so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black::{bs_vega, implied_vol, OptionKind};
use crate::error::{invalid, Error, Result};
use crate::filters::{FilterState, GarchSpec, VARIANCE_FLOOR};
use crate::linalg::Matrix;
use crate::measure_map::{pca_loadings, pricing_params, Garch11, NoiseMoments, PricingParams, RiskPremia, N_FACTORS};
use crate::noise::{open_unit, NoiseModel};
use crate::replication::{OptionChain, OptionQuote};
use crate::scalar::{norm_inv_cdf, Real};

/// Paths per work unit.
pub const BLOCK_PATHS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    /// Sub-steps per day of the model's native step.
    #[serde(default = "one")]
    pub steps_per_day: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, steps_per_day: 1, seed: 7, antithetic: true }
    }
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(invalid("n_paths must be at least 2"));
        }
        if self.steps_per_day < 1 {
            return Err(invalid("steps_per_day must be at least 1"));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(invalid("antithetic sampling needs an even number of paths"));
        }
        Ok(())
    }
}

/// Terminal values of a simulation, recorded at each requested expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<T> {
    pub expiries: Vec<T>,
    /// `log(S_T / F(0,T))` per expiry, per path.
    pub log_spot: Vec<Vec<T>>,
    /// `ν_T` per expiry, per path.
    pub nu: Vec<Vec<T>>,
    /// Realized variance `Σ (Δ log S)²` up to each expiry, per path.
    pub realized: Vec<Vec<T>>,
    /// Paths `2k` and `2k+1` are antithetic partners.
    pub antithetic: bool,
}

impl<T: Real> PathEnsemble<T> {
    pub fn n_paths(&self) -> usize {
        self.log_spot.first().map_or(0, Vec::len)
    }

    /// Mean and standard error of `f` over the paths at expiry `k`, pairing antithetic partners.
    pub fn mean_with_error(&self, f: impl Fn(usize) -> f64) -> (f64, f64) {
        sample_mean(self.n_paths(), self.antithetic, f)
    }
}

fn sample_mean(n: usize, antithetic: bool, f: impl Fn(usize) -> f64) -> (f64, f64) {
    let stride = if antithetic { 2 } else { 1 };
    let m = n / stride;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for j in 0..m {
        let v = if antithetic { 0.5 * (f(2 * j) + f(2 * j + 1)) } else { f(j) };
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / m as f64;
    let var = ((sum2 / m as f64 - mean * mean) * m as f64 / (m as f64 - 1.0).max(1.0)).max(0.0);
    (mean, (var / m as f64).sqrt())
}

struct StepModel<T> {
    alpha: Vec<T>,
    theta: Vec<T>,
    delta: Vec<T>,
    xi: Vec<T>,
    loadings: Matrix<T>,
    mu: T,
    h: T,
}

/// Simulates the pricing model of `spec` + `premia` from `state0`.
pub fn simulate_pricing<T: Real>(
    spec: &GarchSpec<T>,
    premia: &RiskPremia<T>,
    state0: &FilterState<T>,
    mom: &NoiseMoments<T>,
    expiries: &[T],
    cfg: &McConfig,
) -> Result<PathEnsemble<T>> {
    let params = pricing_params(spec, premia, mom)?;
    simulate_with_params(&params, state0, expiries, spec.dt_years(), cfg)
}

/// Simulation from explicit coefficients (e.g. with rescaled vol-of-vol).
pub fn simulate_with_params<T: Real>(
    params: &PricingParams<T>,
    state0: &FilterState<T>,
    expiries: &[T],
    dt_years: T,
    cfg: &McConfig,
) -> Result<PathEnsemble<T>> {
    cfg.validate()?;
    let nf = params.len();
    if state0.x.len() != nf {
        return Err(Error::DimensionMismatch { expected: nf, got: state0.x.len() });
    }
    if expiries.is_empty() || expiries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("expiries must be non-empty and strictly increasing"));
    }
    let h = dt_years / T::from_usize_lossy(cfg.steps_per_day);
    let record: Vec<usize> = expiries
        .iter()
        .map(|&t| (t / h).round().to_usize().unwrap_or(0))
        .collect();
    if record[0] == 0 {
        return Err(invalid(format!("expiry {} is shorter than one time step", expiries[0])));
    }
    if record.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("two expiries fall on the same time step"));
    }
    let model = StepModel {
        alpha: params.alpha.clone(),
        theta: params.theta.clone(),
        delta: params.delta.clone(),
        xi: params.xi.clone(),
        loadings: pca_loadings(params),
        mu: T::one() + params.lambda2,
        h,
    };
    let n_blocks = cfg.n_paths.div_ceil(BLOCK_PATHS);
    let blocks: Vec<BlockOut<T>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let n = BLOCK_PATHS.min(cfg.n_paths - b * BLOCK_PATHS);
            simulate_block(&model, &state0.x, &record, n, cfg.seed, b as u64, cfg.antithetic)
        })
        .collect();
    let ne = expiries.len();
    let mut log_spot = vec![Vec::with_capacity(cfg.n_paths); ne];
    let mut nu = vec![Vec::with_capacity(cfg.n_paths); ne];
    let mut realized = vec![Vec::with_capacity(cfg.n_paths); ne];
    for b in blocks {
        for k in 0..ne {
            log_spot[k].extend_from_slice(&b.log_spot[k]);
            nu[k].extend_from_slice(&b.nu[k]);
            realized[k].extend_from_slice(&b.realized[k]);
        }
    }
    Ok(PathEnsemble { expiries: expiries.to_vec(), log_spot, nu, realized, antithetic: cfg.antithetic })
}

struct BlockOut<T> {
    log_spot: Vec<Vec<T>>,
    nu: Vec<Vec<T>>,
    realized: Vec<Vec<T>>,
}

fn simulate_block<T: Real>(
    m: &StepModel<T>,
    x0: &[T],
    record: &[usize],
    n: usize,
    seed: u64,
    block: u64,
    antithetic: bool,
) -> BlockOut<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let nf = x0.len();
    let mut x: Vec<T> = (0..n).flat_map(|_| x0.iter().copied()).collect();
    let mut log_s = vec![T::zero(); n];
    let mut rv = vec![T::zero(); n];
    let floor = T::lit(VARIANCE_FLOOR);
    let sqrt_h = m.h.sqrt();
    let half = T::lit(0.5);
    let mut out_s = vec![Vec::with_capacity(n); record.len()];
    let mut out_nu = vec![Vec::with_capacity(n); record.len()];
    let mut out_rv = vec![Vec::new(); record.len()];
    let last = *record.last().unwrap();
    let mut next = 0;
    let mut z = [T::zero(); N_FACTORS];
    let mut load_z = vec![T::zero(); nf];
    for step in 1..=last {
        let mut p = 0;
        while p < n {
            for v in z.iter_mut() {
                *v = T::lit(norm_inv_cdf(open_unit(&mut rng)));
            }
            for (i, lz) in load_z.iter_mut().enumerate() {
                *lz = (0..N_FACTORS).map(|f| m.loadings[(i, f)] * z[f]).sum();
            }
            let copies = if antithetic && p + 1 < n { 2 } else { 1 };
            for c in 0..copies {
                let sign = if c == 0 { T::one() } else { -T::one() };
                let xp = &mut x[(p + c) * nf..(p + c + 1) * nf];
                let nu = m.alpha.iter().zip(xp.iter()).map(|(&a, &v)| a * v).sum::<T>().max(floor);
                let var = m.mu * nu;
                let dlog = (var * m.h).sqrt() * sign * z[0] - half * var * m.h;
                log_s[p + c] = log_s[p + c] + dlog;
                rv[p + c] = rv[p + c] + dlog * dlog;
                for i in 0..nf {
                    xp[i] = xp[i] + m.theta[i] * (m.delta[i] * nu - xp[i]) * m.h + m.xi[i] * nu * sqrt_h * sign * load_z[i];
                }
            }
            p += copies;
        }
        if step == record[next] {
            out_s[next] = log_s.clone();
            out_rv[next] = rv.clone();
            out_nu[next] = (0..n)
                .map(|p| m.alpha.iter().zip(&x[p * nf..(p + 1) * nf]).map(|(&a, &v)| a * v).sum::<T>().max(floor))
                .collect();
            next += 1;
        }
    }
    BlockOut { log_spot: out_s, nu: out_nu, realized: out_rv }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub stderr: f64,
}

/// `e^{−rT} E[g(S_T)]` with `S_T = forward · e^{x}` at expiry `k`.
pub fn price_european<T: Real>(
    ensemble: &PathEnsemble<T>,
    k: usize,
    forward: f64,
    rate: f64,
    payoff: impl Fn(f64) -> f64,
) -> Result<PriceEstimate> {
    if k >= ensemble.expiries.len() {
        return Err(invalid(format!("expiry index {k} out of range")));
    }
    let df = (-rate * ensemble.expiries[k].f64()).exp();
    let xs = &ensemble.log_spot[k];
    let (mean, se) = sample_mean(xs.len(), ensemble.antithetic, |p| payoff(forward * xs[p].f64().exp()));
    Ok(PriceEstimate { price: df * mean, stderr: df * se })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedStrike {
    pub expiry: f64,
    pub moneyness: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileSurface {
    pub expiries: Vec<f64>,
    /// Strikes as moneyness `K/F`, increasing, per expiry.
    pub strikes: Vec<Vec<f64>>,
    pub vols: Vec<Vec<f64>>,
    /// MC standard error converted to vol units through vega.
    pub stderr: Vec<Vec<f64>>,
    pub dropped: Vec<DroppedStrike>,
}

/// Implied-vol smile of OTM options (puts below the forward, calls above).
pub fn smile_from_ensemble<T: Real>(ensemble: &PathEnsemble<T>, moneyness: &[Vec<f64>]) -> Result<SmileSurface> {
    if moneyness.len() != ensemble.expiries.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.expiries.len(), got: moneyness.len() });
    }
    let mut out = SmileSurface { expiries: vec![], strikes: vec![], vols: vec![], stderr: vec![], dropped: vec![] };
    for (k, grid) in moneyness.iter().enumerate() {
        if grid.windows(2).any(|w| w[0] >= w[1]) || grid.iter().any(|&m| !(m > 0.0)) {
            return Err(invalid("strike grid must be positive and increasing"));
        }
        let t = ensemble.expiries[k].f64();
        let (mut ks, mut vs, mut es) = (vec![], vec![], vec![]);
        for &m in grid {
            let kind = if m < 1.0 { OptionKind::Put } else { OptionKind::Call };
            let est = price_european(ensemble, k, 1.0, 0.0, |s| match kind {
                OptionKind::Call => (s - m).max(0.0),
                OptionKind::Put => (m - s).max(0.0),
            })?;
            match implied_vol(est.price, 1.0, m, t, kind) {
                Ok(v) => {
                    let vega = bs_vega(1.0, m, t, v);
                    ks.push(m);
                    vs.push(v);
                    es.push(if vega > 0.0 { est.stderr / vega } else { f64::INFINITY });
                }
                Err(e) => out.dropped.push(DroppedStrike { expiry: t, moneyness: m, reason: e.to_string() }),
            }
        }
        out.expiries.push(t);
        out.strikes.push(ks);
        out.vols.push(vs);
        out.stderr.push(es);
    }
    Ok(out)
}

/// Simulates and builds the smile for each expiry's moneyness grid.
#[allow(clippy::too_many_arguments)]
pub fn smile<T: Real>(
    spec: &GarchSpec<T>,
    premia: &RiskPremia<T>,
    state0: &FilterState<T>,
    mom: &NoiseMoments<T>,
    expiries: &[T],
    moneyness: &[Vec<f64>],
    cfg: &McConfig,
) -> Result<SmileSurface> {
    let ens = simulate_pricing(spec, premia, state0, mom, expiries, cfg)?;
    smile_from_ensemble(&ens, moneyness)
}

/// An option chain at expiry `k` priced off the simulated terminal distribution on
/// `n_strikes` log-spaced strikes spanning the whole sample. The forward is the sample
/// mean of `S_T`, which makes the chain exactly arbitrage-free for the empirical law.
pub fn mc_option_chain<T: Real>(ensemble: &PathEnsemble<T>, k: usize, n_strikes: usize) -> Result<OptionChain<f64>> {
    if k >= ensemble.expiries.len() {
        return Err(invalid(format!("expiry index {k} out of range")));
    }
    if n_strikes < 8 {
        return Err(invalid("need at least 8 strikes"));
    }
    let mut s: Vec<f64> = ensemble.log_spot[k].iter().map(|x| x.f64().exp()).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    // suffix sums for call prices: C(K) = Σ_{s>K}(s − K)/n
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + s[i];
    }
    let total = suffix[0];
    let fwd = total / n as f64;
    let (lo, hi) = (s[0].ln(), s[n - 1].ln());
    let mut quotes = Vec::with_capacity(n_strikes);
    for j in 0..n_strikes {
        let strike = (lo + (hi - lo) * j as f64 / (n_strikes - 1) as f64).exp();
        let above = s.partition_point(|&v| v <= strike);
        let call = (suffix[above] - strike * (n - above) as f64) / n as f64;
        let (kind, mid) = if strike >= fwd {
            (OptionKind::Call, call.max(0.0))
        } else {
            // parity on the empirical law
            (OptionKind::Put, (call - fwd + strike).max(0.0))
        };
        quotes.push(OptionQuote::new(strike, kind, mid));
    }
    OptionChain::new(ensemble.expiries[k].f64(), fwd, 0.0, quotes)
}

/// Real-world simulation settings for the variance-swap drift check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub n_paths: usize,
    /// Recorded days per path.
    pub n_days: usize,
    /// Days simulated before recording, starting from the unconditional level.
    pub burn_in_days: usize,
    /// Variance-swap maturity at the first recorded day (years).
    pub tau_years: f64,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { n_paths: 40_000, n_days: 25, burn_in_days: 250, tau_years: 1.0, seed: 11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub lambda2: f64,
    /// Mean one-day P&L of a long variance swap.
    pub measured: f64,
    /// Mean of `−λ₂(∂V/∂X · ν/L + ν δt)` over the same path-days.
    pub predicted: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub path_days: usize,
}

/// Marks a variance swap daily at its closed-form price along real-world GARCH(1,1)
/// paths and compares the average one-day P&L with the premium-implied drift.
pub fn realworld_drift_check(model: &Garch11<f64>, premia: &RiskPremia<f64>, noise: NoiseModel, cfg: &DriftConfig) -> Result<DriftReport> {
    noise.validate()?;
    if cfg.n_paths < 2 || cfg.n_days < 1 {
        return Err(invalid("drift check needs at least 2 paths and 1 day"));
    }
    let dt = model.dt_years;
    if cfg.tau_years <= dt * cfg.n_days as f64 {
        return Err(invalid("variance swap must outlive the recorded window"));
    }
    let l = model.length_days;
    let lambda2 = premia.lambda2;
    // fail early on non-stationary pricing dynamics
    crate::measure_map::garch11_varswap(model.unconditional, model, premia, cfg.tau_years)?;
    let n_blocks = cfg.n_paths.div_ceil(BLOCK_PATHS);
    let per_path: Vec<(f64, f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let n = BLOCK_PATHS.min(cfg.n_paths - b * BLOCK_PATHS);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let mut x = model.unconditional;
                for _ in 0..cfg.burn_in_days {
                    let nu = model.variance(x).max(VARIANCE_FLOOR);
                    let eps = noise.sample(&mut rng);
                    x += (nu * eps * eps - x) / l;
                }
                let (mut pnl_sum, mut pred_sum, mut diff_sum) = (0.0, 0.0, 0.0);
                let mut tau = cfg.tau_years;
                for _ in 0..cfg.n_days {
                    let nu = model.variance(x).max(VARIANCE_FLOOR);
                    let v_now = crate::measure_map::garch11_varswap(x, model, premia, tau).expect("checked above");
                    let b_now = model.varswap_delta(lambda2, tau);
                    let eps = noise.sample(&mut rng);
                    let r2 = nu * dt * eps * eps;
                    x += (r2 / dt - x) / l;
                    tau -= dt;
                    let v_next = crate::measure_map::garch11_varswap(x, model, premia, tau).expect("checked above");
                    let pnl = r2 + v_next - v_now;
                    let pred = -lambda2 * (b_now * nu / l + nu * dt);
                    pnl_sum += pnl;
                    pred_sum += pred;
                    diff_sum += pnl - pred;
                }
                let d = cfg.n_days as f64;
                out.push((pnl_sum / d, pred_sum / d, diff_sum / d));
            }
            out
        })
        .collect();
    let n = per_path.len() as f64;
    let measured = per_path.iter().map(|p| p.0).sum::<f64>() / n;
    let predicted = per_path.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_diff = per_path.iter().map(|p| p.2).sum::<f64>() / n;
    let var = per_path.iter().map(|p| (p.2 - mean_diff).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    Ok(DriftReport {
        lambda2,
        measured,
        predicted,
        stderr,
        z_score: mean_diff / stderr,
        path_days: per_path.len() * cfg.n_days,
    })
}

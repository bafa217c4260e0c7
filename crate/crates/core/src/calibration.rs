//! Sequential fit of the three premia to term structures of implied moments:
//! `λ₂` from variance-swap vols, then `λ₃` from skew, then `λ₄` from kurtosis.

use serde::{Deserialize, Serialize};

use crate::bg_expansion::{bg_coefficients_from, bg_integrals, BgIntegrals, ImpliedMomentTriple};
use crate::error::{invalid, Error, Result};
use crate::filters::{FilterState, GarchSpec};
use crate::linalg::Matrix;
use crate::measure_map::{
    filter_covariance, kurtosis_bound, omega_eigen, spot_filter_covariance, validate_premia, EigenSystem, ForwardCurve,
    NoiseMoments, RiskPremia,
};
use crate::optim::golden_section;
use crate::scalar::Real;

/// Market moments of one expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketPoint<T> {
    pub expiry: T,
    pub moments: ImpliedMomentTriple<T>,
    pub weight: T,
}

impl<T: Real> MarketPoint<T> {
    pub fn new(expiry: T, moments: ImpliedMomentTriple<T>) -> Self {
        Self { expiry, moments, weight: T::one() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationInput<T> {
    pub spec: GarchSpec<T>,
    pub state: FilterState<T>,
    pub noise: NoiseMoments<T>,
    market: Vec<MarketPoint<T>>,
}

impl<T: Real> CalibrationInput<T> {
    pub fn new(spec: GarchSpec<T>, state: FilterState<T>, noise: NoiseMoments<T>, market: Vec<MarketPoint<T>>) -> Result<Self> {
        if state.x.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: state.x.len() });
        }
        if market.len() < 2 {
            return Err(invalid("calibration needs at least two expiries"));
        }
        if market.iter().any(|m| !(m.expiry > T::zero())) || market.windows(2).any(|w| w[0].expiry >= w[1].expiry) {
            return Err(invalid("expiries must be positive and strictly increasing"));
        }
        if market.iter().any(|m| !(m.weight >= T::zero())) || market.iter().all(|m| m.weight == T::zero()) {
            return Err(invalid("weights must be non-negative and not all zero"));
        }
        Ok(Self { spec, state, noise, market })
    }

    pub fn market(&self) -> &[MarketPoint<T>] {
        &self.market
    }

    /// Same input with different market moments (same expiries and weights).
    pub fn with_moments(&self, moments: &[ImpliedMomentTriple<T>]) -> Result<Self> {
        if moments.len() != self.market.len() {
            return Err(Error::DimensionMismatch { expected: self.market.len(), got: moments.len() });
        }
        let market = self.market.iter().zip(moments).map(|(m, &t)| MarketPoint { moments: t, ..*m }).collect();
        Ok(Self { market, ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    #[default]
    FitAll,
    /// `λ₄` set to the kurtosis bound without fitting.
    SaturateKurtosis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub lambda2_min: f64,
    pub lambda2_max: f64,
    pub lambda3_min: f64,
    pub lambda3_max: f64,
    /// Width of the `λ₄` search above the bound.
    pub lambda4_span: f64,
    pub grid: usize,
    pub tol: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            lambda2_min: -0.999,
            lambda2_max: 2.0,
            lambda3_min: -5.0,
            lambda3_max: 5.0,
            lambda4_span: 50.0,
            grid: 40,
            tol: 1e-8,
        }
    }
}

impl CalibrationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda2_min > -1.0 && self.lambda2_min < self.lambda2_max) {
            return Err(invalid("need -1 < lambda2_min < lambda2_max"));
        }
        if !(self.lambda3_min < self.lambda3_max) || !(self.lambda4_span > 0.0) || !(self.tol > 0.0) {
            return Err(invalid("invalid lambda3 range, lambda4 span or tolerance"));
        }
        Ok(())
    }
}

/// Outcome of one scalar stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFit<T> {
    pub value: T,
    /// Model minus market, per expiry.
    pub residuals: Vec<T>,
    /// Weighted sum of squared residuals.
    pub objective: T,
    /// The optimum sits on the search boundary.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult<T> {
    pub premia: RiskPremia<T>,
    pub mode: CalibrationMode,
    pub lambda2: StageFit<T>,
    pub lambda3: StageFit<T>,
    pub lambda4: StageFit<T>,
    pub kurtosis_bound: T,
    pub bound_saturated: bool,
    pub diagnostics: Vec<String>,
}

fn objective<T: Real>(market: &[MarketPoint<T>], model: &[T], pick: impl Fn(&ImpliedMomentTriple<T>) -> T) -> (T, Vec<T>) {
    let res: Vec<T> = market.iter().zip(model).map(|(m, &v)| v - pick(&m.moments)).collect();
    let obj = market.iter().zip(&res).map(|(m, &r)| m.weight * r * r).sum();
    (obj, res)
}

fn stage_fit<T: Real>(value: T, obj_res: (T, Vec<T>), at_boundary: bool) -> StageFit<T> {
    StageFit { value, objective: obj_res.0, residuals: obj_res.1, at_boundary }
}

fn model_vswap_vols<T: Real>(input: &CalibrationInput<T>, lambda2: T) -> Result<Vec<T>> {
    let premia = RiskPremia::new(lambda2, T::zero(), T::zero());
    let eig = omega_eigen(&input.spec, &premia)?;
    let curve = ForwardCurve::new(&input.state, &eig, &premia)?;
    input
        .market
        .iter()
        .map(|m| {
            let v = curve.integral(m.expiry);
            if v > T::zero() { Ok((v / m.expiry).sqrt()) } else { Err(Error::NonPositiveForwardVariance { time: m.expiry.f64(), value: v.f64() }) }
        })
        .collect()
}

/// Least squares of model variance-swap vols over `λ₂`.
pub fn fit_lambda2<T: Real>(input: &CalibrationInput<T>, opts: &CalibrationOptions) -> Result<StageFit<T>> {
    opts.validate()?;
    if input.market.iter().any(|m| !(m.moments.vswap_vol > T::zero())) {
        return Err(invalid("market variance-swap vols must be positive"));
    }
    let f = |l2: T| match model_vswap_vols(input, l2) {
        Ok(v) => objective(&input.market, &v, |m| m.vswap_vol).0,
        Err(_) => T::infinity(),
    };
    let best = golden_section(f, T::lit(opts.lambda2_min), T::lit(opts.lambda2_max), opts.grid, T::lit(opts.tol));
    let model = model_vswap_vols(input, best.x)?;
    Ok(stage_fit(best.x, objective(&input.market, &model, |m| m.vswap_vol), best.at_lower || best.at_upper))
}

/// What stays fixed once `λ₂` is known: eigensystem and per-expiry integrals.
struct Frozen<T> {
    eig: EigenSystem<T>,
    integrals: Vec<BgIntegrals<T>>,
}

fn freeze<T: Real>(input: &CalibrationInput<T>, lambda2: T) -> Result<Frozen<T>> {
    let premia = RiskPremia::new(lambda2, T::zero(), T::zero());
    let eig = omega_eigen(&input.spec, &premia)?;
    let curve = ForwardCurve::new(&input.state, &eig, &premia)?;
    let integrals = input.market.iter().map(|m| bg_integrals(&curve, m.expiry)).collect::<Result<_>>()?;
    Ok(Frozen { eig, integrals })
}

fn model_skews<T: Real>(input: &CalibrationInput<T>, fr: &Frozen<T>, lambda2: T, lambda3: T) -> Result<Vec<T>> {
    let spot = spot_filter_covariance(&input.spec, lambda2, lambda3, &input.noise);
    let zero = Matrix::zeros(spot.len(), spot.len());
    fr.integrals
        .iter()
        .map(|ints| {
            let c = bg_coefficients_from(&fr.eig, &spot, &zero, ints)?;
            Ok((c.cxf + c.cmu) / (ints.expiry.sqrt() * c.v.powf(T::lit(1.5))))
        })
        .collect()
}

fn model_kurts<T: Real>(input: &CalibrationInput<T>, fr: &Frozen<T>, premia: &RiskPremia<T>) -> Result<Vec<T>> {
    let spot = spot_filter_covariance(&input.spec, premia.lambda2, premia.lambda3, &input.noise);
    let cov = filter_covariance(&input.spec, premia.lambda4, &input.noise);
    fr.integrals
        .iter()
        .map(|ints| {
            let c = bg_coefficients_from(&fr.eig, &spot, &cov, ints)?;
            Ok((c.cmu + c.cff / T::lit(4.0)) / (ints.expiry.sqrt() * c.v.powf(T::lit(2.5))))
        })
        .collect()
}

fn fit_lambda3_frozen<T: Real>(input: &CalibrationInput<T>, fr: &Frozen<T>, lambda2: T, opts: &CalibrationOptions) -> Result<StageFit<T>> {
    let f = |l3: T| match model_skews(input, fr, lambda2, l3) {
        Ok(v) => objective(&input.market, &v, |m| m.skew_m).0,
        Err(_) => T::infinity(),
    };
    let best = golden_section(f, T::lit(opts.lambda3_min), T::lit(opts.lambda3_max), opts.grid, T::lit(opts.tol));
    let model = model_skews(input, fr, lambda2, best.x)?;
    Ok(stage_fit(best.x, objective(&input.market, &model, |m| m.skew_m), best.at_lower || best.at_upper))
}

/// Least squares of model skew moments over `λ₃` at fixed `λ₂`.
pub fn fit_lambda3<T: Real>(input: &CalibrationInput<T>, lambda2: T, opts: &CalibrationOptions) -> Result<StageFit<T>> {
    opts.validate()?;
    let fr = freeze(input, lambda2)?;
    fit_lambda3_frozen(input, &fr, lambda2, opts)
}

/// `λ₄` fit together with its bound and whether the bound binds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda4Fit<T> {
    pub fit: StageFit<T>,
    pub bound: T,
    pub saturated: bool,
}

fn fit_lambda4_frozen<T: Real>(
    input: &CalibrationInput<T>,
    fr: &Frozen<T>,
    lambda2: T,
    lambda3: T,
    mode: CalibrationMode,
    opts: &CalibrationOptions,
) -> Result<Lambda4Fit<T>> {
    let bound = kurtosis_bound(lambda2, lambda3, &input.noise, &input.spec)?;
    let kurt_at = |l4: T| model_kurts(input, fr, &RiskPremia::new(lambda2, lambda3, l4));
    if mode == CalibrationMode::SaturateKurtosis {
        let model = kurt_at(bound)?;
        return Ok(Lambda4Fit { fit: stage_fit(bound, objective(&input.market, &model, |m| m.kurt_m), true), bound, saturated: true });
    }
    let f = |l4: T| match kurt_at(l4) {
        Ok(v) => objective(&input.market, &v, |m| m.kurt_m).0,
        Err(_) => T::infinity(),
    };
    let best = golden_section(f, bound, bound + T::lit(opts.lambda4_span), opts.grid, T::lit(opts.tol));
    // an interior optimum within tolerance of the bound still counts as binding
    let saturated = best.at_lower || best.x - bound <= T::lit(opts.tol);
    let value = if saturated { bound } else { best.x };
    let model = kurt_at(value)?;
    Ok(Lambda4Fit { fit: stage_fit(value, objective(&input.market, &model, |m| m.kurt_m), best.at_upper), bound, saturated })
}

/// Least squares of model kurtosis moments over `λ₄ ≥` the kurtosis bound.
pub fn fit_lambda4<T: Real>(
    input: &CalibrationInput<T>,
    lambda2: T,
    lambda3: T,
    mode: CalibrationMode,
    opts: &CalibrationOptions,
) -> Result<Lambda4Fit<T>> {
    opts.validate()?;
    let fr = freeze(input, lambda2)?;
    fit_lambda4_frozen(input, &fr, lambda2, lambda3, mode, opts)
}

fn stage<V>(name: &'static str, r: Result<V>) -> Result<V> {
    r.map_err(|e| Error::Stage { stage: name, source: Box::new(e) })
}

/// Runs the three stages in order.
pub fn calibrate_sequential<T: Real>(
    input: &CalibrationInput<T>,
    mode: CalibrationMode,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult<T>> {
    opts.validate()?;
    let mut diagnostics = Vec::new();
    let l2 = stage("lambda2", fit_lambda2(input, opts))?;
    if l2.at_boundary {
        diagnostics.push(format!("lambda2 = {} is on the search boundary", l2.value));
    }
    let fr = stage("lambda3", freeze(input, l2.value))?;
    let l3 = stage("lambda3", fit_lambda3_frozen(input, &fr, l2.value, opts))?;
    if l3.at_boundary {
        diagnostics.push(format!("lambda3 = {} is on the search boundary", l3.value));
    }
    let l4 = stage("lambda4", fit_lambda4_frozen(input, &fr, l2.value, l3.value, mode, opts))?;
    if mode == CalibrationMode::FitAll && l4.saturated {
        diagnostics.push("kurtosis bound binds".to_string());
    }
    if mode == CalibrationMode::FitAll && l4.fit.at_boundary {
        diagnostics.push(format!("lambda4 = {} is on the upper search boundary", l4.fit.value));
    }
    let premia = RiskPremia::new(l2.value, l3.value, l4.fit.value);
    if let Err(v) = validate_premia(&input.spec, &premia, &input.noise) {
        return Err(Error::Stage {
            stage: "lambda4",
            source: Box::new(Error::PremiaViolation(v.iter().map(ToString::to_string).collect())),
        });
    }
    Ok(CalibrationResult {
        premia,
        mode,
        lambda2: l2,
        lambda3: l3,
        lambda4: l4.fit,
        kurtosis_bound: l4.bound,
        bound_saturated: l4.saturated,
        diagnostics,
    })
}

/// Model moments per expiry (BG expansion) for given premia.
pub fn model_term_structure<T: Real>(
    spec: &GarchSpec<T>,
    state: &FilterState<T>,
    noise: &NoiseMoments<T>,
    premia: &RiskPremia<T>,
    expiries: &[T],
) -> Result<Vec<ImpliedMomentTriple<T>>> {
    let params = crate::measure_map::pricing_params(spec, premia, noise)?;
    let eig = omega_eigen(spec, premia)?;
    let curve = ForwardCurve::new(state, &eig, premia)?;
    expiries
        .iter()
        .map(|&t| {
            let ints = bg_integrals(&curve, t)?;
            let c = crate::bg_expansion::bg_coefficients(&eig, &params, &ints)?;
            crate::bg_expansion::model_moments(&c, t)
        })
        .collect()
}

//! From the discrete real-world model plus tail-risk premia to the continuous
//! pricing-measure stochastic volatility model.
//!
//! Under the pricing measure each filter follows
//!
//! ```text
//! dX^i = θ_i (δ_i ν − X^i) dt + ξ_i ν dZ^i,    corr(dW, dZ^i) = ρ_i,  corr(dZ^i, dZ^j) = ρ_ij
//! ```
//!
//! and forward variance is an exponential mixture over the eigenmodes of
//! `Ω_ij = θ_i (δ_ij − δ_i α_j)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filters::{FilterKind, FilterState, GarchSpec};
use crate::linalg::{eigen_general, Matrix};
use crate::noise::NoiseModel;
use crate::scalar::{decay_integral, Real};

/// Slack used when checking `|ρ| ≤ 1` so that exactly saturated bounds pass.
pub const CORRELATION_SLACK: f64 = 1e-10;

/// Imaginary parts of `Ω`'s spectrum below this fraction of the spectral radius are dropped.
pub const IMAG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskPremia<T> {
    /// Convexity (gamma) premium.
    pub lambda2: T,
    /// Skew premium.
    pub lambda3: T,
    /// Kurtosis premium.
    pub lambda4: T,
}

impl<T: Real> RiskPremia<T> {
    pub fn new(lambda2: T, lambda3: T, lambda4: T) -> Self {
        Self { lambda2, lambda3, lambda4 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMoments<T> {
    /// `E[ε⁴]`
    pub m4: T,
    /// `E[ε³ 1{ε<0}]`
    pub m3_minus: T,
}

impl<T: Real> NoiseMoments<T> {
    pub fn gaussian() -> Self {
        Self { m4: T::lit(3.0), m3_minus: -T::lit((2.0 / std::f64::consts::PI).sqrt()) }
    }
}

/// Moments of a symmetric innovation law: `m3⁻ = −½ E|ε|³`.
pub fn noise_moments<T: Real>(noise: &NoiseModel) -> Result<NoiseMoments<T>> {
    noise.validate()?;
    Ok(NoiseMoments { m4: T::lit(noise.m4()), m3_minus: T::lit(-0.5 * noise.abs_m3()) })
}

/// A named consistency condition on the premia.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `λ₂ > −1`
    Convexity,
    /// `|ρ₊| ≤ 1`
    SpotSymmetric,
    /// `|ρ₋| ≤ 1`
    SpotAsymmetric,
    /// `|ρ₊₋| ≤ 1`
    FilterCorrelation,
    /// `|ρ̄₊₋| ≤ 1`, equivalent to the kurtosis bound
    ResidualCorrelation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// Offending value (λ₂ or the correlation).
    pub value: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let what = match self.condition {
            Condition::Convexity => "lambda2 > -1",
            Condition::SpotSymmetric => "|rho_plus| <= 1",
            Condition::SpotAsymmetric => "|rho_minus| <= 1",
            Condition::FilterCorrelation => "|rho_pm| <= 1",
            Condition::ResidualCorrelation => "|rho_pm_bar| <= 1 (kurtosis bound)",
        };
        write!(f, "{what} violated (value {:.6})", self.value)
    }
}

/// `num / √den_sq`, with `0/0 := 0`. Negative variances give NaN.
fn ratio<T: Real>(num: T, den_sq: T) -> T {
    if den_sq > T::zero() {
        num / den_sq.sqrt()
    } else if den_sq == T::zero() && num == T::zero() {
        T::zero()
    } else {
        T::nan()
    }
}

/// The correlation block shared by every filter of a kind.
#[derive(Debug, Clone, Copy)]
struct Correlations<T> {
    rho_plus: T,
    rho_minus: T,
    rho_pm: T,
    rho_pm_bar: T,
}

fn correlations<T: Real>(premia: &RiskPremia<T>, mom: &NoiseMoments<T>) -> Correlations<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let mu = one + premia.lambda2;
    let a = mom.m4 - one + premia.lambda4;
    let b = two * mom.m4 - one + T::lit(4.0) * premia.lambda4;
    let c = mom.m4 - one + two * premia.lambda4;
    let rho_plus = ratio(-premia.lambda3, mu * a);
    let rho_minus = ratio(two * (mom.m3_minus - premia.lambda3), mu * b);
    let rho_pm = ratio(c, a * b);
    let rho_pm_bar = ratio(rho_pm - rho_plus * rho_minus, (one - rho_plus * rho_plus) * (one - rho_minus * rho_minus));
    // a saturated spot correlation leaves the residual undefined; any unit value is consistent
    let rho_pm_bar = if rho_pm_bar.is_nan() && (rho_plus.abs() - one).abs() < T::lit(1e-12) { one } else { rho_pm_bar };
    Correlations { rho_plus, rho_minus, rho_pm, rho_pm_bar }
}

/// Checks every consistency condition relevant to the filter kinds of `spec`.
pub fn validate_premia<T: Real>(
    spec: &GarchSpec<T>,
    premia: &RiskPremia<T>,
    mom: &NoiseMoments<T>,
) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if !(premia.lambda2 > -T::one()) {
        out.push(Violation { condition: Condition::Convexity, value: premia.lambda2.f64() });
        return Err(out);
    }
    let c = correlations(premia, mom);
    let sym = spec.has_kind(FilterKind::Symmetric);
    let asym = spec.has_kind(FilterKind::Asymmetric);
    let limit = T::one() + T::lit(CORRELATION_SLACK);
    let mut check = |cond, v: T| {
        if !(v.abs() <= limit) {
            out.push(Violation { condition: cond, value: v.f64() });
        }
    };
    if sym {
        check(Condition::SpotSymmetric, c.rho_plus);
    }
    if asym {
        check(Condition::SpotAsymmetric, c.rho_minus);
    }
    if sym && asym {
        check(Condition::FilterCorrelation, c.rho_pm);
        check(Condition::ResidualCorrelation, c.rho_pm_bar);
    }
    if out.is_empty() { Ok(()) } else { Err(out) }
}

fn violation_error(v: Vec<Violation>) -> Error {
    Error::PremiaViolation(v.iter().map(ToString::to_string).collect())
}

/// Smallest admissible `λ₄` given `λ₂`, `λ₃`.
///
/// For specs mixing both filter kinds this is the point where `|ρ̄₊₋|` reaches 1;
/// single-kind specs only need `|ρ₊| ≤ 1` (symmetric) or `|ρ₋| ≤ 1` (asymmetric).
pub fn kurtosis_bound<T: Real>(lambda2: T, lambda3: T, mom: &NoiseMoments<T>, spec: &GarchSpec<T>) -> Result<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    if !(lambda2 > -one) {
        return Err(invalid(format!("lambda2 = {lambda2} must exceed -1")));
    }
    let mu = one + lambda2;
    let (m4, m3) = (mom.m4, mom.m3_minus);
    let sym = spec.has_kind(FilterKind::Symmetric);
    let asym = spec.has_kind(FilterKind::Asymmetric);
    let value = match (sym, asym) {
        (true, true) => {
            let den = (two * m4 - one) * mu - four * m3 * m3;
            if !(den > T::zero()) {
                return Err(invalid(format!("kurtosis bound denominator {den} is not positive")));
            }
            let num = four * (m4 - one) * (m3 - lambda3) * m3 + lambda3 * lambda3 * (two * m4 - one)
                - m4 * (m4 - one) * mu;
            num / den
        }
        (true, false) => one - m4 + lambda3 * lambda3 / mu,
        _ => (four * (m3 - lambda3) * (m3 - lambda3) / mu - two * m4 + one) / four,
    };
    Ok(value)
}

/// Covariance `ξ_i ρ_i` between the spot driver and each filter.
///
/// Independent of `λ₄`, so it can be evaluated before the kurtosis premium is known.
pub fn spot_filter_covariance<T: Real>(spec: &GarchSpec<T>, lambda2: T, lambda3: T, mom: &NoiseMoments<T>) -> Vec<T> {
    let sqrt_mu = (T::one() + lambda2).sqrt();
    let sqrt_dt = spec.dt_years().sqrt();
    spec.filters()
        .iter()
        .map(|f| {
            let num = match f.kind {
                FilterKind::Symmetric => -lambda3,
                FilterKind::Asymmetric => T::lit(2.0) * (mom.m3_minus - lambda3),
            };
            num / (sqrt_mu * f.length_days * sqrt_dt)
        })
        .collect()
}

/// Covariance matrix `ξ_k ξ_l ρ_kl` of the filter drivers; affine in `λ₄`.
pub fn filter_covariance<T: Real>(spec: &GarchSpec<T>, lambda4: T, mom: &NoiseMoments<T>) -> Matrix<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let a = mom.m4 - one + lambda4;
    let b = two * mom.m4 - one + T::lit(4.0) * lambda4;
    let c = mom.m4 - one + two * lambda4;
    let f = spec.filters();
    let dt = spec.dt_years();
    Matrix::from_fn(f.len(), f.len(), |k, l| {
        let num = match (f[k].kind, f[l].kind) {
            (FilterKind::Symmetric, FilterKind::Symmetric) => a,
            (FilterKind::Asymmetric, FilterKind::Asymmetric) => b,
            _ => c,
        };
        num / (f[k].length_days * f[l].length_days * dt)
    })
}

/// Continuous-time coefficients of the pricing-measure model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingParams<T> {
    pub kinds: Vec<FilterKind>,
    pub alpha: Vec<T>,
    pub lambda2: T,
    /// Mean-reversion speeds `1/(L_i δt)`, per year.
    pub theta: Vec<T>,
    pub delta: Vec<T>,
    pub xi: Vec<T>,
    pub rho_spot: Vec<T>,
    pub rho_plus: T,
    pub rho_minus: T,
    pub rho_pm: T,
    pub rho_pm_bar: T,
    pub corr_filters: Matrix<T>,
}

/// Maps spec + premia to the pricing model. Fails with every violated condition listed.
pub fn pricing_params<T: Real>(spec: &GarchSpec<T>, premia: &RiskPremia<T>, mom: &NoiseMoments<T>) -> Result<PricingParams<T>> {
    validate_premia(spec, premia, mom).map_err(violation_error)?;
    let one = T::one();
    let two = T::lit(2.0);
    let mut c = correlations(premia, mom);
    let sym = spec.has_kind(FilterKind::Symmetric);
    let asym = spec.has_kind(FilterKind::Asymmetric);
    // only the kinds present are constrained; absent ones are reported as zero
    if !sym {
        c.rho_plus = T::zero();
    }
    if !asym {
        c.rho_minus = T::zero();
    }
    if !(sym && asym) {
        c.rho_pm = one;
        c.rho_pm_bar = one;
    }
    let clamp = |v: T| v.max(-one).min(one);
    c.rho_plus = clamp(c.rho_plus);
    c.rho_minus = clamp(c.rho_minus);
    c.rho_pm = clamp(c.rho_pm);
    c.rho_pm_bar = clamp(c.rho_pm_bar);

    let dt = spec.dt_years();
    let a = (mom.m4 - one + premia.lambda4).max(T::zero());
    let b = (two * mom.m4 - one + T::lit(4.0) * premia.lambda4).max(T::zero());
    let f = spec.filters();
    let mut theta = Vec::with_capacity(f.len());
    let mut delta = Vec::with_capacity(f.len());
    let mut xi = Vec::with_capacity(f.len());
    let mut rho_spot = Vec::with_capacity(f.len());
    for fi in f {
        theta.push(one / (fi.length_days * dt));
        let scale = fi.length_days * dt.sqrt();
        match fi.kind {
            FilterKind::Symmetric => {
                delta.push(one + premia.lambda2);
                xi.push(a.sqrt() / scale);
                rho_spot.push(c.rho_plus);
            }
            FilterKind::Asymmetric => {
                delta.push(one + two * premia.lambda2);
                xi.push(b.sqrt() / scale);
                rho_spot.push(c.rho_minus);
            }
        }
    }
    let corr_filters = Matrix::from_fn(f.len(), f.len(), |k, l| if f[k].kind == f[l].kind { one } else { c.rho_pm });
    Ok(PricingParams {
        kinds: f.iter().map(|fi| fi.kind).collect(),
        alpha: spec.weights(),
        lambda2: premia.lambda2,
        theta,
        delta,
        xi,
        rho_spot,
        rho_plus: c.rho_plus,
        rho_minus: c.rho_minus,
        rho_pm: c.rho_pm,
        rho_pm_bar: c.rho_pm_bar,
        corr_filters,
    })
}

impl<T: Real> PricingParams<T> {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Same model with every `ξ_i` multiplied by `s`; correlations unchanged.
    pub fn with_vol_of_vol_scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.xi.iter_mut().for_each(|x| *x = *x * s);
        out
    }

    /// `ξ_i ρ_i`
    pub fn spot_covariance(&self) -> Vec<T> {
        self.xi.iter().zip(&self.rho_spot).map(|(&x, &r)| x * r).collect()
    }

    /// `ξ_k ξ_l ρ_kl`
    pub fn filter_covariance(&self) -> Matrix<T> {
        let n = self.len();
        Matrix::from_fn(n, n, |k, l| self.xi[k] * self.xi[l] * self.corr_filters[(k, l)])
    }

    /// Correlation matrix of `(W, Z¹, …, Zⁿ)`.
    pub fn correlation_matrix(&self) -> Matrix<T> {
        let n = self.len();
        Matrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => T::one(),
            (0, j) => self.rho_spot[j - 1],
            (i, 0) => self.rho_spot[i - 1],
            (i, j) => self.corr_filters[(i - 1, j - 1)],
        })
    }
}

/// Number of independent Gaussian factors `(W, Z, Z⁺, Z⁻)`.
pub const N_FACTORS: usize = 4;

/// Loadings of each `dZ^i` on the orthogonal factors `(W, Z, Z⁺, Z⁻)`; rows have unit norm.
pub fn pca_loadings<T: Real>(params: &PricingParams<T>) -> Matrix<T> {
    let one = T::one();
    let bar = params.rho_pm_bar;
    let root_bar = bar.abs().sqrt();
    let root_rest = (one - bar.abs()).max(T::zero()).sqrt();
    let sign = if bar < T::zero() { -one } else { one };
    let mut m = Matrix::zeros(params.len(), N_FACTORS);
    for (i, kind) in params.kinds.iter().enumerate() {
        let row = match kind {
            FilterKind::Symmetric => {
                let p = params.rho_plus;
                let s = (one - p * p).max(T::zero()).sqrt();
                [p, s * root_bar, s * root_rest, T::zero()]
            }
            FilterKind::Asymmetric => {
                let p = params.rho_minus;
                let s = (one - p * p).max(T::zero()).sqrt();
                [p, sign * s * root_bar, T::zero(), s * root_rest]
            }
        };
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Eigen-decomposition `Ω = U diag(θ̃) U⁻¹` of the pricing drift matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem<T> {
    pub omega: Matrix<T>,
    pub u: Matrix<T>,
    pub u_inv: Matrix<T>,
    /// Eigenvalues in increasing order. May be ≤ 0: with `Σα = 1` the slowest
    /// mode is neutral at `λ₂ = 0` and explosive for `λ₂ > 0`.
    pub theta_tilde: Vec<T>,
    /// `Uᵀ α`
    pub alpha_tilde: Vec<T>,
    /// `‖U D U⁻¹ − Ω‖_max`
    pub residual: T,
}

impl<T: Real> EigenSystem<T> {
    /// `U⁻¹ X`
    pub fn x_tilde(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.u_inv.cols() {
            return Err(Error::DimensionMismatch { expected: self.u_inv.cols(), got: x.len() });
        }
        Ok(self.u_inv.matvec(x))
    }

    /// `U⁻¹ v` for any filter-space vector.
    pub fn to_modes(&self, v: &[T]) -> Vec<T> {
        self.u_inv.matvec(v)
    }
}

/// `Ω_ij = θ_i (δ_ij − δ_i α_j)`.
pub fn omega_matrix<T: Real>(spec: &GarchSpec<T>, lambda2: T) -> Matrix<T> {
    let f = spec.filters();
    let dt = spec.dt_years();
    Matrix::from_fn(f.len(), f.len(), |i, j| {
        let theta = T::one() / (f[i].length_days * dt);
        let delta = match f[i].kind {
            FilterKind::Symmetric => T::one() + lambda2,
            FilterKind::Asymmetric => T::one() + T::lit(2.0) * lambda2,
        };
        let kron = if i == j { T::one() } else { T::zero() };
        theta * (kron - delta * f[j].weight)
    })
}

pub fn omega_eigen<T: Real>(spec: &GarchSpec<T>, premia: &RiskPremia<T>) -> Result<EigenSystem<T>> {
    let omega = omega_matrix(spec, premia.lambda2);
    let eig = eigen_general(&omega)?;
    let n = omega.rows();
    let radius = eig.re.iter().zip(&eig.im).fold(T::zero(), |m, (&r, &i)| m.max(r.hypot(i)));
    let tol = T::lit(IMAG_TOLERANCE) * radius.max(T::min_positive_value());
    let max_imag = eig.im.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if max_imag > tol {
        return Err(Error::ComplexSpectrum { imag: max_imag.f64(), tol: tol.f64() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.re[a].partial_cmp(&eig.re[b]).unwrap_or(std::cmp::Ordering::Equal));
    let theta_tilde: Vec<T> = order.iter().map(|&k| eig.re[k]).collect();
    let u = Matrix::from_fn(n, n, |i, j| {
        let col = order[j];
        let norm = (0..n).map(|r| eig.vectors[(r, col)].powi(2)).sum::<T>().sqrt();
        eig.vectors[(i, col)] / norm
    });
    let u_inv = u.inverse().map_err(|_| Error::Singular("pricing drift matrix is not diagonalizable".into()))?;
    let recon = u.matmul(&Matrix::diag(&theta_tilde)).matmul(&u_inv);
    let residual = recon.sub(&omega).max_abs();
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
    if !(residual <= tol * omega.max_abs().max(T::one())) {
        return Err(Error::Singular(format!("eigen reconstruction residual {residual}")));
    }
    let alpha_tilde = u.transpose().matvec(&spec.weights());
    Ok(EigenSystem { omega, u, u_inv, theta_tilde, alpha_tilde, residual })
}

/// Forward variance as an exponential mixture `F(τ) = Σ a_i e^{−θ̃_i τ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardCurve<T> {
    /// `(1+λ₂) ᾶ_i X̃_i`
    pub amplitudes: Vec<T>,
    pub rates: Vec<T>,
}

impl<T: Real> ForwardCurve<T> {
    pub fn new(state: &FilterState<T>, eig: &EigenSystem<T>, premia: &RiskPremia<T>) -> Result<Self> {
        let x_tilde = eig.x_tilde(&state.x)?;
        let mu = T::one() + premia.lambda2;
        let amplitudes = eig.alpha_tilde.iter().zip(&x_tilde).map(|(&a, &x)| mu * a * x).collect();
        Ok(Self { amplitudes, rates: eig.theta_tilde.clone() })
    }

    /// Flat curve at level `v`.
    pub fn flat(v: T) -> Self {
        Self { amplitudes: vec![v], rates: vec![T::zero()] }
    }

    /// `F(τ)`
    pub fn at(&self, tau: T) -> T {
        self.amplitudes.iter().zip(&self.rates).map(|(&a, &r)| a * (-r * tau).exp()).sum()
    }

    /// `∫_0^τ F`
    pub fn integral(&self, tau: T) -> T {
        self.amplitudes.iter().zip(&self.rates).map(|(&a, &r)| a * decay_integral(r, tau)).sum()
    }
}

/// `F_t(t+τ)`
pub fn forward_variance<T: Real>(state: &FilterState<T>, eig: &EigenSystem<T>, premia: &RiskPremia<T>, tau: T) -> Result<T> {
    if !(tau >= T::zero()) {
        return Err(invalid(format!("maturity offset {tau} must be non-negative")));
    }
    Ok(ForwardCurve::new(state, eig, premia)?.at(tau))
}

/// Variance swap price `V_t(t+τ) = ∫_0^τ F`, in annualized variance × years.
pub fn varswap_price<T: Real>(state: &FilterState<T>, eig: &EigenSystem<T>, premia: &RiskPremia<T>, tau: T) -> Result<T> {
    if !(tau > T::zero()) {
        return Err(invalid(format!("maturity offset {tau} must be positive")));
    }
    Ok(ForwardCurve::new(state, eig, premia)?.integral(tau))
}

/// GARCH(1,1): `ν = ν̄(1−α) + α X` with `X` an EMA of squared returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Garch11<T> {
    /// Unconditional variance `ν̄` (annualized).
    pub unconditional: T,
    pub weight: T,
    pub length_days: T,
    pub dt_years: T,
}

impl<T: Real> Garch11<T> {
    pub fn new(unconditional: T, weight: T, length_days: T) -> Result<Self> {
        if !(unconditional >= T::zero() && weight >= T::zero() && weight <= T::one() && length_days >= T::one()) {
            return Err(invalid("garch(1,1) needs nu_bar >= 0, 0 <= alpha <= 1, L >= 1"));
        }
        Ok(Self { unconditional, weight, length_days, dt_years: T::one() / T::lit(crate::filters::TRADING_DAYS) })
    }

    pub fn theta(&self) -> T {
        T::one() / (self.length_days * self.dt_years)
    }

    pub fn variance(&self, x: T) -> T {
        self.unconditional * (T::one() - self.weight) + self.weight * x
    }

    /// Pricing mean-reversion `θ' = θ(1 − α(1+λ₂))`.
    pub fn theta_prime(&self, lambda2: T) -> T {
        self.theta() * (T::one() - self.weight * (T::one() + lambda2))
    }

    /// Pricing long-run level `X̄`.
    pub fn x_bar(&self, lambda2: T) -> T {
        let mu = T::one() + lambda2;
        self.unconditional * (T::one() - self.weight) * mu / (T::one() - self.weight * mu)
    }

    /// `∂V/∂X = α(1+λ₂) φ(θ', τ)`
    pub fn varswap_delta(&self, lambda2: T, tau: T) -> T {
        self.weight * (T::one() + lambda2) * decay_integral(self.theta_prime(lambda2), tau)
    }

    /// Two-filter equivalent with the unconditional level held by a filter that never moves.
    pub fn as_spec(&self) -> Result<GarchSpec<T>> {
        use crate::filters::FilterSpec;
        GarchSpec::new(
            vec![
                FilterSpec::symmetric(T::lit(1e15), T::one() - self.weight),
                FilterSpec::symmetric(self.length_days, self.weight),
            ],
            self.dt_years,
        )
    }
}

/// Closed-form GARCH(1,1) variance swap `V = X̄τ + α(1+λ₂)(X − X̄)(1 − e^{−θ'τ})/θ'`.
pub fn garch11_varswap<T: Real>(x: T, model: &Garch11<T>, premia: &RiskPremia<T>, tau: T) -> Result<T> {
    if !(tau >= T::zero()) {
        return Err(invalid(format!("tau = {tau} must be non-negative")));
    }
    let mu = T::one() + premia.lambda2;
    if !(model.weight * mu < T::one()) {
        return Err(invalid(format!(
            "alpha (1 + lambda2) = {} >= 1: pricing dynamics are not stationary",
            model.weight * mu
        )));
    }
    let x_bar = model.x_bar(premia.lambda2);
    Ok(x_bar * tau + model.varswap_delta(premia.lambda2, tau) * (x - x_bar))
}

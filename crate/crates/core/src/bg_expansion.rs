//! Second-order vol-of-vol expansion of the log-spot moment generating function.
//!
//! With `x = log(S_T/S_0)` and forward variance `F_0(t) = Σ_k a_k e^{−θ̃_k t}`:
//!
//! ```text
//! ψ(α) = log E*[e^{αx}] ≈ ½α(α−1)V + ½C^{xf}α²(α−1) + ⅛C^{ff}α²(α−1)² + ½C^{μ}α³(α−1)
//! ```
//!
//! Mode weights are kept multiplied by `θ̃_i` (i.e. `a_i = ᾶ_i Σ_j U⁻¹_ij ξ_jρ_j`
//! rather than `a_i/θ̃_i`) and the time integrals use `φ(θ, τ) = (1 − e^{−θτ})/θ`,
//! so everything stays finite through the neutral mode `θ̃ = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::measure_map::{EigenSystem, ForwardCurve, PricingParams};
use crate::quadrature::{composite_nodes, GaussLegendre};
use crate::scalar::{decay_integral, Real};

/// Gauss-Legendre points per quadrature panel.
pub const GL_POINTS: usize = 32;

/// Time integrals of the forward-variance curve, one per mode (pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgIntegrals<T> {
    pub expiry: T,
    /// `V = ∫_0^T F`
    pub v: T,
    /// `∫_0^T F^{3/2}(t) φ_i(T−t) dt`
    pub xf: Vec<T>,
    /// `∫_0^T F²(t) φ_i(T−t) φ_j(T−t) dt`
    pub ff: Matrix<T>,
    /// `(3/2) ∫_0^T dt F^{3/2}(t) ∫_t^T du F^{1/2}(u) e^{−θ̃_i(u−t)} φ_j(T−u)`
    pub mu: Matrix<T>,
}

/// Panel length: one per fastest mode time scale, at least eight panels.
fn panel_length<T: Real>(rates: &[T], expiry: T) -> T {
    let fastest = rates.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    let by_expiry = expiry / T::lit(8.0);
    if fastest > T::zero() { by_expiry.min(T::one() / fastest) } else { by_expiry }
}

pub fn bg_integrals<T: Real>(curve: &ForwardCurve<T>, expiry: T) -> Result<BgIntegrals<T>> {
    bg_integrals_with(curve, expiry, 1)
}

/// Same as [`bg_integrals`] with every panel split into `refine` pieces.
pub fn bg_integrals_with<T: Real>(curve: &ForwardCurve<T>, expiry: T, refine: usize) -> Result<BgIntegrals<T>> {
    if !(expiry > T::zero() && expiry.is_finite()) {
        return Err(invalid(format!("expiry {expiry} must be positive")));
    }
    let rates = &curve.rates;
    let n = rates.len();
    let rule = GaussLegendre::<T>::new(GL_POINTS);
    let h = panel_length(rates, expiry) / T::from_usize_lossy(refine.max(1));
    let three_halves = T::lit(1.5);

    let fwd = |t: T| -> Result<T> {
        let f = curve.at(t);
        if f > T::zero() && f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonPositiveForwardVariance { time: t.f64(), value: f.f64() })
        }
    };
    let phis = |tau: T| -> Vec<T> { rates.iter().map(|&r| decay_integral(r, tau)).collect() };

    let mut xf = vec![T::zero(); n];
    let mut ff = Matrix::zeros(n, n);
    let mut mu = Matrix::zeros(n, n);
    let outer = composite_nodes(&rule, T::zero(), expiry, h);
    for &(t, w) in &outer {
        let f = fwd(t)?;
        let f32_ = f * f.sqrt();
        let phi = phis(expiry - t);
        for i in 0..n {
            xf[i] = xf[i] + w * f32_ * phi[i];
            for j in 0..n {
                ff[(i, j)] = ff[(i, j)] + w * f * f * phi[i] * phi[j];
            }
        }
        // inner integral over u ∈ [t, T] for every mode pair
        let mut inner = Matrix::zeros(n, n);
        if expiry - t > T::zero() {
            for (u, wu) in composite_nodes(&rule, t, expiry, h) {
                let g = fwd(u)?.sqrt() * wu;
                let phi_u = phis(expiry - u);
                for i in 0..n {
                    let e = g * (-rates[i] * (u - t)).exp();
                    for j in 0..n {
                        inner[(i, j)] = inner[(i, j)] + e * phi_u[j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                mu[(i, j)] = mu[(i, j)] + three_halves * w * f32_ * inner[(i, j)];
            }
        }
    }
    Ok(BgIntegrals { expiry, v: curve.integral(expiry), xf, ff, mu })
}

/// Expansion coefficients at one expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgCoefficients<T> {
    pub expiry: T,
    /// Spot/forward-variance mode weights `ᾶ_i Σ_j U⁻¹_ij ξ_jρ_j`.
    pub a: Vec<T>,
    /// Forward-variance covariance in mode space `ᾶ_iᾶ_j (U⁻¹ Q U⁻ᵀ)_ij`, `Q_kl = ξ_kξ_lρ_kl`.
    pub b: Matrix<T>,
    pub cxf: T,
    pub cff: T,
    pub cmu: T,
    pub v: T,
}

/// Coefficients from explicit covariances: `spot_cov_k = ξ_kρ_k`, `filter_cov_kl = ξ_kξ_lρ_kl`.
pub fn bg_coefficients_from<T: Real>(
    eig: &EigenSystem<T>,
    spot_cov: &[T],
    filter_cov: &Matrix<T>,
    integrals: &BgIntegrals<T>,
) -> Result<BgCoefficients<T>> {
    let n = eig.theta_tilde.len();
    if spot_cov.len() != n || filter_cov.rows() != n || integrals.xf.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: spot_cov.len() });
    }
    let c = eig.to_modes(spot_cov);
    let a: Vec<T> = eig.alpha_tilde.iter().zip(&c).map(|(&al, &ci)| al * ci).collect();
    let q = eig.u_inv.matmul(filter_cov).matmul(&eig.u_inv.transpose());
    let b = Matrix::from_fn(n, n, |i, j| eig.alpha_tilde[i] * eig.alpha_tilde[j] * (q[(i, j)] + q[(j, i)]) / T::lit(2.0));
    let cxf = (0..n).map(|i| a[i] * integrals.xf[i]).sum();
    let mut cff = T::zero();
    let mut cmu = T::zero();
    for i in 0..n {
        for j in 0..n {
            cff = cff + b[(i, j)] * integrals.ff[(i, j)];
            cmu = cmu + a[i] * a[j] * integrals.mu[(i, j)];
        }
    }
    Ok(BgCoefficients { expiry: integrals.expiry, a, b, cxf, cff, cmu, v: integrals.v })
}

pub fn bg_coefficients<T: Real>(eig: &EigenSystem<T>, params: &PricingParams<T>, integrals: &BgIntegrals<T>) -> Result<BgCoefficients<T>> {
    bg_coefficients_from(eig, &params.spot_covariance(), &params.filter_covariance(), integrals)
}

/// Log-MGF of `log(S_T/S_0)` to second order in vol-of-vol.
pub fn psi<T: Real>(alpha: T, c: &BgCoefficients<T>) -> T {
    let half = T::lit(0.5);
    let am1 = alpha - T::one();
    let a2 = alpha * alpha;
    half * alpha * am1 * c.v + half * c.cxf * a2 * am1 + T::lit(0.125) * c.cff * a2 * am1 * am1 + half * c.cmu * a2 * alpha * am1
}

/// Raw moments of `x = log(S_T/S_0)` as replicated by option strips:
/// `M1 = E[x]`, `M2 = E[x²]`, `M3 = E[(e^x + 1) x]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMoments<T> {
    pub m1: T,
    pub m2: T,
    pub m3: T,
}

pub fn log_moments<T: Real>(c: &BgCoefficients<T>) -> LogMoments<T> {
    let half = T::lit(0.5);
    LogMoments {
        m1: -half * c.v,
        m2: c.v - c.cxf + c.cff / T::lit(4.0) + c.v * c.v / T::lit(4.0),
        m3: half * (c.cxf + c.cmu),
    }
}

/// Normalized moments of one expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedMomentTriple<T> {
    /// `√(−2M1/T)`
    pub vswap_vol: T,
    /// `2M3 / (√T (−2M1)^{3/2})`
    pub skew_m: T,
    /// `(2M3 + M2 − M1² + 2M1) / (√T (−2M1)^{5/2})`
    pub kurt_m: T,
}

pub fn model_moments<T: Real>(c: &BgCoefficients<T>, expiry: T) -> Result<ImpliedMomentTriple<T>> {
    if !(c.v > T::zero()) {
        return Err(invalid(format!("total variance {} must be positive", c.v)));
    }
    let rt = expiry.sqrt();
    Ok(ImpliedMomentTriple {
        vswap_vol: (c.v / expiry).sqrt(),
        skew_m: (c.cxf + c.cmu) / (rt * c.v.powf(T::lit(1.5))),
        kurt_m: (c.cmu + c.cff / T::lit(4.0)) / (rt * c.v.powf(T::lit(2.5))),
    })
}

/// First-order ATM skew `∂σ/∂log K`.
pub fn atm_skew<T: Real>(c: &BgCoefficients<T>, expiry: T) -> Result<T> {
    if !(c.v > T::zero()) {
        return Err(invalid(format!("total variance {} must be positive", c.v)));
    }
    Ok(c.cxf / (T::lit(2.0) * expiry.sqrt() * c.v.powf(T::lit(1.5))))
}

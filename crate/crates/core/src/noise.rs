//! Innovation distributions for the return noise `ε` (zero mean, unit variance).

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::scalar::norm_inv_cdf;

/// Family of the standardized innovations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Gaussian,
    /// Student-t rescaled to unit variance.
    StudentT { dof: f64 },
}

impl NoiseModel {
    /// Checks that the fourth moment is finite.
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian => Ok(()),
            NoiseModel::StudentT { dof } if dof.is_finite() && dof > 4.0 => Ok(()),
            NoiseModel::StudentT { dof } => {
                Err(invalid(format!("student-t dof {dof} must exceed 4 for a finite fourth moment")))
            }
        }
    }

    /// `E[ε⁴]`.
    pub fn m4(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian => 3.0,
            NoiseModel::StudentT { dof } => 3.0 * (dof - 2.0) / (dof - 4.0),
        }
    }

    /// `E[|ε|³]`.
    pub fn abs_m3(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian => 2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            NoiseModel::StudentT { dof } => {
                let ln = 1.5 * (dof - 2.0).ln() + ln_gamma((dof - 3.0) / 2.0)
                    - 0.5 * std::f64::consts::PI.ln()
                    - ln_gamma(dof / 2.0);
                ln.exp()
            }
        }
    }

    /// Log density of the standardized innovation.
    pub fn log_density(&self, z: f64) -> f64 {
        match *self {
            NoiseModel::Gaussian => -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            NoiseModel::StudentT { dof } => {
                let s = ((dof - 2.0) / dof).sqrt();
                let x = z / s;
                ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0)
                    - 0.5 * (dof * std::f64::consts::PI).ln()
                    - (dof + 1.0) / 2.0 * (x * x / dof).ln_1p()
                    - s.ln()
            }
        }
    }

    /// Draws one innovation. Gaussian draws use the inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Gaussian => norm_inv_cdf(open_unit(rng)),
            NoiseModel::StudentT { dof } => {
                let t = StudentT::new(dof).expect("validated dof");
                t.sample(rng) * ((dof - 2.0) / dof).sqrt()
            }
        }
    }
}

/// Uniform draw in the open interval `(0, 1)` with 53 random bits.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn integrate(f: impl Fn(f64) -> f64, lim: f64) -> f64 {
        // Simpson on a fine grid
        let n = 400_000;
        let h = 2.0 * lim / n as f64;
        let mut s = f(-lim) + f(lim);
        for k in 1..n {
            let x = -lim + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn densities_are_standardized() {
        for noise in [NoiseModel::Gaussian, NoiseModel::StudentT { dof: 7.0 }] {
            let lim = if noise == NoiseModel::Gaussian { 40.0 } else { 4000.0 };
            let mass = integrate(|z| noise.log_density(z).exp(), lim);
            let var = integrate(|z| z * z * noise.log_density(z).exp(), lim);
            assert!((mass - 1.0).abs() < 1e-6, "{noise:?} mass {mass}");
            assert!((var - 1.0).abs() < 1e-3, "{noise:?} var {var}");
        }
    }

    #[test]
    fn student_moments_match_quadrature() {
        let noise = NoiseModel::StudentT { dof: 9.0 };
        let m3 = integrate(|z| z.abs().powi(3) * noise.log_density(z).exp(), 20000.0);
        assert!((m3 - noise.abs_m3()).abs() / m3 < 1e-4, "{m3} vs {}", noise.abs_m3());
    }

    #[test]
    fn rejects_heavy_tails() {
        assert!(NoiseModel::StudentT { dof: 4.0 }.validate().is_err());
        assert!(NoiseModel::StudentT { dof: 4.5 }.validate().is_ok());
    }

    #[test]
    fn samples_have_unit_variance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for noise in [NoiseModel::Gaussian, NoiseModel::StudentT { dof: 8.0 }] {
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.02, "{noise:?}: {mean} {var}");
        }
    }
}

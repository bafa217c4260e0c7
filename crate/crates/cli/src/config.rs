use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use varpremia::calibration::{CalibrationMode, CalibrationOptions};
use varpremia::mc_pricer::{DriftConfig, McConfig};
use varpremia::mle::{MleBounds, MleOptions, MleParams};
use varpremia::{GarchSpec, NoiseModel, RiskPremia};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Every random stream in a run derives from this.
    pub seed: u64,
    pub spec: GarchSpec<f64>,
    pub noise: NoiseModel,
    pub premia: Option<RiskPremia<f64>>,
    /// A premia JSON (bare or a `calibrate` artifact); used when `premia` is absent.
    pub premia_path: Option<PathBuf>,
    pub data: DataConfig,
    pub output_dir: PathBuf,
    /// Expiry grid (years) for `varswap` and `moments`.
    pub expiries: Vec<f64>,
    pub mc: McSettings,
    pub calibration: CalibrationSettings,
    pub smile: SmileSettings,
    pub estimate: EstimateSettings,
    pub validate: ValidateSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            spec: GarchSpec::reference(),
            noise: NoiseModel::Gaussian,
            premia: None,
            premia_path: None,
            data: DataConfig::default(),
            output_dir: PathBuf::from("out"),
            expiries: vec![1.0 / 12.0, 0.25, 0.5, 1.0, 2.0],
            mc: McSettings::default(),
            calibration: CalibrationSettings::default(),
            smile: SmileSettings::default(),
            estimate: EstimateSettings::default(),
            validate: ValidateSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// One `(date, price|return)` CSV; drives `filters` and supplies the state.
    pub returns: Option<PathBuf>,
    /// Directory of return CSVs for `estimate`.
    pub returns_dir: Option<PathBuf>,
    /// Filter state JSON (bare or a `filters` artifact); takes precedence over `returns`.
    pub state: Option<PathBuf>,
    /// Option chain CSV.
    pub chains: Option<PathBuf>,
    /// Valuation date for chain expiries.
    pub as_of: Option<NaiveDate>,
    pub spot: Option<f64>,
    pub rate: f64,
    /// Premia time-series CSV that `calibrate` appends to.
    pub premia_history: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub n_paths: usize,
    pub steps_per_day: usize,
    pub antithetic: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { n_paths: 100_000, steps_per_day: 1, antithetic: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub mode: CalibrationMode,
    /// `|Δ|` range of OTM quotes entering the replication.
    pub delta_range: (f64, f64),
    pub options: CalibrationOptions,
    /// Per-expiry weights in chain order; equal when absent.
    pub weights: Option<Vec<f64>>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { mode: CalibrationMode::FitAll, delta_range: (0.01, 0.5), options: CalibrationOptions::default(), weights: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmileSettings {
    pub expiries: Vec<f64>,
    /// Call-delta range spanned by the strike grid.
    pub delta_range: (f64, f64),
    pub n_strikes: usize,
}

impl Default for SmileSettings {
    fn default() -> Self {
        Self { expiries: vec![1.0 / 12.0, 0.25, 0.5, 1.0], delta_range: (0.001, 0.999), n_strikes: 41 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSettings {
    pub init: MleParams,
    pub bounds: MleBounds,
    pub restarts: usize,
    pub ftol: f64,
    pub max_iter: usize,
    /// Length of the EMA that replaces the constant filter in the pricing spec.
    pub long_length_days: f64,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        let o = MleOptions::default();
        Self {
            init: MleParams::two_plus_one(),
            bounds: MleBounds::default(),
            restarts: o.restarts,
            ftol: o.ftol,
            max_iter: o.max_iter,
            long_length_days: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSettings {
    /// GARCH(1,1) used by the drift check.
    pub unconditional: f64,
    pub weight: f64,
    pub length_days: f64,
    /// Nonzero premium tested besides `λ₂ = 0`.
    pub lambda2: f64,
    pub n_paths: usize,
    pub n_days: usize,
    pub burn_in_days: usize,
    pub tau_years: f64,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        let d = DriftConfig::default();
        Self {
            unconditional: 0.04,
            weight: 0.5,
            length_days: 36.0,
            lambda2: 0.3,
            n_paths: d.n_paths,
            n_days: d.n_days,
            burn_in_days: d.burn_in_days,
            tau_years: d.tau_years,
        }
    }
}

/// Independent seeds for the different consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Pricing = 1,
    Estimation = 2,
    Drift = 3,
    Checks = 4,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = cfg.resolved(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative paths are taken relative to the config file.
    fn resolved(mut self, base: &Path) -> Self {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.premia_path);
        fix(&mut self.data.returns);
        fix(&mut self.data.returns_dir);
        fix(&mut self.data.state);
        fix(&mut self.data.chains);
        fix(&mut self.data.premia_history);
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        for (name, p) in [
            ("premia_path", &self.premia_path),
            ("data.returns", &self.data.returns),
            ("data.returns_dir", &self.data.returns_dir),
            ("data.state", &self.data.state),
            ("data.chains", &self.data.chains),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return bad(format!("{name}: {} does not exist", p.display()));
                }
            }
        }
        for (name, (lo, hi)) in [("calibration.delta_range", self.calibration.delta_range), ("smile.delta_range", self.smile.delta_range)] {
            if !(lo > 0.0 && hi < 1.0 && lo < hi) {
                return bad(format!("{name} [{lo}, {hi}] must lie inside (0, 1)"));
            }
        }
        let increasing = |v: &[f64]| !v.is_empty() && v.iter().all(|&t| t > 0.0 && t.is_finite()) && v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.expiries) {
            return bad("expiries must be positive and strictly increasing".into());
        }
        if !increasing(&self.smile.expiries) {
            return bad("smile.expiries must be positive and strictly increasing".into());
        }
        if self.smile.n_strikes < 2 {
            return bad("smile.n_strikes must be at least 2".into());
        }
        self.mc_config(Stream::Pricing).validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.calibration.options.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn seed_for(&self, s: Stream) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(s as u64)
    }

    pub fn mc_config(&self, s: Stream) -> McConfig {
        McConfig { n_paths: self.mc.n_paths, steps_per_day: self.mc.steps_per_day, seed: self.seed_for(s), antithetic: self.mc.antithetic }
    }

    pub fn mle_options(&self) -> MleOptions {
        MleOptions {
            restarts: self.estimate.restarts,
            seed: self.seed_for(Stream::Estimation),
            ftol: self.estimate.ftol,
            max_iter: self.estimate.max_iter,
        }
    }

    pub fn drift_config(&self) -> DriftConfig {
        let v = &self.validate;
        DriftConfig {
            n_paths: v.n_paths,
            n_days: v.n_days,
            burn_in_days: v.burn_in_days,
            tau_years: v.tau_years,
            seed: self.seed_for(Stream::Drift),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

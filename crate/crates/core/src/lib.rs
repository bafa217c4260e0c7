//! Option pricing from historical GARCH filters plus tail-risk premia.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below are what most callers want.

// `!(x > 0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bg_expansion;
pub mod black;
pub mod calibration;
pub mod error;
pub mod filters;
pub mod io;
pub mod linalg;
pub mod mc_pricer;
pub mod measure_map;
pub mod mle;
pub mod noise;
pub mod optim;
pub mod quadrature;
pub mod replication;
pub mod scalar;

pub use bg_expansion::{BgCoefficients, ImpliedMomentTriple, LogMoments};
pub use black::OptionKind;
pub use calibration::{CalibrationInput, CalibrationMode, CalibrationResult, MarketPoint};
pub use error::{Error, Result};
pub use filters::{FilterInit, FilterKind, FilterSpec, FilterState, GarchSpec, ReturnSeries};
pub use mc_pricer::{McConfig, PathEnsemble, SmileSurface};
pub use measure_map::{EigenSystem, Garch11, NoiseMoments, PricingParams, RiskPremia};
pub use mle::{MleParams, ReturnPanel};
pub use noise::NoiseModel;
pub use replication::{OptionChain, OptionQuote};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type GarchSpec64 = GarchSpec<f64>;
pub type GarchSpec32 = GarchSpec<f32>;
pub type FilterState64 = FilterState<f64>;
pub type FilterState32 = FilterState<f32>;
pub type ReturnSeries64 = ReturnSeries<f64>;
pub type RiskPremia64 = RiskPremia<f64>;
pub type RiskPremia32 = RiskPremia<f32>;
pub type NoiseMoments64 = NoiseMoments<f64>;
pub type PricingParams64 = PricingParams<f64>;
pub type OptionChain64 = OptionChain<f64>;
pub type ImpliedMomentTriple64 = ImpliedMomentTriple<f64>;
pub type CalibrationInput64 = CalibrationInput<f64>;
pub type CalibrationResult64 = CalibrationResult<f64>;

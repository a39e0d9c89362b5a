//! Pricing engine for continuously sampled geometric Asian options under a
//! two-factor (fast/slow mean-reverting) stochastic volatility model.
//!
//! The price is approximated to first order as `C0 + sqrt(eps) C1`, where
//! `C0 = gamma(t) B0` is a modified Black-Scholes GAO price and `C1` is a
//! correction driven by a single calibrated group parameter. A Monte-Carlo
//! simulator of the full SDE system serves as an independent oracle.

pub mod calibration;
pub mod closed_form;
pub mod error;
pub mod mc;
pub mod model;
pub mod normal;
pub mod perturbation;
pub mod quadrature;

pub use closed_form::{GreekSet, ThetaMethod};
pub use error::{Error, Result};
pub use model::{Kind, MarketState, ModelParams, OptionSpec, Style, VolArc};
pub use perturbation::{first_order_price, PriceBreakdown, PricingOptions};

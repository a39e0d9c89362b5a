//! Closed-form Black-Scholes prices and sensitivities for continuously
//! sampled geometric Asian options.
//!
//! Everything here is written in the transformed state `(t, s, u)`; see
//! [`MarketState`]. With `tau = T - t`, the log of the terminal average is
//! Gaussian, which gives Black-type formulas with
//!
//! * floating strike: `B = x [N(d1) - e^{u/T - Q} N(d2)]`
//! * fixed strike: `B = e^{s + u/T - Q} N(d1^) - K e^{-r tau} N(d2^)`
//!
//! where `Q = (r + sigma^2/2)(T^2 - t^2)/(2T) - sigma^2 (T^3 - t^3)/(6 T^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Kind, MarketState, OptionSpec, Style};
use crate::normal::{cdf, pdf};

/// Below this time to maturity (years) prices collapse to the payoff.
pub const HORIZON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DTermsFloating {
    pub d1: f64,
    pub d2: f64,
    pub q_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DTermsFixed {
    pub d1_hat: f64,
    pub d2_hat: f64,
    pub q_drift: f64,
}

/// Sensitivities of `C0 = gamma * B0`. `theta_b0` is the plain `dB0/dt`
/// without the modification factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreekSet {
    pub du1: f64,
    pub du2: f64,
    pub du3: f64,
    pub vega: f64,
    pub theta_b0: f64,
}

fn check_inputs(t: f64, maturity: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "volatility {sigma} must be > 0"
        )));
    }
    let tau = maturity - t;
    if !(tau >= HORIZON_TOL) {
        return Err(Error::DegenerateHorizon(tau));
    }
    Ok(tau)
}

/// Drift adjustment `Q` shared by both strike styles.
pub fn q_drift(sigma: f64, t: f64, maturity: f64, r: f64) -> f64 {
    let big = maturity;
    let s2 = sigma * sigma;
    (r + 0.5 * s2) * (big * big - t * t) / (2.0 * big)
        - s2 * (big.powi(3) - t.powi(3)) / (6.0 * big * big)
}

/// `(T^3 - t^3)/3`, written so it stays accurate as `t -> T`.
#[inline]
fn floating_variance_window(t: f64, maturity: f64) -> f64 {
    let tau = maturity - t;
    tau * (maturity * maturity + maturity * t + t * t) / 3.0
}

pub fn d_terms_floating(
    sigma: f64,
    t: f64,
    maturity: f64,
    u: f64,
    r: f64,
) -> Result<DTermsFloating> {
    check_inputs(t, maturity, sigma)?;
    let root_v = floating_variance_window(t, maturity).sqrt();
    let d1 =
        (-u + (r + 0.5 * sigma * sigma) * (maturity * maturity - t * t) / 2.0) / (sigma * root_v);
    let d2 = d1 - sigma / maturity * root_v;
    Ok(DTermsFloating {
        d1,
        d2,
        q_drift: q_drift(sigma, t, maturity, r),
    })
}

pub fn d_terms_fixed(
    sigma: f64,
    state: &MarketState,
    maturity: f64,
    strike: f64,
    r: f64,
) -> Result<DTermsFixed> {
    let tau = check_inputs(state.t, maturity, sigma)?;
    if !(strike > 0.0) {
        return Err(Error::NonPositiveStrike(strike));
    }
    let width = sigma / maturity * (tau.powi(3) / 3.0).sqrt();
    let d2_hat = (state.u / maturity + state.s - strike.ln()
        + (r - 0.5 * sigma * sigma) * tau * tau / (2.0 * maturity))
        / width;
    Ok(DTermsFixed {
        d1_hat: d2_hat + width,
        d2_hat,
        q_drift: q_drift(sigma, state.t, maturity, r),
    })
}

fn check_time(state: &MarketState, maturity: f64) -> Result<Option<()>> {
    let tau = maturity - state.t;
    if tau < 0.0 {
        Err(Error::DegenerateHorizon(tau))
    } else if tau < HORIZON_TOL {
        Ok(None)
    } else {
        Ok(Some(()))
    }
}

/// Discounted expectation of the terminal geometric average, `e^{s + u/T - Q}`.
pub fn average_forward(state: &MarketState, sigma: f64, maturity: f64, r: f64) -> f64 {
    (state.s + state.u / maturity - q_drift(sigma, state.t, maturity, r)).exp()
}

pub fn bs_floating_call(state: &MarketState, sigma: f64, maturity: f64, r: f64) -> Result<f64> {
    if check_time(state, maturity)?.is_none() {
        return Ok(state.s.exp() * (1.0 - (state.u / maturity).exp()).max(0.0));
    }
    let d = d_terms_floating(sigma, state.t, maturity, state.u, r)?;
    let ratio = (state.u / maturity - d.q_drift).exp();
    Ok((state.s.exp() * (cdf(d.d1) - ratio * cdf(d.d2))).max(0.0))
}

/// Floating-strike put via `P = C - x + x e^{u/T - Q}`.
pub fn bs_floating_put(state: &MarketState, sigma: f64, maturity: f64, r: f64) -> Result<f64> {
    if check_time(state, maturity)?.is_none() {
        return Ok(state.s.exp() * ((state.u / maturity).exp() - 1.0).max(0.0));
    }
    let d = d_terms_floating(sigma, state.t, maturity, state.u, r)?;
    let ratio = (state.u / maturity - d.q_drift).exp();
    Ok((state.s.exp() * (ratio * cdf(-d.d2) - cdf(-d.d1))).max(0.0))
}

pub fn bs_fixed_call(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    strike: f64,
    r: f64,
) -> Result<f64> {
    if !(strike > 0.0) {
        return Err(Error::NonPositiveStrike(strike));
    }
    if check_time(state, maturity)?.is_none() {
        return Ok(((state.s + state.u / maturity).exp() - strike).max(0.0));
    }
    let d = d_terms_fixed(sigma, state, maturity, strike, r)?;
    let fwd = (state.s + state.u / maturity - d.q_drift).exp();
    let disc = (-r * (maturity - state.t)).exp();
    Ok((fwd * cdf(d.d1_hat) - strike * disc * cdf(d.d2_hat)).max(0.0))
}

/// Fixed-strike put. Evaluated as `K e^{-r tau} N(-d2^) - F N(-d1^)`, which is
/// algebraically the parity put `C - F + K e^{-r tau}` without cancellation.
pub fn bs_fixed_put(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    strike: f64,
    r: f64,
) -> Result<f64> {
    if !(strike > 0.0) {
        return Err(Error::NonPositiveStrike(strike));
    }
    if check_time(state, maturity)?.is_none() {
        return Ok((strike - (state.s + state.u / maturity).exp()).max(0.0));
    }
    let d = d_terms_fixed(sigma, state, maturity, strike, r)?;
    let fwd = (state.s + state.u / maturity - d.q_drift).exp();
    let disc = (-r * (maturity - state.t)).exp();
    Ok((strike * disc * cdf(-d.d2_hat) - fwd * cdf(-d.d1_hat)).max(0.0))
}

/// Black-Scholes GAO price `B0` for any supported contract.
pub fn bs_price(spec: &OptionSpec, state: &MarketState, sigma: f64, r: f64) -> Result<f64> {
    let t_mat = spec.maturity;
    match (spec.style, spec.kind) {
        (Style::FloatingStrike, Kind::Call) => bs_floating_call(state, sigma, t_mat, r),
        (Style::FloatingStrike, Kind::Put) => bs_floating_put(state, sigma, t_mat, r),
        (Style::FixedStrike, Kind::Call) => bs_fixed_call(state, sigma, t_mat, strike(spec)?, r),
        (Style::FixedStrike, Kind::Put) => bs_fixed_put(state, sigma, t_mat, strike(spec)?, r),
    }
}

fn strike(spec: &OptionSpec) -> Result<f64> {
    spec.strike
        .ok_or_else(|| Error::InvalidConfig("fixed-strike contract without strike K".into()))
}

/// `dQ/dt` at fixed sigma.
fn q_drift_dt(sigma: f64, t: f64, maturity: f64, r: f64) -> f64 {
    let s2 = sigma * sigma;
    -(r + 0.5 * s2) * t / maturity + s2 * t * t / (2.0 * maturity * maturity)
}

/// `dQ/dsigma = sigma (T - t)^2 (T + 2t) / (6 T^2)`.
fn q_drift_dsigma(sigma: f64, t: f64, maturity: f64) -> f64 {
    let tau = maturity - t;
    sigma * tau * tau * (maturity + 2.0 * t) / (6.0 * maturity * maturity)
}

pub fn greeks_floating_call(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    r: f64,
    gamma_factor: f64,
) -> Result<GreekSet> {
    let d = d_terms_floating(sigma, state.t, maturity, state.u, r)?;
    let big = maturity;
    let v = floating_variance_window(state.t, big);
    let root_v = v.sqrt();
    let fwd = (state.s + state.u / big - d.q_drift).exp();
    let dens = pdf(d.d2);

    let b_du1 = -fwd / big * cdf(d.d2);
    let b_du2 = (b_du1 + fwd * dens / (sigma * root_v)) / big;
    let b_du3 =
        (b_du2 + fwd * (dens / (sigma * big * root_v) + d.d2 * dens / (sigma * sigma * v))) / big;
    let b_vega = fwd * (root_v / big * dens + cdf(d.d2) * q_drift_dsigma(sigma, state.t, big));

    Ok(GreekSet {
        du1: gamma_factor * b_du1,
        du2: gamma_factor * b_du2,
        du3: gamma_factor * b_du3,
        vega: gamma_factor * b_vega,
        theta_b0: theta_analytic_floating_call(state, sigma, big, r)?,
    })
}

/// Floating put sensitivities from parity: each u-derivative of `x e^{u/T - Q}`
/// is that term over `T^n`.
pub fn greeks_floating_put(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    r: f64,
    gamma_factor: f64,
) -> Result<GreekSet> {
    let call = greeks_floating_call(state, sigma, maturity, r, 1.0)?;
    let fwd = average_forward(state, sigma, maturity, r);
    let big = maturity;
    Ok(GreekSet {
        du1: gamma_factor * (call.du1 + fwd / big),
        du2: gamma_factor * (call.du2 + fwd / (big * big)),
        du3: gamma_factor * (call.du3 + fwd / big.powi(3)),
        vega: gamma_factor * (call.vega - fwd * q_drift_dsigma(sigma, state.t, big)),
        theta_b0: call.theta_b0 - fwd * q_drift_dt(sigma, state.t, big, r),
    })
}

pub fn greeks_fixed_put(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    strike: f64,
    r: f64,
    gamma_factor: f64,
) -> Result<GreekSet> {
    let d = d_terms_fixed(sigma, state, maturity, strike, r)?;
    let big = maturity;
    let tau = big - state.t;
    let vf = tau.powi(3) / 3.0;
    let root_vf = vf.sqrt();
    let fwd = (state.s + state.u / big - d.q_drift).exp();
    let dens = pdf(d.d1_hat);

    let b_du1 = -fwd / big * cdf(-d.d1_hat);
    let b_du2 = (b_du1 + fwd * dens / (sigma * root_vf)) / big;
    let b_du3 = (b_du2
        + fwd * (dens / (sigma * big * root_vf) - d.d1_hat * dens / (sigma * sigma * vf)))
        / big;
    let b_vega =
        fwd * (root_vf / big * dens + cdf(-d.d1_hat) * q_drift_dsigma(sigma, state.t, big));

    Ok(GreekSet {
        du1: gamma_factor * b_du1,
        du2: gamma_factor * b_du2,
        du3: gamma_factor * b_du3,
        vega: gamma_factor * b_vega,
        theta_b0: theta_analytic_fixed(state, sigma, big, strike, r, Kind::Put)?,
    })
}

/// Fixed call sensitivities from parity `C = P + F - K e^{-r tau}`.
pub fn greeks_fixed_call(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    strike: f64,
    r: f64,
    gamma_factor: f64,
) -> Result<GreekSet> {
    let put = greeks_fixed_put(state, sigma, maturity, strike, r, 1.0)?;
    let fwd = average_forward(state, sigma, maturity, r);
    let big = maturity;
    Ok(GreekSet {
        du1: gamma_factor * (put.du1 + fwd / big),
        du2: gamma_factor * (put.du2 + fwd / (big * big)),
        du3: gamma_factor * (put.du3 + fwd / big.powi(3)),
        vega: gamma_factor * (put.vega - fwd * q_drift_dsigma(sigma, state.t, big)),
        theta_b0: theta_analytic_fixed(state, sigma, big, strike, r, Kind::Call)?,
    })
}

pub fn greeks(
    spec: &OptionSpec,
    state: &MarketState,
    sigma: f64,
    r: f64,
    gamma_factor: f64,
) -> Result<GreekSet> {
    let t_mat = spec.maturity;
    match (spec.style, spec.kind) {
        (Style::FloatingStrike, Kind::Call) => {
            greeks_floating_call(state, sigma, t_mat, r, gamma_factor)
        }
        (Style::FloatingStrike, Kind::Put) => {
            greeks_floating_put(state, sigma, t_mat, r, gamma_factor)
        }
        (Style::FixedStrike, Kind::Call) => {
            greeks_fixed_call(state, sigma, t_mat, strike(spec)?, r, gamma_factor)
        }
        (Style::FixedStrike, Kind::Put) => {
            greeks_fixed_put(state, sigma, t_mat, strike(spec)?, r, gamma_factor)
        }
    }
}

fn theta_analytic_floating_call(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    r: f64,
) -> Result<f64> {
    let d = d_terms_floating(sigma, state.t, maturity, state.u, r)?;
    let t = state.t;
    let root_v = floating_variance_window(t, maturity).sqrt();
    let fwd = (state.s + state.u / maturity - d.q_drift).exp();
    let dwidth = sigma / maturity * (-t * t) / (2.0 * root_v);
    Ok(fwd * (pdf(d.d2) * dwidth + cdf(d.d2) * q_drift_dt(sigma, t, maturity, r)))
}

fn theta_analytic_fixed(
    state: &MarketState,
    sigma: f64,
    maturity: f64,
    strike: f64,
    r: f64,
    kind: Kind,
) -> Result<f64> {
    let d = d_terms_fixed(sigma, state, maturity, strike, r)?;
    let tau = maturity - state.t;
    let fwd = (state.s + state.u / maturity - d.q_drift).exp();
    let disc = (-r * tau).exp();
    let dfwd = -fwd * q_drift_dt(sigma, state.t, maturity, r);
    let dwidth = sigma / maturity * (-tau * tau) / (2.0 * (tau.powi(3) / 3.0).sqrt());
    let call =
        cdf(d.d1_hat) * dfwd - strike * r * disc * cdf(d.d2_hat) + fwd * pdf(d.d1_hat) * dwidth;
    Ok(match kind {
        Kind::Call => call,
        Kind::Put => call - dfwd + strike * r * disc,
    })
}

/// Closed-form `dB0/dt` at fixed `(s, u, sigma)`.
pub fn b0_theta_analytic(
    spec: &OptionSpec,
    state: &MarketState,
    sigma: f64,
    r: f64,
) -> Result<f64> {
    let t_mat = spec.maturity;
    match (spec.style, spec.kind) {
        (Style::FloatingStrike, Kind::Call) => theta_analytic_floating_call(state, sigma, t_mat, r),
        (Style::FloatingStrike, Kind::Put) => {
            Ok(greeks_floating_put(state, sigma, t_mat, r, 1.0)?.theta_b0)
        }
        (Style::FixedStrike, kind) => {
            theta_analytic_fixed(state, sigma, t_mat, strike(spec)?, r, kind)
        }
    }
}

/// Default step for the theta stencil.
pub fn default_theta_step(t: f64, maturity: f64) -> f64 {
    (1e-3 * maturity).min(0.1 * (maturity - t))
}

/// `dB0/dt` by a five-point central stencil with step `h`. The price is
/// evaluated as a function of `t` at fixed `(s, u, sigma)`; the stencil may
/// reach slightly below `t = 0`, where the formula remains well defined.
pub fn b0_theta_fd(
    spec: &OptionSpec,
    state: &MarketState,
    sigma: f64,
    r: f64,
    h: f64,
) -> Result<f64> {
    let tau = spec.maturity - state.t;
    if !(tau >= HORIZON_TOL) {
        return Err(Error::DegenerateHorizon(tau));
    }
    if !(h > 0.0 && state.t + 2.0 * h < spec.maturity) {
        return Err(Error::DegenerateHorizon(tau - 2.0 * h));
    }
    let at = |dt: f64| {
        let st = MarketState::from_log_state(state.t + dt, state.s, state.u);
        bs_price(spec, &st, sigma, r)
    };
    let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
    Ok((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    #[default]
    FiniteDifference,
    Analytic,
}

/// Black-Scholes GAO theta, by the chosen method.
pub fn b0_theta(
    spec: &OptionSpec,
    state: &MarketState,
    sigma: f64,
    r: f64,
    method: ThetaMethod,
) -> Result<f64> {
    match method {
        ThetaMethod::FiniteDifference => b0_theta_fd(
            spec,
            state,
            sigma,
            r,
            default_theta_step(state.t, spec.maturity),
        ),
        ThetaMethod::Analytic => b0_theta_analytic(spec, state, sigma, r),
    }
}

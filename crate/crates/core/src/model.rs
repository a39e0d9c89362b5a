//! Model parameters, the quadratic volatility arc, contract and state types.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute guard on `|1 - k t|` and `|2 - k t|`.
pub const SINGULARITY_TOL: f64 = 1e-8;

/// Default floor for the effective volatility read off the arc.
pub const SIGMA_MIN: f64 = 1e-4;

/// Market and model constants of the two-factor volatility model.
///
/// The asset follows `dX = r X dt + f(Y, Z) X dW^x`, with a fast OU factor
/// `Y` (speed `1/epsilon`, long-run law `N(alpha, nu^2)`) and a slow OU factor
/// `Z` (speed `k`, level `alpha_prime`, vol-of-vol `beta`, start `z0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub r: f64,
    pub k: f64,
    pub alpha_prime: f64,
    pub z0: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho_xy: f64,
    pub rho_xz: f64,
    pub rho_yz: f64,
}

impl ModelParams {
    /// The S&P 500 illustration set (k = 2, r = 0.0264, epsilon = 0.001,
    /// z0 = 0.1834, alpha' = 0.20). Fast-factor and correlation inputs are not
    /// part of that set and default to zero.
    pub fn illustration() -> Self {
        Self {
            r: 0.0264,
            k: 2.0,
            alpha_prime: 0.20,
            z0: 0.1834,
            epsilon: 0.001,
            nu: 0.0,
            alpha: 0.0,
            beta: 0.0,
            rho_xy: 0.0,
            rho_xz: 0.0,
            rho_yz: 0.0,
        }
    }

    /// Determinant of the 3x3 correlation matrix of (W^x, W^y, W^z).
    pub fn correlation_determinant(&self) -> f64 {
        let (a, b, c) = (self.rho_xy, self.rho_xz, self.rho_yz);
        1.0 + 2.0 * a * b * c - a * a - b * b - c * c
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate_params(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v))
        }
    }

    pub fn arc(&self) -> Result<VolArc> {
        arc_from_ou(self.k, self.alpha_prime, self.z0)
    }
}

/// A single violated invariant of [`ModelParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum ParamViolation {
    NonFinite { field: String },
    NegativeRate { r: f64 },
    NonPositiveSpeed { k: f64 },
    NonPositiveEpsilon { epsilon: f64 },
    NegativeNu { nu: f64 },
    NegativeBeta { beta: f64 },
    DegenerateArc { z0: f64, alpha_prime: f64 },
    CorrelationOutOfRange { field: String, value: f64 },
    CorrelationNotPositiveDefinite { determinant: f64 },
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParamViolation::*;
        match self {
            NonFinite { field } => write!(f, "{field} is not finite"),
            NegativeRate { r } => write!(f, "r = {r} must be >= 0"),
            NonPositiveSpeed { k } => write!(f, "k = {k} must be > 0"),
            NonPositiveEpsilon { epsilon } => write!(f, "epsilon = {epsilon} must be > 0"),
            NegativeNu { nu } => write!(f, "nu = {nu} must be >= 0"),
            NegativeBeta { beta } => write!(f, "beta = {beta} must be >= 0"),
            DegenerateArc { z0, alpha_prime } => {
                write!(
                    f,
                    "z0 = {z0} equals alpha_prime = {alpha_prime} (degenerate arc)"
                )
            }
            CorrelationOutOfRange { field, value } => write!(f, "|{field}| = {value} must be < 1"),
            CorrelationNotPositiveDefinite { determinant } => write!(
                f,
                "correlation matrix not positive definite (determinant {determinant})"
            ),
        }
    }
}

/// Collects every violated invariant; an empty list means the set is usable.
pub fn validate_params(p: &ModelParams) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    let fields = [
        ("r", p.r),
        ("k", p.k),
        ("alpha_prime", p.alpha_prime),
        ("z0", p.z0),
        ("epsilon", p.epsilon),
        ("nu", p.nu),
        ("alpha", p.alpha),
        ("beta", p.beta),
        ("rho_xy", p.rho_xy),
        ("rho_xz", p.rho_xz),
        ("rho_yz", p.rho_yz),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            out.push(ParamViolation::NonFinite {
                field: name.to_string(),
            });
        }
    }
    if p.r < 0.0 {
        out.push(ParamViolation::NegativeRate { r: p.r });
    }
    if !(p.k > 0.0) {
        out.push(ParamViolation::NonPositiveSpeed { k: p.k });
    }
    if !(p.epsilon > 0.0) {
        out.push(ParamViolation::NonPositiveEpsilon { epsilon: p.epsilon });
    }
    if p.nu < 0.0 {
        out.push(ParamViolation::NegativeNu { nu: p.nu });
    }
    if p.beta < 0.0 {
        out.push(ParamViolation::NegativeBeta { beta: p.beta });
    }
    if arc_is_degenerate(p.z0, p.alpha_prime) {
        out.push(ParamViolation::DegenerateArc {
            z0: p.z0,
            alpha_prime: p.alpha_prime,
        });
    }
    let mut rho_ok = true;
    for (name, v) in [
        ("rho_xy", p.rho_xy),
        ("rho_xz", p.rho_xz),
        ("rho_yz", p.rho_yz),
    ] {
        if !(v.abs() < 1.0) {
            rho_ok = false;
            out.push(ParamViolation::CorrelationOutOfRange {
                field: name.to_string(),
                value: v,
            });
        }
    }
    let det = p.correlation_determinant();
    if rho_ok && !(det > 0.0) {
        out.push(ParamViolation::CorrelationNotPositiveDefinite { determinant: det });
    }
    out
}

fn arc_is_degenerate(z0: f64, alpha_prime: f64) -> bool {
    (z0 - alpha_prime).abs() <= f64::EPSILON * z0.abs().max(alpha_prime.abs())
}

/// Quadratic arc `P t^2 + Q t + R` standing in for the slow volatility factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolArc {
    pub p_coef: f64,
    pub q_coef: f64,
    pub r_coef: f64,
    pub sigma_min: f64,
}

/// Second-order expansion of the slow OU mean path around `t = 0`.
pub fn arc_from_ou(k: f64, alpha_prime: f64, z0: f64) -> Result<VolArc> {
    if !(k > 0.0) {
        return Err(Error::InvalidParams(vec![
            ParamViolation::NonPositiveSpeed { k },
        ]));
    }
    if arc_is_degenerate(z0, alpha_prime) {
        return Err(Error::DegenerateArc(z0));
    }
    let gap = z0 - alpha_prime;
    Ok(VolArc {
        p_coef: 0.5 * gap * k * k,
        q_coef: -gap * k,
        r_coef: z0,
        sigma_min: SIGMA_MIN,
    })
}

impl VolArc {
    pub fn with_sigma_min(mut self, sigma_min: f64) -> Self {
        self.sigma_min = sigma_min;
        self
    }

    /// Raw arc value, without the floor.
    pub fn value(&self, t: f64) -> f64 {
        (self.p_coef * t + self.q_coef) * t + self.r_coef
    }

    /// Effective volatility at time `t`, clipped from below at `sigma_min`.
    pub fn effective_vol(&self, t: f64) -> f64 {
        self.value(t).max(self.sigma_min)
    }
}

/// `1 - k t + (k t)^2 / 2` over `1 - k t`.
pub fn l_factor(k: f64, t: f64) -> Result<f64> {
    let kt = k * t;
    let d = 1.0 - kt;
    if d.abs() <= SINGULARITY_TOL {
        return Err(Error::SingularL(d.abs()));
    }
    Ok((d + 0.5 * kt * kt) / d)
}

/// `1 + l`, in the factored form `(2 - k t)^2 / (2 (1 - k t))`.
pub fn one_plus_l(k: f64, t: f64) -> Result<f64> {
    let kt = k * t;
    let d = 1.0 - kt;
    if d.abs() <= SINGULARITY_TOL {
        return Err(Error::SingularL(d.abs()));
    }
    let w = 2.0 - kt;
    Ok(w * w / (2.0 * d))
}

/// `1 / (1 + l) = 2 (1 - k t) / (2 - k t)^2`. Finite through `k t = 1`, where
/// it vanishes; only `k t = 2` is a pole.
#[inline]
pub fn inv_one_plus_l(k: f64, t: f64) -> f64 {
    let kt = k * t;
    let w = 2.0 - kt;
    2.0 * (1.0 - kt) / (w * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    FloatingStrike,
    FixedStrike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Call,
    Put,
}

/// Contract terms. `strike` is present exactly for fixed-strike contracts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub style: Style,
    pub kind: Kind,
    pub maturity: f64,
    pub strike: Option<f64>,
}

impl OptionSpec {
    pub fn floating(kind: Kind, maturity: f64) -> Result<Self> {
        Self::new(Style::FloatingStrike, kind, maturity, None)
    }

    pub fn fixed(kind: Kind, maturity: f64, strike: f64) -> Result<Self> {
        Self::new(Style::FixedStrike, kind, maturity, Some(strike))
    }

    pub fn new(style: Style, kind: Kind, maturity: f64, strike: Option<f64>) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "maturity T = {maturity} must be > 0"
            )));
        }
        match (style, strike) {
            (Style::FloatingStrike, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "floating-strike contracts take no strike K".into(),
                ))
            }
            (Style::FixedStrike, None) => {
                return Err(Error::InvalidConfig(
                    "fixed-strike contracts require a strike K".into(),
                ))
            }
            (Style::FixedStrike, Some(k)) if !(k > 0.0 && k.is_finite()) => {
                return Err(Error::NonPositiveStrike(k))
            }
            _ => {}
        }
        Ok(Self {
            style,
            kind,
            maturity,
            strike,
        })
    }
}

/// Valuation point in transformed coordinates `s = ln x`, `u = t ln(g/x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub t: f64,
    pub s: f64,
    pub u: f64,
}

impl MarketState {
    /// From spot `x` and running geometric average `g`. At `t = 0` the
    /// average of an empty window is the spot itself, so `u = 0`.
    pub fn from_prices(t: f64, x: f64, g: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "valuation time t = {t} must be >= 0"
            )));
        }
        let (s, u) = state_transform(x, g, t)?;
        Ok(Self { t, s, u })
    }

    /// Directly from log coordinates; used for sensitivities in `s` and `u`.
    pub fn from_log_state(t: f64, s: f64, u: f64) -> Self {
        Self { t, s, u }
    }

    pub fn spot(&self) -> f64 {
        self.s.exp()
    }

    /// Running geometric average implied by `(t, s, u)`.
    pub fn average(&self) -> f64 {
        if self.t > 0.0 {
            (self.s + self.u / self.t).exp()
        } else {
            self.spot()
        }
    }
}

pub fn state_transform(x: f64, g: f64, t: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::NonPositivePrice {
            name: "x",
            value: x,
        });
    }
    if !(g > 0.0) {
        return Err(Error::NonPositivePrice {
            name: "g",
            value: g,
        });
    }
    let s = x.ln();
    let u = if t == 0.0 || g == x {
        0.0
    } else {
        t * (g / x).ln()
    };
    Ok((s, u))
}

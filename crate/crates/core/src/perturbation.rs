//! First-order asymptotic price `C0 + sqrt(eps) C1` around the l-modified
//! Black-Scholes GAO price.
//!
//! `C0 = gamma(t) * B0`, where `gamma` is the modification factor driven by
//! `M = theta(B0) / B0`, and `C1` applies a third-order differential
//! operator in `u` with time weights `I0..I5` (integrals of powers of
//! `tau` against `1/(1 + l(tau))`).

use serde::{Deserialize, Serialize};

use crate::closed_form::{self, GreekSet, ThetaMethod, HORIZON_TOL};
use crate::error::{Error, Result};
use crate::model::{
    inv_one_plus_l, MarketState, ModelParams, OptionSpec, Style, VolArc, SINGULARITY_TOL,
};
use crate::quadrature;

/// Relative guard on `B0` before forming `M`.
pub const PRICE_FLOOR_REL: f64 = 1e-12;

/// Closed form and quadrature may differ by at most this (relative) before
/// the quadrature value takes over.
pub const INTEGRAL_AGREEMENT: f64 = 1e-6;

/// Absolute tolerance of the quadrature oracle.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// The identifiable correction scale `v_eps = sqrt(eps) * V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionParams {
    pub v_eps: f64,
}

impl CorrectionParams {
    pub fn from_v_eps(v_eps: f64) -> Result<Self> {
        if !v_eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "v_eps = {v_eps} is not finite"
            )));
        }
        Ok(Self { v_eps })
    }

    pub fn from_pair(v: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {epsilon} must be > 0"
            )));
        }
        Self::from_v_eps(epsilon.sqrt() * v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IIntegrals {
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
}

impl IIntegrals {
    pub const ZERO: IIntegrals = IIntegrals {
        i0: 0.0,
        i1: 0.0,
        i2: 0.0,
        i3: 0.0,
        i4: 0.0,
        i5: 0.0,
    };

    pub fn as_array(&self) -> [f64; 6] {
        [self.i0, self.i1, self.i2, self.i3, self.i4, self.i5]
    }

    /// Fill `I4`, `I5` from `I0..I3` by expanding `(T - tau)^2` and `(T - tau)^3`.
    /// Cancels badly when `T - t` is small; [`i_integrals_closed`] uses
    /// [`reversed_moment`] instead.
    pub fn with_combinations(i0: f64, i1: f64, i2: f64, i3: f64, maturity: f64) -> Self {
        let big = maturity;
        Self {
            i0,
            i1,
            i2,
            i3,
            i4: i2 - 2.0 * big * i1 + big * big * i0,
            i5: -i3 + 3.0 * big * i2 - 3.0 * big * big * i1 + big.powi(3) * i0,
        }
    }
}

/// `gamma(t) = [((2-kT)/(2-kt))^{2/k} exp((T-t)((2-kt)(2-kT)+2)/((2-kt)(2-kT)))]^M`,
/// evaluated in log space.
pub fn modification_factor(k: f64, t: f64, maturity: f64, m: f64) -> Result<f64> {
    let a = 2.0 - k * t;
    let b = 2.0 - k * maturity;
    if a.abs() <= SINGULARITY_TOL || b.abs() <= SINGULARITY_TOL {
        return Err(Error::SingularGamma {
            kt: k * t,
            k_maturity: k * maturity,
        });
    }
    let ratio = b / a;
    if !(ratio > 0.0) {
        return Err(Error::BranchError(ratio));
    }
    if m == 0.0 || t == maturity {
        return Ok(1.0);
    }
    let log_base = (2.0 / k) * ratio.ln() + (maturity - t) * (a * b + 2.0) / (a * b);
    Ok((m * log_base).exp())
}

/// `M = theta / B0`, guarded against numerically dead options.
pub fn m_exponent(b0: f64, theta_b0: f64, price_floor: f64) -> Result<f64> {
    if !(b0.abs() > price_floor) {
        return Err(Error::VanishingPrice(b0));
    }
    Ok(theta_b0 / b0)
}

fn check_integral_domain(k: f64, t: f64, maturity: f64) -> Result<()> {
    if !(k > 0.0) || !(t <= maturity) || !t.is_finite() || !maturity.is_finite() {
        return Err(Error::SingularIntegral { k, t, maturity });
    }
    if !(2.0 - k * maturity > SINGULARITY_TOL) {
        return Err(Error::SingularIntegral { k, t, maturity });
    }
    Ok(())
}

/// Closed-form `I0..I3`; `I4`, `I5` from the binomial combinations.
pub fn i_integrals_closed(k: f64, t: f64, maturity: f64) -> Result<IIntegrals> {
    check_integral_domain(k, t, maturity)?;
    if t == maturity {
        return Ok(IIntegrals::ZERO);
    }
    let big = maturity;
    let a = 2.0 - k * t;
    let b = 2.0 - k * big;
    let ratio = b / a;
    if !(ratio > 0.0) {
        return Err(Error::BranchError(ratio));
    }
    let log_r = ratio.ln();
    let inv_ab = 1.0 / (a * b);
    let span = big - t;
    let sq = (big - t) * (big + t);
    let cube = span * (big * big + big * t + t * t);
    let k2 = k * k;
    let reversed = |n| reversed_moment(k, t, big, n);

    let i0 = -2.0 / k * (k * span * inv_ab + log_r);
    let i1 = -2.0 / k2 * (k * span * (1.0 + 2.0 * inv_ab) + 3.0 * log_r);
    let i2 = -2.0 / (k2 * k) * (0.5 * k2 * sq + k * span * (3.0 + 4.0 * inv_ab) + 8.0 * log_r);
    let i3 = -2.0 / (k2 * k2)
        * (k2 * k / 3.0 * cube + 1.5 * k2 * sq + 8.0 * k * span * (1.0 + inv_ab) + 20.0 * log_r);
    Ok(IIntegrals {
        i0,
        i1,
        i2,
        i3,
        i4: reversed(2),
        i5: reversed(3),
    })
}

/// `int_t^T (T - tau)^n / (1 + l(tau)) dtau` for `kT < 2`.
///
/// With `x = T - tau`, `b = 2 - kT` and `z = kx/b` the weight is
/// `(2/b) [1/(1+z) - (1/b)/(1+z)^2]`, so the integral is
/// `(b/k)^(n+1) (2/b) int_0^Z z^n [1/(1+z) - (1/b)/(1+z)^2] dz`. Short spans
/// use the power series, which keeps full relative accuracy as `t -> T`.
pub fn reversed_moment(k: f64, t: f64, maturity: f64, n: u32) -> f64 {
    let b = 2.0 - k * maturity;
    let c = 1.0 - k * maturity;
    let big_z = k * (maturity - t) / b;
    let inner = if big_z < 0.5 {
        // sum_j (-1)^j ((c - j)/b) Z^(n+j+1) / (n+j+1)
        let mut sum = 0.0;
        let mut power = big_z.powi(n as i32 + 1);
        for j in 0..200 {
            let term = (c - j as f64) / b * power / (n + j + 1) as f64;
            sum += if j % 2 == 0 { term } else { -term };
            if j > 0 && term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            power *= big_z;
        }
        sum
    } else {
        let mut a = big_z.ln_1p();
        let mut bb = big_z / (1.0 + big_z);
        for m in 1..=n {
            let next_b = a - bb;
            a = big_z.powi(m as i32) / m as f64 - a;
            bb = next_b;
        }
        a - bb / b
    };
    (b / k).powi(n as i32 + 1) * (2.0 / b) * inner
}

/// Quadrature oracle: every `I_n` integrated directly from its defining
/// weight, including the `(T - tau)^2` and `(T - tau)^3` forms of `I4`, `I5`.
pub fn i_integrals_quadrature(k: f64, t: f64, maturity: f64) -> Result<IIntegrals> {
    if !(k > 0.0) || !(t <= maturity) {
        return Err(Error::SingularIntegral { k, t, maturity });
    }
    let (lo, hi) = (k * t, k * maturity);
    if lo <= 2.0 + SINGULARITY_TOL && hi >= 2.0 - SINGULARITY_TOL {
        return Err(Error::PoleInInterval { k, t, maturity });
    }
    let big = maturity;
    let w = |tau: f64| inv_one_plus_l(k, tau);
    let q = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(quadrature::integrate(f, t, big, QUADRATURE_TOL)?.value)
    };
    Ok(IIntegrals {
        i0: q(&|x| w(x))?,
        i1: q(&|x| x * w(x))?,
        i2: q(&|x| x * x * w(x))?,
        i3: q(&|x| x * x * x * w(x))?,
        i4: q(&|x| (big - x).powi(2) * w(x))?,
        i5: q(&|x| (big - x).powi(3) * w(x))?,
    })
}

/// Closed form, cross-checked against quadrature. Quadrature wins on any
/// disagreement beyond [`INTEGRAL_AGREEMENT`].
pub fn i_integrals(k: f64, t: f64, maturity: f64) -> Result<IIntegrals> {
    let closed = i_integrals_closed(k, t, maturity)?;
    let quad = i_integrals_quadrature(k, t, maturity)?;
    let disagree = closed
        .as_array()
        .iter()
        .zip(quad.as_array())
        .any(|(c, q)| (c - q).abs() > (INTEGRAL_AGREEMENT * q.abs()).max(1e-11));
    Ok(if disagree { quad } else { closed })
}

/// `V [I1 d/du - 2 I2 d^2/du^2 + I3 d^3/du^3] C0` for floating strikes.
pub fn c1_floating(v: f64, ii: &IIntegrals, greeks: &GreekSet) -> f64 {
    v * (ii.i1 * greeks.du1 - 2.0 * ii.i2 * greeks.du2 + ii.i3 * greeks.du3)
}

/// `V [I4 d^2/du^2 - I5 d^3/du^3] C0` for fixed strikes.
pub fn c1_fixed(v: f64, ii: &IIntegrals, greeks: &GreekSet) -> f64 {
    v * (ii.i4 * greeks.du2 - ii.i5 * greeks.du3)
}

pub fn c1(style: Style, v: f64, ii: &IIntegrals, greeks: &GreekSet) -> f64 {
    match style {
        Style::FloatingStrike => c1_floating(v, ii, greeks),
        Style::FixedStrike => c1_fixed(v, ii, greeks),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PricingOptions {
    /// Force `gamma = 1`.
    pub gamma_off: bool,
    pub theta: ThetaMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBreakdown {
    pub sigma: f64,
    pub b0: f64,
    pub theta_b0: f64,
    pub m_exponent: f64,
    pub gamma: f64,
    pub c0: f64,
    /// Correction operator applied to `C0` with `V = 1`.
    pub c1_unit: f64,
    /// `v_eps * c1_unit`, the term actually added to `c0`.
    pub c1: f64,
    pub v_eps: f64,
    pub price_hat: f64,
    pub integrals: IIntegrals,
    pub greeks: Option<GreekSet>,
}

/// Assembles `B0 -> theta -> M -> gamma -> C0 -> I -> Greeks -> C1 -> price`.
/// Errors carry the name of the stage that failed.
pub fn first_order_price(
    spec: &OptionSpec,
    state: &MarketState,
    arc: &VolArc,
    model: &ModelParams,
    v_eps: f64,
    opts: PricingOptions,
) -> Result<PriceBreakdown> {
    model.validate().map_err(Error::at("params"))?;
    CorrectionParams::from_v_eps(v_eps).map_err(Error::at("params"))?;
    let sigma = arc.effective_vol(state.t);
    let b0 = closed_form::bs_price(spec, state, sigma, model.r).map_err(Error::at("b0"))?;

    if spec.maturity - state.t < HORIZON_TOL {
        return Ok(PriceBreakdown {
            sigma,
            b0,
            theta_b0: 0.0,
            m_exponent: 0.0,
            gamma: 1.0,
            c0: b0,
            c1_unit: 0.0,
            c1: 0.0,
            v_eps,
            price_hat: b0,
            integrals: IIntegrals::ZERO,
            greeks: None,
        });
    }

    let theta_b0 = closed_form::b0_theta(spec, state, sigma, model.r, opts.theta)
        .map_err(Error::at("theta"))?;
    let floor = PRICE_FLOOR_REL * state.spot();
    let m = m_exponent(b0, theta_b0, floor).map_err(Error::at("m_exponent"))?;
    let gamma = if opts.gamma_off {
        1.0
    } else {
        modification_factor(model.k, state.t, spec.maturity, m).map_err(Error::at("gamma"))?
    };
    let c0 = gamma * b0;
    let integrals = i_integrals(model.k, state.t, spec.maturity).map_err(Error::at("integrals"))?;
    let greeks =
        closed_form::greeks(spec, state, sigma, model.r, gamma).map_err(Error::at("greeks"))?;
    let c1_unit = c1(spec.style, 1.0, &integrals, &greeks);
    let c1 = v_eps * c1_unit;
    Ok(PriceBreakdown {
        sigma,
        b0,
        theta_b0,
        m_exponent: m,
        gamma,
        c0,
        c1_unit,
        c1,
        v_eps,
        price_hat: c0 + c1,
        integrals,
        greeks: Some(greeks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Kind;

    #[test]
    fn gamma_examples() {
        assert_eq!(modification_factor(2.0, 0.4, 0.4, 3.7).unwrap(), 1.0);
        assert_eq!(modification_factor(2.0, 0.1, 0.4, 0.0).unwrap(), 1.0);
        // exp(ln 0.6 + 0.4 * 4.4 / 2.4)
        let g = modification_factor(2.0, 0.0, 0.4, 1.0).unwrap();
        assert!((g - 1.249_205_450_447_073_5).abs() < 1e-12);
    }

    #[test]
    fn gamma_guards() {
        assert!(matches!(
            modification_factor(2.0, 0.0, 1.0, 1.0),
            Err(Error::SingularGamma { .. })
        ));
        assert!(matches!(
            modification_factor(2.0, 0.5, 1.5, 1.0),
            Err(Error::BranchError(_))
        ));
    }

    #[test]
    fn m_examples() {
        assert_eq!(m_exponent(2.0, 1.0, 1e-10).unwrap(), 0.5);
        assert!(matches!(
            m_exponent(1e-11, 1.0, 1e-10),
            Err(Error::VanishingPrice(_))
        ));
    }

    #[test]
    fn i0_anchor() {
        let closed = i_integrals_closed(2.0, 0.0, 0.5).unwrap();
        let quad = i_integrals_quadrature(2.0, 0.0, 0.5).unwrap();
        // 0.5 - ln 2 with the sign flipped.
        let expected = std::f64::consts::LN_2 - 0.5;
        assert!((closed.i0 - expected).abs() < 1e-15);
        assert!((quad.i0 - expected).abs() < 1e-12);
    }

    #[test]
    fn reversed_moments_keep_relative_accuracy_near_expiry() {
        for (k, big) in [(2.0, 0.5), (1.3, 0.9), (0.4, 1.7)] {
            for span in [0.3, 1e-2, 1e-4, 1e-7] {
                let t = big - span;
                for n in [2, 3] {
                    // integrate in y = T - tau so 1 - k tau keeps its digits
                    let (b, c) = (2.0 - k * big, 1.0 - k * big);
                    let w = |y: f64| y.powi(n as i32) * 2.0 * (c + k * y) / (b + k * y).powi(2);
                    let tol = 1e-16 * span.powi(n as i32 + 1);
                    let q = quadrature::integrate(w, 0.0, big - t, tol).unwrap().value;
                    let c = reversed_moment(k, t, big, n);
                    assert!(
                        (c - q).abs() <= 1e-12 * q.abs(),
                        "{k} {big} {span} {n}: {c} {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn reversed_moments_match_combinations() {
        for (k, t, big) in [(2.0, 0.0, 0.5), (1.0, 0.2, 1.1), (0.5, 0.5, 3.0)] {
            let ii = i_integrals_closed(k, t, big).unwrap();
            let comb = IIntegrals::with_combinations(ii.i0, ii.i1, ii.i2, ii.i3, big);
            assert!((comb.i4 - ii.i4).abs() <= 1e-12 * ii.i4.abs());
            assert!((comb.i5 - ii.i5).abs() <= 1e-11 * ii.i5.abs());
        }
    }

    #[test]
    fn integrals_vanish_on_empty_interval() {
        assert_eq!(i_integrals_closed(1.3, 0.4, 0.4).unwrap(), IIntegrals::ZERO);
        assert_eq!(
            i_integrals_quadrature(1.3, 0.4, 0.4).unwrap(),
            IIntegrals::ZERO
        );
    }

    #[test]
    fn integral_guards() {
        assert!(matches!(
            i_integrals_closed(2.0, 0.0, 1.0),
            Err(Error::SingularIntegral { .. })
        ));
        assert!(matches!(
            i_integrals_quadrature(2.0, 0.5, 1.5),
            Err(Error::PoleInInterval { .. })
        ));
    }

    #[test]
    fn corrections_zero_cases() {
        let g = GreekSet {
            du1: -0.3,
            du2: 1.2,
            du3: -4.0,
            vega: 10.0,
            theta_b0: -1.0,
        };
        let ii = i_integrals_closed(2.0, 0.1, 0.5).unwrap();
        assert_eq!(c1_floating(0.0, &ii, &g), 0.0);
        assert_eq!(c1_fixed(0.0, &ii, &g), 0.0);
        assert_eq!(c1_floating(1.0, &IIntegrals::ZERO, &g), 0.0);
        assert_eq!(c1_fixed(1.0, &IIntegrals::ZERO, &g), 0.0);
    }

    #[test]
    fn correction_params_pair() {
        let c = CorrectionParams::from_pair(-0.5047, 0.001).unwrap();
        assert!((c.v_eps - 0.001f64.sqrt() * -0.5047).abs() < 1e-14);
        assert!(CorrectionParams::from_pair(1.0, 0.0).is_err());
    }

    #[test]
    fn reduces_to_c0_and_b0() {
        let model = ModelParams::illustration();
        let arc = model.arc().unwrap();
        let spec = OptionSpec::floating(Kind::Call, 0.5).unwrap();
        let st = MarketState::from_prices(0.2, 100.0, 103.0).unwrap();
        let b =
            first_order_price(&spec, &st, &arc, &model, 0.0, PricingOptions::default()).unwrap();
        assert_eq!(b.price_hat, b.c0);
        assert!((b.c0 - b.gamma * b.b0).abs() < 1e-14);
        let opts = PricingOptions {
            gamma_off: true,
            ..Default::default()
        };
        let b = first_order_price(&spec, &st, &arc, &model, 0.0, opts).unwrap();
        assert_eq!(b.gamma, 1.0);
        assert_eq!(b.price_hat, b.b0);
    }

    #[test]
    fn stage_named_in_errors() {
        let model = ModelParams::illustration();
        let arc = model.arc().unwrap();
        // k T = 2 makes gamma singular.
        let spec = OptionSpec::floating(Kind::Call, 1.0).unwrap();
        let st = MarketState::from_prices(0.2, 100.0, 100.0).unwrap();
        let err = first_order_price(&spec, &st, &arc, &model, -0.01, PricingOptions::default())
            .unwrap_err();
        match err {
            Error::Stage { stage, ref source } => {
                assert_eq!(stage, "gamma");
                assert!(matches!(**source, Error::SingularGamma { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Estimation of the group parameter from implied-volatility quotes.
//!
//! Each quote yields a regression point
//!
//! ```text
//! y = (I - sigma) * dC0/dsigma
//! x = r * sigma * (U C0) / D,   D = (1/(T-t)) [ (1/k) ln((2-kT)/(2-kt)) + (T-t)/((2-kT)(2-kt)) ]
//! ```
//!
//! where `U` is the first-order correction operator with `V = 1`. A pooled
//! ordinary least-squares line `y ~ a_eps x + d_eps` then gives, per
//! `(t, T)` cell, `v_eps = a_eps * 2 r sigma / (2 D)`.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Kind, MarketState, ModelParams, OptionSpec, VolArc, SINGULARITY_TOL};
use crate::perturbation::{first_order_price, PriceBreakdown, PricingOptions};

/// Relative vega floor (times spot) below which smile inversion is skipped.
pub const VEGA_FLOOR_REL: f64 = 1e-10;

/// Smallest usable `|D|`.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Contracts whose vegas stay positive and can therefore carry a smile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteStyle {
    FloatingCall,
    FixedPut,
}

impl QuoteStyle {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "floating_call" => Some(Self::FloatingCall),
            "fixed_put" => Some(Self::FixedPut),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FloatingCall => "floating_call",
            Self::FixedPut => "fixed_put",
        }
    }

    fn option_spec(&self, maturity: f64, strike: Option<f64>) -> Result<OptionSpec> {
        match self {
            Self::FloatingCall => OptionSpec::floating(Kind::Call, maturity),
            Self::FixedPut => OptionSpec::fixed(
                Kind::Put,
                maturity,
                strike
                    .ok_or_else(|| Error::InvalidConfig("fixed_put quote without strike".into()))?,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteRow {
    pub t: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub spot: f64,
    pub avg: f64,
    pub strike: Option<f64>,
    pub style: QuoteStyle,
    pub implied_vol: f64,
}

impl QuoteRow {
    /// Row-level invariants; the message is reported as a reject reason.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !(self.t >= 0.0 && self.t < self.maturity) {
            return Err(format!(
                "need 0 <= t < T (t = {}, T = {})",
                self.t, self.maturity
            ));
        }
        if !(self.spot > 0.0) {
            return Err(format!("spot = {} must be > 0", self.spot));
        }
        if !(self.avg > 0.0) {
            return Err(format!("avg = {} must be > 0", self.avg));
        }
        if !(self.implied_vol > 0.0 && self.implied_vol.is_finite()) {
            return Err(format!("implied_vol = {} must be > 0", self.implied_vol));
        }
        match (self.style, self.strike) {
            (QuoteStyle::FloatingCall, Some(_)) => {
                Err("strike must be empty for floating_call rows".into())
            }
            (QuoteStyle::FixedPut, None) => Err("fixed_put rows need a strike".into()),
            (QuoteStyle::FixedPut, Some(k)) if !(k > 0.0) => {
                Err(format!("strike = {k} must be > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn state(&self) -> Result<MarketState> {
        MarketState::from_prices(self.t, self.spot, self.avg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub a_eps: f64,
    pub d_eps: f64,
    pub r_squared: f64,
    pub n: usize,
    /// Standard errors; absent when there are no residual degrees of freedom.
    pub a_eps_se: Option<f64>,
    pub d_eps_se: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionPoint {
    pub x: f64,
    pub y: f64,
}

/// `D = (1/(T-t)) [(1/k) ln((2-kT)/(2-kt)) + (T-t)/((2-kT)(2-kt))]`.
pub fn regression_denominator(k: f64, t: f64, maturity: f64) -> Result<f64> {
    let a = 2.0 - k * t;
    let b = 2.0 - k * maturity;
    if a.abs() <= SINGULARITY_TOL || b.abs() <= SINGULARITY_TOL {
        return Err(Error::SingularDenominator(0.0));
    }
    let ratio = b / a;
    if !(ratio > 0.0) {
        return Err(Error::BranchError(ratio));
    }
    let span = maturity - t;
    if !(span > 0.0) {
        return Err(Error::SingularDenominator(span));
    }
    let d = (ratio.ln() / k + span / (a * b)) / span;
    if !(d.abs() >= DENOMINATOR_TOL) {
        return Err(Error::SingularDenominator(d));
    }
    Ok(d)
}

fn price_quote(q: &QuoteRow, arc: &VolArc, model: &ModelParams) -> Result<(PriceBreakdown, f64)> {
    let spec = q.style.option_spec(q.maturity, q.strike)?;
    let state = q.state()?;
    let b = first_order_price(&spec, &state, arc, model, 0.0, PricingOptions::default())?;
    let vega = b
        .greeks
        .map(|g| g.vega)
        .ok_or(Error::DegenerateHorizon(q.maturity - q.t))?;
    Ok((b, vega))
}

/// Regression coordinates of one quote.
pub fn regression_row(q: &QuoteRow, arc: &VolArc, model: &ModelParams) -> Result<RegressionPoint> {
    if let Err(reason) = q.check() {
        return Err(Error::InvalidConfig(reason));
    }
    let (b, vega) = price_quote(q, arc, model)?;
    let d = regression_denominator(model.k, q.t, q.maturity)?;
    Ok(RegressionPoint {
        x: model.r * b.sigma * b.c1_unit / d,
        y: (q.implied_vol - b.sigma) * vega,
    })
}

/// Ordinary least squares with two-pass centred sums.
pub fn ols_fit(points: &[RegressionPoint]) -> Result<RegressionFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 2 rows, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.y).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let scale = points.iter().map(|p| p.x * p.x).sum::<f64>();
    if !(sxx > 1e-24 * scale.max(f64::MIN_POSITIVE)) || !sxx.is_finite() {
        return Err(Error::DegenerateDesign(
            "regressor x has no variance".into(),
        ));
    }
    let a = sxy / sxx;
    let d = my - a * mx;
    let ss_res: f64 = points.iter().map(|p| (p.y - a * p.x - d).powi(2)).sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let (a_se, d_se) = if n > 2 {
        let s2 = ss_res / (nf - 2.0);
        (
            Some((s2 / sxx).sqrt()),
            Some((s2 * (1.0 / nf + mx * mx / sxx)).sqrt()),
        )
    } else {
        (None, None)
    };
    Ok(RegressionFit {
        a_eps: a,
        d_eps: d,
        r_squared,
        n,
        a_eps_se: a_se,
        d_eps_se: d_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParameter {
    pub v: f64,
    pub v_eps: f64,
}

/// `V = a (2 r sigma) / ((2/(T-t)) [...])` with `a = a_eps / sqrt(eps)`. The
/// same form serves floating calls and fixed puts.
pub fn v_from_fit(
    a_eps: f64,
    epsilon: f64,
    r: f64,
    sigma: f64,
    k: f64,
    t: f64,
    maturity: f64,
) -> Result<GroupParameter> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon = {epsilon} must be > 0"
        )));
    }
    let denom = 2.0 * regression_denominator(k, t, maturity)?;
    let root = epsilon.sqrt();
    let a = a_eps / root;
    let v = a * (2.0 * r * sigma) / denom;
    Ok(GroupParameter { v, v_eps: root * v })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ingested {
    pub rows: Vec<QuoteRow>,
    /// Source line of each accepted row.
    pub lines: Vec<u64>,
    pub rejects: Vec<Reject>,
    pub warnings: Vec<String>,
}

pub const QUOTE_COLUMNS: [&str; 7] = ["t", "T", "spot", "avg", "strike", "style", "implied_vol"];

/// Reads the quotes CSV. Header problems are errors; bad rows are collected
/// into `rejects` with their line numbers.
pub fn ingest_quotes<R: Read>(reader: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    let mut out = Ingested::default();
    if headers.iter().all(|h| h.is_empty()) {
        out.warnings
            .push("EmptyInput: quotes file has no content".into());
        return Ok(out);
    }
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(QUOTE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.rejects.push(Reject {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match parse_row(&record, &idx, line) {
            Ok(row) => match row.check() {
                Ok(()) => {
                    out.rows.push(row);
                    out.lines.push(line);
                }
                Err(reason) => out.rejects.push(Reject { line, reason }),
            },
            Err(e) => out.rejects.push(Reject {
                line,
                reason: e.to_string(),
            }),
        }
    }
    if out.rows.is_empty() && out.rejects.is_empty() {
        out.warnings
            .push("EmptyInput: quotes file has no data rows".into());
    }
    Ok(out)
}

pub fn ingest_quotes_path(path: impl AsRef<Path>) -> Result<Ingested> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    ingest_quotes(std::io::BufReader::new(file))
}

fn parse_row(record: &csv::StringRecord, idx: &[usize; 7], line: u64) -> Result<QuoteRow> {
    let field = |i: usize| record.get(idx[i]).unwrap_or("");
    let num = |i: usize| -> Result<f64> {
        let raw = field(i);
        raw.parse::<f64>().map_err(|e| Error::UnparseableField {
            line,
            field: QUOTE_COLUMNS[i].to_string(),
            reason: format!("{raw:?}: {e}"),
        })
    };
    let strike = match field(4) {
        "" => None,
        _ => Some(num(4)?),
    };
    let style = QuoteStyle::parse(field(5)).ok_or_else(|| Error::UnparseableField {
        line,
        field: "style".into(),
        reason: format!("{:?} is not floating_call or fixed_put", field(5)),
    })?;
    Ok(QuoteRow {
        t: num(0)?,
        maturity: num(1)?,
        spot: num(2)?,
        avg: num(3)?,
        strike,
        style,
        implied_vol: num(6)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub t: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub sigma: f64,
    pub n: usize,
    pub v: f64,
    pub v_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub style: QuoteStyle,
    pub a_eps: f64,
    pub d_eps: f64,
    pub r_squared: f64,
    pub n: usize,
    pub a_eps_se: Option<f64>,
    pub d_eps_se: Option<f64>,
    pub rejects: Vec<Reject>,
    pub v_eps_by_cell: Vec<CellEstimate>,
    /// `[min, max]` of `v_eps` over the cells.
    pub v_eps_range: [f64; 2],
    #[serde(skip)]
    pub points: Vec<RegressionPoint>,
}

/// Pooled regression over all rows of one style, then per-cell `v_eps`.
/// Rows that fail to price are added to the rejects; `lines` gives their
/// source lines (or row indices when empty).
pub fn calibrate(
    rows: &[QuoteRow],
    lines: &[u64],
    arc: &VolArc,
    model: &ModelParams,
) -> Result<CalibrationReport> {
    let style = match rows.first() {
        Some(r) => r.style,
        None => return Err(Error::DegenerateDesign("no quotes to fit".into())),
    };
    if rows.iter().any(|r| r.style != style) {
        return Err(Error::InvalidConfig(
            "quotes mix floating_call and fixed_put; fit one style at a time".into(),
        ));
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut used = Vec::with_capacity(rows.len());
    let mut rejects = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let line = lines.get(i).copied().unwrap_or(i as u64 + 1);
        match regression_row(row, arc, model) {
            Ok(p) if p.x.is_finite() && p.y.is_finite() => {
                points.push(p);
                used.push(row);
            }
            Ok(_) => rejects.push(Reject {
                line,
                reason: "non-finite regression coordinates".into(),
            }),
            Err(e) => rejects.push(Reject {
                line,
                reason: e.to_string(),
            }),
        }
    }
    let fit = ols_fit(&points)?;

    let mut cells: BTreeMap<(u64, u64), (f64, f64, usize)> = BTreeMap::new();
    for row in &used {
        cells
            .entry((row.t.to_bits(), row.maturity.to_bits()))
            .or_insert((row.t, row.maturity, 0))
            .2 += 1;
    }
    let mut by_cell = Vec::with_capacity(cells.len());
    for (t, maturity, n) in cells.into_values() {
        let sigma = arc.effective_vol(t);
        let g = v_from_fit(
            fit.a_eps,
            model.epsilon,
            model.r,
            sigma,
            model.k,
            t,
            maturity,
        )?;
        by_cell.push(CellEstimate {
            t,
            maturity,
            sigma,
            n,
            v: g.v,
            v_eps: g.v_eps,
        });
    }
    by_cell.sort_by(|a, b| {
        (a.maturity - a.t)
            .total_cmp(&(b.maturity - b.t))
            .then(a.t.total_cmp(&b.t))
    });
    let lo = by_cell
        .iter()
        .map(|c| c.v_eps)
        .fold(f64::INFINITY, f64::min);
    let hi = by_cell
        .iter()
        .map(|c| c.v_eps)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(CalibrationReport {
        style,
        a_eps: fit.a_eps,
        d_eps: fit.d_eps,
        r_squared: fit.r_squared,
        n: fit.n,
        a_eps_se: fit.a_eps_se,
        d_eps_se: fit.d_eps_se,
        rejects,
        v_eps_by_cell: by_cell,
        v_eps_range: [lo, hi],
        points,
    })
}

/// Grid node for smile evaluation. `moneyness` is `G/x` for floating calls
/// and `K/x` for fixed puts (whose running average is taken at the spot).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileNode {
    pub t: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub moneyness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub t: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub moneyness: f64,
    pub implied_vol: Option<f64>,
    pub flag: Option<String>,
}

impl SmileNode {
    pub fn quote(&self, style: QuoteStyle, spot: f64, implied_vol: f64) -> QuoteRow {
        let (avg, strike) = match style {
            QuoteStyle::FloatingCall => (self.moneyness * spot, None),
            QuoteStyle::FixedPut => (spot, Some(self.moneyness * spot)),
        };
        QuoteRow {
            t: self.t,
            maturity: self.maturity,
            spot,
            avg,
            strike,
            style,
            implied_vol,
        }
    }
}

/// First-order implied volatility `sigma + v_eps (U C0) / (dC0/dsigma)` at
/// each node; nodes that cannot be evaluated are flagged, not dropped.
pub fn smile_curve(
    arc: &VolArc,
    model: &ModelParams,
    v_eps: f64,
    style: QuoteStyle,
    spot: f64,
    grid: &[SmileNode],
) -> Vec<SmilePoint> {
    grid.iter()
        .map(|node| {
            let q = node.quote(style, spot, 1.0);
            let iv = price_quote(&q, arc, model).and_then(|(b, vega)| {
                if !(vega.abs() >= VEGA_FLOOR_REL * spot) {
                    return Err(Error::VanishingVega(vega));
                }
                Ok(b.sigma + v_eps * b.c1_unit / vega)
            });
            let (implied_vol, flag) = match iv {
                Ok(v) if v.is_finite() => (Some(v), None),
                Ok(v) => (None, Some(format!("non-finite implied vol {v}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            SmilePoint {
                t: node.t,
                maturity: node.maturity,
                moneyness: node.moneyness,
                implied_vol,
                flag,
            }
        })
        .collect()
}

/// Quotes lying exactly on `y = a_eps x + d_eps` (plus optional additive
/// noise in `y`), for round-trip tests and demos.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_quotes(
    arc: &VolArc,
    model: &ModelParams,
    style: QuoteStyle,
    spot: f64,
    grid: &[SmileNode],
    a_eps: f64,
    d_eps: f64,
    mut noise: impl FnMut() -> f64,
) -> Result<Vec<QuoteRow>> {
    grid.iter()
        .map(|node| {
            let probe = node.quote(style, spot, 1.0);
            let (b, vega) = price_quote(&probe, arc, model)?;
            if !(vega.abs() >= VEGA_FLOOR_REL * spot) {
                return Err(Error::VanishingVega(vega));
            }
            let d = regression_denominator(model.k, node.t, node.maturity)?;
            let x = model.r * b.sigma * b.c1_unit / d;
            let y = a_eps * x + d_eps + noise();
            Ok(node.quote(style, spot, b.sigma + y / vega))
        })
        .collect()
}

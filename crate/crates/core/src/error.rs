use thiserror::Error;

use crate::model::ParamViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate volatility arc: z0 equals alpha_prime ({0}), P would vanish")]
    DegenerateArc(f64),

    #[error("non-positive price input: {name} = {value}")]
    NonPositivePrice { name: &'static str, value: f64 },

    #[error("non-positive strike K = {0}")]
    NonPositiveStrike(f64),

    #[error("l-factor is singular: |1 - k t| = {0:e} is within tolerance")]
    SingularL(f64),

    #[error("modification factor is singular: 2 - k t or 2 - k T within tolerance (k t = {kt}, k T = {k_maturity})")]
    SingularGamma { kt: f64, k_maturity: f64 },

    #[error("log branch error: (2 - k T)/(2 - k t) = {0} is not positive")]
    BranchError(f64),

    #[error("degenerate horizon: T - t = {0:e}")]
    DegenerateHorizon(f64),

    #[error("B0 = {0:e} is below the price floor; the modification exponent is undefined")]
    VanishingPrice(f64),

    #[error("I-integrals undefined for k = {k}, t = {t}, T = {maturity} (requires k T < 2)")]
    SingularIntegral { k: f64, t: f64, maturity: f64 },

    #[error("integrand pole k tau = 2 lies inside [{t}, {maturity}] for k = {k}")]
    PoleInInterval { k: f64, t: f64, maturity: f64 },

    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    QuadratureDiverged { estimate: f64, error: f64, tol: f64 },

    #[error("regression denominator is singular: {0:e}")]
    SingularDenominator(f64),

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("vega {0:e} is below the inversion floor")]
    VanishingVega(f64),

    #[error("missing column `{0}` in quotes header")]
    MissingColumn(String),

    #[error("line {line}: cannot parse field `{field}`: {reason}")]
    UnparseableField {
        line: u64,
        field: String,
        reason: String,
    },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("correlation matrix is not positive definite")]
    PdFactorizationFailure,

    #[error("invalid model parameters: {}", fmt_violations(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported contract: {0}")]
    UnsupportedContract(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Innermost error, skipping stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

fn fmt_violations(v: &[ParamViolation]) -> String {
    v.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

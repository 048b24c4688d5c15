use crate::exprlang::{DiffError, EvalError, ParseError};
use crate::geometry::Point;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{op}: {source} at (p, q, t) = ({p}, {q}, {t})")]
    Domain { op: &'static str, source: EvalError, p: f64, q: f64, t: f64 },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid primitive `{name}`: {reason}")]
    InvalidPrimitive { name: String, reason: String },
    #[error("form is not closed: d(form) = {residual:e} at {at}")]
    NotClosed { residual: f64, at: Point },
    #[error("{op}: quadrature did not converge on [{a}, {b}] (bisection depth {depth})")]
    QuadratureNonconvergence { op: &'static str, a: f64, b: f64, depth: u32 },
    #[error("{op}: requires a {expected} model")]
    WrongManifold { op: &'static str, expected: &'static str },
    #[error("implicit midpoint iteration did not converge at t = {t}")]
    IntegratorNonconvergence { t: f64 },
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),
    #[error("support claim violated: |F| = {value:e} at {at}")]
    SupportViolation { value: f64, at: Point },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("form is not exact on the window: path discrepancy {discrepancy:e} at {at}")]
    NonExactForm { discrepancy: f64, at: Point },
    #[error("function is not constant outside the support: collar oscillation {oscillation:e} exceeds {tol:e}")]
    NotConstantOutsideSupport { oscillation: f64, tol: f64 },
    #[error("{op}: expected {expected} normalization")]
    WrongNormalization { op: &'static str, expected: &'static str },
    #[error("{at} is not a fixed point (residual {residual:e})")]
    NotFixedPoint { residual: f64, at: Point },
    #[error("point {at} lies outside the grid window")]
    OutsideWindow { at: Point },
    #[error("trajectory gap: step of size up to {jump:e} cannot be unwrapped on circumference {circumference}")]
    TrajectoryGap { jump: f64, circumference: f64 },
    #[error("degenerate bound: |P(f)| = {value:e} is zero within tolerance")]
    DegenerateBound { value: f64 },
    #[error("degenerate generator set: every generator has zero oscillation")]
    DegenerateGenerators,
    #[error("radius cap {0} exceeds the limit of 8")]
    RadiusCapTooLarge(usize),
    #[error("mismatched grids: {0}")]
    GridMismatch(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, source: EvalError, x: Point, t: f64) -> Error {
        Error::Domain { op, source, p: x.p, q: x.q, t }
    }

    /// Numerical failures as opposed to invalid input or violated hypotheses.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonconvergence { .. }
                | Error::IntegratorNonconvergence { .. }
                | Error::Domain { .. }
                | Error::TrajectoryGap { .. }
        )
    }

    /// Errors caused by malformed input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::InvalidWindow(_)
                | Error::InvalidGrid(_)
                | Error::InvalidPrimitive { .. }
                | Error::InvalidSettings(_)
                | Error::UnknownGenerator(_)
                | Error::InvalidWord(_)
                | Error::OutsideWindow { .. }
                | Error::RadiusCapTooLarge(_)
                | Error::WrongManifold { .. }
                | Error::SupportViolation { .. }
                | Error::NotClosed { .. }
                | Error::Diff(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

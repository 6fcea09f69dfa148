//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("empty expression")]
    EmptyExpression,

    #[error("unknown builtin surface `{0}`")]
    UnknownBuiltin(String),

    #[error("builtin `{surface}`: invalid parameter `{param}`")]
    InvalidBuiltinParam { surface: String, param: String },

    #[error("point ({u1}, {u2}) outside surface domain")]
    DomainViolation { u1: f64, u2: f64 },

    #[error("non-finite evaluation at ({u1}, {u2})")]
    NonFinite { u1: f64, u2: f64 },

    #[error("rank-deficient Jacobian at ({u1}, {u2}): det g = {det}")]
    RankDeficient { u1: f64, u2: f64, det: f64 },

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid strip: {0}")]
    InvalidStrip(String),

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("knot {0} outside existing knot range")]
    KnotOutOfRange(f64),

    #[error("knot multiplicity would exceed degree+1 at {0}")]
    MultiplicityOverflow(f64),

    #[error("basis index {index} out of range (dimension {dim})")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("parameter {0} outside knot range")]
    ParameterOutOfRange(f64),

    #[error("control grid is {got_rows}x{got_cols}, space needs {want_rows}x{want_cols}")]
    ControlGridMismatch {
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("singular Gram matrix in least-squares fit")]
    SingularGram,

    #[error("invalid elasticity parameters: {0}")]
    InvalidElasticity(String),

    #[error("metric left the positive cone during state swap")]
    IndefiniteSwappedMetric,

    #[error("center-curve speed drifted by {drift:.3e} (tolerance {tol:.1e}); increase step count")]
    SpeedDrift { drift: f64, tol: f64 },

    #[error("g11 = {0:.3e} on the center line is too close to degenerate")]
    DegenerateCenterMetric(f64),

    #[error("degenerate Jacobian (condition estimate {cond:.3e}); rigid modes must be pinned")]
    DegenerateJacobian { cond: f64 },

    #[error("non-finite Newton update")]
    NonFiniteUpdate,

    #[error("Newton did not converge in {max_iter} iterations (stage `{stage}`, residual {residual:.3e})")]
    NonConvergence {
        stage: String,
        max_iter: usize,
        residual: f64,
    },

    #[error("SVG export supports degrees 1..=3, got ({0}, {1})")]
    UnsupportedDegree(usize, usize),

    #[error("strip {index} does not fit the page ({width:.1}mm x {height:.1}mm usable)")]
    StripTooLarge { index: usize, width: f64, height: f64 },

    #[error("strain field is empty")]
    EmptyField,

    #[error("{0}")]
    Invalid(String),
}

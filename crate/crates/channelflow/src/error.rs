//! Error types shared by the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("channel width is non-positive at x1 = {x1}: f = {width}")]
    NonPositiveWidth { x1: f64, width: f64 },
    #[error("declared derivative bound beta = {declared} exceeded: measured {measured} at x1 = {x1}")]
    DerivativeBoundViolated { declared: f64, measured: f64, x1: f64 },
    #[error("sample grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("beta = 0 (straight walls): beta* = 1/(4 beta) is undefined")]
    BetaZero,
    #[error("window ({lo}, {hi}) has non-positive length")]
    DegenerateWindow { lo: f64, hi: f64 },
    #[error("tabulated k(t) is not strictly increasing near t = {t}")]
    NonMonotoneK { t: f64 },
    #[error("{what} cannot be bracketed within the tabulated horizon t_max = {t_max}")]
    HorizonTooShort { what: &'static str, t_max: f64 },
    #[error("t = {t} outside tabulated horizon")]
    OutsideHorizon { t: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature did not converge on [{a}, {b}] (refinement limit reached, err ~ {err:e})")]
    QuadratureNotConverged { a: f64, b: f64, err: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarrierError {
    #[error("point ({x1}, {x2}) lies outside the channel")]
    OutsideDomain { x1: f64, x2: f64 },
    #[error("sample with g != 0 violates the support band at ({x1}, {x2})")]
    SupportViolation { x1: f64, x2: f64 },
    #[error("weight field is constant in x2: zero denominator")]
    ZeroDenominator,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("cell ({i}, {j}) has non-positive Jacobian at a quadrature point")]
    JacobianNonPositive { i: usize, j: usize },
    #[error("mesh needs nx, ny >= 2 (got {nx} x {ny})")]
    MeshTooCoarse { nx: usize, ny: usize },
    #[error("velocity/pressure pairing is rank deficient (inf-sup ~ {infsup:e})")]
    RankDeficient { infsup: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("factorization hit an (effectively) zero pivot at row {row}")]
    SingularSystem { row: usize },
    #[error("Newton Jacobian is singular")]
    JacobianSingular,
    #[error("iteration did not converge: residual {residual:e} after {iters} iterations")]
    NotConverged { residual: f64, iters: usize },
    #[error("flux continuation stalled; last converged flux {last_phi}")]
    ContinuationStalled { last_phi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("piece {piece} is not star-like: ray from ({bx}, {by}) towards ({rx}, {ry}) exits the piece")]
    NotStarLike { piece: usize, bx: f64, by: f64, rx: f64, ry: f64 },
    #[error("divergence data has nonzero mean: |mean| = {mean:e}")]
    IncompatibleData { mean: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("fitting window too short: need T at least 3x the fitting window")]
    WindowTooShort,
    #[error("comparison hypothesis violated at grid index {index} (t = {t}): {what}")]
    HypothesisViolated { index: usize, t: f64, what: String },
}

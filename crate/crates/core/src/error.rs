use num_complex::Complex64;
use thiserror::Error;

/// Coarse classification used by frontends to map failures onto exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or out-of-contract input.
    Input,
    /// A numerical procedure could not deliver a result.
    Numeric,
    /// A checked identity or invariant failed.
    Property,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("interval [{a}, {b}] is not a finite interval with a < b")]
    BadInterval { a: f64, b: f64 },
    #[error("coefficient {which} is not positive at x = {x} (value {value})")]
    NonPositiveCoefficient { which: &'static str, x: f64, value: f64 },
    #[error("bad coefficient grid: {0}")]
    BadGrid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integrator failed near x = {x} for z = {z}")]
    IntegratorFailure { x: f64, z: Complex64 },
    #[error("z = {z} is (numerically) a Dirichlet eigenvalue")]
    DirichletEigenvalue { z: Complex64 },
    #[error("solution paths live on different grids or spectral parameters")]
    GridMismatch,
    #[error("Gram matrices from quadrature and Wronskian formulas differ by {residual:e}")]
    GramMismatch { residual: f64 },
    #[error("boundary pair has rank {rank} < 2")]
    RankDeficient { rank: usize },
    #[error("boundary pair violates A J A* = B J B* (residual {residual:e})")]
    NotLagrangian { residual: f64 },
    #[error("z = {z} is (numerically) an eigenvalue of the reference operator")]
    SpectralPoint { z: Complex64 },
    #[error("connection matrix S is singular (rank {rank})")]
    SingularS { rank: usize },
    #[error("asymptotics need p = r = 1 identically")]
    WrongCoefficients,
    #[error("eigenvalue {lambda} sits on the window boundary; widen the window")]
    WindowEdgeEigenvalue { lambda: f64 },
    #[error("eigenvalue count mismatch: contour gives {contour}, scan found {scan}")]
    CountMismatch { contour: i64, scan: usize },
    #[error("minimal operator is not strictly positive (Dirichlet ground state {ground_state})")]
    NotStrictlyPositive { ground_state: f64 },
    #[error("logarithm path runs through the spectrum near z = {z}")]
    PathThroughSpectrum { z: Complex64 },
    #[error("eigenvalue sum tail estimate {estimate:e} exceeds the requested tolerance {tol:e}")]
    InsufficientEigs { estimate: f64, tol: f64 },
    #[error("spectral shift value {value} at lambda = {lambda} is not close to an integer")]
    NonIntegerValue { lambda: f64, value: f64 },
    #[error("det N of the target boundary condition vanishes")]
    DegenerateN,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            BadInterval { .. }
            | NonPositiveCoefficient { .. }
            | BadGrid(_)
            | UnknownPreset(_)
            | InvalidParameter(_)
            | RankDeficient { .. }
            | NotLagrangian { .. }
            | WrongCoefficients
            | GridMismatch
            | SingularS { .. }
            | DegenerateN
            | NotStrictlyPositive { .. } => ErrorClass::Input,
            GramMismatch { .. } | NonIntegerValue { .. } => ErrorClass::Property,
            _ => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

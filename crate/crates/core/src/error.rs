use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimated error {estimate:e}); the integrand looks pathological")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("p = {p} is not an eigen-wavenumber (relative residual {residual:e})")]
    NotARoot { p: f64, residual: f64 },

    #[error("found only {found} of {requested} roots below p = {p_max} before the grid cap")]
    BracketExhausted {
        found: usize,
        requested: usize,
        p_max: f64,
    },

    #[error("tip inertia J = {given} is not exceptional for the requested mode; nearest entry is J_{nearest_ell} = {nearest_j}")]
    InertiaMismatch {
        given: f64,
        nearest_ell: u32,
        nearest_j: f64,
    },

    #[error("relative tolerance {rel_tol:e} exceeds half the minimal relative gap {half_gap:e} of the exceptional set")]
    ToleranceTooLarge { rel_tol: f64, half_gap: f64 },

    #[error("tip inertia J = {0} is not in the exceptional set")]
    NotExceptional(f64),

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("step size underflow at t = {t}: dt = {dt:e} below floor {floor:e}")]
    StepUnderflow { t: f64, dt: f64, floor: f64 },

    #[error("trajectory horizon {horizon} shorter than required {required}")]
    HorizonTooShort { horizon: f64, required: f64 },

    #[error("function violates the clamped condition at x = 0 (u = {value:e}, u' = {slope:e})")]
    ClampViolation { value: f64, slope: f64 },

    #[error("no samples inside window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
}

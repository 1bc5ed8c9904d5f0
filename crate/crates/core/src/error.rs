use num_complex::Complex64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("reservoir coupling is not dissipative: -i(K' - K'^H) has eigenvalue {eigenvalue:e} above tolerance {tolerance:e}")]
    NonDissipativeReservoir { eigenvalue: f64, tolerance: f64 },

    #[error("rate `{name}` must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,

    #[error("no bracket: {count} eigenvalues below the real axis at both ends of [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64, count: usize },

    #[error("propagator evaluated on the real axis at omega = {omega}; pass an explicit branch")]
    OnRealAxis { omega: f64 },

    #[error("k = {k} hits the real pole {pole} of the transmission coefficient")]
    PoleOnGrid { k: f64, pole: Complex64 },

    #[error("matrix is not diagonalizable (defect measure {defect_measure:e})")]
    Defective { defect_measure: f64 },

    #[error("scattering system is singular at k = {k}")]
    SingularSystem { k: f64 },

    #[error("energy {energy} does not belong to a bound state")]
    NotABoundState { energy: Complex64 },

    #[error("transmission zero on the real axis at k = {k}; the winding number is undefined")]
    ZeroOnContour { k: f64 },

    #[error("transmission pole on the real axis at k = {k}; the winding number is undefined")]
    PoleOnContour { k: f64 },

    #[error("invalid k span: {0}")]
    InvalidSpan(String),

    #[error("phase refinement exceeded {points} grid points")]
    RefinementCap { points: usize },

    #[error("accumulated phase gives non-integer winding {winding}")]
    WindingNotInteger { winding: f64 },

    #[error("T-matrix denominator vanishes")]
    PoleHit,

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid run specification: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

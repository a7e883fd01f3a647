use thiserror::Error;

#[derive(Debug, Error)]
pub enum LieError {
    #[error("unsupported gauge group `{0}` (expected su or so)")]
    UnsupportedGroup(String),
    #[error("{family}({n}) is not supported, need N >= {min}")]
    BadRank { family: &'static str, n: usize, min: usize },
    #[error("coefficient length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("structure constants are not antisymmetric (residual {0:e})")]
    NotAntisymmetric(f64),
    #[error("Jacobi identity violated (residual {0:e})")]
    JacobiViolated(f64),
    #[error("degenerate Killing metric (smallest eigenvalue {0:e}); algebra is not compact semisimple")]
    DegenerateMetric(f64),
    #[error("algebra has no defining-representation matrices attached")]
    NoRepresentation,
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("shape mismatch for {what}: expected {expected} values, found {found}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    #[error("time step {dt} violates the stability bound |dt| <= {bound}")]
    CflViolated { dt: f64, bound: f64 },
    #[error("gauge function at site {site} is not unitary (residual {residual:e})")]
    NotUnitary { site: usize, residual: f64 },
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("right-hand side has a kernel component {component:e} above tolerance {tol:e} (kernel dimension {kernel_dim})")]
    RankDeficient { component: f64, tol: f64, kernel_dim: usize },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Error)]
pub enum FockError {
    #[error("mode index {mode} out of range for {modes} modes")]
    BadMode { mode: usize, modes: usize },
    #[error("symbol degree {degree} exceeds the particle cutoff {n_max}")]
    DegreeExceedsCutoff { degree: usize, n_max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sample outside the validated coherent-tail region (tail {tail:e} > {tol:e})")]
    TailRegion { tail: f64, tol: f64 },
    #[error("dense dimension {dim} exceeds the limit {limit}")]
    DenseLimit { dim: usize, limit: usize },
    #[error("mode basis: {0}")]
    ModeBasis(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("safe block is empty: n_max {n_max} with symbol degree {degree}")]
    EmptySafeBlock { n_max: usize, degree: usize },
    #[error("sector index {0} out of range")]
    BadSector(usize),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error("quadrature order {order} insufficient: order-doubling disagreement {disagreement:e}")]
    QuadratureInsufficient { order: usize, disagreement: f64 },
    #[error("Taylor order {order} insufficient: remainder estimate {remainder:e} above {tol:e}")]
    TaylorRemainder { order: usize, remainder: f64, tol: f64 },
    #[error("Gauss-Hermite step path supports at most 2 modes, got {0}")]
    TooManyModesForQuadrature(usize),
    #[error("invalid propagation configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

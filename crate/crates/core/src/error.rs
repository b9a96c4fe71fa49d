use thiserror::Error;

/// Errors produced by graph construction, the operators built on top of it,
/// and the file loaders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("node index out of range: {index} (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("edge ({i}, {j}) has non-positive or non-finite weight {weight}")]
    NonPositiveWeight { i: usize, j: usize, weight: f64 },

    #[error("explicit self-loop at node {0}")]
    SelfLoopEdge(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("node {node} has non-positive or non-finite measure {value}")]
    NonPositiveMeasure { node: usize, value: f64 },

    #[error("measure has length {got}, expected {expected}")]
    MeasureLength { expected: usize, got: usize },

    #[error("node {0} is isolated; random-walk presets need degree >= 1")]
    IsolatedNode(usize),

    #[error("attention scores are asymmetric at ({0}, {1})")]
    AsymmetricScores(usize, usize),

    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("row {row} is not stochastic (sum = {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("transition support is asymmetric at ({0}, {1})")]
    AsymmetricSupport(usize, usize),

    #[error("detailed balance fails on edge ({0}, {1})")]
    NotReversible(usize, usize),

    #[error("transition support is not connected")]
    DisconnectedSupport,

    #[error("node function has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("node function needs at least one column")]
    ZeroWidth,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("p-norm requires p >= 1, got {0}")]
    InvalidP(f64),

    #[error("eigensolver failed to converge")]
    NumericalFailure,

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("operator has no strictly positive eigenvalue")]
    DegenerateSpectrum,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("step size {dt} exceeds the stability limit {limit}")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("time {t} is not an integer multiple of step {dt}")]
    InvalidTimeGrid { t: f64, dt: f64 },

    #[error("initial condition is constant (zero Dirichlet energy)")]
    ConstantInitialCondition,

    #[error("graph is not sub-stochastic at node {0}")]
    NotSubStochastic(usize),

    #[error("invalid layer dimensions: {0}")]
    InvalidDims(String),

    #[error("need at least {needed} recorded depths, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("all recorded energies are zero or underflowed")]
    AllZeroEnergies,

    #[error("tail fraction must lie in (0, 1], got {0}")]
    InvalidTailFraction(f64),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no measure source: give a measure file or a preset")]
    MissingMeasure,

    #[error("measure file and preset are mutually exclusive")]
    ConflictingMeasure,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the algebra, the simulator and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),

    #[error("refusing to enumerate the span of {rank} vectors (limit {limit})")]
    SpanTooLarge { rank: usize, limit: usize },

    #[error("register {0} does not exist in this layout")]
    UnknownRegister(usize),

    #[error("bit {bit} is outside register {register} of width {width}")]
    UnknownBit { register: usize, bit: usize, width: u32 },

    #[error("layout needs {width} bits but the cap is {cap}")]
    LayoutTooWide { width: u32, cap: u32 },

    #[error("state support would grow to {size} amplitudes (cap {cap})")]
    SupportCap { size: usize, cap: usize },

    #[error("value {value} does not fit in a register of {width} bits")]
    ValueOutOfRange { value: u64, width: u32 },

    #[error("control and target address the same qubit")]
    OverlappingQubits,

    #[error("source and target register must differ")]
    SameRegister,

    #[error("phase must have unit modulus, got |{0}|")]
    NonUnitPhase(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("{bits} codomain bits cannot label {cosets} cosets")]
    CodomainTooSmall { bits: usize, cosets: u128 },

    #[error("entry {pivot} of {element} is not 1")]
    InvalidPivot { element: String, pivot: usize },

    #[error("vectors are linearly dependent")]
    DependentVectors,

    #[error("procedure contains a measurement and cannot be inverted")]
    MeasurementInProcedure,

    #[error("procedure applies the oracle but none was supplied")]
    MissingOracle,

    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),

    #[error("known elements are not all orthogonal to the hidden subgroup ({0})")]
    NotOrthogonal(String),

    #[error("promise violated: {0}")]
    PromiseViolation(String),

    #[error("query budget {budget} exceeds the {domain} points of the domain")]
    BudgetTooLarge { budget: u64, domain: u64 },

    #[error("candidate {0} is not compatible with the transcript")]
    IncompatibleCandidate(String),

    #[error("group of order {order} exceeds the cap {cap}")]
    GroupTooLarge { order: u128, cap: usize },

    #[error("{zeta} does not generate the multiplicative group mod {p}")]
    NotGenerator { zeta: u64, p: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fabric needs at least one server, got M = 0")]
    EmptyFabric,
    #[error("expected {expected} port capacities, got {got}")]
    CapacityCount { expected: usize, got: usize },
    #[error("capacity of port {port} must be strictly positive and finite")]
    InvalidCapacity { port: usize },
    #[error("coflow {coflow}: port {port} is not a valid {side} port")]
    InvalidPort { coflow: usize, port: usize, side: &'static str },
    #[error("coflow {0} has no flows")]
    EmptyCoflow(usize),
    #[error("coflow {coflow}: {what} must be positive and finite")]
    NonPositive { coflow: usize, what: &'static str },
    #[error("coflow {coflow}: {what} must be non-negative and finite")]
    Negative { coflow: usize, what: &'static str },
    #[error("duplicate coflow id {0}")]
    DuplicateCoflowId(usize),
    #[error("unknown coflow id {0}")]
    UnknownCoflow(usize),
    #[error("coflow {0} has a non-zero release time; this algorithm assumes all releases are 0")]
    NonzeroRelease(usize),
    #[error("the batch has no coflows")]
    EmptyBatch,
    #[error("coflow {0} is degenerate: isolation completion time does not exceed its release")]
    DegenerateCoflow(usize),
    #[error("coflow {coflow}: completion time {cct} is earlier than its isolation time {isolation}")]
    BeatsIsolation { coflow: usize, cct: f64, isolation: f64 },
    #[error("{0} must be strictly positive")]
    NonPositiveParameter(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("order is not a permutation of the batch: {0}")]
    NotAPermutation(String),
    #[error("{what} too large: {got} exceeds the limit of {limit}")]
    TooLarge { what: &'static str, limit: usize, got: usize },
    #[error("value {0} cannot be represented in the requested scalar type")]
    Unrepresentable(f64),
    #[error("simulation stalled at t = {0}: unfinished flows but no positive rate")]
    Stalled(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

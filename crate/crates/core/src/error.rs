use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Format(String),
    #[error("table ({a}, {b}) does not sum to 1 (sum = {sum})")]
    TableSum { a: String, b: String, sum: String },
    #[error("cell ({x}, {y}) lies outside budget pair ({a}, {b})")]
    CellOutsideBudget { x: String, y: String, a: String, b: String },
    #[error("duplicate table for budget pair ({a}, {b})")]
    DuplicateTable { a: String, b: String },
    #[error("negative probability {value} in table ({a}, {b})")]
    NegativeCell { a: String, b: String, value: String },
    #[error("empty menu")]
    EmptyMenu,
    #[error("rule is partial: missing table ({a}, {b})")]
    PartialRule { a: String, b: String },
    #[error("budget pair ({a}, {b}) is not present in the rule")]
    MissingBudget { a: String, b: String },
    #[error("marginality fails ({0} violated identities)")]
    MarginalityFailure(usize),
    #[error("non-negativity fails ({0} negative polynomials)")]
    NonNegativityFailure(usize),
    #[error("neither marginal uniquely rationalizable")]
    NeitherMarginalUnique,
    #[error("marginal of agent {0} is not uniquely rationalizable")]
    MarginalNotUnique(u8),
    #[error("flow conservation violated at {0} node(s)")]
    FlowNotConserved(usize),
    #[error("negative capacity {value} on edge {edge}")]
    NegativeCapacity { edge: String, value: String },
    #[error("{what}: {count} exceeds cap {cap}")]
    CapExceeded { what: &'static str, count: u128, cap: u128 },
    #[error("ground set mismatch: {0}")]
    GroundMismatch(String),
    #[error("measure does not sum to 1 (sum = {0})")]
    MeasureMass(String),
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("invalid generator spec: {0}")]
    Generator(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

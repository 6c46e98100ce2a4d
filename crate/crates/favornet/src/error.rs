use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for network of {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("link ({0}, {1}) is not in the network")]
    MissingLink(usize, usize),
    #[error("link ({0}, {1}) is already in the network")]
    LinkPresent(usize, usize),
    #[error("invalid society: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("operation requires a {expected} favor matrix")]
    MatrixKind { expected: &'static str },
    #[error(
        "degree {degree} of player {player} exceeds the exact-enumeration cap {cap}; \
         use the Monte Carlo estimator (simulate::estimate_payoff_general)"
    )]
    DegreeCap { player: usize, degree: usize, cap: usize },
    #[error("network is not stable: link ({0}, {1}) is unsustainable")]
    NotStable(usize, usize),
    #[error("no {degree}-regular graph on {n} nodes: n * degree must be even and n > degree")]
    RegularInfeasible { n: usize, degree: usize },
    #[error("enumeration cap exceeded: n = {n} > {cap}")]
    EnumerationCap { n: usize, cap: usize },
    #[error("at-most-one request convention needs n * alpha <= 1 (got {0})")]
    RequestMass(f64),
    #[error("community payoff has no finite optimum at kappa = 0")]
    UnboundedCommunity,
    #[error("{0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

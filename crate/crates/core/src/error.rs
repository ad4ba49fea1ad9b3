use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("wrong route: {0}")]
    WrongRoute(String),
    /// The enumeration space exceeds the configured budget.
    #[error("enumeration needs {needed} candidates, budget is {budget}")]
    Budget { needed: u128, budget: u64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("not Hermitian: residual {0:.3e}")]
    NotHermitian(f64),
    #[error("not positive semidefinite: smallest eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("trace is {0:.12} instead of 1")]
    NotTraceOne(f64),
    #[error("not unitary: residual {0:.3e}")]
    NotUnitary(f64),
    #[error("not an isometry: residual {0:.3e}")]
    NotIsometry(f64),
    #[error("not trace-preserving: residual {0:.3e}")]
    NotTracePreserving(f64),
    #[error("arccos domain violated: eigenvalue {0:.12}")]
    ArccosDomain(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("m-rank infeasible: Kraus rank {rank} exceeds subsystem dimension {m}")]
    RankInfeasible { rank: usize, m: usize },
    #[error("majorization violation: {0}")]
    MajorizationViolation(String),
    #[error("method not viable: {0}")]
    MethodNotViable(String),
    #[error("insufficient kernel: need {needed} kernel dimensions, found {available}")]
    InsufficientKernel { needed: usize, available: usize },
    #[error("decomposition budget exceeded: {leaves} components > {max}")]
    BudgetExceeded { leaves: usize, max: usize },
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("certified bound violated: measured {measured:.3e} > certified {certified:.3e}")]
    BoundViolated { measured: f64, certified: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Mathematically valid negative verdicts, as opposed to bad input or bugs.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::RankInfeasible { .. }
                | Error::MajorizationViolation(_)
                | Error::MethodNotViable(_)
                | Error::InsufficientKernel { .. }
                | Error::BudgetExceeded { .. }
                | Error::PreconditionFailed(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

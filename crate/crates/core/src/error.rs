use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("two-qubit gate needs distinct qubits, got ({0}, {0})")]
    RepeatedQubit(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: size {size} exceeds the dense limit {limit}")]
    DimensionGuard { what: &'static str, size: usize, limit: usize },

    #[error("gate is not unitary (residual {0:.3e})")]
    NonUnitary(f64),

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NonHermitian(f64),

    #[error("bond index {bond} invalid for {n_qubits} sites")]
    InvalidBond { bond: usize, n_qubits: usize },

    #[error("block size {block} invalid for {n_qubits} qubits")]
    InvalidBlock { block: usize, n_qubits: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

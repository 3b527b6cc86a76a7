use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("vector norm deviates from 1 by {0:e}")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("qubit index {0} listed twice")]
    DuplicateQubit(usize),

    #[error("capacity exceeded for {what}: requested {requested}, limit {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("key length mismatch: expected {expected} bits, got {got}")]
    KeyLength { expected: usize, got: usize },

    #[error("public key with tag {0} has already been used")]
    KeyReused(String),

    #[error("need {needed} unused public keys, got {got}")]
    InsufficientKeys { needed: usize, got: usize },

    #[error("no s with F(s) of odd parity after {0} attempts")]
    RejectionBudgetExhausted(usize),

    #[error("F(s) = {0} has even parity; ledger is corrupt")]
    EvenParityKey(String),

    #[error("decode failure: {0}")]
    DecodeFailure(String),

    #[error("bit decode failure at position {position}: {reason}")]
    BitDecodeFailure { position: usize, reason: String },

    #[error("set must be nonempty")]
    EmptySet,

    #[error("element {0} appears more than once")]
    DuplicateElement(String),

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid stabilizer code: {0}")]
    InvalidCode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

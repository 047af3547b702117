use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("order violation: {0}")]
    Order(String),
    #[error("not unitary (max violation {violation:.3e})")]
    NotUnitary { violation: f64 },
    #[error("not Hermitian (max violation {violation:.3e})")]
    NotHermitian { violation: f64 },
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("ppm parse error at byte {offset}: {message}")]
    Ppm { offset: usize, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image dimensions {width}x{height} out of range")]
    BadDimensions { width: u64, height: u64 },

    #[error("symbol {symbol} has zero frequency")]
    ZeroFrequency { symbol: usize },

    #[error("frequency total {0} outside coder range")]
    BadTotal(u64),

    #[error("stream truncated")]
    Truncated,

    #[error("corrupt stream: {0}")]
    Corrupt(String),

    #[error("container: {0}")]
    Container(String),

    #[error("unknown base codec id {0}")]
    UnknownCodec(u8),

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("model: {0}")]
    Model(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

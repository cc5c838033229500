use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("modulus {0} exceeds the supported maximum of 31")]
    PrimeOutOfRange(u64),
    #[error("matrix has rank {rank} but {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("system has {vars} variables and {rows} equations; need more variables than equations")]
    NoFreeVariables { vars: usize, rows: usize },
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("function is not centered (mean {0:e})")]
    NotCentered(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("enumeration of {size} terms exceeds the cap of {cap}")]
    TooLarge { size: f64, cap: f64 },

    #[error("mean {0} differs from 1/2; the geometric property needs mean 1/2")]
    MeanConstraintViolated(f64),
    #[error("the Alon property needs the number of free variables l")]
    MissingL,
    #[error("l = {l} is below the required minimum {min}")]
    LTooSmall { l: u64, min: u64 },
    #[error("T(f) vanishes, the witness exponent is undefined")]
    DegenerateT,

    #[error("target mean {0} lies outside [0, 1]")]
    InfeasibleMean(f64),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("degree {0} exceeds the supported maximum of 32")]
    DegreeTooHigh(usize),
    #[error("expected exactly one root in the search interval, found {0}")]
    NotExactlyOneRoot(usize),
    #[error("subdivision depth {0} exhausted before the inequality was decided")]
    DepthExhausted(u32),
    #[error("certificate failed: {0}")]
    VerificationFailed(String),
    #[error("no l up to {0} satisfies every condition")]
    NoSuchL(u64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::MalformedDocument(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

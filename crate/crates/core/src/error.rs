use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("state {state} out of range 1..={size}")]
    StateOutOfRange { state: usize, size: usize },
    #[error("enumeration refused: about {estimate} words exceed the cap of {cap}")]
    EnumerationCap { estimate: String, cap: u64 },
    #[error("no admissible rewrite of the last two symbols joins the words")]
    NoBridge,
    #[error("matrix is not mixing up to power {cap}")]
    NotMixing { cap: usize },
    #[error("precision floor reached: {0}; raise the mantissa width")]
    PrecisionFloor(String),
    #[error("window of {len} coordinates exceeds the cap of {cap}")]
    WindowCap { len: String, cap: u64 },
    #[error("dynamic program of length {n} exceeds the cap of {cap}; use a Monte Carlo estimate instead")]
    DpCap { n: u64, cap: u64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("shift {shift} outside the supported range: {reason}")]
    ShiftRange { shift: String, reason: String },
    #[error("witness does not fit: needs {needed} free coordinates, block has {available}")]
    WitnessRoom { needed: String, available: String },
    #[error("construction infeasible at level {level}: {reason}")]
    Infeasible { level: usize, reason: String },
    #[error("partition cell is empty: {0}")]
    EmptyCell(String),
    #[error("condition violated: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("grid range error: {0}")]
    Range(String),
    #[error("query out of range: {0}")]
    OutOfRange(String),
    #[error("detector saturated: {0}")]
    Saturation(String),
    #[error("fixed-point solve did not converge: {0}")]
    NonConvergence(String),
    #[error("gate overstress: {0}")]
    GateOverstress(String),
    #[error("sample is contaminated by an active transient")]
    ContaminatedSample,
    #[error("lattice bound reached at {vg:.1} V")]
    AtBound { vg: f64 },
    #[error("no LUT bin for code {code} at V_G {vg:.1} V")]
    LutMiss { code: u16, vg: f64 },
    #[error("input below detector sensitivity")]
    SensitivityFloor,
    #[error("closed loop unstable, pole magnitudes {pole_magnitudes:?}")]
    Unstable { pole_magnitudes: Vec<f64> },
    #[error("response does not converge")]
    NoConvergence,
    #[error("no adaptation episode after t = {0} us")]
    NoAdaptation(f64),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable short name, used as the `kind` field of machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::Range(_) => "RangeError",
            Error::OutOfRange(_) => "OutOfRange",
            Error::Saturation(_) => "SaturationError",
            Error::NonConvergence(_) => "NonConvergence",
            Error::GateOverstress(_) => "GateOverstress",
            Error::ContaminatedSample => "ContaminatedSample",
            Error::AtBound { .. } => "AtBound",
            Error::LutMiss { .. } => "LutMiss",
            Error::SensitivityFloor => "SensitivityFloor",
            Error::Unstable { .. } => "Unstable",
            Error::NoConvergence => "NoConvergence",
            Error::NoAdaptation(_) => "NoAdaptation",
            Error::Scenario(_) => "ScenarioError",
            Error::Model(_) => "ModelError",
            Error::Io(_) => "IoError",
        }
    }
}

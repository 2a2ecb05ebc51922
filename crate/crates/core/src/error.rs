use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point outside tubular neighborhood (distance {dist:.3e} >= {radius})")]
    OutsideTubularNeighborhood { dist: f64, radius: f64 },
    #[error("vector not tangent (normal component {0:.3e})")]
    NotTangent(f64),
    #[error("chart point within {margin} rad of a pole (theta = {theta})")]
    PoleProximity { theta: f64, margin: f64 },
    #[error("antipodal points (cosine {0})")]
    AntipodalPoints(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("Picard iteration diverged at t = {t} (differences {diffs:?})")]
    PicardDiverged { t: f64, diffs: Vec<f64> },
    #[error("Picard iteration did not reach tolerance in {iters} iterations (last difference {last:.3e})")]
    PicardStalled { iters: usize, last: f64 },
    #[error("blow-up detected at t = {t}: norm {value:.3e} exceeds {limit:.3e}")]
    BlowupDetected { t: f64, value: f64, limit: f64 },
    #[error("implicit midpoint solve failed at t = {t}: {reason}")]
    MidpointSolveFailed { t: f64, reason: String },
    #[error("degenerate denominator in ratio ({0:.3e})")]
    DegenerateDenominator(f64),
    #[error("perturbation leaves the tubular neighborhood")]
    TubeExit,
    #[error("non-finite values in field")]
    NonFinite,
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

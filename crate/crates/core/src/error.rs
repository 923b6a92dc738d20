use alloc::vec::Vec;

use crate::scenario::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {} violation(s)", .0.len())]
    InvalidScenario(Vec<Violation>),
    #[error("sector index {index} out of range 1..={num_sectors}")]
    SectorOutOfRange { index: usize, num_sectors: usize },
    #[error("rotation {rotation} out of range 0..{bins_per_sector}")]
    RotationOutOfRange { rotation: usize, bins_per_sector: usize },
    #[error("hotspot start bin {start} not below {num_bins}")]
    HotspotStartOutOfRange { start: usize, num_bins: usize },
    #[error("hotspot span must be in 1..={num_bins}, got {span}")]
    HotspotSpan { span: usize, num_bins: usize },
    #[error("intensity must be finite and non-negative, got {0}")]
    NegativeIntensity(f64),
    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("variance needs at least two entries, got {0}")]
    TooFewEntries(usize),
    #[error("{available} antennas cannot give each of {sectors} sectors one")]
    TooFewAntennas { available: usize, sectors: usize },
    #[error("sector antenna count must be at least one")]
    EmptyArray,
    #[error("per-user power is undefined without users")]
    NoUsers,
    #[error("power budget below single-user floor")]
    PowerBudgetBelowFloor,
    #[error("sector SNR must be positive, got {0}")]
    NonPositiveSnr(f64),
    #[error("unknown power variant {0:?}, expected paper or exact")]
    UnknownVariant(alloc::string::String),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("exhaustive search needs {required} evaluations, cap is {cap}")]
    CombinationCapExceeded { required: u128, cap: u128 },
}

//! Photon-counting statistics: timestamp streams, coincidence histograms,
//! coincidence-to-accidental ratio, pair generation rate and brightness, and a
//! seeded synthetic pair source.

mod estimators;
mod histogram;
mod simulate;
mod stream;

pub use estimators::{
    analyze_streams, brightness_fit, car, car_from_counts, pgr, AnalysisOptions, BrightnessFit,
    CarConvention, CarOptions, CarResult, CountAnalysis, PgrEstimate, SplitterFactor,
};
pub use histogram::{histogram, CoincidenceHistogram, HistogramConfig};
pub use simulate::{simulate_streams, SourceParams};
pub use stream::{read_timestamp_csv, write_timestamp_csv, TimestampStream};

use thiserror::Error;

pub const PS_PER_S: f64 = 1e12;

#[derive(Debug, Error)]
pub enum CountingError {
    #[error("timestamps of channel {channel} are not sorted at index {index}")]
    UnsortedStream { channel: String, index: usize },
    #[error("timestamp {time_ps} ps of channel {channel} lies outside [0, {duration_ps}] ps")]
    OutOfWindow {
        channel: String,
        time_ps: i64,
        duration_ps: i64,
    },
    #[error("invalid histogram configuration: {0}")]
    InvalidHistogram(String),
    #[error("accidental coincidence level is zero; CAR is undefined")]
    ZeroAccidentals,
    #[error("no histogram bins beyond the accidental exclusion of {exclusion_ps} ps")]
    NoAccidentalBins { exclusion_ps: i64 },
    #[error("coincidence rate must be positive, got {0} Hz")]
    ZeroCoincidences(f64),
    #[error("splitter factor must be 1 or 2, got {0}")]
    InvalidSplitter(u8),
    #[error("linear fit needs at least two distinct pump powers")]
    DegenerateFit,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("timestamp CSV: {0}")]
    Csv(#[from] csv::Error),
}

//! Distribution statistics over annotated frames: depth and attitude
//! histograms, row-versus-quantity scatter series, and how much each
//! series moves when the camera mount is rotated.

mod histogram;
mod output;
mod scatter;
mod stats;

pub use histogram::{Histogram, HistogramRange};
pub use output::{histogram_csv, histogram_svg, scatter_csv, scatter_svg};
pub use scatter::{
    overlap_coefficient, robustness_report, sample_perturbations, v_correlation_series, Condition, Quantity,
    RobustnessReport, ScatterPoint, ScatterSeries, OVERLAP_BINS,
};
pub use stats::{attitude_histograms, depth_histogram, depth_samples, frame_attitude_runs, AttitudeHistograms};

use crate::geometry::GeometryError;
use crate::maps::MapError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("series quantities differ: {0} vs {1}")]
    QuantityMismatch(Quantity, Quantity),
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Map(#[from] MapError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

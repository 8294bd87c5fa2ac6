//! Sleep timing from diurnal fraction-online traces.
//!
//! The pipeline runs: eligible city-years ([`eligible_city_years`]) →
//! per-day traces → synthetic weeks ([`build_synthetic_week`]) → 94 feature
//! rows of 52 features per city-year ([`gen_features`]) → a bagged tree
//! classifier scoring each 15-minute segment as asleep ([`train_forest`]) →
//! conversion of the 94 scores to continuous sleep start and stop times
//! ([`scores_to_times`]).

mod convert;
mod cv;
mod features;
mod forest;
pub mod io;
mod labels;
mod model;
pub mod smooth;
pub mod spline;
pub mod wavelet;
mod week;

pub use convert::{quality_filter, scores_to_times, QualityThresholds};
pub use cv::{build_dataset, crossvalidate_by_city, datasets_from_bins, CityYearData, CvPrediction, CvReport, Skipped};
pub use features::{feature_names, gen_features, N_FEATURES};
pub use forest::{train_forest, Forest, ForestConfig, TrainReport, Tree};
pub use labels::{derive_atus_labels, label_segments, AtusLabel, AtusReport, DiaryEntry, EntryKind};
pub use model::{load_model, save_model, ModelArtifact, MODEL_FORMAT_VERSION};
pub use week::{
    build_synthetic_week, daily_traces, eligible_city_years, weekday_means, DiurnalTrace, EligibilityConfig,
    SyntheticWeek, WEEK_SMOOTHING,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::CityId;

pub const SEGMENTS: usize = 96;
/// Segments 0 and 1 have no second difference and carry no feature row.
pub const FIRST_FEATURE_SEGMENT: usize = 2;
pub const MINUTES_PER_DAY: f64 = 1440.0;

pub const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

/// One feature row: a city-year's segment `segment` (2..=95).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub city_id: CityId,
    pub year: i32,
    pub segment: u8,
    pub features: [f64; N_FEATURES],
}

/// Sleep timing of one city-year, in minutes of the local day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleepTimes {
    pub city_id: CityId,
    pub year: i32,
    pub start_min: f64,
    pub stop_min: f64,
    pub duration_h: f64,
}

impl SleepTimes {
    pub fn new(city_id: CityId, year: i32, start_min: f64, stop_min: f64) -> Result<Self, ChronoError> {
        let start_min = start_min.rem_euclid(MINUTES_PER_DAY);
        let stop_min = stop_min.rem_euclid(MINUTES_PER_DAY);
        let minutes = (stop_min - start_min).rem_euclid(MINUTES_PER_DAY);
        if !(minutes > 0.0) {
            return Err(ChronoError::EmptyInterval { start_min });
        }
        Ok(Self { city_id, year, start_min, stop_min, duration_h: minutes / 60.0 })
    }
}

/// Signed difference `a - b` between clock times, wrapped to (-720, 720].
pub fn clock_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(MINUTES_PER_DAY);
    if d > MINUTES_PER_DAY / 2.0 {
        d - MINUTES_PER_DAY
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChronoError {
    #[error("city {city_id} year {year}: no usable {weekday} trace")]
    MissingWeekday { city_id: CityId, year: i32, weekday: &'static str },
    #[error("no traces given")]
    NoTraces,
    #[error("traces mix city-years ({0})")]
    MixedTraces(String),
    #[error("trace has {0} values, expected 96")]
    TraceLength(usize),
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("empty sleep interval: start equals stop ({start_min} min)")]
    EmptyInterval { start_min: f64 },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature matrix has {got} columns, expected {expected}")]
    FeatureShape { got: usize, expected: usize },
    #[error("need at least 2 cities for cross-validation, found {0}")]
    TooFewCities(usize),
    #[error("scores fail the quality filter ({high} above 0.9, {low} below 0.1)")]
    QualityFilter { high: usize, low: usize },
    #[error("expected 96 scores, got {0}")]
    ScoreLength(usize),
    #[error("model artifact: {0}")]
    Artifact(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_wraps_midnight() {
        let t = SleepTimes::new(1, 2010, 1380.0, 420.0).unwrap();
        assert_eq!(t.duration_h, 8.0);
        assert!(SleepTimes::new(1, 2010, 600.0, 600.0).is_err());
        assert!(SleepTimes::new(1, 2010, 0.0, 1440.0).is_err());
    }

    #[test]
    fn clock_diff_is_shortest_arc() {
        assert_eq!(clock_diff(10.0, 1430.0), 20.0);
        assert_eq!(clock_diff(1430.0, 10.0), -20.0);
        assert_eq!(clock_diff(400.0, 390.0), 10.0);
    }
}

//! Spatial and temporal aggregation of located scan records.
//!
//! Records are assigned to urban boundaries ([`Boundaries::city_at`]),
//! binned into 96 local-time segments per day ([`bin_activity`]) and counted
//! as distinct addresses per city-month ([`monthly_unique_ips`]). Monthly
//! counts are then rescaled onto a linear trend of their monthly totals
//! ([`missoni_correct`]) and converted to per-capita country series.

mod binning;
pub mod io;
mod missoni;
mod monthly;
mod polygon;

pub use binning::{assign_scans, bin_activity, fraction_online, CityScan, JoinStats, SegmentBin, SEGMENTS_PER_DAY};
pub use missoni::{missoni_correct, MissoniReport, DEFAULT_MISSONI_CUTOFF};
pub use monthly::{
    country_ipc_series, interpolate_population, monthly_unique_ips, CountryIpc, MonthlyCityCount, MonthlyReport,
    DEFAULT_MIN_SCAN_DAYS,
};
pub use polygon::{point_in_city, Boundaries, Ring, UrbanBoundary};

use thiserror::Error;

pub type CityId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("city {city}: ring {ring} is not closed")]
    OpenRing { city: CityId, ring: usize },
    #[error("city {city}: ring {ring} has fewer than 4 vertices")]
    ShortRing { city: CityId, ring: usize },
    #[error("city {city}: boundary has no rings")]
    NoGeometry { city: CityId },
    #[error("city {city}: non-positive population {value}")]
    Population { city: CityId, value: f64 },
    #[error("city {city}: utc offset {minutes} min exceeds 14 h")]
    UtcOffset { city: CityId, minutes: i32 },
    #[error("duplicate city id {0}")]
    DuplicateCity(CityId),
    #[error("fraction online is undefined for an empty bin")]
    EmptyBin,
    #[error("no city passes the {cutoff}-address cut-off in every month")]
    EmptyPanel { cutoff: u64 },
    #[error("need at least two retained months, found {0}")]
    TooFewMonths(usize),
    #[error("linear trend is non-positive ({value}) in month {month_index}")]
    DegenerateTrend { month_index: i32, value: f64 },
}

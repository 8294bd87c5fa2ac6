//! Calendar helpers shared by the pipeline stages.
//!
//! Month indices count from January 2006 (index 0).

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// First calendar year of the month index.
pub const EPOCH_YEAR: i32 = 2006;

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        debug_assert!((1..=12).contains(&month));
        Self { year, month }
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Self::new(date.year(), date.month())
    }

    /// Months since January 2006. Negative before the epoch.
    pub fn index(self) -> i32 {
        (self.year - EPOCH_YEAR) * 12 + self.month as i32 - 1
    }

    pub fn from_index(index: i32) -> Self {
        let year = EPOCH_YEAR + index.div_euclid(12);
        let month = index.rem_euclid(12) as u32 + 1;
        Self { year, month }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn days(self) -> u32 {
        let next = Self::from_index(self.index() + 1).first_day();
        (next - self.first_day()).num_days() as u32
    }
}

impl std::fmt::Display for YearMonth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// UTC seconds to a naive UTC date-time. Out-of-range timestamps clamp to the epoch.
pub fn utc_datetime(ts: i64) -> NaiveDateTime {
    DateTime::from_timestamp(ts, 0)
        .map(|d| d.naive_utc())
        .unwrap_or_default()
}

/// Local date-time for a fixed UTC offset in minutes.
pub fn local_datetime(ts: i64, utc_offset_minutes: i32) -> NaiveDateTime {
    utc_datetime(ts + i64::from(utc_offset_minutes) * 60)
}

/// UTC seconds at 00:00 of `date`.
pub fn date_start_utc(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
}

/// Calendar year of a month index, as used for population interpolation.
pub fn year_of_month_index(index: i32) -> i32 {
    YearMonth::from_index(index).year
}

/// Maps a fractional month index to a calendar year (floor).
pub fn calendar_year(month_index: f64) -> i32 {
    EPOCH_YEAR + (month_index / 12.0).floor() as i32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_index_round_trip() {
        for i in -30..120 {
            assert_eq!(YearMonth::from_index(i).index(), i);
        }
        assert_eq!(YearMonth::from_index(0), YearMonth::new(2006, 1));
        assert_eq!(YearMonth::from_index(83), YearMonth::new(2012, 12));
        assert_eq!(YearMonth::from_index(-1), YearMonth::new(2005, 12));
    }

    #[test]
    fn month_lengths() {
        assert_eq!(YearMonth::new(2008, 2).days(), 29);
        assert_eq!(YearMonth::new(2007, 2).days(), 28);
        assert_eq!(YearMonth::new(2012, 12).days(), 31);
    }

    #[test]
    fn local_time_applies_offset() {
        let ts = date_start_utc(NaiveDate::from_ymd_opt(2010, 3, 1).unwrap());
        let local = local_datetime(ts, -60);
        assert_eq!(local.date(), NaiveDate::from_ymd_opt(2010, 2, 28).unwrap());
        assert_eq!(calendar_year(-0.5), 2005);
        assert_eq!(calendar_year(12.0), 2007);
    }
}

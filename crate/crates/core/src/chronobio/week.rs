//! Eligibility, daily traces and synthetic weeks.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};

use super::smooth::{smooth, SmoothOptions};
use super::{ChronoError, SEGMENTS, WEEKDAYS};
use crate::aggregate::{CityId, SegmentBin};

/// Smoothing parameter applied to each weekday trace.
pub const WEEK_SMOOTHING: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EligibilityConfig {
    /// Minimum number of fully covered local dates per year.
    pub min_days: usize,
    /// A segment counts as covered when `n_on` is strictly above this.
    pub min_online: u64,
}

impl Default for EligibilityConfig {
    fn default() -> Self {
        Self { min_days: 30, min_online: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiurnalTrace {
    pub city_id: CityId,
    pub local_date: NaiveDate,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWeek {
    pub city_id: CityId,
    pub year: i32,
    /// Monday first.
    pub days: [[f64; SEGMENTS]; 7],
}

impl SyntheticWeek {
    /// The 672-sample weekly signal, Monday 00:00 first.
    pub fn concatenated(&self) -> Vec<f64> {
        self.days.iter().flatten().copied().collect()
    }
}

/// City-years with at least `min_days` local dates on which all 96
/// segments have more than `min_online` online addresses.
pub fn eligible_city_years(bins: &[SegmentBin], config: &EligibilityConfig) -> BTreeSet<(CityId, i32)> {
    let mut covered: BTreeMap<(CityId, NaiveDate), usize> = BTreeMap::new();
    for b in bins {
        if b.n_on > config.min_online {
            *covered.entry((b.city_id, b.local_date)).or_default() += 1;
        }
    }
    let mut days: BTreeMap<(CityId, i32), usize> = BTreeMap::new();
    for ((city, date), n) in covered {
        if n == SEGMENTS {
            *days.entry((city, date.year())).or_default() += 1;
        }
    }
    days.into_iter().filter(|(_, n)| *n >= config.min_days).map(|(k, _)| k).collect()
}

/// Fraction-online traces of every complete day (all 96 segments observed)
/// belonging to one of `keep`, grouped by city-year.
pub fn daily_traces(
    bins: &[SegmentBin],
    keep: &BTreeSet<(CityId, i32)>,
) -> BTreeMap<(CityId, i32), Vec<DiurnalTrace>> {
    let mut days: BTreeMap<(CityId, NaiveDate), Vec<Option<f64>>> = BTreeMap::new();
    for b in bins {
        if !keep.contains(&(b.city_id, b.local_date.year())) {
            continue;
        }
        let n = b.n_on + b.n_off;
        if n == 0 {
            continue;
        }
        let day = days.entry((b.city_id, b.local_date)).or_insert_with(|| vec![None; SEGMENTS]);
        day[b.segment as usize] = Some(b.n_on as f64 / n as f64);
    }
    let mut out: BTreeMap<(CityId, i32), Vec<DiurnalTrace>> = BTreeMap::new();
    for ((city_id, local_date), values) in days {
        if let Some(values) = values.into_iter().collect::<Option<Vec<f64>>>() {
            out.entry((city_id, local_date.year())).or_default().push(DiurnalTrace { city_id, local_date, values });
        }
    }
    out
}

fn normalize(values: &[f64]) -> Option<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi > lo).then(|| values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

fn check_traces(traces: &[DiurnalTrace]) -> Result<(CityId, i32), ChronoError> {
    let first = traces.first().ok_or(ChronoError::NoTraces)?;
    let key = (first.city_id, first.local_date.year());
    for t in traces {
        if t.values.len() != SEGMENTS {
            return Err(ChronoError::TraceLength(t.values.len()));
        }
        if (t.city_id, t.local_date.year()) != key {
            return Err(ChronoError::MixedTraces(format!(
                "{}/{} and {}/{}",
                key.0,
                key.1,
                t.city_id,
                t.local_date.year()
            )));
        }
    }
    Ok(key)
}

/// Per-weekday mean of min-max normalised days, before smoothing. Constant
/// days cannot be normalised and are skipped.
pub fn weekday_means(traces: &[DiurnalTrace]) -> Result<[[f64; SEGMENTS]; 7], ChronoError> {
    let (city_id, year) = check_traces(traces)?;
    let mut sums = [[0.0; SEGMENTS]; 7];
    let mut counts = [0usize; 7];
    for t in traces {
        let Some(v) = normalize(&t.values) else { continue };
        let d = t.local_date.weekday().num_days_from_monday() as usize;
        for (s, x) in sums[d].iter_mut().zip(&v) {
            *s += x;
        }
        counts[d] += 1;
    }
    for d in 0..7 {
        if counts[d] == 0 {
            return Err(ChronoError::MissingWeekday { city_id, year, weekday: WEEKDAYS[d] });
        }
        for s in &mut sums[d] {
            *s /= counts[d] as f64;
        }
    }
    Ok(sums)
}

pub fn build_synthetic_week(traces: &[DiurnalTrace]) -> Result<SyntheticWeek, ChronoError> {
    let (city_id, year) = check_traces(traces)?;
    let means = weekday_means(traces)?;
    let mut days = [[0.0; SEGMENTS]; 7];
    for (out, m) in days.iter_mut().zip(&means) {
        out.copy_from_slice(&smooth(m, None, SmoothOptions::robust(WEEK_SMOOTHING)));
    }
    Ok(SyntheticWeek { city_id, year, days })
}

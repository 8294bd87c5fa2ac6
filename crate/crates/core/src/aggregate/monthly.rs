use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Boundaries, CityId, CityScan, UrbanBoundary};
use crate::calendar::{utc_datetime, YearMonth};

/// Months whose records cover fewer distinct UTC days are excluded.
pub const DEFAULT_MIN_SCAN_DAYS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthlyCityCount {
    pub city_id: CityId,
    pub month: YearMonth,
    /// Distinct addresses probed (online or offline) in the city-month.
    pub unique_ips: u64,
    /// Equal to `unique_ips` until a correction is applied.
    pub corrected: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonthlyReport {
    /// Sorted by `(city_id, month)`.
    pub counts: Vec<MonthlyCityCount>,
    /// Months dropped for insufficient day coverage, with their day counts.
    pub excluded_months: Vec<(YearMonth, u32)>,
}

/// Distinct-address counts per city and UTC month.
///
/// Day coverage is measured over the whole stream: a month in which the
/// records span fewer than `min_scan_days` distinct UTC days is excluded for
/// every city.
pub fn monthly_unique_ips(records: &[CityScan], min_scan_days: u32) -> MonthlyReport {
    let mut keys: Vec<(CityId, i32, u32)> = Vec::with_capacity(records.len());
    let mut days: Vec<(i32, u32)> = Vec::with_capacity(records.len());
    records
        .par_iter()
        .map(|r| {
            let t = utc_datetime(r.timestamp);
            let m = YearMonth::from_date(t.date()).index();
            ((r.city_id, m, r.ip.0), (m, chrono::Datelike::day(&t.date())))
        })
        .unzip_into_vecs(&mut keys, &mut days);
    keys.par_sort_unstable();
    keys.dedup();
    days.par_sort_unstable();
    days.dedup();

    let mut coverage: BTreeMap<i32, u32> = BTreeMap::new();
    for (m, _) in &days {
        *coverage.entry(*m).or_default() += 1;
    }
    let excluded_months = coverage
        .iter()
        .filter(|(_, &n)| n < min_scan_days)
        .map(|(&m, &n)| (YearMonth::from_index(m), n))
        .collect();

    let mut counts: Vec<MonthlyCityCount> = Vec::new();
    for (city_id, m, _) in keys {
        if coverage[&m] < min_scan_days {
            continue;
        }
        match counts.last_mut() {
            Some(c) if c.city_id == city_id && c.month.index() == m => c.unique_ips += 1,
            _ => counts.push(MonthlyCityCount { city_id, month: YearMonth::from_index(m), unique_ips: 1, corrected: 0.0 }),
        }
    }
    for c in &mut counts {
        c.corrected = c.unique_ips as f64;
    }
    MonthlyReport { counts, excluded_months }
}

/// Population in `year`, linear through the 2000 and 2010 anchors.
/// `None` when either anchor is missing.
pub fn interpolate_population(city: &UrbanBoundary, year: f64) -> Option<f64> {
    let (p0, p1) = (city.population_2000?, city.population_2010?);
    Some(p0 + (p1 - p0) * (year - 2000.0) / 10.0)
}

/// One point of a country's IP-per-capita series.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryIpc {
    pub country: String,
    pub month_index: i32,
    pub ipc: f64,
    pub n_cities: usize,
}

/// Unweighted mean over a country's cities of `corrected / population`,
/// with population interpolated at the month's calendar year. Cities
/// without both population anchors are left out.
pub fn country_ipc_series(counts: &[MonthlyCityCount], boundaries: &Boundaries) -> Vec<CountryIpc> {
    let mut acc: BTreeMap<(String, i32), (f64, usize)> = BTreeMap::new();
    for c in counts {
        let Some(city) = boundaries.get(c.city_id) else { continue };
        let Some(pop) = interpolate_population(city, f64::from(c.month.year)) else { continue };
        if pop <= 0.0 {
            continue;
        }
        let e = acc.entry((city.country.clone(), c.month.index())).or_default();
        e.0 += c.corrected / pop;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|((country, month_index), (sum, n))| CountryIpc { country, month_index, ipc: sum / n as f64, n_cities: n })
        .collect()
}

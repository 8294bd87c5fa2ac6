//! Sleep survey input and prediction output files.
//!
//! Survey: `city_id,year,respondent_id,weight,entry_time,entry_kind` with
//! `entry_time` as `HH:MM` local time and `entry_kind` one of `sleep_start`,
//! `sleep_stop`.
//! Sleep times: `city_id,year,start_min,stop_min,duration_h`.
//! Predictions: `country,city_id,year,sleep_start,sleep_stop,sleep_duration`
//! in decimal hours; the country summary has
//! `country,city_years,sleep_start,sleep_stop,sleep_duration`, ordered by
//! duration.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::labels::circular_mean;
use super::{DiaryEntry, EntryKind, SleepTimes};
use crate::aggregate::CityId;
use crate::tabular::{self, fmt_fixed, Table};

pub const SURVEY_COLUMNS: [&str; 6] = ["city_id", "year", "respondent_id", "weight", "entry_time", "entry_kind"];
pub const SLEEP_TIMES_COLUMNS: [&str; 5] = ["city_id", "year", "start_min", "stop_min", "duration_h"];

fn parse_clock(text: &str) -> Option<f64> {
    let (h, m) = text.split_once(':')?;
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    (h < 24 && m < 60).then(|| f64::from(h * 60 + m))
}

pub fn format_clock(minutes: f64) -> String {
    let m = minutes.round().rem_euclid(1440.0) as u32;
    format!("{:02}:{:02}", m / 60, m % 60)
}

pub fn read_survey<R: Read>(input: R) -> tabular::Result<Vec<DiaryEntry>> {
    let mut table = Table::new(input, &SURVEY_COLUMNS)?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let entry_min =
            parse_clock(row.str("entry_time")).ok_or_else(|| row.field_error("entry_time", "expected HH:MM"))?;
        let kind = match row.str("entry_kind") {
            "sleep_start" => EntryKind::SleepStart,
            "sleep_stop" => EntryKind::SleepStop,
            other => return Err(row.field_error("entry_kind", format!("unknown kind {other:?}"))),
        };
        let weight: f64 = row.parse("weight")?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(row.field_error("weight", "must be a non-negative number"));
        }
        out.push(DiaryEntry {
            city_id: row.parse("city_id")?,
            year: row.parse("year")?,
            respondent_id: row.str("respondent_id").to_string(),
            weight,
            entry_min,
            kind,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_survey<W: Write>(out: W, entries: &[DiaryEntry]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", SURVEY_COLUMNS.join(","))?;
    for e in entries {
        let kind = match e.kind {
            EntryKind::SleepStart => "sleep_start",
            EntryKind::SleepStop => "sleep_stop",
        };
        writeln!(w, "{},{},{},{},{},{kind}", e.city_id, e.year, e.respondent_id, e.weight, format_clock(e.entry_min))?;
    }
    w.flush()
}

pub fn write_sleep_times<W: Write>(out: W, times: &[SleepTimes]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", SLEEP_TIMES_COLUMNS.join(","))?;
    for t in times {
        writeln!(w, "{},{},{},{},{}", t.city_id, t.year, t.start_min, t.stop_min, t.duration_h)?;
    }
    w.flush()
}

pub fn read_sleep_times<R: Read>(input: R) -> tabular::Result<Vec<SleepTimes>> {
    let mut table = Table::new(input, &SLEEP_TIMES_COLUMNS[..4])?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let t = SleepTimes::new(row.parse("city_id")?, row.parse("year")?, row.parse("start_min")?, row.parse("stop_min")?)
            .map_err(|e| row.field_error("stop_min", e.to_string()))?;
        out.push(t);
        Ok(())
    })?;
    Ok(out)
}

/// Per city-year predictions in decimal hours. Cities missing from
/// `country_of` are written with an empty country.
pub fn write_predictions<W: Write>(
    out: W,
    times: &[SleepTimes],
    country_of: &dyn Fn(CityId) -> Option<String>,
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "country,city_id,year,sleep_start,sleep_stop,sleep_duration")?;
    for t in times {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            country_of(t.city_id).unwrap_or_default(),
            t.city_id,
            t.year,
            fmt_fixed(t.start_min / 60.0, 4),
            fmt_fixed(t.stop_min / 60.0, 4),
            fmt_fixed(t.duration_h, 4)
        )?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountrySleep {
    pub country: String,
    pub city_years: usize,
    /// Circular means of clock times, in minutes.
    pub start_min: f64,
    pub stop_min: f64,
    /// Arithmetic mean, in hours.
    pub duration_h: f64,
}

/// Country averages over city-years, shortest sleep first.
pub fn country_summary(times: &[SleepTimes], country_of: &dyn Fn(CityId) -> Option<String>) -> Vec<CountrySleep> {
    let mut groups: BTreeMap<String, Vec<&SleepTimes>> = BTreeMap::new();
    for t in times {
        if let Some(c) = country_of(t.city_id) {
            groups.entry(c).or_default().push(t);
        }
    }
    let mut rows: Vec<CountrySleep> = groups
        .into_iter()
        .map(|(country, ts)| {
            let n = ts.len();
            CountrySleep {
                country,
                city_years: n,
                start_min: circular_mean(&ts.iter().map(|t| (t.start_min, 1.0)).collect::<Vec<_>>()),
                stop_min: circular_mean(&ts.iter().map(|t| (t.stop_min, 1.0)).collect::<Vec<_>>()),
                duration_h: ts.iter().map(|t| t.duration_h).sum::<f64>() / n as f64,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.duration_h.total_cmp(&b.duration_h).then_with(|| a.country.cmp(&b.country)));
    rows
}

pub fn write_country_summary<W: Write>(out: W, rows: &[CountrySleep]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "country,city_years,sleep_start,sleep_stop,sleep_duration")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.country,
            r.city_years,
            fmt_fixed(r.start_min / 60.0, 2),
            fmt_fixed(r.stop_min / 60.0, 2),
            fmt_fixed(r.duration_h, 2)
        )?;
    }
    w.flush()
}

/// Histogram density of sleep durations, `bin_h` hours wide.
pub fn write_duration_density<W: Write>(out: W, times: &[SleepTimes], bin_h: f64) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "duration_h,density")?;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for t in times {
        *counts.entry((t.duration_h / bin_h).floor() as i64).or_default() += 1;
    }
    let total = times.len() as f64 * bin_h;
    for (bin, n) in counts {
        writeln!(w, "{},{}", fmt_fixed((bin as f64 + 0.5) * bin_h, 4), fmt_fixed(n as f64 / total, 6))?;
    }
    w.flush()
}

/// Feature importance as percentages of the total positive importance,
/// highest first: `rank,feature,percent`.
pub fn write_importance<W: Write>(out: W, names: &[String], importance: &[f64]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "rank,feature,percent")?;
    let total: f64 = importance.iter().map(|v| v.max(0.0)).sum();
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|a, b| importance[*b].total_cmp(&importance[*a]).then(a.cmp(b)));
    for (rank, i) in order.into_iter().enumerate() {
        let pct = if total > 0.0 { 100.0 * importance[i].max(0.0) / total } else { 0.0 };
        writeln!(w, "{},{},{}", rank + 1, names[i], fmt_fixed(pct, 3))?;
    }
    w.flush()
}

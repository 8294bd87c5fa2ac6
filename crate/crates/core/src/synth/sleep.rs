//! Planted nights, 15-minute activity bins and survey diaries.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::diurnal::{activity, DiurnalShape, Night};
use super::scans::CityPlan;
use super::{stream_rng, Result, Stream, SynthError, WorldConfig};
use crate::aggregate::SegmentBin;
use crate::chronobio::{DiaryEntry, EntryKind, SleepTimes};

const MIN_YEAR: i32 = 1900;
const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SleepConfig {
    /// Calendar years with activity bins and survey diaries.
    pub years: Vec<i32>,
    /// Bins start on the 1st of this month.
    pub first_month: u32,
    pub days_per_year: u32,
    /// Mean sleep start, local minutes.
    pub start_mean_min: f64,
    pub start_sd_min: f64,
    pub duration_mean_h: f64,
    pub duration_sd_h: f64,
    /// Per-country mean durations replacing `duration_mean_h`.
    pub country_duration_h: BTreeMap<String, f64>,
    /// Year-to-year spread of a city's start and stop.
    pub year_sd_min: f64,
    /// Night-to-night spread of start and stop.
    pub day_jitter_min: f64,
    pub shape: DiurnalShape,
    /// Relative sd of the multiplicative noise on each bin's fraction online.
    pub noise: f64,
    /// Addresses probed per bin.
    pub pool: u64,
    pub respondents: usize,
    pub respondent_sd_min: f64,
    /// Share of respondents who also log an afternoon nap.
    pub nap_share: f64,
}

impl Default for SleepConfig {
    fn default() -> Self {
        Self {
            years: vec![2010, 2011],
            first_month: 3,
            days_per_year: 42,
            start_mean_min: 1350.0,
            start_sd_min: 30.0,
            duration_mean_h: 8.0,
            duration_sd_h: 0.5,
            country_duration_h: BTreeMap::new(),
            year_sd_min: 10.0,
            day_jitter_min: 10.0,
            shape: DiurnalShape::default(),
            noise: 0.05,
            pool: 600,
            respondents: 12,
            respondent_sd_min: 35.0,
            nap_share: 0.2,
        }
    }
}

impl SleepConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::Config(format!("sleep: {m}")));
        if let Err(m) = self.shape.validate() {
            return bad(m);
        }
        for &y in &self.years {
            if !(MIN_YEAR..=MAX_YEAR).contains(&y) {
                return bad(format!("year {y} outside {MIN_YEAR}..={MAX_YEAR}"));
            }
            let first = NaiveDate::from_ymd_opt(y, self.first_month, 1);
            let last = first.and_then(|d| d.checked_add_days(chrono::Days::new(u64::from(self.days_per_year.max(1)) - 1)));
            match (first, last) {
                (Some(a), Some(b)) if chrono::Datelike::year(&b) == chrono::Datelike::year(&a) => {}
                _ => return bad(format!("{} days from month {} do not fit in {y}", self.days_per_year, self.first_month)),
            }
        }
        let mut sorted = self.years.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.years.len() {
            return bad("duplicate years".into());
        }
        for (name, v) in [
            ("start_sd_min", self.start_sd_min),
            ("duration_sd_h", self.duration_sd_h),
            ("year_sd_min", self.year_sd_min),
            ("day_jitter_min", self.day_jitter_min),
            ("noise", self.noise),
            ("respondent_sd_min", self.respondent_sd_min),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.nap_share) {
            return bad(format!("nap_share {} outside [0, 1]", self.nap_share));
        }
        for (c, h) in std::iter::once(("default", &self.duration_mean_h)).chain(self.country_duration_h.iter().map(|(c, h)| (c.as_str(), h))) {
            if !(2.0..=16.0).contains(h) {
                return bad(format!("duration {h} h for {c} outside 2..=16"));
            }
        }
        Ok(())
    }
}

fn normal(rng: &mut impl Rng, sd: f64) -> f64 {
    if sd > 0.0 {
        sd * Distribution::<f64>::sample(&StandardNormal, rng)
    } else {
        0.0
    }
}

fn year_key(plan: &CityPlan, year: i32) -> u64 {
    ((plan.index as u64) << 16) | (year - MIN_YEAR + 1).clamp(0, 0xFFFF) as u64
}

/// The planted night of a city in `year`: the city's own schedule plus a
/// yearly shift of start and stop.
pub fn city_night(config: &WorldConfig, plan: &CityPlan, year: i32) -> Night {
    let s = &config.sleep;
    let mut rng = stream_rng(config.seed, Stream::Sleep, (plan.index as u64) << 16);
    let start = s.start_mean_min + normal(&mut rng, s.start_sd_min);
    let mean_h = s.country_duration_h.get(&plan.boundary.country).copied().unwrap_or(s.duration_mean_h);
    let hours = (mean_h + normal(&mut rng, s.duration_sd_h)).clamp(2.0, 16.0);
    let mut rng = stream_rng(config.seed, Stream::Sleep, year_key(plan, year));
    let start = start + normal(&mut rng, s.year_sd_min);
    let stop = start + hours * 60.0 + normal(&mut rng, s.year_sd_min);
    Night { start_min: start.rem_euclid(1440.0), stop_min: stop.rem_euclid(1440.0) }
}

pub(crate) struct CitySleep {
    pub bins: Vec<SegmentBin>,
    pub survey: Vec<DiaryEntry>,
    pub truth: Vec<SleepTimes>,
}

fn whole_minute(m: f64) -> f64 {
    m.round().rem_euclid(1440.0)
}

pub(crate) fn gen_city(config: &WorldConfig, plan: &CityPlan) -> Result<CitySleep> {
    let s = &config.sleep;
    let city_id = plan.city_id();
    let mut out = CitySleep { bins: Vec::new(), survey: Vec::new(), truth: Vec::new() };
    for &year in &s.years {
        let night = city_night(config, plan, year);
        let truth = SleepTimes::new(city_id, year, night.start_min, night.stop_min)
            .map_err(|e| SynthError::Config(format!("city {city_id} {year}: {e}")))?;
        out.truth.push(truth);

        let mut rng = stream_rng(config.seed, Stream::Sleep, (1 << 40) | year_key(plan, year));
        let first = NaiveDate::from_ymd_opt(year, s.first_month, 1).expect("validated");
        for d in 0..s.days_per_year {
            let date = first + chrono::Days::new(u64::from(d));
            let day = Night {
                start_min: night.start_min + normal(&mut rng, s.day_jitter_min),
                stop_min: night.stop_min + normal(&mut rng, s.day_jitter_min),
            };
            for segment in 0..96u8 {
                let mid = 15.0 * f64::from(segment) + 7.5;
                let f = activity(mid, &day, &s.shape) * (1.0 + normal(&mut rng, s.noise));
                let n_on = if s.pool == 0 {
                    0
                } else {
                    Binomial::new(s.pool, f.clamp(0.0, 1.0)).expect("probability in [0, 1]").sample(&mut rng)
                };
                out.bins.push(SegmentBin { city_id, local_date: date, segment, n_on, n_off: s.pool - n_on });
            }
        }

        let mut rng = stream_rng(config.seed, Stream::Survey, year_key(plan, year));
        for r in 0..s.respondents {
            let respondent_id = format!("{city_id}-{year}-{r:03}");
            let weight = (500.0 + 1000.0 * rng.random::<f64>()).round() / 1000.0;
            let entry = |entry_min: f64, kind| DiaryEntry {
                city_id,
                year,
                respondent_id: respondent_id.clone(),
                weight,
                entry_min: whole_minute(entry_min),
                kind,
            };
            if rng.random::<f64>() < s.nap_share {
                let nap = rng.random_range(780.0..960.0);
                out.survey.push(entry(nap, EntryKind::SleepStart));
                out.survey.push(entry(nap + rng.random_range(30.0..90.0), EntryKind::SleepStop));
            }
            out.survey.push(entry(night.start_min + normal(&mut rng, s.respondent_sd_min), EntryKind::SleepStart));
            out.survey.push(entry(night.stop_min + normal(&mut rng, s.respondent_sd_min), EntryKind::SleepStop));
        }
    }
    Ok(out)
}

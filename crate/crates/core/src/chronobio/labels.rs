//! Segment labels and survey-derived sleep schedules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChronoError, SEGMENTS};
use crate::aggregate::CityId;

const MIN_PER_SEGMENT: f64 = 15.0;
/// Sleep starts are accepted from 19:00 up to (not including) 04:00.
const START_WINDOW: (f64, f64) = (19.0 * 60.0, 4.0 * 60.0);
/// Sleep stops must fall before noon.
const STOP_CUTOFF: f64 = 12.0 * 60.0;

/// 1 for segments whose midpoint lies in `[start, stop)` modulo a day.
pub fn label_segments(start_min: f64, stop_min: f64) -> Result<[bool; SEGMENTS], ChronoError> {
    let len = (stop_min - start_min).rem_euclid(1440.0);
    if len == 0.0 {
        return Err(ChronoError::EmptyInterval { start_min });
    }
    let mut out = [false; SEGMENTS];
    for (s, v) in out.iter_mut().enumerate() {
        let mid = MIN_PER_SEGMENT * s as f64 + MIN_PER_SEGMENT / 2.0;
        *v = (mid - start_min).rem_euclid(1440.0) < len;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    SleepStart,
    SleepStop,
}

/// One time-diary entry: a respondent falling asleep or waking up.
#[derive(Debug, Clone, PartialEq)]
pub struct DiaryEntry {
    pub city_id: CityId,
    pub year: i32,
    pub respondent_id: String,
    pub weight: f64,
    pub entry_min: f64,
    pub kind: EntryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtusLabel {
    pub city_id: CityId,
    pub year: i32,
    pub start_min: f64,
    pub stop_min: f64,
    pub n_respondents: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtusReport {
    pub labels: Vec<AtusLabel>,
    /// Respondents without a sleep start or stop inside the windows.
    pub discarded_respondents: usize,
    /// City-years with fewer valid respondents than required.
    pub dropped_city_years: Vec<(CityId, i32, usize)>,
}

fn in_start_window(m: f64) -> bool {
    m >= START_WINDOW.0 || m < START_WINDOW.1
}

/// Minutes after noon, so an evening reads in order across midnight.
fn evening_order(m: f64) -> f64 {
    (m - 720.0).rem_euclid(1440.0)
}

pub(crate) fn circular_mean(values: &[(f64, f64)]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (m, w) in values {
        let a = m / 1440.0 * std::f64::consts::TAU;
        s += w * a.sin();
        c += w * a.cos();
    }
    (s.atan2(c) / std::f64::consts::TAU * 1440.0).rem_euclid(1440.0)
}

/// Per-respondent start (first evening sleep entry) and stop (last wake
/// entry before noon), then weighted circular means per city-year.
pub fn derive_atus_labels(entries: &[DiaryEntry], min_respondents: usize) -> AtusReport {
    type Key<'a> = (CityId, i32, &'a str);
    let mut by_resp: BTreeMap<Key<'_>, Vec<&DiaryEntry>> = BTreeMap::new();
    for e in entries {
        by_resp.entry((e.city_id, e.year, &e.respondent_id)).or_default().push(e);
    }
    let mut report = AtusReport::default();
    let mut by_city: BTreeMap<(CityId, i32), (Vec<(f64, f64)>, Vec<(f64, f64)>)> = BTreeMap::new();
    for ((city, year, _), list) in by_resp {
        let start = list
            .iter()
            .filter(|e| e.kind == EntryKind::SleepStart)
            .map(|e| e.entry_min)
            .filter(|m| in_start_window(*m))
            .min_by(|a, b| evening_order(*a).total_cmp(&evening_order(*b)));
        let stop = list
            .iter()
            .filter(|e| e.kind == EntryKind::SleepStop && e.entry_min < STOP_CUTOFF)
            .map(|e| e.entry_min)
            .max_by(f64::total_cmp);
        let weight = list[0].weight;
        match (start, stop) {
            (Some(a), Some(b)) if weight > 0.0 => {
                let slot = by_city.entry((city, year)).or_default();
                slot.0.push((a, weight));
                slot.1.push((b, weight));
            }
            _ => report.discarded_respondents += 1,
        }
    }
    for ((city_id, year), (starts, stops)) in by_city {
        if starts.len() < min_respondents {
            report.dropped_city_years.push((city_id, year, starts.len()));
            continue;
        }
        report.labels.push(AtusLabel {
            city_id,
            year,
            start_min: circular_mean(&starts),
            stop_min: circular_mean(&stops),
            n_respondents: starts.len(),
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(resp: &str, min: f64, kind: EntryKind) -> DiaryEntry {
        DiaryEntry { city_id: 1, year: 2010, respondent_id: resp.into(), weight: 1.0, entry_min: min, kind }
    }

    #[test]
    fn eight_hour_night_has_32_segments() {
        let l = label_segments(22.0 * 60.0, 6.0 * 60.0).unwrap();
        assert_eq!(l.iter().filter(|v| **v).count(), 32);
        assert!(l[88] && l[23] && !l[24] && !l[87]);
    }

    #[test]
    fn midnight_to_noon_is_first_half() {
        let l = label_segments(0.0, 720.0).unwrap();
        assert!(l[..48].iter().all(|v| *v));
        assert!(l[48..].iter().all(|v| !*v));
    }

    #[test]
    fn complement_flips_labels() {
        let a = label_segments(1333.0, 401.0).unwrap();
        let b = label_segments(401.0, 1333.0).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
        assert!(label_segments(300.0, 300.0).is_err());
    }

    #[test]
    fn single_respondent() {
        let r = derive_atus_labels(
            &[entry("a", 1380.0, EntryKind::SleepStart), entry("a", 420.0, EntryKind::SleepStop)],
            1,
        );
        assert_eq!(r.labels.len(), 1);
        assert!((r.labels[0].start_min - 1380.0).abs() < 1e-9);
        assert!((r.labels[0].stop_min - 420.0).abs() < 1e-9);
    }

    #[test]
    fn circular_mean_across_midnight() {
        let r = derive_atus_labels(
            &[
                entry("a", 1320.0, EntryKind::SleepStart),
                entry("a", 360.0, EntryKind::SleepStop),
                entry("b", 0.0, EntryKind::SleepStart),
                entry("b", 480.0, EntryKind::SleepStop),
            ],
            1,
        );
        let l = r.labels[0];
        assert!((l.start_min - 1380.0).abs() < 1e-9, "{}", l.start_min);
        assert!((l.stop_min - 420.0).abs() < 1e-9);
    }

    #[test]
    fn window_rules_discard_respondents() {
        let r = derive_atus_labels(
            &[
                entry("early", 1110.0, EntryKind::SleepStart),
                entry("early", 400.0, EntryKind::SleepStop),
                entry("late", 1300.0, EntryKind::SleepStart),
                entry("late", 750.0, EntryKind::SleepStop),
                entry("ok", 1300.0, EntryKind::SleepStart),
                entry("ok", 30.0, EntryKind::SleepStart),
                entry("ok", 200.0, EntryKind::SleepStop),
                entry("ok", 410.0, EntryKind::SleepStop),
            ],
            1,
        );
        assert_eq!(r.discarded_respondents, 2);
        assert_eq!(r.labels[0].start_min.round(), 1300.0);
        assert_eq!(r.labels[0].stop_min.round(), 410.0);
    }

    #[test]
    fn afternoon_nap_is_ignored() {
        let r = derive_atus_labels(
            &[
                entry("a", 840.0, EntryKind::SleepStart),
                entry("a", 900.0, EntryKind::SleepStop),
                entry("a", 1350.0, EntryKind::SleepStart),
                entry("a", 390.0, EntryKind::SleepStop),
            ],
            1,
        );
        assert_eq!(r.discarded_respondents, 0);
        assert!((r.labels[0].start_min - 1350.0).abs() < 1e-9);
        assert!((r.labels[0].stop_min - 390.0).abs() < 1e-9);
    }

    #[test]
    fn weights_and_minimum_respondents() {
        let mut e = vec![entry("a", 1320.0, EntryKind::SleepStart), entry("a", 360.0, EntryKind::SleepStop)];
        e.push(DiaryEntry { weight: 3.0, ..entry("b", 1320.0, EntryKind::SleepStart) });
        e.push(DiaryEntry { weight: 3.0, ..entry("b", 480.0, EntryKind::SleepStop) });
        let r = derive_atus_labels(&e, 1);
        // Weighted circular mean of 06:00 (w=1) and 08:00 (w=3).
        let a = std::f64::consts::TAU / 1440.0;
        let expect = ((360.0 * a).sin() + 3.0 * (480.0 * a).sin()).atan2((360.0 * a).cos() + 3.0 * (480.0 * a).cos()) / a;
        assert!((r.labels[0].stop_min - expect).abs() < 1e-9);
        let r = derive_atus_labels(&e, 10);
        assert!(r.labels.is_empty());
        assert_eq!(r.dropped_city_years, vec![(1, 2010, 2)]);
    }
}

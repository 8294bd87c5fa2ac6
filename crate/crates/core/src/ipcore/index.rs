//! Revision-aware interval index from IP ranges to coordinates.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{GeoRangeRecord, GeoRecordError, IpAddress};
use crate::calendar::date_start_utc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lon: f64,
    pub lat: f64,
}

/// A load-time rejection; `record` is the position in the input slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub record: usize,
    pub error: GeoRecordError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    /// Number of (incoming record, already loaded interval) overlaps resolved
    /// in favour of the incoming record.
    pub conflicts: usize,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone)]
struct Revision {
    date: NaiveDate,
    valid_from: i64,
    starts: Vec<u32>,
    ends: Vec<u32>,
    locations: Vec<Location>,
}

/// Immutable geolocation index.
///
/// Each revision is valid from 00:00 UTC of its date until the next
/// revision's date. Within a revision intervals are disjoint and sorted.
#[derive(Debug, Clone, Default)]
pub struct GeoIndex {
    revisions: Vec<Revision>,
}

impl GeoIndex {
    /// Builds the index. Records are applied in slice order per revision;
    /// where a record overlaps an earlier one of the same revision, the
    /// later record wins on the overlapped sub-interval.
    pub fn build(records: &[GeoRangeRecord]) -> (Self, BuildReport) {
        let mut report = BuildReport::default();
        let mut by_revision: BTreeMap<NaiveDate, BTreeMap<u32, (u32, Location)>> = BTreeMap::new();

        for (i, rec) in records.iter().enumerate() {
            if let Err(error) = rec.validate() {
                report.rejected.push(Rejection { record: i, error });
                continue;
            }
            let map = by_revision.entry(rec.revision_date).or_default();
            let loc = Location { lon: rec.lon, lat: rec.lat };
            report.conflicts += insert_last_wins(map, rec.ip_lo.0, rec.ip_hi.0, loc);
        }

        let revisions = by_revision
            .into_iter()
            .map(|(date, map)| {
                let mut starts = Vec::with_capacity(map.len());
                let mut ends = Vec::with_capacity(map.len());
                let mut locations = Vec::with_capacity(map.len());
                for (s, (e, l)) in map {
                    starts.push(s);
                    ends.push(e);
                    locations.push(l);
                }
                Revision { date, valid_from: date_start_utc(date), starts, ends, locations }
            })
            .collect();
        (Self { revisions }, report)
    }

    pub fn is_empty(&self) -> bool {
        self.revisions.is_empty()
    }

    pub fn revision_dates(&self) -> Vec<NaiveDate> {
        self.revisions.iter().map(|r| r.date).collect()
    }

    /// Number of disjoint intervals in each revision, in date order.
    pub fn interval_counts(&self) -> Vec<usize> {
        self.revisions.iter().map(|r| r.starts.len()).collect()
    }

    /// Location of `ip` at UTC second `t`, or `None` when unlocated.
    pub fn locate(&self, ip: IpAddress, t: i64) -> Option<Location> {
        self.locate_counted(ip, t).0
    }

    /// As [`GeoIndex::locate`], also returning the number of comparisons
    /// performed by the two binary searches.
    pub fn locate_counted(&self, ip: IpAddress, t: i64) -> (Option<Location>, usize) {
        let mut probes = 0usize;
        let rev = upper_bound(&self.revisions, |r| r.valid_from <= t, &mut probes);
        if rev == 0 {
            return (None, probes);
        }
        let rev = &self.revisions[rev - 1];
        let pos = upper_bound(&rev.starts, |&s| s <= ip.0, &mut probes);
        if pos == 0 {
            return (None, probes);
        }
        let i = pos - 1;
        probes += 1;
        if rev.ends[i] >= ip.0 {
            (Some(rev.locations[i]), probes)
        } else {
            (None, probes)
        }
    }
}

/// Free-function form of [`GeoIndex::locate`].
pub fn locate(ip: IpAddress, t: i64, index: &GeoIndex) -> Option<Location> {
    index.locate(ip, t)
}

/// Number of leading elements satisfying `pred` (which must be monotone
/// true-then-false), counting comparisons.
fn upper_bound<T>(items: &[T], pred: impl Fn(&T) -> bool, probes: &mut usize) -> usize {
    let (mut lo, mut hi) = (0usize, items.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        *probes += 1;
        if pred(&items[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Inserts `[lo, hi]` into a disjoint interval map, trimming or removing
/// every overlapped interval. Returns the number of intervals overlapped.
fn insert_last_wins(map: &mut BTreeMap<u32, (u32, Location)>, lo: u32, hi: u32, loc: Location) -> usize {
    let mut overlapped: Vec<(u32, u32, Location)> = Vec::new();
    if let Some((&s, &(e, l))) = map.range(..lo).next_back() {
        if e >= lo {
            overlapped.push((s, e, l));
        }
    }
    overlapped.extend(map.range(lo..=hi).map(|(&s, &(e, l))| (s, e, l)));

    for &(s, e, l) in &overlapped {
        map.remove(&s);
        if s < lo {
            map.insert(s, (lo - 1, l));
        }
        if e > hi {
            map.insert(hi + 1, (e, l));
        }
    }
    map.insert(lo, (hi, loc));
    overlapped.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn rec(lo: u32, hi: u32, lon: f64, lat: f64, d: NaiveDate) -> GeoRangeRecord {
        GeoRangeRecord { ip_lo: IpAddress(lo), ip_hi: IpAddress(hi), lon, lat, revision_date: d }
    }

    /// Linear-scan oracle honouring load order: the last valid record of the
    /// governing revision that contains the ip wins.
    fn oracle(records: &[GeoRangeRecord], ip: u32, t: i64) -> Option<Location> {
        let rev = records
            .iter()
            .filter(|r| r.validate().is_ok() && date_start_utc(r.revision_date) <= t)
            .map(|r| r.revision_date)
            .max()?;
        records
            .iter()
            .rev()
            .find(|r| r.validate().is_ok() && r.revision_date == rev && r.ip_lo.0 <= ip && ip <= r.ip_hi.0)
            .map(|r| Location { lon: r.lon, lat: r.lat })
    }

    #[test]
    fn disjoint_ranges_single_revision() {
        let d = date(2008, 1, 1);
        let (idx, report) = GeoIndex::build(&[rec(10, 19, 1.0, 2.0, d), rec(30, 39, 3.0, 4.0, d)]);
        assert_eq!(idx.interval_counts(), vec![2]);
        assert_eq!(report.conflicts, 0);
        let t = date_start_utc(d) + 5;
        assert_eq!(idx.locate(IpAddress(15), t), Some(Location { lon: 1.0, lat: 2.0 }));
        assert_eq!(idx.locate(IpAddress(25), t), None);
        assert_eq!(idx.locate(IpAddress(39), t), Some(Location { lon: 3.0, lat: 4.0 }));
    }

    #[test]
    fn duplicate_range_keeps_later_coordinates() {
        let d = date(2008, 1, 1);
        let records = [rec(100, 200, 1.0, 1.0, d), rec(100, 200, 5.0, 6.0, d)];
        let (idx, report) = GeoIndex::build(&records);
        assert_eq!(report.conflicts, 1);
        assert_eq!(idx.interval_counts(), vec![1]);
        let t = date_start_utc(d);
        for ip in [100, 150, 200] {
            assert_eq!(idx.locate(IpAddress(ip), t), oracle(&records, ip, t));
            assert_eq!(idx.locate(IpAddress(ip), t), Some(Location { lon: 5.0, lat: 6.0 }));
        }
    }

    #[test]
    fn partial_overlap_splits_earlier_interval() {
        let d = date(2009, 5, 1);
        let records = [rec(0, 100, 1.0, 1.0, d), rec(40, 60, 2.0, 2.0, d), rec(90, 120, 3.0, 3.0, d)];
        let (idx, report) = GeoIndex::build(&records);
        assert_eq!(report.conflicts, 2);
        let t = date_start_utc(d);
        for ip in 0..130 {
            assert_eq!(idx.locate(IpAddress(ip), t), oracle(&records, ip, t), "ip {ip}");
        }
    }

    #[test]
    fn empty_index_is_unlocated() {
        let (idx, report) = GeoIndex::build(&[]);
        assert!(idx.is_empty());
        assert_eq!(report, BuildReport::default());
        assert_eq!(idx.locate(IpAddress(1), 0), None);
        assert_eq!(locate(IpAddress(u32::MAX), i64::MAX, &idx), None);
    }

    #[test]
    fn inverted_range_rejected() {
        let d = date(2008, 1, 1);
        let (idx, report) = GeoIndex::build(&[rec(5, 1, 0.0, 0.0, d), rec(1, 5, 0.0, 0.0, d)]);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].record, 0);
        assert_eq!(idx.interval_counts(), vec![1]);
    }

    #[test]
    fn revision_is_a_step_function() {
        let (d1, d2) = (date(2008, 1, 1), date(2008, 2, 1));
        let records = [rec(0, 1000, 1.0, 1.0, d1), rec(0, 1000, 9.0, 9.0, d2)];
        let (idx, _) = GeoIndex::build(&records);
        let before = date_start_utc(d1) - 1;
        let mid = date_start_utc(d2) - 1;
        let after = date_start_utc(d2);
        assert_eq!(idx.locate(IpAddress(5), before), None);
        assert_eq!(idx.locate(IpAddress(5), mid), Some(Location { lon: 1.0, lat: 1.0 }));
        assert_eq!(idx.locate(IpAddress(5), after), Some(Location { lon: 9.0, lat: 9.0 }));
        for t in [before, mid, after] {
            assert_eq!(idx.locate(IpAddress(5), t), oracle(&records, 5, t));
        }
    }

    #[test]
    fn extreme_addresses() {
        let d = date(2010, 1, 1);
        let records = [rec(0, u32::MAX, 1.0, 1.0, d), rec(u32::MAX, u32::MAX, 2.0, 2.0, d), rec(0, 0, 3.0, 3.0, d)];
        let (idx, _) = GeoIndex::build(&records);
        let t = date_start_utc(d);
        for ip in [0, 1, u32::MAX - 1, u32::MAX] {
            assert_eq!(idx.locate(IpAddress(ip), t), oracle(&records, ip, t));
        }
    }

    #[test]
    fn lookup_cost_is_logarithmic() {
        let d = date(2008, 1, 1);
        let t = date_start_utc(d);
        let mut worst = Vec::new();
        for exp in 8..=16u32 {
            let n = 1u32 << exp;
            let records: Vec<_> = (0..n).map(|i| rec(i * 10, i * 10 + 4, 0.0, 0.0, d)).collect();
            let (idx, _) = GeoIndex::build(&records);
            let max_probes = (0..2000u32)
                .map(|k| idx.locate_counted(IpAddress((k * 7919) % (n * 10)), t).1)
                .max()
                .unwrap();
            worst.push(max_probes);
        }
        // One revision probe plus ~log2(n) interval probes plus the end check.
        for (k, w) in worst.iter().enumerate() {
            let log_n = 8 + k;
            assert!(*w <= log_n + 3, "n=2^{log_n}: {w} probes");
        }
        for pair in worst.windows(2) {
            assert!(pair[1] <= pair[0] + 1, "doubling added more than one probe: {worst:?}");
        }
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn dates() -> [NaiveDate; 4] {
        [
            NaiveDate::from_ymd_opt(2007, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2007, 2, 15).unwrap(),
            NaiveDate::from_ymd_opt(2007, 4, 1).unwrap(),
            NaiveDate::from_ymd_opt(2008, 1, 1).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn agrees_with_linear_scan(
            ranges in proptest::collection::vec((0u32..5000, 0u32..400, 0usize..4, -50.0f64..50.0), 0..60),
            queries in proptest::collection::vec((0u32..5600, 0usize..5), 1..200),
        ) {
            let ds = dates();
            let records: Vec<GeoRangeRecord> = ranges
                .iter()
                .map(|&(lo, len, r, c)| GeoRangeRecord {
                    ip_lo: IpAddress(lo),
                    ip_hi: IpAddress(lo + len),
                    lon: c,
                    lat: c / 2.0,
                    revision_date: ds[r],
                })
                .collect();
            let (idx, _) = GeoIndex::build(&records);
            for &(ip, k) in &queries {
                let t = if k == 0 { date_start_utc(ds[0]) - 10 } else { date_start_utc(ds[k - 1]) + 3600 };
                let expected = tests_oracle(&records, ip, t);
                prop_assert_eq!(idx.locate(IpAddress(ip), t), expected);
                // Purity: a second call gives the same answer.
                prop_assert_eq!(idx.locate(IpAddress(ip), t), expected);
            }
        }
    }

    fn tests_oracle(records: &[GeoRangeRecord], ip: u32, t: i64) -> Option<Location> {
        let rev = records
            .iter()
            .filter(|r| date_start_utc(r.revision_date) <= t)
            .map(|r| r.revision_date)
            .max()?;
        records
            .iter()
            .rev()
            .find(|r| r.revision_date == rev && r.ip_lo.0 <= ip && ip <= r.ip_hi.0)
            .map(|r| Location { lon: r.lon, lat: r.lat })
    }
}

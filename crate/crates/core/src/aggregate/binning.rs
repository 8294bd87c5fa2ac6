use std::collections::BTreeMap;

use chrono::{NaiveDate, Timelike};
use rayon::prelude::*;

use super::{AggregateError, Boundaries, CityId};
use crate::calendar::local_datetime;
use crate::ipcore::{GeoIndex, IpAddress, ScanRecord, Status};

pub const SEGMENTS_PER_DAY: usize = 96;

/// A scan record that has been located and assigned to a city.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CityScan {
    pub city_id: CityId,
    pub timestamp: i64,
    pub ip: IpAddress,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JoinStats {
    pub total: usize,
    /// No geolocation known for the address at that time.
    pub unlocated: usize,
    /// Located, but outside every boundary.
    pub unassigned: usize,
    pub assigned: usize,
}

/// Geolocates every record and keeps those falling inside a boundary.
/// Output order follows input order.
pub fn assign_scans(scans: &[ScanRecord], index: &GeoIndex, boundaries: &Boundaries) -> (Vec<CityScan>, JoinStats) {
    let joined: Vec<Result<CityScan, bool>> = scans
        .par_iter()
        .map(|s| {
            let loc = index.locate(s.ip, s.timestamp).ok_or(false)?;
            let city_id = boundaries.city_at(loc.lon, loc.lat).ok_or(true)?;
            Ok(CityScan { city_id, timestamp: s.timestamp, ip: s.ip, status: s.status })
        })
        .collect();
    let mut stats = JoinStats { total: scans.len(), ..JoinStats::default() };
    let mut out = Vec::with_capacity(joined.len());
    for j in joined {
        match j {
            Ok(c) => out.push(c),
            Err(false) => stats.unlocated += 1,
            Err(true) => stats.unassigned += 1,
        }
    }
    stats.assigned = out.len();
    (out, stats)
}

/// On/off probe counts for one city, local date and 15-minute segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SegmentBin {
    pub city_id: CityId,
    pub local_date: NaiveDate,
    /// 0..=95; segment `s` covers local minutes `[15s, 15s + 15)`.
    pub segment: u8,
    pub n_on: u64,
    pub n_off: u64,
}

type BinKey = (CityId, NaiveDate, u8);

fn merge(mut a: BTreeMap<BinKey, (u64, u64)>, b: BTreeMap<BinKey, (u64, u64)>) -> BTreeMap<BinKey, (u64, u64)> {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (k, (on, off)) in b {
        let e = a.entry(k).or_default();
        e.0 += on;
        e.1 += off;
    }
    a
}

/// Bins city-assigned records by local date and segment.
///
/// Records whose city is missing from `boundaries` are skipped. The result
/// is sorted by `(city_id, local_date, segment)` and does not depend on
/// input order or on how rayon partitions the input.
pub fn bin_activity(records: &[CityScan], boundaries: &Boundaries) -> Vec<SegmentBin> {
    let merged = records
        .par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<BinKey, (u64, u64)>, r| {
            if let Some(city) = boundaries.get(r.city_id) {
                let local = local_datetime(r.timestamp, city.utc_offset_minutes);
                let segment = ((local.hour() * 60 + local.minute()) / 15) as u8;
                let e = acc.entry((r.city_id, local.date(), segment)).or_default();
                match r.status {
                    Status::Online => e.0 += 1,
                    Status::Offline => e.1 += 1,
                }
            }
            acc
        })
        .reduce(BTreeMap::new, merge);
    merged
        .into_iter()
        .map(|((city_id, local_date, segment), (n_on, n_off))| SegmentBin { city_id, local_date, segment, n_on, n_off })
        .collect()
}

pub fn fraction_online(bin: &SegmentBin) -> Result<f64, AggregateError> {
    let n = bin.n_on + bin.n_off;
    if n == 0 {
        return Err(AggregateError::EmptyBin);
    }
    Ok(bin.n_on as f64 / n as f64)
}

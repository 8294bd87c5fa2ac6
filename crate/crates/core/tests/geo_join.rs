use chrono::NaiveDate;
use netcensus::calendar::{date_start_utc, YearMonth};
use netcensus::ipcore::{GeoIndex, GeoRangeRecord, IpAddress, Location};
use proptest::prelude::*;

fn brute(records: &[GeoRangeRecord], ip: IpAddress, t: i64) -> Option<Location> {
    let date = records.iter().map(|r| r.revision_date).filter(|d| date_start_utc(*d) <= t).max()?;
    records
        .iter()
        .rev()
        .find(|r| r.revision_date == date && r.ip_lo <= ip && ip <= r.ip_hi)
        .map(|r| Location { lon: r.lon, lat: r.lat })
}

fn record() -> impl Strategy<Value = GeoRangeRecord> {
    (0u32..5_000, 0u32..800, -180.0f64..180.0, -90.0f64..90.0, 0i32..4).prop_map(|(lo, w, lon, lat, rev)| GeoRangeRecord {
        ip_lo: IpAddress(lo),
        ip_hi: IpAddress(lo + w),
        lon,
        lat,
        revision_date: YearMonth::from_index(6 * rev).first_day(),
    })
}

proptest! {
    #[test]
    fn index_matches_linear_scan(
        records in prop::collection::vec(record(), 1..120),
        queries in prop::collection::vec((0u32..6_000, -40i32..40), 1..200),
    ) {
        let (index, report) = GeoIndex::build(&records);
        prop_assert!(report.rejected.is_empty());
        for (ip, day) in queries {
            let t = date_start_utc(NaiveDate::from_ymd_opt(2006, 1, 1).unwrap()) + i64::from(day) * 86_400 * 7;
            prop_assert_eq!(index.locate(IpAddress(ip), t), brute(&records, IpAddress(ip), t));
        }
    }
}

#[test]
fn invalid_records_are_rejected_and_others_kept() {
    let day = YearMonth::from_index(0).first_day();
    let good = GeoRangeRecord { ip_lo: IpAddress(10), ip_hi: IpAddress(20), lon: 1.0, lat: 2.0, revision_date: day };
    let inverted = GeoRangeRecord { ip_lo: IpAddress(30), ip_hi: IpAddress(25), ..good };
    let polar = GeoRangeRecord { lat: 91.0, ..good };
    let (index, report) = GeoIndex::build(&[good, inverted, polar]);
    assert_eq!(report.rejected.iter().map(|r| r.record).collect::<Vec<_>>(), vec![1, 2]);
    let t = date_start_utc(day);
    assert_eq!(index.locate(IpAddress(15), t), Some(Location { lon: 1.0, lat: 2.0 }));
    assert_eq!(index.locate(IpAddress(15), t - 1), None);
    assert_eq!(index.locate(IpAddress(27), t), None);
}

//! Scan and geolocation CSV files.
//!
//! Scan file: `timestamp_utc,ip,status` with `status` in `{0, 1}`.
//! Geo file: `ip_lo,ip_hi,lon,lat,revision_date` with ISO-8601 dates.
//! Addresses are written as dotted quads; readers also accept the integer form.

use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{parse_ipv4, GeoRangeRecord, IpAddress, ScanRecord, Status};
use crate::tabular::{Result, Row, Table};

pub const SCAN_COLUMNS: [&str; 3] = ["timestamp_utc", "ip", "status"];
pub const GEO_COLUMNS: [&str; 5] = ["ip_lo", "ip_hi", "lon", "lat", "revision_date"];

fn ip_field(row: &Row<'_>, column: &str) -> Result<IpAddress> {
    let text = row.str(column);
    if let Ok(v) = text.parse::<u32>() {
        return Ok(IpAddress(v));
    }
    parse_ipv4(text).map_err(|e| row.field_error(column, e.to_string()))
}

pub fn read_scans<R: Read>(input: R) -> Result<Vec<ScanRecord>> {
    let mut table = Table::new(input, &SCAN_COLUMNS)?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let status = match row.str("status") {
            "1" => Status::Online,
            "0" => Status::Offline,
            other => return Err(row.field_error("status", format!("expected 0 or 1, got {other:?}"))),
        };
        out.push(ScanRecord { timestamp: row.parse("timestamp_utc")?, ip: ip_field(row, "ip")?, status });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_scans<W: Write>(out: W, scans: &[ScanRecord]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", SCAN_COLUMNS.join(","))?;
    for s in scans {
        writeln!(w, "{},{},{}", s.timestamp, s.ip, u8::from(s.status.is_online()))?;
    }
    w.flush()
}

pub fn read_geo<R: Read>(input: R) -> Result<Vec<GeoRangeRecord>> {
    let mut table = Table::new(input, &GEO_COLUMNS)?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let revision_date = NaiveDate::parse_from_str(row.str("revision_date"), "%Y-%m-%d")
            .map_err(|e| row.field_error("revision_date", e.to_string()))?;
        out.push(GeoRangeRecord {
            ip_lo: ip_field(row, "ip_lo")?,
            ip_hi: ip_field(row, "ip_hi")?,
            lon: row.parse("lon")?,
            lat: row.parse("lat")?,
            revision_date,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_geo<W: Write>(out: W, records: &[GeoRangeRecord]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", GEO_COLUMNS.join(","))?;
    for r in records {
        writeln!(w, "{},{},{},{},{}", r.ip_lo, r.ip_hi, r.lon, r.lat, r.revision_date.format("%Y-%m-%d"))?;
    }
    w.flush()
}

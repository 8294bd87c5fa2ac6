//! Boundary, bin and monthly-count files.
//!
//! Boundary file: a GeoJSON `FeatureCollection` whose features carry
//! `city_id`, `country`, `utc_offset_minutes`, `pop2000` and `pop2010`
//! properties (populations may be `null`) and `Polygon` or `MultiPolygon`
//! geometry in lon/lat.
//!
//! Bins: `city_id,local_date,segment,n_on,n_off`.
//! Monthly counts: `city_id,year,month,month_index,unique_ips,corrected`.
//! Country series: `country,month_index,ipc`.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde_json::{json, Value};
use thiserror::Error;

use super::{AggregateError, CountryIpc, MonthlyCityCount, Ring, SegmentBin, UrbanBoundary};
use crate::calendar::YearMonth;
use crate::tabular::{self, Table};

pub const BIN_COLUMNS: [&str; 5] = ["city_id", "local_date", "segment", "n_on", "n_off"];
pub const MONTHLY_COLUMNS: [&str; 6] = ["city_id", "year", "month", "month_index", "unique_ips", "corrected"];
pub const SERIES_COLUMNS: [&str; 4] = ["country", "month_index", "ipc", "n_cities"];

#[derive(Debug, Error)]
pub enum BoundaryFileError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] AggregateError),
}

fn feature_err(index: usize, message: impl Into<String>) -> BoundaryFileError {
    BoundaryFileError::Feature { index, message: message.into() }
}

fn parse_ring(v: &Value) -> Option<Ring> {
    v.as_array()?
        .iter()
        .map(|p| {
            let p = p.as_array()?;
            Some((p.first()?.as_f64()?, p.get(1)?.as_f64()?))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Option<Vec<Ring>> {
    v.as_array()?.iter().map(parse_ring).collect()
}

fn parse_feature(index: usize, f: &Value) -> Result<UrbanBoundary, BoundaryFileError> {
    let props = f.get("properties").ok_or_else(|| feature_err(index, "no properties"))?;
    let int = |key: &str| {
        props
            .get(key)
            .and_then(Value::as_i64)
            .ok_or_else(|| feature_err(index, format!("property `{key}` missing or not an integer")))
    };
    let pop = |key: &str| match props.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| feature_err(index, format!("property `{key}` is not a number"))),
    };
    let city_id = u32::try_from(int("city_id")?).map_err(|_| feature_err(index, "`city_id` out of range"))?;
    let utc_offset_minutes =
        i32::try_from(int("utc_offset_minutes")?).map_err(|_| feature_err(index, "`utc_offset_minutes` out of range"))?;
    let country = props
        .get("country")
        .and_then(Value::as_str)
        .ok_or_else(|| feature_err(index, "property `country` missing or not a string"))?
        .to_string();

    let geom = f.get("geometry").ok_or_else(|| feature_err(index, "no geometry"))?;
    let coords = geom.get("coordinates").ok_or_else(|| feature_err(index, "geometry has no coordinates"))?;
    let bad = || feature_err(index, "malformed coordinates");
    let polygons = match geom.get("type").and_then(Value::as_str) {
        Some("Polygon") => vec![parse_polygon(coords).ok_or_else(bad)?],
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|p| parse_polygon(p).ok_or_else(bad))
            .collect::<Result<_, _>>()?,
        other => return Err(feature_err(index, format!("unsupported geometry type {other:?}"))),
    };
    let b = UrbanBoundary {
        city_id,
        country,
        polygons,
        utc_offset_minutes,
        population_2000: pop("pop2000")?,
        population_2010: pop("pop2010")?,
    };
    b.validate()?;
    Ok(b)
}

pub fn read_boundaries<R: Read>(input: R) -> Result<Vec<UrbanBoundary>, BoundaryFileError> {
    let doc: Value = serde_json::from_reader(input)?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| feature_err(0, "document has no `features` array"))?;
    features.iter().enumerate().map(|(i, f)| parse_feature(i, f)).collect()
}

pub fn write_boundaries<W: Write>(out: W, boundaries: &[UrbanBoundary]) -> Result<(), BoundaryFileError> {
    let ring = |r: &Ring| Value::Array(r.iter().map(|&(x, y)| json!([x, y])).collect());
    let features: Vec<Value> = boundaries
        .iter()
        .map(|b| {
            let polys: Vec<Value> = b.polygons.iter().map(|p| Value::Array(p.iter().map(ring).collect())).collect();
            let geometry = if polys.len() == 1 {
                json!({ "type": "Polygon", "coordinates": polys[0] })
            } else {
                json!({ "type": "MultiPolygon", "coordinates": polys })
            };
            json!({
                "type": "Feature",
                "properties": {
                    "city_id": b.city_id,
                    "country": b.country,
                    "utc_offset_minutes": b.utc_offset_minutes,
                    "pop2000": b.population_2000,
                    "pop2010": b.population_2010,
                },
                "geometry": geometry,
            })
        })
        .collect();
    let mut w = std::io::BufWriter::new(out);
    serde_json::to_writer(&mut w, &json!({ "type": "FeatureCollection", "features": features }))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_bins<W: Write>(out: W, bins: &[SegmentBin]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", BIN_COLUMNS.join(","))?;
    for b in bins {
        writeln!(w, "{},{},{},{},{}", b.city_id, b.local_date.format("%Y-%m-%d"), b.segment, b.n_on, b.n_off)?;
    }
    w.flush()
}

pub fn read_bins<R: Read>(input: R) -> tabular::Result<Vec<SegmentBin>> {
    let mut table = Table::new(input, &BIN_COLUMNS)?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let local_date = NaiveDate::parse_from_str(row.str("local_date"), "%Y-%m-%d")
            .map_err(|e| row.field_error("local_date", e.to_string()))?;
        let segment: u8 = row.parse("segment")?;
        if segment > 95 {
            return Err(row.field_error("segment", format!("{segment} outside 0..=95")));
        }
        out.push(SegmentBin {
            city_id: row.parse("city_id")?,
            local_date,
            segment,
            n_on: row.parse("n_on")?,
            n_off: row.parse("n_off")?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_monthly<W: Write>(out: W, counts: &[MonthlyCityCount]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", MONTHLY_COLUMNS.join(","))?;
    for c in counts {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.city_id,
            c.month.year,
            c.month.month,
            c.month.index(),
            c.unique_ips,
            c.corrected
        )?;
    }
    w.flush()
}

pub fn read_monthly<R: Read>(input: R) -> tabular::Result<Vec<MonthlyCityCount>> {
    let mut table = Table::new(input, &MONTHLY_COLUMNS)?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let month: u32 = row.parse("month")?;
        if !(1..=12).contains(&month) {
            return Err(row.field_error("month", format!("{month} outside 1..=12")));
        }
        let ym = YearMonth::new(row.parse("year")?, month);
        let index: i32 = row.parse("month_index")?;
        if index != ym.index() {
            return Err(row.field_error("month_index", format!("{index} disagrees with {ym}")));
        }
        out.push(MonthlyCityCount {
            city_id: row.parse("city_id")?,
            month: ym,
            unique_ips: row.parse("unique_ips")?,
            corrected: row.parse("corrected")?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_country_series<W: Write>(out: W, series: &[CountryIpc]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", SERIES_COLUMNS.join(","))?;
    for s in series {
        writeln!(w, "{},{},{},{}", s.country, s.month_index, s.ipc, s.n_cities)?;
    }
    w.flush()
}

//! IPv4 addresses, scan records and geolocation ranges.

mod index;
pub mod io;

pub use index::{locate, BuildReport, GeoIndex, Location, Rejection};

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An IPv4 address in its canonical 32-bit form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IpAddress(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IpParseError {
    #[error("expected 4 dot-separated fields, found {0}")]
    FieldCount(usize),
    #[error("field {field} is empty")]
    Empty { field: usize },
    #[error("field {field} ({text:?}) is not a decimal number")]
    NotDecimal { field: usize, text: String },
    #[error("field {field} ({value}) exceeds 255")]
    OctetRange { field: usize, value: u32 },
}

impl IpAddress {
    pub fn from_octets(octets: [u8; 4]) -> Self {
        Self(u32::from_be_bytes(octets))
    }

    pub fn octets(self) -> [u8; 4] {
        self.0.to_be_bytes()
    }
}

/// Parses a dotted quad such as `"123.45.67.8"`.
///
/// Leading zeros are accepted and dropped by formatting, so
/// `parse_ipv4(s)?.to_string()` is the normalised form of `s`.
pub fn parse_ipv4(text: &str) -> Result<IpAddress, IpParseError> {
    let fields: Vec<&str> = text.split('.').collect();
    if fields.len() != 4 {
        return Err(IpParseError::FieldCount(fields.len()));
    }
    let mut octets = [0u8; 4];
    for (i, field) in fields.iter().enumerate() {
        let n = i + 1;
        if field.is_empty() {
            return Err(IpParseError::Empty { field: n });
        }
        if !field.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IpParseError::NotDecimal {
                field: n,
                text: (*field).to_string(),
            });
        }
        // Saturate on absurdly long digit strings; anything above 255 is rejected anyway.
        let value = field
            .bytes()
            .fold(0u32, |acc, b| acc.saturating_mul(10).saturating_add(u32::from(b - b'0')));
        if value > 255 {
            return Err(IpParseError::OctetRange { field: n, value });
        }
        octets[i] = value as u8;
    }
    Ok(IpAddress::from_octets(octets))
}

impl FromStr for IpAddress {
    type Err = IpParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ipv4(s)
    }
}

impl fmt::Display for IpAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.octets();
        write!(f, "{a}.{b}.{c}.{d}")
    }
}

/// Outcome of one ICMP probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Offline,
    Online,
}

impl Status {
    pub fn is_online(self) -> bool {
        self == Status::Online
    }
}

/// One probe of one address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScanRecord {
    /// UTC seconds.
    pub timestamp: i64,
    pub ip: IpAddress,
    pub status: Status,
}

/// An `{ip range, lon, lat}` row of one geolocation revision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoRangeRecord {
    pub ip_lo: IpAddress,
    pub ip_hi: IpAddress,
    pub lon: f64,
    pub lat: f64,
    pub revision_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoRecordError {
    #[error("inverted range {lo} > {hi}")]
    InvertedRange { lo: IpAddress, hi: IpAddress },
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
}

impl GeoRangeRecord {
    pub fn validate(&self) -> Result<(), GeoRecordError> {
        if self.ip_lo > self.ip_hi {
            return Err(GeoRecordError::InvertedRange {
                lo: self.ip_lo,
                hi: self.ip_hi,
            });
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeoRecordError::Latitude(self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(GeoRecordError::Longitude(self.lon));
        }
        Ok(())
    }
}

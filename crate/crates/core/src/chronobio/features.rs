//! Per-segment feature rows from a synthetic week.
//!
//! Column order: 7 levels, 7 first differences, 7 second differences,
//! 7 peak dummies, 7 trough dummies (each block Monday first), year dummies
//! for 2007 to 2012, 10 wavelet approximation coefficients of the weekly
//! signal, absolute latitude.

use super::wavelet::{wavedec, SYM3};
use super::{ChronoError, FeatureRow, SyntheticWeek, FIRST_FEATURE_SEGMENT, SEGMENTS, WEEKDAYS};

pub const N_FEATURES: usize = 52;
const YEARS: std::ops::RangeInclusive<i32> = 2007..=2012;
const WAVELET_LEVEL: usize = 7;
const N_WAVELET: usize = 10;

pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_FEATURES);
    for prefix in ["level", "diff1", "diff2", "peak", "trough"] {
        names.extend(WEEKDAYS.iter().map(|d| format!("{prefix}_{d}")));
    }
    names.extend(YEARS.map(|y| format!("year_{y}")));
    names.extend((1..=N_WAVELET).map(|i| format!("wavelet_{i}")));
    names.push("abs_latitude".to_string());
    names
}

/// Earliest index of the extreme value.
fn arg_extreme(v: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if better(*x, v[best]) {
            best = i;
        }
    }
    best
}

pub fn gen_features(week: &SyntheticWeek, latitude_deg: f64) -> Result<Vec<FeatureRow>, ChronoError> {
    if !(-90.0..=90.0).contains(&latitude_deg) {
        return Err(ChronoError::Latitude(latitude_deg));
    }
    let coeffs = wavedec(&week.concatenated(), &SYM3, WAVELET_LEVEL).swap_remove(0);
    if coeffs.len() != N_WAVELET {
        return Err(ChronoError::FeatureShape { got: coeffs.len(), expected: N_WAVELET });
    }
    let peaks: Vec<usize> = week.days.iter().map(|d| arg_extreme(d, |a, b| a > b)).collect();
    let troughs: Vec<usize> = week.days.iter().map(|d| arg_extreme(d, |a, b| a < b)).collect();

    let rows = (FIRST_FEATURE_SEGMENT..SEGMENTS)
        .map(|s| {
            let mut f = [0.0; N_FEATURES];
            for (d, day) in week.days.iter().enumerate() {
                f[d] = day[s];
                f[7 + d] = day[s] - day[s - 1];
                f[14 + d] = day[s] - 2.0 * day[s - 1] + day[s - 2];
                f[21 + d] = f64::from(u8::from(peaks[d] == s));
                f[28 + d] = f64::from(u8::from(troughs[d] == s));
            }
            for (i, y) in YEARS.enumerate() {
                f[35 + i] = f64::from(u8::from(week.year == y));
            }
            f[41..51].copy_from_slice(&coeffs);
            f[51] = latitude_deg.abs();
            FeatureRow { city_id: week.city_id, year: week.year, segment: s as u8, features: f }
        })
        .collect();
    Ok(rows)
}

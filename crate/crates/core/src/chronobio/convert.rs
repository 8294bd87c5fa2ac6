//! Conversion of per-segment sleep scores to continuous sleep times.

use super::smooth::{smooth, SmoothOptions};
use super::spline::NaturalSpline;
use super::wavelet::{denoise_level1, SYM8};
use super::{ChronoError, SleepTimes, MINUTES_PER_DAY, SEGMENTS};
use crate::aggregate::CityId;

/// The shifted day starts at 16:00 (segment 64).
const DAY_START_SEGMENT: usize = 64;
const SCORE_SMOOTHING: f64 = 0.06;
/// 03:00 in minutes after 16:00.
const SPLIT_AT: f64 = 660.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityThresholds {
    pub high: f64,
    pub min_high: usize,
    pub low: f64,
    pub min_low: usize,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self { high: 0.9, min_high: 15, low: 0.1, min_low: 20 }
    }
}

impl QualityThresholds {
    fn counts(&self, scores: &[Option<f64>]) -> (usize, usize) {
        let present = || scores.iter().flatten();
        (present().filter(|s| **s > self.high).count(), present().filter(|s| **s < self.low).count())
    }
}

/// Whether enough segments are confidently asleep and awake.
pub fn quality_filter(scores: &[Option<f64>]) -> bool {
    let q = QualityThresholds::default();
    let (high, low) = q.counts(scores);
    high >= q.min_high && low >= q.min_low
}

/// Continuous sleep start and stop from 96 scores indexed by segment
/// (`None` where no score exists, normally segments 0 and 1).
pub fn scores_to_times(city_id: CityId, year: i32, scores: &[Option<f64>]) -> Result<SleepTimes, ChronoError> {
    if scores.len() != SEGMENTS {
        return Err(ChronoError::ScoreLength(scores.len()));
    }
    if !quality_filter(scores) {
        let (high, low) = QualityThresholds::default().counts(scores);
        return Err(ChronoError::QualityFilter { high, low });
    }
    let shifted: Vec<Option<f64>> = (0..SEGMENTS).map(|j| scores[(j + DAY_START_SEGMENT) % SEGMENTS]).collect();
    let y: Vec<f64> = shifted.iter().map(|v| v.unwrap_or(0.0)).collect();
    let w: Vec<f64> = shifted.iter().map(|v| if v.is_some() { 1.0 } else { 0.0 }).collect();
    let z = smooth(&y, Some(&w), SmoothOptions::plain(SCORE_SMOOTHING));
    let d: Vec<f64> = z.windows(2).map(|p| p[1] - p[0]).collect();
    let d = denoise_level1(&d, &SYM8);
    // Difference i sits on the boundary between shifted segments i and i+1.
    let x: Vec<f64> = (0..d.len()).map(|i| 15.0 * (i + 1) as f64).collect();

    let section = |keep: &dyn Fn(f64) -> bool| -> Option<NaturalSpline> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = x.iter().zip(&d).filter(|(t, _)| keep(**t)).unzip();
        NaturalSpline::new(&xs, &ys)
    };
    let before = section(&|t| t <= SPLIT_AT).ok_or_else(|| ChronoError::Config("empty evening section".into()))?;
    let after = section(&|t| t >= SPLIT_AT).ok_or_else(|| ChronoError::Config("empty morning section".into()))?;
    // Scores rise where sleep begins and fall where it ends.
    let start = before.argmax();
    let stop = after.argmin();
    let to_clock = |t: f64| (t + 15.0 * DAY_START_SEGMENT as f64).rem_euclid(MINUTES_PER_DAY);
    SleepTimes::new(city_id, year, to_clock(start), to_clock(stop))
}

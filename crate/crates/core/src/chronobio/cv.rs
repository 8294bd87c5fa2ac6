//! Per city-year datasets, prediction and leave-one-city-out validation.

use std::collections::{BTreeMap, BTreeSet};

use super::forest::classify;
use super::{
    build_synthetic_week, clock_diff, daily_traces, eligible_city_years, gen_features, label_segments, scores_to_times,
    train_forest, ChronoError, EligibilityConfig, FeatureRow, Forest, ForestConfig, SleepTimes, SyntheticWeek,
    FIRST_FEATURE_SEGMENT, SEGMENTS,
};
use crate::aggregate::{CityId, SegmentBin};

/// Feature rows of one city-year, with the known schedule when labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct CityYearData {
    pub city_id: CityId,
    pub year: i32,
    pub rows: Vec<FeatureRow>,
    pub truth: Option<SleepTimes>,
}

impl CityYearData {
    /// Asleep flag of each row under the known schedule.
    pub fn labels(&self) -> Result<Vec<bool>, ChronoError> {
        let t = self.truth.ok_or_else(|| ChronoError::Config(format!("city {} {} is unlabelled", self.city_id, self.year)))?;
        let l = label_segments(t.start_min, t.stop_min)?;
        Ok(self.rows.iter().map(|r| l[r.segment as usize]).collect())
    }

    /// Scores of every segment, `None` for segments without a row.
    pub fn scores(&self, forest: &Forest) -> Vec<Option<f64>> {
        let mut out = vec![None; SEGMENTS];
        let scores = forest.predict_batch(&self.rows.iter().map(|r| r.features).collect::<Vec<_>>());
        for (r, s) in self.rows.iter().zip(scores) {
            out[r.segment as usize] = Some(s);
        }
        out
    }

    pub fn predict(&self, forest: &Forest) -> Result<SleepTimes, ChronoError> {
        scores_to_times(self.city_id, self.year, &self.scores(forest))
    }
}

pub fn build_dataset(
    week: &SyntheticWeek,
    latitude_deg: f64,
    truth: Option<SleepTimes>,
) -> Result<CityYearData, ChronoError> {
    let rows = gen_features(week, latitude_deg)?;
    if rows.len() != SEGMENTS - FIRST_FEATURE_SEGMENT {
        return Err(ChronoError::FeatureShape { got: rows.len(), expected: SEGMENTS - FIRST_FEATURE_SEGMENT });
    }
    Ok(CityYearData { city_id: week.city_id, year: week.year, rows, truth })
}

/// City-years that could not be turned into a dataset, with the reason.
pub type Skipped = Vec<(CityId, i32, ChronoError)>;

/// Eligible city-years of `bins` as datasets, in `(city, year)` order.
///
/// `latitude` gives each city's latitude; cities without one are skipped.
/// `truth` attaches known schedules where present.
pub fn datasets_from_bins(
    bins: &[SegmentBin],
    eligibility: &EligibilityConfig,
    latitude: &dyn Fn(CityId) -> Option<f64>,
    truth: &BTreeMap<(CityId, i32), SleepTimes>,
) -> (Vec<CityYearData>, Skipped) {
    let keep = eligible_city_years(bins, eligibility);
    let mut data = Vec::new();
    let mut skipped = Vec::new();
    for ((city, year), traces) in daily_traces(bins, &keep) {
        let Some(lat) = latitude(city) else {
            skipped.push((city, year, ChronoError::Config(format!("no latitude for city {city}"))));
            continue;
        };
        match build_synthetic_week(&traces).and_then(|w| build_dataset(&w, lat, truth.get(&(city, year)).copied())) {
            Ok(d) => data.push(d),
            Err(e) => skipped.push((city, year, e)),
        }
    }
    (data, skipped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPrediction {
    pub city_id: CityId,
    pub year: i32,
    pub truth: SleepTimes,
    /// `Err` when the scores failed the quality filter.
    pub predicted: Result<SleepTimes, ChronoError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: usize,
    /// Segment accuracy at score threshold 0.5 over all held-out rows.
    pub accuracy: f64,
    pub predictions: Vec<CvPrediction>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

impl CvReport {
    /// Median absolute start, stop and duration errors in minutes over
    /// city-years with an estimate.
    pub fn median_abs_errors(&self) -> Option<(f64, f64, f64)> {
        let ok: Vec<(&SleepTimes, &SleepTimes)> =
            self.predictions.iter().filter_map(|p| p.predicted.as_ref().ok().map(|q| (q, &p.truth))).collect();
        Some((
            median(ok.iter().map(|(p, t)| clock_diff(p.start_min, t.start_min).abs()).collect())?,
            median(ok.iter().map(|(p, t)| clock_diff(p.stop_min, t.stop_min).abs()).collect())?,
            median(ok.iter().map(|(p, t)| 60.0 * (p.duration_h - t.duration_h).abs()).collect())?,
        ))
    }

    pub fn n_estimated(&self) -> usize {
        self.predictions.iter().filter(|p| p.predicted.is_ok()).count()
    }
}

/// One fold per distinct city: train on every other city's labelled
/// city-years and predict the held-out city's.
pub fn crossvalidate_by_city(data: &[CityYearData], config: &ForestConfig) -> Result<CvReport, ChronoError> {
    let cities: BTreeSet<CityId> = data.iter().map(|d| d.city_id).collect();
    if cities.len() < 2 {
        return Err(ChronoError::TooFewCities(cities.len()));
    }
    let labels: Vec<Vec<bool>> = data.iter().map(CityYearData::labels).collect::<Result<_, _>>()?;
    let (mut hits, mut total) = (0usize, 0usize);
    let mut predictions = Vec::new();
    for &city in &cities {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (d, l) in data.iter().zip(&labels).filter(|(d, _)| d.city_id != city) {
            x.extend(d.rows.iter().map(|r| r.features));
            y.extend_from_slice(l);
        }
        log::debug!("fold city {city}: {} training rows", x.len());
        let (forest, _) = train_forest(&x, &y, config)?;
        for (d, l) in data.iter().zip(&labels).filter(|(d, _)| d.city_id == city) {
            let scores = d.scores(&forest);
            for (r, label) in d.rows.iter().zip(l) {
                hits += usize::from(scores[r.segment as usize].is_some_and(classify) == *label);
                total += 1;
            }
            predictions.push(CvPrediction {
                city_id: d.city_id,
                year: d.year,
                truth: d.truth.expect("labels checked above"),
                predicted: scores_to_times(d.city_id, d.year, &scores),
            });
        }
    }
    Ok(CvReport { folds: cities.len(), accuracy: hits as f64 / total.max(1) as f64, predictions })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A week whose level is the awake indicator of `[start, stop)`.
    fn week(city_id: CityId, start: f64, stop: f64) -> SyntheticWeek {
        let l = label_segments(start, stop).unwrap();
        let mut day = [0.0; SEGMENTS];
        for (v, asleep) in day.iter_mut().zip(l) {
            *v = if asleep { 0.1 } else { 0.9 };
        }
        SyntheticWeek { city_id, year: 2010, days: [day; 7] }
    }

    fn city(city_id: CityId, start: f64, stop: f64) -> CityYearData {
        let truth = SleepTimes::new(city_id, 2010, start, stop).unwrap();
        build_dataset(&week(city_id, start, stop), 40.0, Some(truth)).unwrap()
    }

    #[test]
    fn fold_count_equals_cities() {
        let data = vec![city(1, 1320.0, 390.0), city(2, 1350.0, 420.0), city(3, 1290.0, 360.0), city(3, 1290.0, 360.0)];
        let cfg = ForestConfig { n_trees: 20, ..Default::default() };
        let r = crossvalidate_by_city(&data, &cfg).unwrap();
        assert_eq!(r.folds, 3);
        assert_eq!(r.predictions.len(), 4);
        assert!(r.accuracy > 0.9, "{}", r.accuracy);
    }

    #[test]
    fn identical_cities_match_training_accuracy() {
        let data = vec![city(1, 1320.0, 390.0), city(2, 1320.0, 390.0)];
        let cfg = ForestConfig { n_trees: 20, ..Default::default() };
        let r = crossvalidate_by_city(&data, &cfg).unwrap();
        let x: Vec<_> = data[0].rows.iter().map(|r| r.features).collect();
        let y = data[0].labels().unwrap();
        let (_, rep) = train_forest(&x, &y, &cfg).unwrap();
        assert_eq!(r.accuracy, rep.training_accuracy);
        let (s, e, d) = r.median_abs_errors().unwrap();
        assert!(s <= 7.5 && e <= 7.5 && d <= 15.0, "{s} {e} {d}");
    }

    #[test]
    fn needs_two_cities() {
        let data = vec![city(1, 1320.0, 390.0)];
        assert_eq!(crossvalidate_by_city(&data, &ForestConfig::default()).unwrap_err(), ChronoError::TooFewCities(1));
    }
}

use std::collections::{BTreeMap, BTreeSet};

use super::{AggregateError, CityId, MonthlyCityCount};
use crate::calendar::YearMonth;

pub const DEFAULT_MISSONI_CUTOFF: u64 = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct MissoniReport {
    /// Retained cities only, with `corrected` rescaled; sorted by `(city_id, month)`.
    pub counts: Vec<MonthlyCityCount>,
    pub dropped_cities: Vec<CityId>,
    pub months: Vec<YearMonth>,
    pub totals: Vec<f64>,
    pub intercept: f64,
    /// Per month of index.
    pub slope: f64,
    pub trend: Vec<f64>,
    pub scale: Vec<f64>,
    /// `totals - trend`.
    pub residuals: Vec<f64>,
}

/// Rescales monthly counts so that each month's total lies on the OLS line
/// fitted to the monthly totals.
///
/// The month set is every month present in `counts`. A city is kept only if
/// it has at least `cutoff` addresses in every one of those months.
pub fn missoni_correct(counts: &[MonthlyCityCount], cutoff: u64) -> Result<MissoniReport, AggregateError> {
    let months: BTreeSet<YearMonth> = counts.iter().map(|c| c.month).collect();
    let mut by_city: BTreeMap<CityId, BTreeMap<YearMonth, u64>> = BTreeMap::new();
    for c in counts {
        *by_city.entry(c.city_id).or_default().entry(c.month).or_default() += c.unique_ips;
    }
    let (kept, dropped): (Vec<_>, Vec<_>) = by_city
        .into_iter()
        .partition(|(_, m)| m.len() == months.len() && m.values().all(|&n| n >= cutoff));
    if kept.is_empty() {
        return Err(AggregateError::EmptyPanel { cutoff });
    }
    if months.len() < 2 {
        return Err(AggregateError::TooFewMonths(months.len()));
    }

    let months: Vec<YearMonth> = months.into_iter().collect();
    let totals: Vec<f64> = months
        .iter()
        .map(|m| kept.iter().map(|(_, c)| c[m] as f64).sum())
        .collect();
    let x: Vec<f64> = months.iter().map(|m| f64::from(m.index())).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, totals.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&totals).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let trend: Vec<f64> = x.iter().map(|a| intercept + slope * a).collect();
    if let Some(i) = trend.iter().position(|&t| !(t > 0.0)) {
        return Err(AggregateError::DegenerateTrend { month_index: months[i].index(), value: trend[i] });
    }
    let scale: Vec<f64> = trend.iter().zip(&totals).map(|(t, s)| t / s).collect();
    let residuals = totals.iter().zip(&trend).map(|(s, t)| s - t).collect();

    let mut out = Vec::with_capacity(kept.len() * months.len());
    for (city_id, per_month) in &kept {
        for (i, m) in months.iter().enumerate() {
            let unique_ips = per_month[m];
            out.push(MonthlyCityCount { city_id: *city_id, month: *m, unique_ips, corrected: unique_ips as f64 * scale[i] });
        }
    }
    Ok(MissoniReport {
        counts: out,
        dropped_cities: dropped.into_iter().map(|(c, _)| c).collect(),
        months,
        totals,
        intercept,
        slope,
        trend,
        scale,
        residuals,
    })
}

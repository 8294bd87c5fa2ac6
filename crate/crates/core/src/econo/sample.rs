//! Sample restrictions used in robustness checks.

use serde::{Deserialize, Serialize};

use super::{EconoError, PanelObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SampleFilter {
    /// Drop the lowest and highest 5 % of GDP per capita.
    TrimGdp,
    /// Rows strictly below the sample median GDP per capita.
    BelowMedianGdp,
    /// Rows at or above the sample median GDP per capita.
    AboveMedianGdp,
    /// Drop the lowest and highest 5 % of IP per capita.
    TrimIp,
    ExcludeCountries(Vec<String>),
    YearAtMost(i32),
    YearAfter(i32),
}

impl std::fmt::Display for SampleFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleFilter::TrimGdp => write!(f, "trim GDP 5/95"),
            SampleFilter::BelowMedianGdp => write!(f, "below median GDP"),
            SampleFilter::AboveMedianGdp => write!(f, "above median GDP"),
            SampleFilter::TrimIp => write!(f, "trim IP 5/95"),
            SampleFilter::ExcludeCountries(c) => write!(f, "exclude {}", c.join(",")),
            SampleFilter::YearAtMost(y) => write!(f, "year <= {y}"),
            SampleFilter::YearAfter(y) => write!(f, "year > {y}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterReport {
    pub n_before: usize,
    pub n_after: usize,
}

const TRIM_SHARE: f64 = 0.05;

/// Removes `floor(0.05 n)` rows from each tail of `key`. Ties are ordered
/// by region and year so the subset is deterministic.
fn trim(panel: &[PanelObservation], key: fn(&PanelObservation) -> f64) -> Vec<PanelObservation> {
    let n = panel.len();
    let cut = (TRIM_SHARE * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| {
        let (x, y) = (&panel[*a], &panel[*b]);
        key(x).total_cmp(&key(y)).then_with(|| x.region_id.cmp(&y.region_id)).then(x.year.cmp(&y.year))
    });
    let mut keep = vec![false; n];
    for &i in &order[cut..n - cut] {
        keep[i] = true;
    }
    panel.iter().zip(keep).filter(|(_, k)| *k).map(|(o, _)| o.clone()).collect()
}

fn median_gdp(panel: &[PanelObservation]) -> f64 {
    let mut v: Vec<f64> = panel.iter().map(|o| o.gdp_pc).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Subset of `panel` selected by `filter`, in input order.
pub fn apply_sample_filter(
    panel: &[PanelObservation],
    filter: &SampleFilter,
) -> Result<(Vec<PanelObservation>, FilterReport), EconoError> {
    let out: Vec<PanelObservation> = if panel.is_empty() {
        Vec::new()
    } else {
        match filter {
            SampleFilter::TrimGdp => trim(panel, |o| o.gdp_pc),
            SampleFilter::TrimIp => trim(panel, |o| o.ip_pc),
            SampleFilter::BelowMedianGdp => {
                let m = median_gdp(panel);
                panel.iter().filter(|o| o.gdp_pc < m).cloned().collect()
            }
            SampleFilter::AboveMedianGdp => {
                let m = median_gdp(panel);
                panel.iter().filter(|o| o.gdp_pc >= m).cloned().collect()
            }
            SampleFilter::ExcludeCountries(list) => panel.iter().filter(|o| !list.contains(&o.country)).cloned().collect(),
            SampleFilter::YearAtMost(y) => panel.iter().filter(|o| o.year <= *y).cloned().collect(),
            SampleFilter::YearAfter(y) => panel.iter().filter(|o| o.year > *y).cloned().collect(),
        }
    };
    if out.is_empty() {
        return Err(EconoError::EmptySample(filter.to_string()));
    }
    let report = FilterReport { n_before: panel.len(), n_after: out.len() };
    log::debug!("{filter}: {} -> {} rows", report.n_before, report.n_after);
    Ok((out, report))
}

use serde::{Deserialize, Serialize};

use super::{categorize, logistic, saturation_window, Category, CountrySeries, LogisticParams, MixedEffectsFit};
use crate::calendar::{calendar_year, EPOCH_YEAR};

/// One row of the country ranking table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationSummary {
    pub country: String,
    pub n_cities: usize,
    pub rank_2006: usize,
    pub rank_2012: usize,
    /// `rank_2006 - rank_2012`; positive means the country climbed.
    pub rank_change: i64,
    pub ipc_2006: f64,
    pub ipc_2012: f64,
    pub category: Category,
    pub params: LogisticParams,
    pub year_1pct: i32,
    pub year_99pct: i32,
}

/// Mean observed level in a calendar year, or the fitted curve's mean over
/// that year when the series has no observation in it.
fn level(series: Option<&CountrySeries>, params: &LogisticParams, year: i32) -> f64 {
    let lo = f64::from((year - EPOCH_YEAR) * 12);
    let hi = lo + 12.0;
    if let Some(s) = series {
        let obs: Vec<f64> = s.t.iter().zip(&s.ipc).filter(|(t, _)| **t >= lo && **t < hi).map(|(_, y)| *y).collect();
        if !obs.is_empty() {
            return obs.iter().sum::<f64>() / obs.len() as f64;
        }
    }
    (0..12).map(|m| logistic(lo + f64::from(m), params)).sum::<f64>() / 12.0
}

fn ranks(levels: &[(String, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[b].1.total_cmp(&levels[a].1).then_with(|| levels[a].0.cmp(&levels[b].0)));
    let mut rank = vec![0; levels.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}

/// Ranks fitted countries by their 2006 and 2012 levels (descending, ties
/// by country code) and attaches the saturation years. Rows come back in
/// 2012 rank order.
pub fn rank_countries(fit: &MixedEffectsFit, series: &[CountrySeries]) -> Vec<SaturationSummary> {
    let find = |c: &str| series.iter().find(|s| s.country == c);
    let l2006: Vec<(String, f64)> = fit
        .per_country
        .iter()
        .map(|c| (c.country.clone(), level(find(&c.country), &c.params, 2006)))
        .collect();
    let l2012: Vec<(String, f64)> = fit
        .per_country
        .iter()
        .map(|c| (c.country.clone(), level(find(&c.country), &c.params, 2012)))
        .collect();
    let (r2006, r2012) = (ranks(&l2006), ranks(&l2012));
    let mut rows: Vec<SaturationSummary> = fit
        .per_country
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let w = saturation_window(&c.params);
            SaturationSummary {
                country: c.country.clone(),
                n_cities: c.n_cities,
                rank_2006: r2006[i],
                rank_2012: r2012[i],
                rank_change: r2006[i] as i64 - r2012[i] as i64,
                ipc_2006: l2006[i].1,
                ipc_2012: l2012[i].1,
                category: categorize(l2012[i].1),
                params: c.params,
                year_1pct: calendar_year(w.t_1pct),
                year_99pct: calendar_year(w.t_99pct),
            }
        })
        .collect();
    rows.sort_by_key(|r| r.rank_2012);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{CountryEffect, FitMethod};
    use proptest::prelude::*;

    fn fit_with(countries: &[(&str, LogisticParams)]) -> MixedEffectsFit {
        MixedEffectsFit {
            method: FitMethod::Saem,
            mean_field: countries[0].1,
            omega: [[0.0; 2]; 2],
            sigma: 0.0,
            per_country: countries
                .iter()
                .map(|(c, p)| CountryEffect {
                    country: c.to_string(),
                    n_obs: 0,
                    n_cities: 2,
                    delta_alpha: 0.0,
                    delta_beta: 0.0,
                    params: *p,
                    rmse: 0.0,
                })
                .collect(),
            rmse: 0.0,
            iterations: 0,
            seed: 0,
            dropped: vec![],
            trace: vec![],
        }
    }

    fn flat(country: &str, v2006: f64, v2012: f64) -> CountrySeries {
        CountrySeries { country: country.into(), t: vec![0.0, 72.0], ipc: vec![v2006, v2012], n_cities: 2 }
    }

    fn p() -> LogisticParams {
        LogisticParams::new(0.32, 0.047, 40.0).unwrap()
    }

    #[test]
    fn stable_levels_keep_ranks() {
        let fit = fit_with(&[("AAA", p()), ("BBB", p())]);
        let rows = rank_countries(&fit, &[flat("AAA", 0.3, 0.3), flat("BBB", 0.1, 0.1)]);
        assert_eq!((rows[0].country.as_str(), rows[0].rank_2006, rows[0].rank_2012, rows[0].rank_change), ("AAA", 1, 1, 0));
        assert_eq!((rows[1].rank_2006, rows[1].rank_2012, rows[1].rank_change), (2, 2, 0));
        assert_eq!(rows[0].category, Category::High);
    }

    #[test]
    fn swapped_levels_give_opposite_changes() {
        let fit = fit_with(&[("AAA", p()), ("BBB", p())]);
        let rows = rank_countries(&fit, &[flat("AAA", 0.3, 0.1), flat("BBB", 0.1, 0.3)]);
        assert_eq!(rows[0].country, "BBB");
        assert_eq!(rows[0].rank_change, 1);
        assert_eq!(rows[1].rank_change, -1);
    }

    #[test]
    fn germany_style_years() {
        // Midpoint placed so that the 1 % point falls in 2004.
        let beta = 35.0;
        let g = LogisticParams::new(0.481, 0.083, beta).unwrap();
        let fit = fit_with(&[("DEU", g)]);
        let row = &rank_countries(&fit, &[])[0];
        assert_eq!((row.year_1pct, row.year_99pct), (2004, 2013));
        assert!(row.ipc_2012 > 0.32);
        assert_eq!(row.category, Category::Saturated);
    }

    proptest! {
        #[test]
        fn ranks_are_permutations(levels in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30)) {
            let names: Vec<String> = (0..levels.len()).map(|i| format!("C{i:02}")).collect();
            let pairs: Vec<(&str, LogisticParams)> = names.iter().map(|n| (n.as_str(), p())).collect();
            let fit = fit_with(&pairs);
            let series: Vec<CountrySeries> = names.iter().zip(&levels).map(|(n, (a, b))| flat(n, *a, *b)).collect();
            let rows = rank_countries(&fit, &series);
            let mut r06: Vec<usize> = rows.iter().map(|r| r.rank_2006).collect();
            let mut r12: Vec<usize> = rows.iter().map(|r| r.rank_2012).collect();
            r06.sort();
            r12.sort();
            let expect: Vec<usize> = (1..=levels.len()).collect();
            prop_assert_eq!(r06, expect.clone());
            prop_assert_eq!(r12, expect);
        }
    }
}

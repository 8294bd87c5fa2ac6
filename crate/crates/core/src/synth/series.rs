//! Country IP-per-capita series drawn directly from the diffusion model.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{country_code, draw_country_params, stream_rng, CountryTruth, Result, Stream, SynthError};
use crate::diffusion::{logistic, CountrySeries, LogisticParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub seed: u64,
    pub n_countries: usize,
    pub first_month: i32,
    pub months: usize,
    pub mean_field: LogisticParams,
    pub sd_alpha: f64,
    pub sd_beta: f64,
    /// Additive Gaussian noise on each monthly value.
    pub noise: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_countries: 20,
            first_month: 0,
            months: 75,
            mean_field: LogisticParams { k: 0.32, alpha: 0.047, beta: 40.0 },
            sd_alpha: 0.01,
            sd_beta: 12.0,
            noise: 0.01,
        }
    }
}

/// Monthly series for `n_countries` countries with their planted curves.
pub fn gen_diffusion_series(config: &SeriesConfig) -> Result<(Vec<CountrySeries>, Vec<CountryTruth>)> {
    if config.n_countries < 1 || config.months < 1 {
        return Err(SynthError::Config("n_countries and months must be at least 1".into()));
    }
    if !(config.noise >= 0.0 && config.sd_alpha >= 0.0 && config.sd_beta >= 0.0) {
        return Err(SynthError::Config("noise levels must be >= 0".into()));
    }
    config.mean_field.validate().map_err(|e| SynthError::Config(e.to_string()))?;
    let params =
        draw_country_params(config.seed, Stream::Series, config.n_countries, &config.mean_field, config.sd_alpha, config.sd_beta);
    let mut series = Vec::with_capacity(params.len());
    let mut truth = Vec::with_capacity(params.len());
    for (c, p) in params.into_iter().enumerate() {
        let mut rng = stream_rng(config.seed, Stream::Series, (1 << 32) | c as u64);
        let t: Vec<f64> = (0..config.months).map(|m| f64::from(config.first_month + m as i32)).collect();
        let ipc = t
            .iter()
            .map(|&t| {
                let e = if config.noise > 0.0 { config.noise * Distribution::<f64>::sample(&StandardNormal, &mut rng) } else { 0.0 };
                logistic(t, &p) + e
            })
            .collect();
        let country = country_code(c).0;
        series.push(CountrySeries { country: country.clone(), t, ipc, n_cities: 1 });
        truth.push(CountryTruth { country, params: p });
    }
    Ok((series, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_series_sit_on_the_curves() {
        let (s, t) = gen_diffusion_series(&SeriesConfig { noise: 0.0, n_countries: 3, ..SeriesConfig::default() }).unwrap();
        for (s, t) in s.iter().zip(&t) {
            assert_eq!(s.country, t.country);
            assert_eq!(s.len(), 75);
            for (x, y) in s.t.iter().zip(&s.ipc) {
                assert_eq!(*y, logistic(*x, &t.params));
            }
        }
    }

    #[test]
    fn offsets_have_the_requested_spread() {
        let (_, t) = gen_diffusion_series(&SeriesConfig { n_countries: 24, sd_alpha: 0.0, ..SeriesConfig::default() }).unwrap();
        assert!(t.iter().all(|c| c.params.alpha == 0.047 && c.params.k == 0.32));
        let betas: Vec<f64> = t.iter().map(|c| c.params.beta).collect();
        let mean = betas.iter().sum::<f64>() / 24.0;
        let sd = (betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / 23.0).sqrt();
        assert!(sd > 6.0 && sd < 18.0, "{sd}");
    }
}

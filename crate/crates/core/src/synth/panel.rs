//! Regional panels built from the fixed-effects model with planted slopes.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{stream_rng, Result, Stream, SynthError};
use crate::diffusion::{logistic, LogisticParams};
use crate::econo::{PanelObservation, RegressionSpec, Sector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelConfig {
    pub regions_per_country: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Elasticity of GDP per capita with respect to IP per capita.
    pub beta_gdp: f64,
    /// Sector elasticities of GVA per worker, in [`Sector::ALL`] order.
    pub gamma: [f64; 7],
    /// Effects present in the GDP equation; the lag applies to IP per capita.
    pub structure: RegressionSpec,
    pub noise: f64,
    /// Spread of region-year deviations of log IP per capita from the country curve.
    pub ip_noise: f64,
    pub gva_noise: f64,
    /// Probability that a GVA cell is missing.
    pub gva_missing: f64,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            regions_per_country: 8,
            first_year: 2006,
            last_year: 2012,
            beta_gdp: 0.08,
            gamma: [-0.031, -0.015, -0.015, 0.009, 0.010, 0.024, 0.051],
            structure: RegressionSpec::full(),
            noise: 0.02,
            ip_noise: 0.15,
            gva_noise: 0.02,
            gva_missing: 0.1,
        }
    }
}

impl PanelConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::Config(format!("panel: {m}")));
        if self.regions_per_country < 1 {
            return bad("regions_per_country must be at least 1".into());
        }
        if self.last_year < self.first_year || self.first_year < 1900 || self.last_year > 2100 {
            return bad(format!("years {}..={} are not an ordered range in 1900..=2100", self.first_year, self.last_year));
        }
        for (name, v) in [("noise", self.noise), ("ip_noise", self.ip_noise), ("gva_noise", self.gva_noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gva_missing) {
            return bad(format!("gva_missing {} outside [0, 1]", self.gva_missing));
        }
        if !self.beta_gdp.is_finite() || self.gamma.iter().any(|g| !g.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PanelTruth {
    pub beta_gdp: f64,
    pub gamma: [f64; 7],
    pub lag: u32,
}

fn normal(rng: &mut impl Rng, sd: f64) -> f64 {
    if sd > 0.0 {
        sd * Distribution::<f64>::sample(&StandardNormal, rng)
    } else {
        0.0
    }
}

/// A shock shared by every region with the same `key`.
fn shared(seed: u64, key: u64, sd: f64) -> f64 {
    normal(&mut stream_rng(seed, Stream::Panel, key), sd)
}

fn year_key(year: i32) -> u64 {
    (year - 1899) as u64
}

/// Panel of `regions_per_country` regions per country. Log IP per capita
/// follows the country's diffusion curve at mid-year times a region level
/// and region-year noise; log GDP per capita adds the effects switched on in
/// `structure` to `beta_gdp` times (possibly lagged) log IP per capita.
/// Sector GVA follows region and sector-year effects plus `gamma`.
pub fn gen_panel(seed: u64, config: &PanelConfig, countries: &[(String, LogisticParams)]) -> Result<(Vec<PanelObservation>, PanelTruth)> {
    config.validate()?;
    let spec = config.structure;
    let lag = spec.lag as i32;
    let mut out = Vec::new();
    for (c, (code, params)) in countries.iter().enumerate() {
        for r in 0..config.regions_per_country {
            let region = c * config.regions_per_country + r;
            let mut rng = stream_rng(seed, Stream::Panel, (1 << 40) | region as u64);
            let level = normal(&mut rng, 0.3);
            let mu = 10.0 + if spec.region_effects { normal(&mut rng, 0.5) } else { 0.0 };
            let trend = if spec.region_trends { 0.02 + normal(&mut rng, 0.01) } else { 0.0 };
            let sector_mu: Vec<f64> = (0..7).map(|_| 11.0 + normal(&mut rng, 0.5)).collect();

            let years: Vec<i32> = (config.first_year - lag..=config.last_year).collect();
            let ln_ip: Vec<f64> = years
                .iter()
                .map(|&y| {
                    let t = f64::from((y - crate::calendar::EPOCH_YEAR) * 12 + 6);
                    logistic(t, params).ln() + level + normal(&mut rng, config.ip_noise)
                })
                .collect();
            for (i, &year) in years.iter().enumerate().skip(lag as usize) {
                let x = ln_ip[i - lag as usize];
                let mut y = mu + trend * f64::from(year - config.first_year) + config.beta_gdp * x;
                if spec.year_effects {
                    y += shared(seed, (2 << 40) | year_key(year), 0.05);
                }
                if spec.country_year_effects {
                    y += shared(seed, (3 << 40) | ((c as u64) << 16) | year_key(year), 0.05);
                }
                y += normal(&mut rng, config.noise);
                let mut gva = [None; 7];
                for s in Sector::ALL {
                    let k = s.index();
                    let lambda = shared(seed, (4 << 40) | ((k as u64) << 16) | year_key(year), 0.05);
                    let v = sector_mu[k] + lambda + config.gamma[k] * ln_ip[i] + normal(&mut rng, config.gva_noise);
                    let missing = rng.random::<f64>() < config.gva_missing;
                    gva[k] = (!missing).then(|| v.exp());
                }
                out.push(PanelObservation {
                    region_id: format!("{code}{r:02}"),
                    country: code.clone(),
                    year,
                    gdp_pc: y.exp(),
                    ip_pc: ln_ip[i].exp(),
                    gva,
                });
            }
        }
    }
    Ok((out, PanelTruth { beta_gdp: config.beta_gdp, gamma: config.gamma, lag: spec.lag }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econo::{fit_fe, fit_sectoral};

    fn countries(n: usize) -> Vec<(String, LogisticParams)> {
        (0..n)
            .map(|i| (super::super::country_code(i).0, LogisticParams { k: 0.32, alpha: 0.04 + 0.005 * i as f64, beta: 30.0 + 5.0 * i as f64 }))
            .collect()
    }

    #[test]
    fn noiseless_panels_give_back_the_slope() {
        for spec in [
            RegressionSpec::pooled(),
            RegressionSpec::region_fe(),
            RegressionSpec::full(),
            RegressionSpec::full().with_lag(1),
        ] {
            let cfg = PanelConfig { structure: spec, noise: 0.0, beta_gdp: 0.123, ..PanelConfig::default() };
            let (p, truth) = gen_panel(3, &cfg, &countries(4)).unwrap();
            assert_eq!(p.len(), 4 * 8 * 7);
            let fit = fit_fe(&p, &spec).unwrap();
            assert!((fit.beta - truth.beta_gdp).abs() < 1e-8, "{spec:?}: {}", fit.beta);
        }
    }

    #[test]
    fn sector_slopes() {
        let cfg = PanelConfig { gva_noise: 0.0, gva_missing: 0.2, ..PanelConfig::default() };
        let (p, truth) = gen_panel(4, &cfg, &countries(3)).unwrap();
        for s in Sector::ALL {
            let fit = fit_sectoral(&p, s, 10).unwrap();
            assert!((fit.beta - truth.gamma[s.index()]).abs() < 1e-8, "{s:?}");
        }
        assert!(p.iter().any(|o| o.gva.iter().any(Option::is_none)));
    }

    #[test]
    fn seeds_are_reproducible() {
        let cfg = PanelConfig::default();
        assert_eq!(gen_panel(5, &cfg, &countries(2)).unwrap(), gen_panel(5, &cfg, &countries(2)).unwrap());
        assert_ne!(gen_panel(5, &cfg, &countries(2)).unwrap().0, gen_panel(6, &cfg, &countries(2)).unwrap().0);
    }
}

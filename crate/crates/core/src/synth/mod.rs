//! Deterministic synthetic world with planted ground truth.
//!
//! A world has countries whose IP-per-capita follows a logistic curve with
//! country offsets around a mean field, cities laid out as disjoint unit
//! squares with their own address blocks, diurnal activity that dips during
//! each city's planted night, survey diaries around that night, and a
//! regional panel built from the fixed-effects model with planted slopes.
//!
//! Every city draws from its own ChaCha stream, so output does not depend
//! on the number of worker threads.

mod diurnal;
pub mod io;
mod panel;
mod scans;
mod series;
mod sleep;

pub use diurnal::{activity, DiurnalShape, Night};
pub use panel::{gen_panel, PanelConfig, PanelTruth};
pub use scans::{CityPlan, PoolTruth};
pub use series::{gen_diffusion_series, SeriesConfig};
pub use sleep::{city_night, SleepConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{SegmentBin, UrbanBoundary};
use crate::chronobio::{DiaryEntry, SleepTimes};
use crate::diffusion::LogisticParams;
use crate::econo::PanelObservation;
use crate::ipcore::{GeoRangeRecord, ScanRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("layout spacing {0} is below 1: city squares would overlap")]
    Overlap(f64),
    #[error("layout does not fit on the globe: city {city} at ({lon}, {lat})")]
    OutOfBounds { city: usize, lon: f64, lat: f64 },
    #[error("city {city} needs {needed} addresses, block holds {block}")]
    BlockOverflow { city: usize, needed: u64, block: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Boundary(#[from] crate::aggregate::io::BoundaryFileError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub seed: u64,
    pub n_countries: usize,
    pub cities_per_country: usize,
    /// Month index of the first scanned month (0 = January 2006).
    pub first_month: i32,
    pub months: usize,
    pub mean_field: LogisticParams,
    pub sd_alpha: f64,
    pub sd_beta: f64,
    /// Range of year-2000 city populations.
    pub population_2000: (f64, f64),
    /// Range of the 2010/2000 population ratio.
    pub population_growth: (f64, f64),
    /// Additive noise on each city-month's IP per capita.
    pub ipc_noise: f64,
    /// Spread of the shared monthly detection rate below 1.
    pub coverage_noise: f64,
    pub scan_days_per_month: u32,
    pub probes_per_month: u32,
    /// Probes are taken on a grid of this many minutes.
    pub scan_interval_min: u32,
    pub geo_ranges_per_city: usize,
    /// Distance between neighbouring city squares, in degrees.
    pub layout_spacing: f64,
    pub sleep: SleepConfig,
    pub panel: PanelConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_countries: 4,
            cities_per_country: 3,
            first_month: 24,
            months: 24,
            mean_field: LogisticParams { k: 0.32, alpha: 0.047, beta: 40.0 },
            sd_alpha: 0.01,
            sd_beta: 12.0,
            population_2000: (6000.0, 15000.0),
            population_growth: (1.0, 1.3),
            ipc_noise: 0.005,
            coverage_noise: 0.05,
            scan_days_per_month: 21,
            probes_per_month: 1,
            scan_interval_min: 11,
            geo_ranges_per_city: 4,
            layout_spacing: 5.0,
            sleep: SleepConfig::default(),
            panel: PanelConfig::default(),
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SynthError::Config(msg()))
    }
}

impl WorldConfig {
    pub fn n_cities(&self) -> usize {
        self.n_countries * self.cities_per_country
    }

    pub fn validate(&self) -> Result<()> {
        check(self.n_countries >= 1 && self.cities_per_country >= 1 && self.months >= 1, || {
            "n_countries, cities_per_country and months must be at least 1".into()
        })?;
        check(self.scan_days_per_month >= 1 && self.scan_days_per_month <= 28, || {
            format!("scan_days_per_month {} outside 1..=28", self.scan_days_per_month)
        })?;
        check(self.probes_per_month >= 1 && self.geo_ranges_per_city >= 1, || {
            "probes_per_month and geo_ranges_per_city must be at least 1".into()
        })?;
        check((1..=1440).contains(&self.scan_interval_min), || "scan_interval_min outside 1..=1440".into())?;
        self.mean_field.validate().map_err(|e| SynthError::Config(e.to_string()))?;
        for (name, v) in [
            ("sd_alpha", self.sd_alpha),
            ("sd_beta", self.sd_beta),
            ("ipc_noise", self.ipc_noise),
            ("coverage_noise", self.coverage_noise),
        ] {
            check(v >= 0.0 && v.is_finite(), || format!("{name} must be a finite value >= 0, got {v}"))?;
        }
        let (p0, p1) = self.population_2000;
        let (g0, g1) = self.population_growth;
        check(p0 >= 1.0 && p1 >= p0 && g0 > 0.0 && g1 >= g0, || "population ranges must be positive and ordered".into())?;
        if self.layout_spacing < 1.0 || !self.layout_spacing.is_finite() {
            return Err(SynthError::Overlap(self.layout_spacing));
        }
        self.sleep.validate()?;
        self.panel.validate()?;
        Ok(())
    }
}

/// Three-letter codes handed out to countries in order.
pub const COUNTRY_CODES: [(&str, i32); 24] = [
    ("USA", -300),
    ("JPN", 540),
    ("DEU", 60),
    ("ARG", -180),
    ("CHN", 480),
    ("RUS", 180),
    ("GBR", 0),
    ("FRA", 60),
    ("BRA", -180),
    ("IND", 330),
    ("KOR", 540),
    ("ITA", 60),
    ("ESP", 60),
    ("MEX", -360),
    ("CAN", -300),
    ("AUS", 600),
    ("NLD", 60),
    ("SWE", 60),
    ("POL", 60),
    ("TUR", 120),
    ("ZAF", 120),
    ("EGY", 120),
    ("IDN", 420),
    ("CHL", -240),
];

/// Code and UTC offset (minutes) of the `i`-th country.
pub fn country_code(i: usize) -> (String, i32) {
    match COUNTRY_CODES.get(i) {
        Some((c, off)) => ((*c).to_string(), *off),
        None => (format!("C{i:03}"), 0),
    }
}

/// Stream tags keep the draws of different parts of the world apart.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Stream {
    Countries = 1,
    Cities = 2,
    Months = 3,
    Sleep = 4,
    Survey = 5,
    Panel = 6,
    Series = 7,
}

/// A generator for `(tag, index)` derived from the world seed.
pub(crate) fn stream_rng(seed: u64, tag: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryTruth {
    pub country: String,
    pub params: LogisticParams,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub countries: Vec<CountryTruth>,
    pub pools: Vec<PoolTruth>,
    pub sleep: Vec<SleepTimes>,
    pub panel: PanelTruth,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct World {
    pub boundaries: Vec<UrbanBoundary>,
    pub geo: Vec<GeoRangeRecord>,
    /// Sorted by `(timestamp, ip)`.
    pub scans: Vec<ScanRecord>,
    /// Directly generated 15-minute bins for the sleep years.
    pub sleep_bins: Vec<SegmentBin>,
    pub survey: Vec<DiaryEntry>,
    pub panel: Vec<PanelObservation>,
    pub truth: GroundTruth,
}

/// Country curves: mean field plus Gaussian offsets on α and β. α is
/// redrawn until it exceeds a tenth of the mean.
pub(crate) fn draw_country_params(
    seed: u64,
    tag: Stream,
    n: usize,
    mean: &LogisticParams,
    sd_alpha: f64,
    sd_beta: f64,
) -> Vec<LogisticParams> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n)
        .map(|c| {
            let mut rng = stream_rng(seed, tag, c as u64);
            let alpha = loop {
                let z: f64 = StandardNormal.sample(&mut rng);
                let a = mean.alpha + sd_alpha * z;
                if a > 0.1 * mean.alpha {
                    break a;
                }
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            LogisticParams { k: mean.k, alpha, beta: mean.beta + sd_beta * z }
        })
        .collect()
}

pub fn gen_world(config: &WorldConfig) -> Result<World> {
    config.validate()?;
    let params = draw_country_params(
        config.seed,
        Stream::Countries,
        config.n_countries,
        &config.mean_field,
        config.sd_alpha,
        config.sd_beta,
    );
    let countries: Vec<CountryTruth> = params
        .iter()
        .enumerate()
        .map(|(i, p)| CountryTruth { country: country_code(i).0, params: *p })
        .collect();

    let plans = scans::plan_cities(config)?;
    let rates = scans::detection_rates(config);
    let per_city: Vec<scans::CityOutput> = plans
        .par_iter()
        .map(|plan| scans::gen_city(config, plan, &params[plan.country], &rates))
        .collect::<Result<_>>()?;

    let mut world = World { boundaries: plans.iter().map(|p| p.boundary.clone()).collect(), ..World::default() };
    for out in per_city {
        world.geo.extend(out.geo);
        world.scans.extend(out.scans);
        world.truth.pools.extend(out.pools);
    }
    world.scans.par_sort_unstable();

    let sleep: Vec<sleep::CitySleep> = plans.par_iter().map(|plan| sleep::gen_city(config, plan)).collect::<Result<_>>()?;
    for s in sleep {
        world.sleep_bins.extend(s.bins);
        world.survey.extend(s.survey);
        world.truth.sleep.extend(s.truth);
    }

    let named: Vec<(String, LogisticParams)> = countries.iter().map(|c| (c.country.clone(), c.params)).collect();
    let (panel, panel_truth) = panel::gen_panel(config.seed, &config.panel, &named)?;
    world.panel = panel;
    world.truth.panel = panel_truth;
    world.truth.countries = countries;
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{assign_scans, interpolate_population, monthly_unique_ips, Boundaries};
    use crate::diffusion::logistic;
    use crate::ipcore::GeoIndex;

    fn small() -> WorldConfig {
        WorldConfig {
            n_countries: 2,
            cities_per_country: 2,
            months: 3,
            population_2000: (300.0, 500.0),
            sleep: SleepConfig { years: vec![2010], days_per_year: 14, ..SleepConfig::default() },
            panel: PanelConfig { regions_per_country: 3, ..PanelConfig::default() },
            ..WorldConfig::default()
        }
    }

    #[test]
    fn noiseless_single_city_counts_follow_the_curve() {
        let cfg = WorldConfig {
            n_countries: 1,
            cities_per_country: 1,
            months: 30,
            first_month: 20,
            ipc_noise: 0.0,
            coverage_noise: 0.0,
            ..small()
        };
        let w = gen_world(&cfg).unwrap();
        let (index, _) = GeoIndex::build(&w.geo);
        let b = Boundaries::new(w.boundaries.clone()).unwrap();
        let (located, stats) = assign_scans(&w.scans, &index, &b);
        assert_eq!(stats.assigned, stats.total);
        let counts = monthly_unique_ips(&located, 20).counts;
        assert_eq!(counts.len(), 30);
        let p = &w.truth.countries[0].params;
        for c in counts {
            let pop = interpolate_population(&w.boundaries[0], f64::from(c.month.year)).unwrap();
            let planted = (logistic(f64::from(c.month.index()), p) * pop).round() as u64;
            assert_eq!(c.unique_ips, planted, "{}", c.month);
        }
    }

    #[test]
    fn identical_seeds_identical_worlds() {
        let a = gen_world(&small()).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| gen_world(&small()).unwrap());
        assert_eq!(a, b);
        let c = gen_world(&WorldConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.scans, c.scans);
    }

    #[test]
    fn overlapping_layout_is_rejected() {
        let cfg = WorldConfig { layout_spacing: 0.5, ..small() };
        assert!(matches!(gen_world(&cfg), Err(SynthError::Overlap(_))));
    }

    #[test]
    fn scan_volume_is_linear_in_months() {
        let cfg = WorldConfig { coverage_noise: 0.0, ipc_noise: 0.0, mean_field: LogisticParams { k: 0.3, alpha: 1e-6, beta: 0.0 }, sd_alpha: 0.0, sd_beta: 0.0, ..small() };
        let a = gen_world(&WorldConfig { months: 2, ..cfg.clone() }).unwrap().scans.len() as f64;
        let b = gen_world(&WorldConfig { months: 4, ..cfg }).unwrap().scans.len() as f64;
        assert!((b / a - 2.0).abs() < 0.02, "{a} {b}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = small();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<WorldConfig>(&text).unwrap(), cfg);
        let partial: WorldConfig = serde_json::from_str(r#"{"seed": 9, "months": 5}"#).unwrap();
        assert_eq!((partial.seed, partial.months, partial.n_countries), (9, 5, 4));
        assert!(serde_json::from_str::<WorldConfig>(r#"{"sede": 9}"#).is_err());
    }
}

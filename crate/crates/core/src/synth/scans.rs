//! City layout, address pools, geolocation ranges and probe records.

use chrono::Datelike;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::diurnal::activity;
use super::sleep::city_night;
use super::{country_code, stream_rng, Result, Stream, SynthError, WorldConfig};
use crate::aggregate::{interpolate_population, CityId, UrbanBoundary};
use crate::calendar::{date_start_utc, local_datetime, YearMonth};
use crate::diffusion::{logistic, LogisticParams};
use crate::ipcore::{GeoRangeRecord, IpAddress, ScanRecord, Status};

const BLOCK_BASE: u32 = 0x1000_0000;
const BLOCK_BITS: u32 = 20;
const ORIGIN: (f64, f64) = (-170.0, -60.0);

/// Where a city sits and which addresses it owns.
#[derive(Debug, Clone, PartialEq)]
pub struct CityPlan {
    pub index: usize,
    pub country: usize,
    pub boundary: UrbanBoundary,
    /// South-west corner of the unit square.
    pub corner: (f64, f64),
    pub block_base: u32,
}

impl CityPlan {
    pub fn city_id(&self) -> CityId {
        self.boundary.city_id
    }
}

/// Planted address counts of one city-month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolTruth {
    pub city_id: CityId,
    pub month_index: i32,
    /// Addresses in use.
    pub pool: u64,
    /// Addresses probed in the month.
    pub detected: u64,
}

pub(crate) struct CityOutput {
    pub geo: Vec<GeoRangeRecord>,
    pub scans: Vec<ScanRecord>,
    pub pools: Vec<PoolTruth>,
}

pub(crate) fn plan_cities(config: &WorldConfig) -> Result<Vec<CityPlan>> {
    let n = config.n_cities();
    if n > ((u32::MAX - BLOCK_BASE) >> BLOCK_BITS) as usize {
        return Err(SynthError::Config(format!("{n} cities exceed the address space")));
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|index| {
            let country = index / config.cities_per_country;
            let (code, utc_offset_minutes) = country_code(country);
            let lon = ORIGIN.0 + (index % cols) as f64 * config.layout_spacing;
            let lat = ORIGIN.1 + (index / cols) as f64 * config.layout_spacing;
            if lon + 1.0 > 180.0 || lat + 1.0 > 90.0 {
                return Err(SynthError::OutOfBounds { city: index, lon, lat });
            }
            let mut rng = stream_rng(config.seed, Stream::Cities, index as u64);
            let (p0, p1) = config.population_2000;
            let (g0, g1) = config.population_growth;
            let pop2000 = (p0 + (p1 - p0) * rng.random::<f64>()).round();
            let pop2010 = (pop2000 * (g0 + (g1 - g0) * rng.random::<f64>())).round();
            let ring = vec![(lon, lat), (lon + 1.0, lat), (lon + 1.0, lat + 1.0), (lon, lat + 1.0), (lon, lat)];
            Ok(CityPlan {
                index,
                country,
                boundary: UrbanBoundary {
                    city_id: index as CityId + 1,
                    country: code,
                    polygons: vec![vec![ring]],
                    utc_offset_minutes,
                    population_2000: Some(pop2000),
                    population_2010: Some(pop2010),
                },
                corner: (lon, lat),
                block_base: BLOCK_BASE + ((index as u32) << BLOCK_BITS),
            })
        })
        .collect()
}

/// Share of the pool probed in each month, common to all cities.
pub(crate) fn detection_rates(config: &WorldConfig) -> Vec<f64> {
    let mut rng = stream_rng(config.seed, Stream::Months, 0);
    (0..config.months)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (1.0 - config.coverage_noise * z.abs()).clamp(0.5, 1.0)
        })
        .collect()
}

pub(crate) fn gen_city(config: &WorldConfig, plan: &CityPlan, params: &LogisticParams, rates: &[f64]) -> Result<CityOutput> {
    let mut rng = stream_rng(config.seed, Stream::Cities, (1 << 32) | plan.index as u64);
    let city_id = plan.city_id();

    let mut pools = Vec::with_capacity(config.months);
    for (m, rate) in rates.iter().enumerate() {
        let month_index = config.first_month + m as i32;
        let year = YearMonth::from_index(month_index).year;
        let pop = interpolate_population(&plan.boundary, f64::from(year)).unwrap_or(0.0);
        let noise = if config.ipc_noise > 0.0 {
            config.ipc_noise * Distribution::<f64>::sample(&StandardNormal, &mut rng)
        } else {
            0.0
        };
        let ipc = (logistic(f64::from(month_index), params) + noise).max(0.0);
        let pool = (ipc * pop).round() as u64;
        let detected = (pool as f64 * rate).round() as u64;
        pools.push(PoolTruth { city_id, month_index, pool, detected });
    }
    let used = pools.iter().map(|p| p.pool).max().unwrap_or(0).max(1);
    if used > 1 << BLOCK_BITS {
        return Err(SynthError::BlockOverflow { city: plan.index, needed: used, block: 1 << BLOCK_BITS });
    }

    let revision_date = YearMonth::from_index(config.first_month).first_day();
    let n_ranges = (config.geo_ranges_per_city as u64).min(used);
    let geo = (0..n_ranges)
        .map(|r| {
            let lo = used * r / n_ranges;
            let hi = used * (r + 1) / n_ranges - 1;
            GeoRangeRecord {
                ip_lo: IpAddress(plan.block_base + lo as u32),
                ip_hi: IpAddress(plan.block_base + hi as u32),
                lon: plan.corner.0 + 0.05 + 0.9 * rng.random::<f64>(),
                lat: plan.corner.1 + 0.05 + 0.9 * rng.random::<f64>(),
                revision_date,
            }
        })
        .collect();

    let slots = 1440u32.div_ceil(config.scan_interval_min);
    let offset = plan.boundary.utc_offset_minutes;
    let mut nights = std::collections::BTreeMap::new();
    let mut scans = Vec::new();
    for (m, p) in pools.iter().enumerate() {
        let month = YearMonth::from_index(p.month_index);
        let chosen: Vec<u64> = if p.detected == p.pool {
            (0..p.pool).collect()
        } else {
            let mut v: Vec<u64> =
                rand::seq::index::sample(&mut rng, p.pool as usize, p.detected as usize).into_iter().map(|i| i as u64).collect();
            v.sort_unstable();
            v
        };
        for (k, addr) in chosen.into_iter().enumerate() {
            for j in 0..config.probes_per_month {
                let day = (k as u32 * config.probes_per_month + j + m as u32) % config.scan_days_per_month;
                let date = month.first_day() + chrono::Days::new(u64::from(day));
                let minute = rng.random_range(0..slots) * config.scan_interval_min;
                let timestamp = date_start_utc(date) + i64::from(minute) * 60;
                let local = local_datetime(timestamp, offset);
                let year = local.date().year();
                let night = *nights.entry(year).or_insert_with(|| city_night(config, plan, year));
                let local_min = f64::from(chrono::Timelike::hour(&local) * 60 + chrono::Timelike::minute(&local));
                let online = rng.random::<f64>() < activity(local_min, &night, &config.sleep.shape);
                scans.push(ScanRecord {
                    timestamp,
                    ip: IpAddress(plan.block_base + addr as u32),
                    status: if online { Status::Online } else { Status::Offline },
                });
            }
        }
    }
    Ok(CityOutput { geo, scans, pools })
}

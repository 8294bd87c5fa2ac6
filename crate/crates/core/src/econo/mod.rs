//! Fixed-effects panel regressions of regional output on IP per capita.
//!
//! The regressand is `ln(gdp_pc)` (or `ln` of a sector's GVA per worker)
//! and the single regressor is `ln(ip_pc)`, optionally lagged. Year,
//! region, country-year effects and region trends are absorbed before the
//! slope is estimated.

mod fe;
pub mod io;
mod sample;

pub use fe::{fit_fe, fit_fe_dummies, fit_sectoral, FitResult};
pub use sample::{apply_sample_filter, FilterReport, SampleFilter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sector groupings of gross value added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    ProfAdmin,
    PublicAdminEduHealth,
    InfoComm,
    TradeTransportHosp,
    Industry,
    OtherServices,
    RealEstate,
}

impl Sector {
    pub const ALL: [Sector; 7] = [
        Sector::ProfAdmin,
        Sector::PublicAdminEduHealth,
        Sector::InfoComm,
        Sector::TradeTransportHosp,
        Sector::Industry,
        Sector::OtherServices,
        Sector::RealEstate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column suffix in panel files (`gva_<key>`).
    pub fn key(self) -> &'static str {
        match self {
            Sector::ProfAdmin => "prof_admin",
            Sector::PublicAdminEduHealth => "public_admin_edu_health",
            Sector::InfoComm => "info_comm",
            Sector::TradeTransportHosp => "trade_transport_hosp",
            Sector::Industry => "industry",
            Sector::OtherServices => "other_services",
            Sector::RealEstate => "real_estate",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::ProfAdmin => "Prof. & Admin. Support Services",
            Sector::PublicAdminEduHealth => "Public Admin., Edu., Health",
            Sector::InfoComm => "Information & Communications",
            Sector::TradeTransportHosp => "Trade, Repairs, Transport, Hosp.",
            Sector::Industry => "Industry",
            Sector::OtherServices => "Other Services",
            Sector::RealEstate => "Real Estate",
        }
    }

    pub fn from_key(key: &str) -> Option<Sector> {
        Sector::ALL.into_iter().find(|s| s.key() == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub region_id: String,
    pub country: String,
    pub year: i32,
    /// USD per person.
    pub gdp_pc: f64,
    /// IP addresses per person.
    pub ip_pc: f64,
    /// GVA per worker by [`Sector::index`], where reported.
    pub gva: [Option<f64>; 7],
}

/// Which effects are absorbed, and the lag of the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub year_effects: bool,
    pub region_effects: bool,
    pub country_year_effects: bool,
    pub region_trends: bool,
    pub lag: u32,
}

impl RegressionSpec {
    /// Constant and year effects.
    pub fn pooled() -> Self {
        Self { year_effects: true, ..Default::default() }
    }

    /// Region and year effects.
    pub fn region_fe() -> Self {
        Self { year_effects: true, region_effects: true, ..Default::default() }
    }

    /// Region effects, country-year effects and region trends.
    pub fn full() -> Self {
        Self { region_effects: true, country_year_effects: true, region_trends: true, ..Default::default() }
    }

    pub fn with_lag(self, lag: u32) -> Self {
        Self { lag, ..self }
    }

    pub fn describe(&self) -> String {
        let mut terms = vec![];
        if self.region_effects {
            terms.push("region");
        }
        if self.year_effects {
            terms.push("year");
        }
        if self.country_year_effects {
            terms.push("country-year");
        }
        if self.region_trends {
            terms.push("region trends");
        }
        if terms.is_empty() {
            terms.push("constant only");
        }
        format!("{} (lag {})", terms.join(" + "), self.lag)
    }
}

/// One column of the regional GDP table: a specification on a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TableColumn {
    pub name: &'static str,
    pub spec: RegressionSpec,
    pub filter: Option<SampleFilter>,
}

/// The eleven GDP specifications: pooled, region effects, the full model,
/// the lagged regressor and seven sample restrictions of the full model.
pub fn gdp_table_columns() -> Vec<TableColumn> {
    let full = RegressionSpec::full();
    let col = |name, spec, filter| TableColumn { name, spec, filter };
    vec![
        col("ols", RegressionSpec::pooled(), None),
        col("region_fe", RegressionSpec::region_fe(), None),
        col("base", full, None),
        col("lag1", full.with_lag(1), None),
        col("excl_hilo_gdp", full, Some(SampleFilter::TrimGdp)),
        col("below_median_gdp", full, Some(SampleFilter::BelowMedianGdp)),
        col("above_median_gdp", full, Some(SampleFilter::AboveMedianGdp)),
        col("excl_hilo_ip", full, Some(SampleFilter::TrimIp)),
        col(
            "excl_chn_rus_usa",
            full,
            Some(SampleFilter::ExcludeCountries(vec!["CHN".into(), "RUS".into(), "USA".into()])),
        ),
        col("year_le_2008", full, Some(SampleFilter::YearAtMost(2008))),
        col("year_gt_2008", full, Some(SampleFilter::YearAfter(2008))),
    ]
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconoError {
    #[error("rank deficiency in {term}: {detail}")]
    RankDeficient { term: &'static str, detail: String },
    #[error("no residual degrees of freedom ({n_obs} observations, {n_params} parameters)")]
    NoDegreesOfFreedom { n_obs: usize, n_params: usize },
    #[error("empty sample after {0}")]
    EmptySample(String),
    #[error("region {region_id} year {year}: {message}")]
    InvalidObservation { region_id: String, year: i32, message: String },
    #[error("sector {sector} has {rows} usable rows, need {min}")]
    TooFewRows { sector: &'static str, rows: usize, min: usize },
    #[error("duplicate observation for region {region_id} year {year}")]
    Duplicate { region_id: String, year: i32 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_keys_round_trip() {
        for s in Sector::ALL {
            assert_eq!(Sector::from_key(s.key()), Some(s));
        }
        assert_eq!(Sector::RealEstate.index(), 6);
    }

    #[test]
    fn table_has_eleven_columns() {
        let cols = gdp_table_columns();
        assert_eq!(cols.len(), 11);
        assert_eq!(cols[3].spec.lag, 1);
        assert!(cols[2..].iter().all(|c| c.spec.region_trends && c.spec.country_year_effects));
        assert_eq!(RegressionSpec::full().describe(), "region + country-year + region trends (lag 0)");
    }
}

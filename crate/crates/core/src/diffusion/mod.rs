//! Logistic diffusion of IP-per-capita series.
//!
//! Each country follows `K / (1 + exp(-alpha (t - beta)))` with month index
//! `t` (0 = January 2006). The asymptote `K` is shared; `1/alpha` and `beta`
//! carry Gaussian country effects and are estimated jointly by SAEM
//! ([`fit_saem`]).

pub mod io;
mod nls;
mod rank;
mod saem;

pub use nls::fit_fixed_effects;
pub use rank::{rank_countries, SaturationSummary};
pub use saem::{fit_saem, CountryEffect, FitMethod, MixedEffectsFit, SaemConfig, TraceRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Asymptotic IP per capita.
    pub k: f64,
    /// Growth rate per month.
    pub alpha: f64,
    /// Midpoint month index.
    pub beta: f64,
}

impl LogisticParams {
    pub fn new(k: f64, alpha: f64, beta: f64) -> Result<Self, DiffusionError> {
        let p = Self { k, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if !(self.k > 0.0) || !(self.alpha > 0.0) || !self.beta.is_finite() || !self.k.is_finite() || !self.alpha.is_finite() {
            return Err(DiffusionError::InvalidParams(*self));
        }
        Ok(())
    }
}

pub fn logistic(t: f64, p: &LogisticParams) -> f64 {
    p.k / (1.0 + (-p.alpha * (t - p.beta)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationWindow {
    pub t_1pct: f64,
    pub t_99pct: f64,
    pub duration_months: f64,
}

impl SaturationWindow {
    pub fn duration_years(&self) -> f64 {
        self.duration_months / 12.0
    }
}

/// Months at which the curve reaches 1 % and 99 % of `K`.
pub fn saturation_window(p: &LogisticParams) -> SaturationWindow {
    let half = 99f64.ln() / p.alpha;
    SaturationWindow { t_1pct: p.beta - half, t_99pct: p.beta + half, duration_months: 2.0 * half }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Saturated,
    High,
    Medium,
    Low,
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Category::Saturated => "Saturated",
            Category::High => "High",
            Category::Medium => "Medium",
            Category::Low => "Low",
        })
    }
}

/// Upper category threshold; lower ones halve successively.
pub const SATURATION_LEVEL: f64 = 0.32;

pub fn categorize(ipc_2012: f64) -> Category {
    if ipc_2012 >= SATURATION_LEVEL {
        Category::Saturated
    } else if ipc_2012 >= SATURATION_LEVEL / 2.0 {
        Category::High
    } else if ipc_2012 >= SATURATION_LEVEL / 4.0 {
        Category::Medium
    } else {
        Category::Low
    }
}

/// Monthly IP-per-capita observations of one country.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    pub country: String,
    /// Month indices, strictly increasing.
    pub t: Vec<f64>,
    pub ipc: Vec<f64>,
    /// Number of cities behind the series, when known.
    pub n_cities: usize,
}

impl CountrySeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    TooShort,
    Constant,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffusionError {
    #[error("invalid logistic parameters {0:?} (need K > 0, alpha > 0)")]
    InvalidParams(LogisticParams),
    #[error("no usable country series ({dropped} dropped)")]
    NoSeries { dropped: usize },
    #[error("SAEM did not converge after {iterations} iterations (last relative change {change:.3e})")]
    NotConverged { iterations: usize, change: f64, trace: Vec<TraceRow> },
    #[error("estimation produced non-finite values at iteration {iteration}")]
    NonFinite { iteration: usize, trace: Vec<TraceRow> },
    #[error("least-squares fit failed: {0}")]
    Nls(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

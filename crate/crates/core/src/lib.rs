//! Geolocated IP-activity analysis.
//!
//! The crate is organised as a pipeline:
//!
//! - [`ipcore`]: IPv4 addresses, scan records and the revision-aware
//!   range-to-location index.
//! - [`aggregate`]: spatial assignment to urban boundaries, 15-minute
//!   binning, monthly unique-IP counts, population interpolation and the
//!   monthly scan-bias ("missoni") correction.
//! - [`diffusion`]: logistic diffusion curves fitted as a nonlinear
//!   mixed-effects model by stochastic-approximation EM, saturation windows
//!   and country rankings.
//! - [`chronobio`]: diurnal activity traces to sleep start/stop estimates
//!   (synthetic weeks, feature generation, a bagged-tree classifier and
//!   score-to-time conversion).
//! - [`econo`]: fixed-effects panel regressions with HC1 standard errors.
//! - [`synth`]: a deterministic synthetic world with planted ground truth.

pub mod aggregate;
pub mod calendar;
pub mod chronobio;
pub mod diffusion;
pub mod econo;
pub mod ipcore;
pub mod synth;
pub mod tabular;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Double-sigmoid diurnal activity curve.

use serde::{Deserialize, Serialize};

use crate::chronobio::clock_diff;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiurnalShape {
    /// Fraction online while awake.
    pub awake: f64,
    /// Fraction online in the middle of the night.
    pub asleep: f64,
    /// Minutes for an edge to go from 10 % to 90 % of the dip. A city's
    /// online share falls as its residents fall asleep, so this is about
    /// 2.56 standard deviations of individual bedtimes.
    pub edge_width_min: f64,
    /// Relative amplitude of a slow daytime oscillation.
    pub daytime_wave: f64,
}

impl Default for DiurnalShape {
    fn default() -> Self {
        Self { awake: 0.65, asleep: 0.25, edge_width_min: 90.0, daytime_wave: 0.05 }
    }
}

impl DiurnalShape {
    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        if !ok(self.awake) || !ok(self.asleep) || self.asleep >= self.awake * (1.0 - self.daytime_wave.abs()) {
            return Err(format!("diurnal levels awake={} asleep={} do not give a dip", self.awake, self.asleep));
        }
        if !(self.edge_width_min > 0.0) {
            return Err("edge_width_min must be positive".into());
        }
        if self.awake * (1.0 + self.daytime_wave.abs()) > 1.0 {
            return Err("awake level plus daytime wave exceeds 1".into());
        }
        Ok(())
    }
}

/// A night: sleep from `start_min` to `stop_min`, local minutes of day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Night {
    pub start_min: f64,
    pub stop_min: f64,
}

impl Night {
    pub fn duration_min(&self) -> f64 {
        (self.stop_min - self.start_min).rem_euclid(1440.0)
    }

    pub fn contains(&self, minute: f64) -> bool {
        (minute - self.start_min).rem_euclid(1440.0) < self.duration_min()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Expected fraction online at local minute `t`.
pub fn activity(t: f64, night: &Night, shape: &DiurnalShape) -> f64 {
    // 10-90 % rise of a logistic takes 2 ln 9 scale units.
    let scale = shape.edge_width_min / (2.0 * 9f64.ln());
    let half = night.duration_min() / 2.0;
    let v = clock_diff(t, night.start_min + half);
    let dip = sigmoid((v + half) / scale) * sigmoid((half - v) / scale);
    let wave = 1.0 + shape.daytime_wave * (std::f64::consts::TAU * (t - night.stop_min) / 1440.0).sin();
    let day = shape.awake * wave;
    day - (day - shape.asleep) * dip
}

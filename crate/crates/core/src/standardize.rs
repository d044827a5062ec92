//! Diffusion standardization of cumulative STATS paths.
//!
//! A raw cumulative path `S̃(t)` on `[0, 1]` is mapped to `(S̃(t) - m t) / v`
//! where `m` and `v` are the mean and standard deviation of the final value
//! across training games. Unlike a per-time z-score the denominator carries no
//! `sqrt(t)`, so a Poisson-type path standardizes to something whose variance
//! grows linearly in time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A cumulative statistic sampled on the uniform grid `t_r = r / R`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatPath {
    pub stat_id: String,
    pub values: Vec<f64>,
}

impl StatPath {
    /// Builds a raw path, checking it starts at zero and never decreases.
    pub fn raw(stat_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let stat_id = stat_id.into();
        if values.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "path for {stat_id} needs at least two grid points"
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "raw path for {stat_id} must start at 0, found {}",
                values[0]
            )));
        }
        for (r, w) in values.windows(2).enumerate() {
            if !w[1].is_finite() || w[1] < w[0] {
                return Err(Error::InvalidParameter(format!(
                    "raw path for {stat_id} decreases at grid index {}",
                    r + 1
                )));
            }
        }
        Ok(StatPath { stat_id, values })
    }

    /// Number of grid steps `R`.
    pub fn grid_r(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, r: usize) -> f64 {
        grid_time(r, self.grid_r())
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("paths are non-empty")
    }
}

/// `t_r = r / R`, exact at both ends.
pub fn grid_time(r: usize, grid_r: usize) -> f64 {
    r as f64 / grid_r as f64
}

/// Mean and standard deviation of a statistic's final value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub m: f64,
    pub v: f64,
}

impl Scaler {
    pub fn new(m: f64, v: f64) -> Result<Self> {
        if !(m.is_finite() && v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaler needs finite m and v > 0, got m = {m}, v = {v}"
            )));
        }
        Ok(Scaler { m, v })
    }

    pub fn apply(&self, raw: f64, t: f64) -> f64 {
        (raw - self.m * t) / self.v
    }

    /// Player-level share of the pace term: `(raw - (m / J) t) / v`.
    ///
    /// Summing this over the `J` players of a game reproduces the team value.
    pub fn apply_player(&self, raw: f64, t: f64, players: usize) -> f64 {
        (raw - self.m / players as f64 * t) / self.v
    }
}

/// Per-stat scalers, ordered by stat id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Standardizer {
    pub entries: BTreeMap<String, Scaler>,
}

impl Standardizer {
    pub fn scaler(&self, stat_id: &str) -> Result<&Scaler> {
        self.entries
            .get(stat_id)
            .ok_or_else(|| Error::MissingScaler(stat_id.to_string()))
    }

    pub fn standardize_path(&self, raw: &StatPath) -> Result<StatPath> {
        let scaler = self.scaler(&raw.stat_id)?;
        let grid_r = raw.grid_r();
        let values = raw
            .values
            .iter()
            .enumerate()
            .map(|(r, &x)| scaler.apply(x, grid_time(r, grid_r)))
            .collect();
        Ok(StatPath {
            stat_id: raw.stat_id.clone(),
            values,
        })
    }
}

/// Sample mean and `n - 1` standard deviation of each stat's final values.
pub fn fit_standardizer<'a, I>(finals: I) -> Result<Standardizer>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let mut entries = BTreeMap::new();
    for (stat_id, values) in finals {
        let n = values.len();
        if n < 2 {
            return Err(Error::TooFewGames { needed: 2, got: n });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if sd == 0.0 || !sd.is_finite() {
            return Err(Error::DegenerateStat {
                stat_id: stat_id.to_string(),
            });
        }
        entries.insert(stat_id.to_string(), Scaler { m: mean, v: sd });
    }
    Ok(Standardizer { entries })
}

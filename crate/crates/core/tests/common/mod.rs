#![allow(dead_code)]

use tflow_core::data::STANDARD_STATS;
use tflow_core::simulate::{GameRates, LeagueTruth};
use tflow_core::TScoreVariant;

pub const TRUE_ALPHA: [f64; 8] = [0.06, 0.0, 0.0, 0.0, 0.056, 0.0, 0.0, 0.0];

pub fn truth(teams: &[(&str, f64)], sigma: f64) -> LeagueTruth {
    LeagueTruth {
        variant: TScoreVariant::symmetric_ratio(),
        stat_ids: STANDARD_STATS.iter().map(|s| s.to_string()).collect(),
        alpha: TRUE_ALPHA.to_vec(),
        sigma2: sigma * sigma,
        teams: teams.iter().map(|(t, a)| (t.to_string(), *a)).collect(),
        rates: GameRates::basketball(42.0).unwrap(),
        grid_r: 40,
        roster_size: 10,
    }
}

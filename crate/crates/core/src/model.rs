//! Linear T-score regression and the team / player indices built on it.
//!
//! A game's final T-score is modeled as `alpha0 + sum_i alpha_i S_i(1) + eps`
//! with `S_i` the diffusion-standardized STATS. `alpha0` is the team
//! fundamental score (TFS); the STATS term is the team statistical score (TSS),
//! which splits additively into player statistical scores (PSS). The player
//! contribution score (PCS) reallocates `alpha0` across the roster according to
//! each player's deviation from the roster-average PSS.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::data::GameRecord;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::standardize::{fit_standardizer, Standardizer};
use crate::tscore::TScoreVariant;

pub const TFS_NAME: &str = "TFS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientInference {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub team_id: String,
    pub variant: TScoreVariant,
    /// Team fundamental score.
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    /// Residual variance.
    pub sigma2: f64,
    /// Sum of squared STATS coefficients.
    pub tau2: f64,
    pub scaler: Standardizer,
    /// `TFS` first, then one row per stat in `stat_ids` order.
    pub inference: Vec<CoefficientInference>,
    pub n_games: usize,
    pub stat_ids: Vec<String>,
    pub note: Option<String>,
}

impl FittedModel {
    /// Predictive variance per unit of remaining game time.
    pub fn total_variance(&self) -> f64 {
        self.tau2 + self.sigma2
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.stat_ids.len();
        if self.alpha.len() != d {
            return Err(Error::InvalidModel(format!(
                "{} coefficients for {d} stats",
                self.alpha.len()
            )));
        }
        if self.inference.len() != d + 1 {
            return Err(Error::InvalidModel("inference table size mismatch".into()));
        }
        let tau2 = sum_of_squares(&self.alpha);
        if (self.tau2 - tau2).abs() > 1e-12 * tau2.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidModel(format!(
                "tau2 = {} is inconsistent with the coefficients (sum of squares {tau2})",
                self.tau2
            )));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidModel("sigma2 must be finite and >= 0".into()));
        }
        if self.n_games < d + 2 {
            return Err(Error::InvalidModel(format!(
                "n_games = {} must exceed d + 1 = {}",
                self.n_games,
                d + 1
            )));
        }
        for id in &self.stat_ids {
            self.scaler
                .scaler(id)
                .map_err(|_| Error::InvalidModel(format!("no scaler for {id}")))?;
        }
        Ok(())
    }

    /// `sum_i alpha_i z_i` for standardized values in `stat_ids` order.
    pub fn linear_term(&self, standardized: impl IntoIterator<Item = f64>) -> f64 {
        self.alpha
            .iter()
            .zip(standardized)
            .map(|(a, s)| a * s)
            .sum()
    }
}

pub fn sum_of_squares(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| a * a).sum()
}

/// Ordinary least squares fit of final T-scores on standardized final STATS.
///
/// Games are processed in `game_id` order, so the result does not depend on
/// the order of `games`.
pub fn fit(games: &[GameRecord], variant: TScoreVariant, stat_ids: &[&str]) -> Result<FittedModel> {
    let d = stat_ids.len();
    let n = games.len();
    if n < d + 2 {
        return Err(Error::TooFewGames {
            needed: d + 2,
            got: n,
        });
    }
    let mut sorted: Vec<&GameRecord> = games.iter().collect();
    sorted.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].game_id == w[1].game_id) {
        return Err(Error::InvalidParameter(format!(
            "duplicate game_id {}",
            w[0].game_id
        )));
    }
    let team_id = sorted[0].team_id.clone();

    let mut finals: Vec<Vec<f64>> = vec![Vec::with_capacity(n); d];
    for g in &sorted {
        for (i, id) in stat_ids.iter().enumerate() {
            finals[i].push(g.team_path(id)?.final_value());
        }
    }
    let scaler = fit_standardizer(
        stat_ids
            .iter()
            .copied()
            .zip(finals.iter().map(Vec::as_slice)),
    )?;

    let y: Vec<f64> = sorted
        .iter()
        .map(|g| variant.t_score(g.final_score))
        .collect::<Result<_>>()?;
    let mut columns = vec![vec![1.0; n]];
    for (i, id) in stat_ids.iter().enumerate() {
        let s = scaler.scaler(id)?;
        columns.push(finals[i].iter().map(|&x| s.apply(x, 1.0)).collect());
    }

    let ls = least_squares(&columns, &y).map_err(|cols| Error::RankDeficient {
        columns: cols
            .into_iter()
            .map(|c| {
                if c == 0 {
                    "intercept".to_string()
                } else {
                    stat_ids[c - 1].to_string()
                }
            })
            .collect(),
    })?;

    let rss: f64 = (0..n)
        .map(|k| {
            let fitted: f64 = columns.iter().zip(&ls.coef).map(|(c, b)| c[k] * b).sum();
            (y[k] - fitted).powi(2)
        })
        .sum();
    let df = (n - d - 1) as f64;
    let sigma2 = rss / df;

    let mut names = vec![TFS_NAME.to_string()];
    names.extend(stat_ids.iter().map(|s| s.to_string()));
    let inference = names
        .into_iter()
        .zip(ls.coef.iter().zip(&ls.inv_gram_diag))
        .map(|(name, (&estimate, &g))| {
            let std_error = (sigma2 * g).sqrt();
            let t_value = estimate / std_error;
            CoefficientInference {
                name,
                estimate,
                std_error,
                t_value,
                p_value: two_sided_p(t_value, df),
            }
        })
        .collect();

    let alpha = ls.coef[1..].to_vec();
    let model = FittedModel {
        team_id,
        variant,
        alpha0: ls.coef[0],
        tau2: sum_of_squares(&alpha),
        alpha,
        sigma2,
        scaler,
        inference,
        n_games: n,
        stat_ids: stat_ids.iter().map(|s| s.to_string()).collect(),
        note: None,
    };
    model.validate()?;
    Ok(model)
}

/// Two-sided Student-t p-value via the regularized incomplete beta function.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeamScores {
    pub tfs: f64,
    pub tss: f64,
    pub predicted_t: f64,
}

pub fn team_scores(model: &FittedModel, game: &GameRecord) -> Result<TeamScores> {
    let mut z = Vec::with_capacity(model.stat_ids.len());
    for id in &model.stat_ids {
        let raw = game.team_path(id)?.final_value();
        z.push(model.scaler.scaler(id)?.apply(raw, 1.0));
    }
    let tss = model.linear_term(z);
    Ok(TeamScores {
        tfs: model.alpha0,
        tss,
        predicted_t: model.alpha0 + tss,
    })
}

/// Per-player, per-game evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerGameEval {
    pub game_id: String,
    pub player_id: String,
    pub pss: f64,
    pub pcs: f64,
    /// Court time inside the game's interval on fire, as a fraction of the game.
    pub x_index: f64,
    /// `h(x_index)`
    pub stats_x: f64,
    pub minutes_fraction: f64,
}

/// PSS and PCS for every player who appeared in `game`.
///
/// `x_index` and `stats_x` are left at zero; see [`crate::flow`].
pub fn player_scores(model: &FittedModel, game: &GameRecord) -> Result<Vec<PlayerGameEval>> {
    let players = game.players();
    let j = players.len();
    if j == 0 {
        return Err(Error::EmptyRoster(game.game_id.clone()));
    }
    let mut pss = Vec::with_capacity(j);
    for p in &players {
        let mut z = Vec::with_capacity(model.stat_ids.len());
        for id in &model.stat_ids {
            let sc = model.scaler.scaler(id)?;
            z.push(sc.apply_player(game.player_final(p, id), 1.0, j));
        }
        pss.push(model.linear_term(z));
    }
    let pcs = pcs_allocation(model.alpha0, &pss);
    Ok(players
        .into_iter()
        .zip(pss.into_iter().zip(pcs))
        .map(|(p, (pss, pcs))| PlayerGameEval {
            game_id: game.game_id.clone(),
            player_id: p.to_string(),
            pss,
            pcs,
            x_index: 0.0,
            stats_x: 0.0,
            minutes_fraction: game.on_court.get(p).map_or(0.0, |s| s.total_length()),
        })
        .collect())
}

/// Signed allocation weights `(PSS_j - mean) / sum_l |PSS_l - mean|`.
///
/// `None` when the deviations total is at rounding-noise level relative to the
/// PSS magnitudes, i.e. an all-equal roster.
pub fn pcs_weights(pss: &[f64]) -> Option<Vec<f64>> {
    let j = pss.len();
    if j == 0 {
        return None;
    }
    let jf = j as f64;
    let mean = pss.iter().sum::<f64>() / jf;
    let dev: Vec<f64> = pss.iter().map(|p| p - mean).collect();
    let d_k: f64 = dev.iter().map(|x| x.abs()).sum();
    let scale = pss.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    if d_k <= 4.0 * jf * f64::EPSILON * scale {
        return None;
    }
    Some(dev.iter().map(|x| x / d_k).collect())
}

/// Reallocates `alpha0` across players by their PSS deviation from the mean.
pub fn pcs_allocation(alpha0: f64, pss: &[f64]) -> Vec<f64> {
    let base = alpha0 / pss.len() as f64;
    match pcs_weights(pss) {
        Some(w) => w.iter().map(|w| base + alpha0 * w).collect(),
        None => vec![base; pss.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standardize::Scaler;
    use proptest::prelude::*;

    #[test]
    fn pcs_hand_example() {
        let pcs = pcs_allocation(1.2, &[0.3, 0.1, 0.2]);
        // tss = 0.6, mean = 0.2, D = 0.2
        let expected = [1.0, -0.2, 0.4];
        for (p, e) in pcs.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{pcs:?}");
        }
        assert!((pcs.iter().sum::<f64>() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn pcs_equal_branch() {
        assert_eq!(pcs_allocation(1.2, &[0.25; 4]), vec![0.3; 4]);
        assert_eq!(pcs_allocation(0.9, &[0.0; 3]), vec![0.3; 3]);
    }

    #[test]
    fn p_value_reference() {
        // t = 2.0 with 10 df: two-sided p = 0.07338803477074...
        assert!((two_sided_p(2.0, 10.0) - 0.073388034770740).abs() < 1e-10);
        // t = 0 gives p = 1.
        assert!((two_sided_p(0.0, 5.0) - 1.0).abs() < 1e-15);
        // df = 1 is Cauchy: p = 1 - 2 atan(t) / pi.
        let t: f64 = 3.0;
        let cauchy = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
        assert!((two_sided_p(t, 1.0) - cauchy).abs() < 1e-12);
    }

    fn one_stat_model(alpha0: f64, alpha: f64) -> FittedModel {
        FittedModel {
            team_id: "t".into(),
            variant: TScoreVariant::default(),
            alpha0,
            alpha: vec![alpha],
            sigma2: 0.01,
            tau2: alpha * alpha,
            scaler: Standardizer {
                entries: [("PTs".to_string(), Scaler { m: 80.0, v: 10.0 })].into(),
            },
            inference: vec![
                CoefficientInference {
                    name: TFS_NAME.into(),
                    estimate: alpha0,
                    std_error: 0.0,
                    t_value: 0.0,
                    p_value: 0.0,
                };
                2
            ],
            n_games: 10,
            stat_ids: vec!["PTs".into()],
            note: None,
        }
    }

    #[test]
    fn tau2_consistency_enforced() {
        let mut m = one_stat_model(1.1, 0.1);
        m.validate().unwrap();
        m.tau2 = 0.02;
        assert!(matches!(m.validate(), Err(Error::InvalidModel(_))));
    }

    proptest! {
        #[test]
        fn pcs_conserves_alpha0(alpha0 in 0.5f64..1.5, pss in proptest::collection::vec(-1.0f64..1.0, 1..=15)) {
            let pcs = pcs_allocation(alpha0, &pss);
            let total: f64 = pcs.iter().sum();
            prop_assert!((total - alpha0).abs() <= 1e-12 * alpha0.abs());
            let mean = pss.iter().sum::<f64>() / pss.len() as f64;
            let d: f64 = pss.iter().map(|p| (p - mean).abs()).sum();
            if d > 1e-9 {
                let w: f64 = pss.iter().map(|p| ((p - mean) / d).abs()).sum();
                prop_assert!((w - 1.0).abs() < 1e-12);
            }
        }
    }
}

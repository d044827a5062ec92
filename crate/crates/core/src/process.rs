//! The modified T-process and the closed-form in-game win probability.
//!
//! `mT(t) = T(alpha0, beta0) + sum_i alpha_i S_i(t)` tracks the flow of a game
//! on the grid. The win probability at time `t` is
//!
//! ```text
//! PW_t = 1 - Φ((c - T*) / sqrt((1 - t)(tau² + sigma²)))
//! T*   = (1 - t) T(alpha0, beta0) + t T(a, b)
//! ```
//!
//! At `t = 1` the limit is used: 1 for a win, 0 for a loss, 1/2 for a tie.

use crate::data::GameRecord;
use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::normal::{normal_cdf, normal_pdf};
use crate::standardize::grid_time;
use crate::tscore::{ScorePair, TScoreVariant};

pub const DEFAULT_GRID_R: usize = 40;

/// What the current-information anchor `T(a, b)` in `T*` is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreAnchor {
    /// The realized score `T(a(t), b(t))`.
    #[default]
    Score,
    /// The current level `mT(t)`.
    Level,
}

impl std::str::FromStr for ScoreAnchor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "score" => Ok(ScoreAnchor::Score),
            "level" => Ok(ScoreAnchor::Level),
            _ => Err(Error::InvalidParameter(format!("unknown anchor `{s}`"))),
        }
    }
}

/// Our fitted model against one opponent on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchContext {
    pub model: FittedModel,
    pub opponent_tfs: f64,
    pub grid_r: usize,
    initial_t: f64,
}

impl MatchContext {
    pub fn new(model: FittedModel, opponent_tfs: f64, grid_r: usize) -> Result<Self> {
        if grid_r < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid_R must be >= 2, got {grid_r}"
            )));
        }
        let initial_t = model.variant.eval(model.alpha0, opponent_tfs)?;
        Ok(MatchContext {
            model,
            opponent_tfs,
            grid_r,
            initial_t,
        })
    }

    pub fn variant(&self) -> TScoreVariant {
        self.model.variant
    }

    /// `T(alpha0, beta0)`, the level of the process at tip-off.
    pub fn initial_t(&self) -> f64 {
        self.initial_t
    }

    pub fn draw_benchmark(&self) -> f64 {
        self.model.variant.draw_benchmark()
    }

    pub fn time(&self, r: usize) -> f64 {
        grid_time(r, self.grid_r)
    }

    /// Blend of the pre-game anchor and the realized score.
    pub fn t_star(&self, t: f64, s: ScorePair) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(self.initial_t);
        }
        let realized = self.model.variant.t_score(s)?;
        Ok(self.blend(t, realized))
    }

    fn blend(&self, t: f64, realized: f64) -> f64 {
        (1.0 - t) * self.initial_t + t * realized
    }

    pub fn win_probability(&self, t: f64, s: ScorePair) -> Result<f64> {
        let ts = self.t_star(t, s)?;
        self.pw_from_t_star(t, ts)
    }

    /// Win probability given the blended level `T*` directly.
    pub fn pw_from_t_star(&self, t: f64, t_star: f64) -> Result<f64> {
        check_time(t)?;
        let c = self.draw_benchmark();
        if t == 1.0 {
            return Ok(endpoint(t_star, c));
        }
        let scale = self.scale(t)?;
        Ok(normal_cdf((t_star - c) / scale))
    }

    /// `sqrt((1 - t)(tau² + sigma²))`, the predictive standard deviation of
    /// the final T-score.
    pub fn scale(&self, t: f64) -> Result<f64> {
        let var = self.model.total_variance();
        if var <= 0.0 {
            return Err(Error::DegenerateModel);
        }
        Ok(((1.0 - t) * var).sqrt())
    }

    /// `∂PW_t/∂S_i` for every modeled stat.
    pub fn pw_sensitivity(&self, t: f64, s: ScorePair) -> Result<Vec<f64>> {
        let ts = self.t_star(t, s)?;
        self.sensitivity_from_t_star(t, ts)
    }

    pub fn sensitivity_from_t_star(&self, t: f64, t_star: f64) -> Result<Vec<f64>> {
        check_time(t)?;
        if t >= 1.0 {
            return Err(Error::InvalidParameter(
                "sensitivity is undefined at t = 1".into(),
            ));
        }
        let scale = self.scale(t)?;
        let density = normal_pdf((self.draw_benchmark() - t_star) / scale);
        Ok(self
            .model
            .alpha
            .iter()
            .map(|a| density * a / scale)
            .collect())
    }

    /// `mT(t)` from raw cumulative values looked up by stat id.
    pub fn mt_value<F>(&self, t: f64, raw: F) -> Result<f64>
    where
        F: Fn(&str) -> Result<f64>,
    {
        let mut level = self.initial_t;
        for (id, alpha) in self.model.stat_ids.iter().zip(&self.model.alpha) {
            let sc = self.model.scaler.scaler(id)?;
            level += alpha * sc.apply(raw(id)?, t);
        }
        Ok(level)
    }

    /// The modified T-process of a recorded game; the Brownian noise term is
    /// replayed at its conditional mean of zero.
    pub fn mt_path(&self, game: &GameRecord) -> Result<Vec<f64>> {
        if game.grid_r != self.grid_r {
            return Err(Error::GridMismatch {
                expected: self.grid_r,
                found: game.grid_r,
            });
        }
        (0..=self.grid_r)
            .map(|r| self.mt_value(self.time(r), |id| Ok(game.team_path(id)?.values[r])))
            .collect()
    }

    /// Full replay of a recorded game: `mT`, `T*` and `PW` on the grid.
    pub fn replay(&self, game: &GameRecord, anchor: ScoreAnchor) -> Result<ProcessPath> {
        let mt = self.mt_path(game)?;
        let scores = (0..=self.grid_r).map(|r| game.score_at(r)).collect();
        self.assemble(mt, scores, anchor)
    }

    /// Replay of a bare `mT` series (e.g. digitized from a chart). Requires
    /// [`ScoreAnchor::Level`] unless scores are supplied.
    pub fn replay_series(
        &self,
        mt: Vec<f64>,
        scores: Vec<ScorePair>,
        anchor: ScoreAnchor,
    ) -> Result<ProcessPath> {
        if mt.len() != self.grid_r + 1 {
            return Err(Error::GridMismatch {
                expected: self.grid_r,
                found: mt.len().saturating_sub(1),
            });
        }
        if anchor == ScoreAnchor::Score && scores.len() != mt.len() {
            return Err(Error::InvalidParameter(
                "score anchor needs a score for every grid point".into(),
            ));
        }
        self.assemble(mt, scores, anchor)
    }

    fn assemble(
        &self,
        mt: Vec<f64>,
        scores: Vec<ScorePair>,
        anchor: ScoreAnchor,
    ) -> Result<ProcessPath> {
        let times: Vec<f64> = (0..=self.grid_r).map(|r| self.time(r)).collect();
        let mut t_star = Vec::with_capacity(times.len());
        let mut pw = Vec::with_capacity(times.len());
        for (r, &t) in times.iter().enumerate() {
            let ts = match anchor {
                ScoreAnchor::Score => self.t_star(t, scores[r])?,
                ScoreAnchor::Level if t == 0.0 => self.initial_t,
                ScoreAnchor::Level => self.blend(t, mt[r]),
            };
            pw.push(self.pw_from_t_star(t, ts)?);
            t_star.push(ts);
        }
        Ok(ProcessPath {
            times,
            mt,
            t_star,
            pw,
            scores,
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time {t} outside [0, 1]")))
    }
}

fn endpoint(t_final: f64, c: f64) -> f64 {
    if t_final > c {
        1.0
    } else if t_final < c {
        0.0
    } else {
        0.5
    }
}

/// A replayed game on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessPath {
    pub times: Vec<f64>,
    pub mt: Vec<f64>,
    pub t_star: Vec<f64>,
    pub pw: Vec<f64>,
    /// Running score per grid point; empty for bare digitized series.
    pub scores: Vec<ScorePair>,
}

impl ProcessPath {
    pub fn grid_r(&self) -> usize {
        self.mt.len() - 1
    }

    /// Per-step changes `mT(t_{r+1}) - mT(t_r)`.
    pub fn increments(&self) -> Vec<f64> {
        self.mt.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

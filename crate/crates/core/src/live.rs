//! Incremental game state driven by scorekeeper events.
//!
//! Events land on the current grid step; `Tick` closes the step and appends a
//! point to the path. Every applied event is logged with what it changed so
//! `Undo` restores the previous state exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::{GameRecord, STANDARD_STATS};
use crate::error::{Error, Result};
use crate::flow::{iof, select_delta, IofResult, DEFAULT_K_TARGET};
use crate::process::{MatchContext, ProcessPath, ScoreAnchor};
use crate::tscore::ScorePair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LiveEvent {
    ScoreFor {
        points: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player: Option<String>,
    },
    ScoreAgainst {
        points: u32,
    },
    RebDef {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player: Option<String>,
    },
    RebOff {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player: Option<String>,
    },
    Assist {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player: Option<String>,
    },
    Turnover {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player: Option<String>,
    },
    FoulDrawn {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player: Option<String>,
    },
    SubIn {
        player: String,
    },
    SubOut {
        player: String,
    },
    Tick,
    Undo,
}

impl LiveEvent {
    /// Stat increments implied by a counting event.
    fn stat_effects(&self) -> Vec<(&'static str, f64)> {
        match self {
            LiveEvent::ScoreFor { points, .. } => {
                let mut v = vec![("PTs", *points as f64)];
                if *points >= 2 {
                    v.push(("FGM", 1.0));
                }
                if *points == 3 {
                    v.push(("3FGM", 1.0));
                }
                v
            }
            LiveEvent::RebDef { .. } => vec![("DR", 1.0)],
            LiveEvent::RebOff { .. } => vec![("OR", 1.0)],
            LiveEvent::Assist { .. } => vec![("AS", 1.0)],
            LiveEvent::Turnover { .. } => vec![("TO", 1.0)],
            LiveEvent::FoulDrawn { .. } => vec![("FD", 1.0)],
            _ => Vec::new(),
        }
    }

    fn player(&self) -> Option<&str> {
        match self {
            LiveEvent::ScoreFor { player, .. }
            | LiveEvent::RebDef { player }
            | LiveEvent::RebOff { player }
            | LiveEvent::Assist { player }
            | LiveEvent::Turnover { player }
            | LiveEvent::FoulDrawn { player } => player.as_deref(),
            _ => None,
        }
    }
}

/// One closed grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub score: ScorePair,
    pub mt: f64,
    pub t_star: f64,
    pub pw: f64,
    /// `∂PW/∂S_i`; empty at `t = 1`.
    pub sensitivity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Applied {
    Stats {
        event: LiveEvent,
        created_player: bool,
    },
    Against {
        points: u32,
    },
    SubIn {
        player: String,
    },
    SubOut {
        player: String,
    },
    Tick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveGameState {
    ctx: MatchContext,
    anchor: ScoreAnchor,
    iof_theta: Option<f64>,
    step: usize,
    team_stats: BTreeMap<String, f64>,
    player_stats: BTreeMap<String, BTreeMap<String, f64>>,
    score_for: f64,
    score_against: f64,
    on_court: BTreeSet<String>,
    /// Per player: `(entry step, exit step)`; open stints have no exit yet.
    stints: BTreeMap<String, Vec<(usize, Option<usize>)>>,
    path: Vec<PathPoint>,
    log: Vec<Applied>,
}

impl LiveGameState {
    pub fn new(ctx: MatchContext, anchor: ScoreAnchor, iof_theta: Option<f64>) -> Result<Self> {
        for id in &ctx.model.stat_ids {
            if !STANDARD_STATS.contains(&id.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "stat `{id}` cannot be derived from live events"
                )));
            }
        }
        if let Some(theta) = iof_theta {
            if !theta.is_finite() {
                return Err(Error::InvalidParameter(
                    "IoF threshold must be finite".into(),
                ));
            }
        }
        let team_stats = STANDARD_STATS
            .iter()
            .map(|s| (s.to_string(), 0.0))
            .collect();
        let mut state = LiveGameState {
            ctx,
            anchor,
            iof_theta,
            step: 0,
            team_stats,
            player_stats: BTreeMap::new(),
            score_for: 0.0,
            score_against: 0.0,
            on_court: BTreeSet::new(),
            stints: BTreeMap::new(),
            path: Vec::new(),
            log: Vec::new(),
        };
        let first = state.point()?;
        state.path.push(first);
        Ok(state)
    }

    pub fn context(&self) -> &MatchContext {
        &self.ctx
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.ctx.time(self.step)
    }

    pub fn score(&self) -> ScorePair {
        ScorePair {
            a: self.score_for,
            b: self.score_against,
        }
    }

    pub fn team_stats(&self) -> &BTreeMap<String, f64> {
        &self.team_stats
    }

    pub fn player_stats(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.player_stats
    }

    pub fn on_court(&self) -> &BTreeSet<String> {
        &self.on_court
    }

    pub fn path(&self) -> &[PathPoint] {
        &self.path
    }

    pub fn events_applied(&self) -> usize {
        self.log.len()
    }

    /// On-court intervals in game time; open stints run to the current step.
    pub fn stints(&self) -> BTreeMap<String, Vec<(f64, f64)>> {
        self.stints
            .iter()
            .map(|(p, v)| {
                let spans = v
                    .iter()
                    .map(|(a, b)| (self.ctx.time(*a), self.ctx.time(b.unwrap_or(self.step))))
                    .filter(|(a, b)| b > a)
                    .collect();
                (p.clone(), spans)
            })
            .collect()
    }

    /// The path so far as a [`ProcessPath`].
    pub fn process_path(&self) -> ProcessPath {
        ProcessPath {
            times: self.path.iter().map(|p| p.t).collect(),
            mt: self.path.iter().map(|p| p.mt).collect(),
            t_star: self.path.iter().map(|p| p.t_star).collect(),
            pw: self.path.iter().map(|p| p.pw).collect(),
            scores: self.path.iter().map(|p| p.score).collect(),
        }
    }

    /// IoF over the closed steps, using the fixed threshold if one was given
    /// and otherwise the data-driven one once enough rises exist.
    pub fn iof_so_far(&self) -> Option<IofResult> {
        let path = self.process_path();
        if path.mt.len() < 2 {
            return None;
        }
        let theta = match self.iof_theta {
            Some(theta) => theta,
            None => select_delta(&path, DEFAULT_K_TARGET).ok()?,
        };
        Some(iof(&path, theta))
    }

    pub fn apply(&mut self, event: LiveEvent) -> Result<()> {
        if event == LiveEvent::Undo {
            return self.undo();
        }
        if self.step >= self.ctx.grid_r {
            return Err(Error::ClockExhausted);
        }
        let applied = match event {
            LiveEvent::ScoreFor { points, .. } if !(1..=3).contains(&points) => {
                return Err(Error::InvalidParameter(format!(
                    "SCORE_FOR points must be 1, 2 or 3, got {points}"
                )));
            }
            LiveEvent::ScoreAgainst { points } => {
                if points == 0 {
                    return Err(Error::InvalidParameter(
                        "SCORE_AGAINST points must be positive".into(),
                    ));
                }
                self.score_against += points as f64;
                Applied::Against { points }
            }
            LiveEvent::SubIn { player } => {
                if !self.on_court.insert(player.clone()) {
                    return Err(Error::IllegalSub(format!("{player} is already on court")));
                }
                self.stints
                    .entry(player.clone())
                    .or_default()
                    .push((self.step, None));
                Applied::SubIn { player }
            }
            LiveEvent::SubOut { player } => {
                if !self.on_court.remove(&player) {
                    return Err(Error::IllegalSub(format!("{player} is not on court")));
                }
                let open = self
                    .stints
                    .get_mut(&player)
                    .and_then(|v| v.last_mut())
                    .expect("on-court player has an open stint");
                open.1 = Some(self.step);
                Applied::SubOut { player }
            }
            LiveEvent::Tick => {
                self.step += 1;
                match self.point() {
                    Ok(p) => self.path.push(p),
                    Err(e) => {
                        self.step -= 1;
                        return Err(e);
                    }
                }
                Applied::Tick
            }
            LiveEvent::Undo => unreachable!(),
            counting => {
                let created_player = self.add_stats(&counting, 1.0);
                Applied::Stats {
                    event: counting,
                    created_player,
                }
            }
        };
        self.log.push(applied);
        Ok(())
    }

    /// Applies a counting event; reports whether it created a player entry.
    fn add_stats(&mut self, event: &LiveEvent, sign: f64) -> bool {
        let effects = event.stat_effects();
        for (stat, amount) in &effects {
            *self.team_stats.get_mut(*stat).expect("standard stat") += sign * amount;
        }
        if let LiveEvent::ScoreFor { points, .. } = event {
            self.score_for += sign * *points as f64;
        }
        let Some(player) = event.player() else {
            return false;
        };
        let created = !self.player_stats.contains_key(player);
        let entry = self
            .player_stats
            .entry(player.to_string())
            .or_insert_with(|| {
                STANDARD_STATS
                    .iter()
                    .map(|s| (s.to_string(), 0.0))
                    .collect()
            });
        for (stat, amount) in effects {
            *entry.get_mut(stat).expect("standard stat") += sign * amount;
        }
        created
    }

    fn undo(&mut self) -> Result<()> {
        let last = self.log.pop().ok_or(Error::NothingToUndo)?;
        match last {
            Applied::Stats {
                event,
                created_player,
            } => {
                self.add_stats(&event, -1.0);
                if created_player {
                    if let Some(p) = event.player() {
                        self.player_stats.remove(p);
                    }
                }
            }
            Applied::Against { points } => self.score_against -= points as f64,
            Applied::SubIn { player } => {
                self.on_court.remove(&player);
                let v = self.stints.get_mut(&player).expect("stint recorded");
                v.pop();
                if v.is_empty() {
                    self.stints.remove(&player);
                }
            }
            Applied::SubOut { player } => {
                self.on_court.insert(player.clone());
                let open = self
                    .stints
                    .get_mut(&player)
                    .and_then(|v| v.last_mut())
                    .expect("stint recorded");
                open.1 = None;
            }
            Applied::Tick => {
                self.path.pop();
                self.step -= 1;
            }
        }
        Ok(())
    }

    fn point(&self) -> Result<PathPoint> {
        let t = self.time();
        let score = self.score();
        let mt = self
            .ctx
            .mt_value(t, |id| Ok(self.team_stats.get(id).copied().unwrap_or(0.0)))?;
        let t_star = match self.anchor {
            ScoreAnchor::Score => self.ctx.t_star(t, score)?,
            ScoreAnchor::Level if t == 0.0 => self.ctx.initial_t(),
            ScoreAnchor::Level => (1.0 - t) * self.ctx.initial_t() + t * mt,
        };
        let pw = self.ctx.pw_from_t_star(t, t_star)?;
        let sensitivity = if t < 1.0 {
            self.ctx.sensitivity_from_t_star(t, t_star)?
        } else {
            Vec::new()
        };
        Ok(PathPoint {
            t,
            score,
            mt,
            t_star,
            pw,
            sensitivity,
        })
    }
}

/// Event stream equivalent to a recorded game at team level: each grid
/// step's stat changes followed by a `Tick`.
pub fn events_from_record(game: &GameRecord) -> Result<Vec<LiveEvent>> {
    let diff = |stat: &str, r: usize| -> Result<u64> {
        let v = &game.team_path(stat)?.values;
        count(v[r] - v[r - 1], stat, r)
    };
    let mut out = Vec::new();
    for r in 1..=game.grid_r {
        let pts = diff("PTs", r)?;
        let fgm = diff("FGM", r)?;
        let three = diff("3FGM", r)?;
        let two = fgm.checked_sub(three);
        let ones = two.and_then(|two| pts.checked_sub(2 * two + 3 * three));
        let (Some(two), Some(ones)) = (two, ones) else {
            return Err(Error::Consistency {
                game_id: game.game_id.clone(),
                stat_id: "PTs".into(),
                index: r,
                message: "points do not decompose into 1-, 2- and 3-point events".into(),
            });
        };
        let score_delta = count(game.score_for[r] - game.score_for[r - 1], "score_for", r)?;
        if score_delta != pts {
            return Err(Error::Consistency {
                game_id: game.game_id.clone(),
                stat_id: "score_for".into(),
                index: r,
                message: "score change differs from points change".into(),
            });
        }
        for (points, n) in [(3u8, three), (2, two), (1, ones)] {
            for _ in 0..n {
                out.push(LiveEvent::ScoreFor {
                    points,
                    player: None,
                });
            }
        }
        type MakeEvent = fn() -> LiveEvent;
        let simple: [(&str, MakeEvent); 5] = [
            ("OR", || LiveEvent::RebOff { player: None }),
            ("DR", || LiveEvent::RebDef { player: None }),
            ("AS", || LiveEvent::Assist { player: None }),
            ("TO", || LiveEvent::Turnover { player: None }),
            ("FD", || LiveEvent::FoulDrawn { player: None }),
        ];
        for (stat, make) in simple {
            for _ in 0..diff(stat, r)? {
                out.push(make());
            }
        }
        let against = count(
            game.score_against[r] - game.score_against[r - 1],
            "score_against",
            r,
        )?;
        if against > 0 {
            out.push(LiveEvent::ScoreAgainst {
                points: against as u32,
            });
        }
        out.push(LiveEvent::Tick);
    }
    Ok(out)
}

fn count(delta: f64, stat: &str, r: usize) -> Result<u64> {
    if delta < 0.0 || delta.fract() != 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{stat} changes by {delta} at step {r}; live events need whole counts"
        )));
    }
    Ok(delta as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientInference, FittedModel, TFS_NAME};
    use crate::standardize::{Scaler, Standardizer};
    use crate::tscore::TScoreVariant;

    fn ctx() -> MatchContext {
        let stat_ids: Vec<String> = ["PTs", "DR", "TO"].iter().map(|s| s.to_string()).collect();
        let alpha = vec![0.06, 0.05, -0.01];
        let mut inference = vec![CoefficientInference {
            name: TFS_NAME.into(),
            estimate: 1.14,
            std_error: 0.0,
            t_value: 0.0,
            p_value: 0.0,
        }];
        for (id, a) in stat_ids.iter().zip(&alpha) {
            inference.push(CoefficientInference {
                name: id.clone(),
                estimate: *a,
                std_error: 0.0,
                t_value: 0.0,
                p_value: 0.0,
            });
        }
        let model = FittedModel {
            team_id: "t".into(),
            variant: TScoreVariant::default(),
            alpha0: 1.14,
            tau2: alpha.iter().map(|a| a * a).sum(),
            sigma2: 0.01,
            scaler: Standardizer {
                entries: [("PTs", 80.0, 10.0), ("DR", 26.0, 5.0), ("TO", 12.0, 3.5)]
                    .iter()
                    .map(|(k, m, v)| (k.to_string(), Scaler { m: *m, v: *v }))
                    .collect(),
            },
            inference,
            n_games: 60,
            stat_ids,
            alpha,
            note: None,
        };
        MatchContext::new(model, 1.088059, 40).unwrap()
    }

    fn state() -> LiveGameState {
        LiveGameState::new(ctx(), ScoreAnchor::Score, None).unwrap()
    }

    #[test]
    fn scoring_rules() {
        let mut s = state();
        for p in [1, 2, 3] {
            s.apply(LiveEvent::ScoreFor {
                points: p,
                player: None,
            })
            .unwrap();
        }
        let st = s.team_stats();
        assert_eq!(st["PTs"], 6.0);
        assert_eq!(st["FGM"], 2.0);
        assert_eq!(st["3FGM"], 1.0);
        assert_eq!(s.score().a, 6.0);
        assert!(s
            .apply(LiveEvent::ScoreFor {
                points: 4,
                player: None
            })
            .is_err());
    }

    #[test]
    fn undo_restores_bit_equal_state() {
        let events = vec![
            LiveEvent::SubIn {
                player: "p1".into(),
            },
            LiveEvent::ScoreFor {
                points: 3,
                player: Some("p1".into()),
            },
            LiveEvent::ScoreAgainst { points: 2 },
            LiveEvent::RebDef {
                player: Some("p1".into()),
            },
            LiveEvent::RebOff { player: None },
            LiveEvent::Assist { player: None },
            LiveEvent::Turnover {
                player: Some("p2".into()),
            },
            LiveEvent::FoulDrawn { player: None },
            LiveEvent::Tick,
            LiveEvent::SubOut {
                player: "p1".into(),
            },
            LiveEvent::SubIn {
                player: "p2".into(),
            },
        ];
        let mut s = state();
        for e in events {
            let before = s.clone();
            s.apply(e.clone()).unwrap();
            let mut undone = s.clone();
            undone.apply(LiveEvent::Undo).unwrap();
            assert_eq!(undone, before, "undo of {e:?}");
        }
        let mut fresh = state();
        assert!(matches!(
            fresh.apply(LiveEvent::Undo),
            Err(Error::NothingToUndo)
        ));
    }

    #[test]
    fn illegal_subs_leave_state_untouched() {
        let mut s = state();
        s.apply(LiveEvent::SubIn { player: "a".into() }).unwrap();
        let before = s.clone();
        let err = s
            .apply(LiveEvent::SubIn { player: "a".into() })
            .unwrap_err();
        assert_eq!(err.category(), "IllegalSub");
        assert!(s.apply(LiveEvent::SubOut { player: "b".into() }).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn quiet_game_drifts_to_the_endpoint() {
        let mut s = state();
        for _ in 0..40 {
            s.apply(LiveEvent::Tick).unwrap();
        }
        assert!(matches!(
            s.apply(LiveEvent::Tick),
            Err(Error::ClockExhausted)
        ));
        assert!(matches!(
            s.apply(LiveEvent::RebDef { player: None }),
            Err(Error::ClockExhausted)
        ));
        let path = s.path();
        assert_eq!(path.len(), 41);
        // Stats stay at zero, so mT only reflects the negative drift `-m t / v`.
        assert!(path.windows(2).all(|w| w[1].mt <= w[0].mt + 1e-15));
        // Tied at 0-0: T* decays toward the draw value and PW reaches 1/2 at the end.
        assert_eq!(path[40].pw, 0.5);
        assert!(path[40].sensitivity.is_empty());
        assert!(path[39].pw < path[1].pw);
    }

    #[test]
    fn stints_follow_the_clock() {
        let mut s = state();
        s.apply(LiveEvent::SubIn { player: "a".into() }).unwrap();
        for _ in 0..4 {
            s.apply(LiveEvent::Tick).unwrap();
        }
        s.apply(LiveEvent::SubOut { player: "a".into() }).unwrap();
        s.apply(LiveEvent::Tick).unwrap();
        s.apply(LiveEvent::SubIn { player: "a".into() }).unwrap();
        s.apply(LiveEvent::Tick).unwrap();
        assert_eq!(s.stints()["a"], vec![(0.0, 0.1), (0.125, 0.15)]);
    }

    #[test]
    fn event_json_shape() {
        let e: LiveEvent =
            serde_json::from_str(r#"{"type":"SCORE_FOR","points":3,"player":"p7"}"#).unwrap();
        assert_eq!(
            e,
            LiveEvent::ScoreFor {
                points: 3,
                player: Some("p7".into())
            }
        );
        let t: LiveEvent = serde_json::from_str(r#"{"type":"TICK"}"#).unwrap();
        assert_eq!(t, LiveEvent::Tick);
        let r: LiveEvent = serde_json::from_str(r#"{"type":"REB_DEF"}"#).unwrap();
        assert_eq!(r, LiveEvent::RebDef { player: None });
        assert_eq!(
            serde_json::to_string(&LiveEvent::Undo).unwrap(),
            r#"{"type":"UNDO"}"#
        );
    }
}

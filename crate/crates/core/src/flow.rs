//! Intervals on fire (IoF), X-index, STATS X and player totals.
//!
//! A grid step `[t_r, t_{r+1})` is on fire when the modified T-process rises
//! by more than a threshold over that step. Thresholds are stored as per-step
//! increments `theta`; a threshold `delta` on the rate `ΔmT / Δ` corresponds to
//! `theta = delta / R`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PlayerGameEval;
use crate::process::ProcessPath;

pub const DEFAULT_K_TARGET: usize = 4;

/// Disjoint, sorted court-time intervals `[in, out)` of one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnCourtSpan {
    pub player_id: String,
    pub intervals: Vec<(f64, f64)>,
}

impl OnCourtSpan {
    pub fn validate(&self) -> Result<()> {
        let mut prev_end = 0.0;
        for (i, &(a, b)) in self.intervals.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
                return Err(Error::InvalidParameter(format!(
                    "interval [{a}, {b}) is not inside [0, 1]"
                )));
            }
            if i > 0 && a < prev_end {
                return Err(Error::InvalidParameter(format!(
                    "interval [{a}, {b}) overlaps the previous one"
                )));
            }
            prev_end = b;
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IofResult {
    pub threshold_theta: f64,
    pub grid_r: usize,
    /// Indices `r` of the steps `[t_r, t_{r+1})` on fire, ascending.
    pub steps: Vec<usize>,
    /// Game-time length of the IoF.
    pub total_length: f64,
    /// Sum of the `mT` increments over the IoF steps.
    pub increment_sum: f64,
}

impl IofResult {
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let r = self.grid_r as f64;
        self.steps
            .iter()
            .map(|&s| (s as f64 / r, (s + 1) as f64 / r))
            .collect()
    }

    pub fn contains_step(&self, r: usize) -> bool {
        self.steps.binary_search(&r).is_ok()
    }
}

/// Steps whose increment strictly exceeds `theta`.
pub fn iof(path: &ProcessPath, theta: f64) -> IofResult {
    let grid_r = path.grid_r();
    let mut steps = Vec::new();
    let mut increment_sum = 0.0;
    for (r, inc) in path.increments().into_iter().enumerate() {
        if inc > theta {
            steps.push(r);
            increment_sum += inc;
        }
    }
    IofResult {
        threshold_theta: theta,
        grid_r,
        total_length: steps.len() as f64 / grid_r as f64,
        steps,
        increment_sum,
    }
}

/// Threshold just below the `k_target`-th largest increment, truncated toward
/// zero to three significant digits.
///
/// When the `k`-th increment is itself a three-digit value the threshold is
/// lowered by one unit in the last digit so that strict membership keeps it.
pub fn select_delta(path: &ProcessPath, k_target: usize) -> Result<f64> {
    if k_target == 0 {
        return Err(Error::InvalidParameter("k_target must be positive".into()));
    }
    let mut rises: Vec<f64> = path.increments().into_iter().filter(|&x| x > 0.0).collect();
    if rises.len() < k_target {
        return Err(Error::TooFewRises {
            needed: k_target,
            found: rises.len(),
        });
    }
    rises.sort_by(|a, b| b.total_cmp(a));
    let kth = rises[k_target - 1];
    let mut theta = truncate_sig3(kth);
    while rises.iter().filter(|&&x| x > theta).count() < k_target {
        theta = step_down_sig3(theta);
    }
    Ok(theta)
}

/// Decimal exponent `e` and three-digit mantissa `m` with `x = m * 10^(e-2)`.
fn sig3_parts(x: f64) -> (i32, f64) {
    let mut e = x.log10().floor() as i32;
    let mut m = scale_pow10(x, 2 - e);
    if m >= 1000.0 {
        e += 1;
        m = scale_pow10(x, 2 - e);
    } else if m < 100.0 {
        e -= 1;
        m = scale_pow10(x, 2 - e);
    }
    (e, m)
}

/// `x * 10^p` computed by a single multiplication or division by an exact
/// power of ten.
fn scale_pow10(x: f64, p: i32) -> f64 {
    if p >= 0 {
        x * 10f64.powi(p)
    } else {
        x / 10f64.powi(-p)
    }
}

fn truncate_sig3(x: f64) -> f64 {
    let (e, m) = sig3_parts(x);
    scale_pow10(m.floor(), e - 2)
}

fn step_down_sig3(x: f64) -> f64 {
    let (e, m) = sig3_parts(x);
    let m = m.round();
    if m <= 100.0 {
        scale_pow10(999.0, e - 3)
    } else {
        scale_pow10(m - 1.0, e - 2)
    }
}

/// End-game weighting of court time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XWeight {
    #[default]
    Uniform,
    /// `w(t) = 1 / sqrt(1 - t)`, integrated in closed form.
    InverseSqrtRemaining,
}

impl XWeight {
    fn integral(self, lo: f64, hi: f64) -> f64 {
        match self {
            XWeight::Uniform => hi - lo,
            XWeight::InverseSqrtRemaining => 2.0 * ((1.0 - lo).sqrt() - (1.0 - hi).sqrt()),
        }
    }
}

/// Court time of `span` that falls inside the IoF, optionally weighted.
pub fn x_index(span: &OnCourtSpan, iof: &IofResult, weight: XWeight) -> f64 {
    let mut total = 0.0;
    for (a, b) in iof.intervals() {
        for &(lo, hi) in &span.intervals {
            let lo = lo.max(a);
            let hi = hi.min(b);
            if hi > lo {
                total += weight.integral(lo, hi);
            }
        }
    }
    total
}

/// First sharp reversal and first drop of the win probability to `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimes {
    pub reversal_time: Option<f64>,
    pub pw_drop_time: Option<f64>,
}

pub fn stopping_times(path: &ProcessPath, theta: f64, epsilon: f64) -> StoppingTimes {
    let grid_r = path.grid_r() as f64;
    let reversal_time = path
        .increments()
        .iter()
        .position(|&inc| inc <= -theta)
        .map(|r| r as f64 / grid_r);
    let pw_drop_time = path
        .pw
        .iter()
        .position(|&p| p <= epsilon)
        .map(|r| path.times[r]);
    StoppingTimes {
        reversal_time,
        pw_drop_time,
    }
}

/// The STATS X map `h`, applied to an X-index.
#[derive(Clone)]
pub enum StatsXTransform {
    /// `h(x) = theta_k x` with the game's own IoF threshold.
    GameThreshold,
    /// `h(x) = slope x`.
    Linear(f64),
    /// A registered custom map, validated on construction.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for StatsXTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsXTransform::GameThreshold => f.write_str("GameThreshold"),
            StatsXTransform::Linear(s) => write!(f, "Linear({s})"),
            StatsXTransform::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl StatsXTransform {
    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope.is_finite() && slope >= 0.0) {
            return Err(Error::InvalidTransform(format!(
                "slope must be finite and non-negative, got {slope}"
            )));
        }
        Ok(StatsXTransform::Linear(slope))
    }

    /// Checks `h(0) = 0`, monotonicity, boundedness and the absence of jumps on
    /// a `1e-3` grid of `[0, 1]`.
    pub fn custom<F>(h: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        const N: usize = 1000;
        let values: Vec<f64> = (0..=N).map(|i| h(i as f64 / N as f64)).collect();
        if values[0] != 0.0 {
            return Err(Error::InvalidTransform(format!(
                "h(0) = {} != 0",
                values[0]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform(format!(
                "h is unbounded at x = {}",
                i as f64 / N as f64
            )));
        }
        let range = values[N] - values[0];
        for i in 1..=N {
            let step = values[i] - values[i - 1];
            if step < 0.0 {
                return Err(Error::InvalidTransform(format!(
                    "h decreases at x = {}",
                    i as f64 / N as f64
                )));
            }
            // A single grid step carrying a tenth of the total rise is a jump.
            if range > 0.0 && step > 0.1 * range {
                return Err(Error::InvalidTransform(format!(
                    "h jumps at x = {}",
                    i as f64 / N as f64
                )));
            }
        }
        Ok(StatsXTransform::Custom(Arc::new(h)))
    }

    pub fn apply(&self, x: f64, game_theta: f64) -> f64 {
        match self {
            StatsXTransform::GameThreshold => game_theta * x,
            StatsXTransform::Linear(s) => s * x,
            StatsXTransform::Custom(h) => h(x),
        }
    }
}

/// How the PTS average is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PtsDenominator {
    /// Divide by every game of the team; absences contribute zero.
    #[default]
    AllGames,
    /// Divide by the number of games the player appeared in.
    Appearances,
}

impl std::str::FromStr for PtsDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_games" => Ok(PtsDenominator::AllGames),
            "appearances" => Ok(PtsDenominator::Appearances),
            _ => Err(Error::InvalidParameter(format!(
                "unknown pts_denominator `{s}`"
            ))),
        }
    }
}

/// A player's per-game evaluations for one game together with that game's
/// IoF threshold.
#[derive(Debug, Clone)]
pub struct GameEvals {
    pub game_id: String,
    pub theta: f64,
    pub evals: Vec<PlayerGameEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerTotal {
    pub player_id: String,
    pub appearances: usize,
    pub mean_pcs: f64,
    pub mean_stats_x: f64,
    pub pts: f64,
}

/// Player total score: the mean over games of `PCS + h(X)`.
pub fn player_totals(
    games: &[GameEvals],
    h: &StatsXTransform,
    denominator: PtsDenominator,
) -> Result<Vec<PlayerTotal>> {
    let mut acc: BTreeMap<&str, (usize, f64, f64)> = BTreeMap::new();
    for g in games {
        if !(g.theta.is_finite() && g.theta >= 0.0) && matches!(h, StatsXTransform::GameThreshold) {
            return Err(Error::InvalidTransform(format!(
                "game {} has threshold {}; h(x) = theta x needs theta >= 0",
                g.game_id, g.theta
            )));
        }
        for e in &g.evals {
            let entry = acc.entry(e.player_id.as_str()).or_insert((0, 0.0, 0.0));
            entry.0 += 1;
            entry.1 += e.pcs;
            entry.2 += h.apply(e.x_index, g.theta);
        }
    }
    let n_games = games.len();
    Ok(acc
        .into_iter()
        .map(|(player_id, (appearances, pcs, sx))| {
            let n = match denominator {
                PtsDenominator::AllGames => n_games,
                PtsDenominator::Appearances => appearances,
            } as f64;
            PlayerTotal {
                player_id: player_id.to_string(),
                appearances,
                mean_pcs: pcs / n,
                mean_stats_x: sx / n,
                pts: (pcs + sx) / n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_from_increments(incs: &[f64]) -> ProcessPath {
        let mut mt = vec![1.0];
        for i in incs {
            let last = *mt.last().unwrap();
            mt.push(last + i);
        }
        let r = incs.len();
        ProcessPath {
            times: (0..=r).map(|i| i as f64 / r as f64).collect(),
            pw: vec![0.5; r + 1],
            t_star: mt.clone(),
            mt,
            scores: Vec::new(),
        }
    }

    fn span(intervals: &[(f64, f64)]) -> OnCourtSpan {
        OnCourtSpan {
            player_id: "p".into(),
            intervals: intervals.to_vec(),
        }
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(truncate_sig3(0.014831), 0.0148);
        assert_eq!(truncate_sig3(0.024229), 0.0242);
        assert_eq!(truncate_sig3(123.9), 123.0);
        assert_eq!(step_down_sig3(0.01), 0.00999);
        assert_eq!(step_down_sig3(0.0242), 0.0241);
    }

    #[test]
    fn select_delta_on_exact_digit_tie() {
        let mut incs = vec![0.04, 0.03, 0.02, 0.01, 0.005, -0.01, 0.001];
        incs.extend(std::iter::repeat_n(0.0, 33));
        let p = path_from_increments(&incs);
        let theta = select_delta(&p, 4).unwrap();
        // Brute-force count of qualifying steps.
        let count = p.increments().iter().filter(|&&x| x > theta).count();
        assert_eq!(count, 4);
        // Depending on how the fourth increment rounds, the rule lands on 0.01
        // (strictly below the increment) or steps down to 0.00999.
        assert!((0.00999..=0.01).contains(&theta), "{theta}");
    }

    #[test]
    fn too_few_rises() {
        let p = path_from_increments(&[0.1, -0.1, 0.2, 0.0]);
        assert!(matches!(
            select_delta(&p, 4),
            Err(Error::TooFewRises {
                needed: 4,
                found: 2
            })
        ));
    }

    #[test]
    fn non_increasing_path_has_no_iof() {
        let p = path_from_increments(&[-0.01, 0.0, -0.2, -0.001]);
        let r = iof(&p, 0.0);
        assert!(r.steps.is_empty());
        assert_eq!(r.total_length, 0.0);
        assert_eq!(x_index(&span(&[(0.0, 1.0)]), &r, XWeight::Uniform), 0.0);
    }

    #[test]
    fn x_index_interval_arithmetic() {
        let iof = IofResult {
            threshold_theta: 0.0148,
            grid_r: 40,
            steps: vec![13, 22],
            total_length: 0.05,
            increment_sum: 0.05,
        };
        let x = x_index(&span(&[(0.0, 0.5)]), &iof, XWeight::Uniform);
        assert!((x - 0.025).abs() < 1e-15);
        let full = x_index(&span(&[(0.0, 1.0)]), &iof, XWeight::Uniform);
        assert!((full - iof.total_length).abs() < 1e-15);
    }

    #[test]
    fn weighted_integral_closed_form() {
        let iof = IofResult {
            threshold_theta: 0.0,
            grid_r: 4,
            steps: vec![3],
            total_length: 0.25,
            increment_sum: 1.0,
        };
        let w = x_index(&span(&[(0.0, 1.0)]), &iof, XWeight::InverseSqrtRemaining);
        // ∫_{3/4}^{1} (1 - t)^{-1/2} dt = 2 sqrt(1/4) = 1
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stopping_times_absent_on_rising_win() {
        let mut p = path_from_increments(&[0.01; 10]);
        p.pw = (0..=10).map(|r| 0.6 + 0.04 * r as f64).collect();
        let st = stopping_times(&p, 0.005, 0.1);
        assert_eq!(st.reversal_time, None);
        assert_eq!(st.pw_drop_time, None);
    }

    #[test]
    fn transform_validation() {
        assert!(StatsXTransform::custom(|x| x * x).is_ok());
        assert!(StatsXTransform::custom(|x| x + 1.0).is_err());
        assert!(StatsXTransform::custom(|x| -x).is_err());
        assert!(StatsXTransform::custom(|x| if x > 0.5 { 1.0 } else { 0.0 }).is_err());
        assert!(StatsXTransform::custom(|x| 1.0 / (1.0 - x) - 1.0).is_err());
        assert!(StatsXTransform::linear(-1.0).is_err());
    }

    fn eval(game: &str, player: &str, pcs: f64, x: f64) -> PlayerGameEval {
        PlayerGameEval {
            game_id: game.into(),
            player_id: player.into(),
            pss: 0.0,
            pcs,
            x_index: x,
            stats_x: 0.0,
            minutes_fraction: 1.0,
        }
    }

    #[test]
    fn pts_single_game() {
        let games = [GameEvals {
            game_id: "g".into(),
            theta: 0.0148,
            evals: vec![eval("g", "togashi", 0.209108, 0.044)],
        }];
        let t = player_totals(
            &games,
            &StatsXTransform::GameThreshold,
            PtsDenominator::AllGames,
        )
        .unwrap();
        assert!((t[0].pts - 0.209759).abs() < 5e-7);
    }

    #[test]
    fn pts_means() {
        let games = [
            GameEvals {
                game_id: "g1".into(),
                theta: 0.0,
                evals: vec![eval("g1", "a", 0.3, 0.1), eval("g1", "b", 0.2, 0.0)],
            },
            GameEvals {
                game_id: "g2".into(),
                theta: 0.0,
                evals: vec![eval("g2", "a", 0.5, 0.2)],
            },
        ];
        let zero = StatsXTransform::linear(0.0).unwrap();
        let t = player_totals(&games, &zero, PtsDenominator::AllGames).unwrap();
        assert!((t[0].pts - 0.4).abs() < 1e-15);
        assert!((t[1].pts - 0.1).abs() < 1e-15);
        let t = player_totals(&games, &zero, PtsDenominator::Appearances).unwrap();
        assert!((t[1].pts - 0.2).abs() < 1e-15);
        // equal PCS + h(X) in both games -> PTS equals that value
        let h = StatsXTransform::linear(1.0).unwrap();
        let games = [
            GameEvals {
                game_id: "g1".into(),
                theta: 0.0,
                evals: vec![eval("g1", "a", 0.3, 0.1)],
            },
            GameEvals {
                game_id: "g2".into(),
                theta: 0.0,
                evals: vec![eval("g2", "a", 0.2, 0.2)],
            },
        ];
        let t = player_totals(&games, &h, PtsDenominator::AllGames).unwrap();
        assert!((t[0].pts - 0.4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn iof_invariants(incs in proptest::collection::vec(-0.05f64..0.05, 2..60), th1 in 0.0f64..0.04, dth in 0.0f64..0.02) {
            let p = path_from_increments(&incs);
            let lo = iof(&p, th1);
            let hi = iof(&p, th1 + dth);
            prop_assert!(hi.steps.iter().all(|s| lo.steps.contains(s)));
            let n = lo.steps.len() as f64;
            if !lo.steps.is_empty() {
                prop_assert!(lo.increment_sum > th1 * n);
            }
            prop_assert_eq!(lo.total_length, n / incs.len() as f64);
            let non_iof: f64 = p.increments().iter().enumerate()
                .filter(|(r, _)| !lo.contains_step(*r)).map(|(_, x)| x.abs()).sum();
            let rise = p.mt.last().unwrap() - p.mt[0];
            prop_assert!(rise >= th1 * n - non_iof - 1e-12);
        }

        #[test]
        fn x_index_additive_and_weight_dominates(cuts in proptest::collection::vec(0u32..40, 2..8), steps in proptest::collection::btree_set(0usize..40, 0..10)) {
            let mut cuts: Vec<f64> = cuts.into_iter().map(|c| c as f64 / 40.0).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let pieces: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
            let steps: Vec<usize> = steps.into_iter().collect();
            let iof = IofResult { threshold_theta: 0.0, grid_r: 40, total_length: steps.len() as f64 / 40.0, steps, increment_sum: 0.0 };
            let union = x_index(&span(&pieces), &iof, XWeight::Uniform);
            let parts: f64 = pieces.iter().map(|p| x_index(&span(&[*p]), &iof, XWeight::Uniform)).sum();
            prop_assert!((union - parts).abs() < 1e-12);
            let weighted = x_index(&span(&pieces), &iof, XWeight::InverseSqrtRemaining);
            prop_assert!(weighted >= union - 1e-15);
            prop_assert!(union <= iof.total_length + 1e-15);
        }
    }
}

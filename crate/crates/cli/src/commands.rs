//! Batch subcommands: fit, replay, evaluate, simulate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tflow_core::data::{
    fmt_f64, load_game_bundle, load_model, load_series, save_model, write_game_bundle, GameRecord,
    STANDARD_STATS,
};
use tflow_core::flow::{
    iof, player_totals, select_delta, stopping_times, x_index, GameEvals, IofResult,
    PtsDenominator, StatsXTransform, XWeight,
};
use tflow_core::model::player_scores;
use tflow_core::simulate::{simulate_league, GameRates, LeagueTruth, SeededRng};
use tflow_core::{fit, Error, MatchContext, ProcessPath, Result, ScoreAnchor, TScoreVariant};

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// fit

pub struct FitArgs {
    pub games: PathBuf,
    pub out: PathBuf,
    pub variant: TScoreVariant,
    pub team: Option<String>,
    pub stats: Vec<String>,
}

pub fn run_fit(args: &FitArgs) -> Result<()> {
    let games = team_games(load_game_bundle(&args.games)?, args.team.as_deref())?;
    let stats: Vec<&str> = args.stats.iter().map(String::as_str).collect();
    let model = fit(&games, args.variant, &stats)?;
    save_model(&args.out, &model)
}

/// Games of one team; the team may be omitted when the bundle has only one.
fn team_games(games: Vec<GameRecord>, team: Option<&str>) -> Result<Vec<GameRecord>> {
    let teams: std::collections::BTreeSet<&str> =
        games.iter().map(|g| g.team_id.as_str()).collect();
    let team = match team {
        Some(t) => t.to_string(),
        None if teams.len() == 1 => teams.into_iter().next().unwrap_or_default().to_string(),
        None => {
            return Err(Error::InvalidParameter(format!(
                "bundle holds {} teams; choose one with --team",
                teams.len()
            )))
        }
    };
    let selected: Vec<GameRecord> = games.into_iter().filter(|g| g.team_id == team).collect();
    if selected.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no games for team `{team}`"
        )));
    }
    Ok(selected)
}

// ---------------------------------------------------------------------------
// opponent strengths

/// Opponent TFS lookup: a per-opponent table with an optional default.
#[derive(Debug, Clone, Default)]
pub struct Opponents {
    pub table: BTreeMap<String, f64>,
    pub default: Option<f64>,
}

#[derive(Deserialize)]
struct OpponentRow {
    opponent_id: String,
    tfs: f64,
}

impl Opponents {
    pub fn load(table: Option<&Path>, default: Option<f64>) -> Result<Self> {
        let mut out = Opponents {
            table: BTreeMap::new(),
            default,
        };
        if let Some(path) = table {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let mut reader = csv_reader(&text);
            for (i, row) in reader.deserialize::<OpponentRow>().enumerate() {
                let row = row.map_err(|e| Error::Parse {
                    line: i as u64 + 2,
                    column: 0,
                    message: e.to_string(),
                })?;
                out.table.insert(row.opponent_id, row.tfs);
            }
        }
        Ok(out)
    }

    pub fn tfs(&self, opponent_id: &str) -> Result<f64> {
        self.table
            .get(opponent_id)
            .copied()
            .or(self.default)
            .ok_or_else(|| Error::InvalidParameter(format!("no TFS for opponent `{opponent_id}`")))
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

// ---------------------------------------------------------------------------
// replay

#[derive(Debug, Clone)]
pub enum ReplayInput {
    Games(PathBuf),
    Series(PathBuf),
}

pub struct ReplayArgs {
    pub model: PathBuf,
    pub input: ReplayInput,
    pub team: Option<String>,
    pub opponents: Opponents,
    pub grid_r: usize,
    pub anchor: ScoreAnchor,
    pub theta: Option<f64>,
    pub k_target: usize,
    pub epsilon: f64,
    pub out: PathBuf,
}

/// A replayed game with its IoF.
pub struct Replayed {
    pub id: String,
    pub path: ProcessPath,
    pub fire: IofResult,
}

pub fn replay_all(args: &ReplayArgs) -> Result<Vec<Replayed>> {
    let model = load_model(&args.model)?;
    let mut out = Vec::new();
    match &args.input {
        ReplayInput::Games(dir) => {
            for game in team_games(load_game_bundle(dir)?, args.team.as_deref())? {
                let ctx = MatchContext::new(
                    model.clone(),
                    args.opponents.tfs(&game.opponent_id)?,
                    args.grid_r,
                )?;
                let path = ctx.replay(&game, args.anchor)?;
                let fire = fire(&path, args.theta, args.k_target)?;
                out.push(Replayed {
                    id: game.game_id.clone(),
                    path,
                    fire,
                });
            }
        }
        ReplayInput::Series(file) => {
            let series = load_series(file)?;
            let tfs = args.opponents.default.ok_or_else(|| {
                Error::InvalidParameter("series replay needs --opponent-tfs".into())
            })?;
            if args.anchor != ScoreAnchor::Level {
                return Err(Error::InvalidParameter(
                    "a bare series has no scores; use --anchor level".into(),
                ));
            }
            let ctx = MatchContext::new(model, tfs, series.grid_r())?;
            let path = ctx.replay_series(series.mt, Vec::new(), ScoreAnchor::Level)?;
            let fire = fire(&path, args.theta, args.k_target)?;
            let id = file.file_stem().map_or_else(
                || "series".to_string(),
                |s| s.to_string_lossy().into_owned(),
            );
            out.push(Replayed { id, path, fire });
        }
    }
    Ok(out)
}

fn fire(path: &ProcessPath, theta: Option<f64>, k_target: usize) -> Result<IofResult> {
    let theta = match theta {
        Some(t) => t,
        None => select_delta(path, k_target)?,
    };
    Ok(iof(path, theta))
}

pub fn run_replay(args: &ReplayArgs) -> Result<()> {
    let replayed = replay_all(args)?;
    create_dir(&args.out)?;
    let mut summary = String::from(
        "game_id,theta,iof_steps,iof_intervals,total_length,increment_sum,reversal_time,pw_drop_time\n",
    );
    for g in &replayed {
        write(
            &args.out.join(format!("{}.csv", g.id)),
            &render_path(&g.path, &g.fire),
        )?;
        let st = stopping_times(&g.path, g.fire.threshold_theta, args.epsilon);
        let intervals: Vec<String> = g
            .fire
            .intervals()
            .iter()
            .map(|(a, b)| format!("{}..{}", fmt_f64(*a), fmt_f64(*b)))
            .collect();
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            g.id,
            fmt_f64(g.fire.threshold_theta),
            g.fire.steps.len(),
            intervals.join(" "),
            fmt_f64(g.fire.total_length),
            fmt_f64(g.fire.increment_sum),
            opt(st.reversal_time),
            opt(st.pw_drop_time),
        );
    }
    write(&args.out.join("iof_summary.csv"), &summary)
}

fn render_path(path: &ProcessPath, fire: &IofResult) -> String {
    let mut s = String::from("t_index,t,a,b,mt,t_star,pw,iof\n");
    for r in 0..path.mt.len() {
        let (a, b) = path
            .scores
            .get(r)
            .map_or((String::new(), String::new()), |p| {
                (fmt_f64(p.a), fmt_f64(p.b))
            });
        let _ = writeln!(
            s,
            "{r},{},{a},{b},{},{},{},{}",
            fmt_f64(path.times[r]),
            fmt_f64(path.mt[r]),
            fmt_f64(path.t_star[r]),
            fmt_f64(path.pw[r]),
            u8::from(fire.contains_step(r)),
        );
    }
    s
}

// ---------------------------------------------------------------------------
// evaluate

pub struct EvaluateArgs {
    pub model: PathBuf,
    pub games: PathBuf,
    pub team: Option<String>,
    pub opponents: Opponents,
    pub anchor: ScoreAnchor,
    pub theta: Option<f64>,
    pub k_target: usize,
    pub h: StatsXTransform,
    pub weight: XWeight,
    pub denominator: PtsDenominator,
    pub out: PathBuf,
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let games = team_games(load_game_bundle(&args.games)?, args.team.as_deref())?;
    let mut per_game = Vec::with_capacity(games.len());
    let mut rows =
        String::from("game_id,player_id,pss,pcs,x_index,stats_x,minutes_fraction,theta\n");
    for game in &games {
        let ctx = MatchContext::new(
            model.clone(),
            args.opponents.tfs(&game.opponent_id)?,
            game.grid_r,
        )?;
        let path = ctx.replay(game, args.anchor)?;
        let fire = fire(&path, args.theta, args.k_target)?;
        let theta = fire.threshold_theta;
        let mut evals = player_scores(&model, game)?;
        for e in &mut evals {
            e.x_index = game
                .on_court
                .get(&e.player_id)
                .map_or(0.0, |span| x_index(span, &fire, args.weight));
            e.stats_x = args.h.apply(e.x_index, theta);
            let _ = writeln!(
                rows,
                "{},{},{},{},{},{},{},{}",
                e.game_id,
                e.player_id,
                fmt_f64(e.pss),
                fmt_f64(e.pcs),
                fmt_f64(e.x_index),
                fmt_f64(e.stats_x),
                fmt_f64(e.minutes_fraction),
                fmt_f64(theta),
            );
        }
        per_game.push(GameEvals {
            game_id: game.game_id.clone(),
            theta,
            evals,
        });
    }
    let totals = player_totals(&per_game, &args.h, args.denominator)?;
    let mut t = String::from("player_id,appearances,mean_pcs,mean_stats_x,pts\n");
    for p in totals {
        let _ = writeln!(
            t,
            "{},{},{},{},{}",
            p.player_id,
            p.appearances,
            fmt_f64(p.mean_pcs),
            fmt_f64(p.mean_stats_x),
            fmt_f64(p.pts)
        );
    }
    create_dir(&args.out)?;
    write(&args.out.join("player_games.csv"), &rows)?;
    write(&args.out.join("player_totals.csv"), &t)
}

/// Parses `game` (h(x) = theta x) or `linear:<slope>`.
pub fn parse_h(s: &str) -> Result<StatsXTransform> {
    if s == "game" {
        return Ok(StatsXTransform::GameThreshold);
    }
    if let Some(slope) = s.strip_prefix("linear:") {
        let slope: f64 = slope
            .parse()
            .map_err(|_| Error::InvalidTransform(format!("bad slope `{slope}`")))?;
        return StatsXTransform::linear(slope);
    }
    Err(Error::InvalidTransform(format!("unknown transform `{s}`")))
}

pub fn parse_weight(s: &str) -> Result<XWeight> {
    match s {
        "uniform" => Ok(XWeight::Uniform),
        "inverse-sqrt" => Ok(XWeight::InverseSqrtRemaining),
        _ => Err(Error::InvalidParameter(format!("unknown X weight `{s}`"))),
    }
}

// ---------------------------------------------------------------------------
// simulate

pub struct SimulateArgs {
    pub seed: u64,
    pub lambda: f64,
    pub games: usize,
    pub teams: usize,
    pub sigma: f64,
    pub grid_r: usize,
    pub variant: TScoreVariant,
    pub out: PathBuf,
}

/// STATS coefficients of the synthetic leagues: points and defensive
/// rebounds matter, the rest do not.
pub const DEFAULT_TRUE_ALPHA: [f64; 8] = [0.06, 0.0, 0.0, 0.0, 0.056, 0.0, 0.0, 0.0];

/// Team strengths evenly spread over `[0.87, 1.14]`, strongest first.
pub fn team_strengths(n: usize) -> Vec<(String, f64)> {
    (0..n)
        .map(|i| {
            let alpha0 = if n == 1 {
                1.14
            } else {
                1.14 - 0.27 * i as f64 / (n - 1) as f64
            };
            (format!("team{:02}", i + 1), alpha0)
        })
        .collect()
}

pub fn simulation_truth(args: &SimulateArgs) -> Result<LeagueTruth> {
    if args.teams == 0 || args.games == 0 {
        return Err(Error::InvalidParameter(
            "need at least one team and one game".into(),
        ));
    }
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be >= 0, got {}",
            args.sigma
        )));
    }
    Ok(LeagueTruth {
        variant: args.variant,
        stat_ids: STANDARD_STATS.iter().map(|s| s.to_string()).collect(),
        alpha: DEFAULT_TRUE_ALPHA.to_vec(),
        sigma2: args.sigma * args.sigma,
        teams: team_strengths(args.teams),
        rates: GameRates::basketball(args.lambda)?,
        grid_r: args.grid_r,
        roster_size: 10,
    })
}

pub fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let truth = simulation_truth(args)?;
    let league = simulate_league(&truth, args.games, &SeededRng::new(args.seed))?;
    let games: Vec<GameRecord> = league.into_values().flatten().collect();
    write_game_bundle(&args.out, &games)?;
    let doc = serde_json::json!({ "seed": args.seed, "truth": truth });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write(&args.out.join("truth.json"), &text)
}

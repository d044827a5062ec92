//! Game bundles (long-format CSV) and the versioned model file.
//!
//! A bundle directory holds:
//!
//! * `games.csv`: `game_id,opponent_id,final_a,final_b,grid_R[,team_id]`
//! * `team_paths.csv`: `game_id,t_index,stat_id,value`; the score paths use
//!   the reserved stat ids `score_for` and `score_against`
//! * `player_paths.csv`: `game_id,player_id,t_index,stat_id,value` (optional)
//! * `oncourt.csv`: `game_id,player_id,in_t,out_t` with times as fractions of
//!   regulation (optional)
//!
//! Loaders reject inconsistent input instead of repairing it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::OnCourtSpan;
use crate::model::{CoefficientInference, FittedModel};
use crate::standardize::{Scaler, Standardizer, StatPath};
use crate::tscore::{ScorePair, TScoreKind, TScoreVariant};

pub const SCORE_FOR: &str = "score_for";
pub const SCORE_AGAINST: &str = "score_against";

/// The eight box-score STATS, in coefficient order `alpha_1 .. alpha_8`.
pub const STANDARD_STATS: [&str; 8] = ["PTs", "FGM", "3FGM", "OR", "DR", "AS", "TO", "FD"];

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// One team's view of one game: cumulative STATS on the grid, the roster and
/// the running score.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    pub game_id: String,
    pub team_id: String,
    pub opponent_id: String,
    pub grid_r: usize,
    pub team_paths: BTreeMap<String, StatPath>,
    /// player id -> stat id -> path
    pub player_paths: BTreeMap<String, BTreeMap<String, StatPath>>,
    pub on_court: BTreeMap<String, OnCourtSpan>,
    pub score_for: Vec<f64>,
    pub score_against: Vec<f64>,
    pub final_score: ScorePair,
}

impl GameRecord {
    pub fn team_path(&self, stat_id: &str) -> Result<&StatPath> {
        self.team_paths
            .get(stat_id)
            .ok_or_else(|| Error::MissingStat {
                game_id: self.game_id.clone(),
                stat_id: stat_id.to_string(),
            })
    }

    pub fn score_at(&self, r: usize) -> ScorePair {
        ScorePair {
            a: self.score_for[r],
            b: self.score_against[r],
        }
    }

    /// Players who appeared: anyone with recorded STATS or court time.
    pub fn players(&self) -> Vec<&str> {
        let mut ids: BTreeSet<&str> = self.player_paths.keys().map(String::as_str).collect();
        ids.extend(self.on_court.keys().map(String::as_str));
        ids.into_iter().collect()
    }

    /// Final raw value of a player's stat; zero when the player has no entry.
    pub fn player_final(&self, player_id: &str, stat_id: &str) -> f64 {
        self.player_paths
            .get(player_id)
            .and_then(|m| m.get(stat_id))
            .map_or(0.0, StatPath::final_value)
    }

    /// Checks every structural invariant, naming the first violation.
    pub fn validate(&self) -> Result<()> {
        let len = self.grid_r + 1;
        if self.grid_r < 2 {
            return Err(self.inconsistent("grid_R", 0, "grid_R must be at least 2"));
        }
        let check_path = |stat_id: &str, values: &[f64]| -> Result<()> {
            if values.len() != len {
                return Err(self.inconsistent(
                    stat_id,
                    values.len().min(len),
                    &format!("expected {len} grid points, found {}", values.len()),
                ));
            }
            if values[0] != 0.0 {
                return Err(self.inconsistent(stat_id, 0, "cumulative path must start at 0"));
            }
            for r in 1..len {
                if !values[r].is_finite() || values[r] < values[r - 1] {
                    return Err(self.inconsistent(stat_id, r, "cumulative path decreases"));
                }
            }
            Ok(())
        };
        check_path(SCORE_FOR, &self.score_for)?;
        check_path(SCORE_AGAINST, &self.score_against)?;
        for (id, p) in &self.team_paths {
            check_path(id, &p.values)?;
        }
        for (player, stats) in &self.player_paths {
            for (id, p) in stats {
                check_path(&format!("{id} ({player})"), &p.values)?;
                if !self.team_paths.contains_key(id) {
                    return Err(self.inconsistent(id, 0, "player stat has no team path"));
                }
            }
        }
        if !self.player_paths.is_empty() {
            for (id, team) in &self.team_paths {
                for r in 0..len {
                    let sum: f64 = self
                        .player_paths
                        .values()
                        .filter_map(|m| m.get(id))
                        .map(|p| p.values[r])
                        .sum();
                    if sum != team.values[r] {
                        return Err(self.inconsistent(
                            id,
                            r,
                            &format!("players sum to {sum}, team has {}", team.values[r]),
                        ));
                    }
                }
            }
        }
        if self.score_for[self.grid_r] != self.final_score.a
            || self.score_against[self.grid_r] != self.final_score.b
        {
            return Err(self.inconsistent(
                SCORE_FOR,
                self.grid_r,
                "score path does not end at the declared final",
            ));
        }
        for span in self.on_court.values() {
            span.validate().map_err(|e| {
                self.inconsistent("oncourt", 0, &format!("{}: {e}", span.player_id))
            })?;
        }
        Ok(())
    }

    fn inconsistent(&self, stat_id: &str, index: usize, message: &str) -> Error {
        Error::Consistency {
            game_id: self.game_id.clone(),
            stat_id: stat_id.to_string(),
            index,
            message: message.to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV bundle

#[derive(Debug, Deserialize)]
struct GameRow {
    game_id: String,
    opponent_id: String,
    final_a: f64,
    final_b: f64,
    #[serde(rename = "grid_R")]
    grid_r: usize,
    #[serde(default)]
    team_id: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct TeamPathRow {
    game_id: String,
    t_index: usize,
    stat_id: String,
    value: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct PlayerPathRow {
    game_id: String,
    player_id: String,
    t_index: usize,
    stat_id: String,
    value: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct OnCourtRow {
    game_id: String,
    player_id: String,
    in_t: f64,
    out_t: f64,
}

/// Raw CSV text of one bundle.
#[derive(Debug, Clone, Default)]
pub struct BundleSources {
    pub games: String,
    pub team_paths: String,
    pub player_paths: Option<String>,
    pub oncourt: Option<String>,
}

impl BundleSources {
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            fs::read_to_string(dir.join(name))
                .map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())))
        };
        let optional = |name: &str| -> Result<Option<String>> {
            let path = dir.join(name);
            if path.exists() {
                read(name).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(BundleSources {
            games: read("games.csv")?,
            team_paths: read("team_paths.csv")?,
            player_paths: optional("player_paths.csv")?,
            oncourt: optional("oncourt.csv")?,
        })
    }
}

fn read_rows<T: serde::de::DeserializeOwned>(src: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let row = record
            .deserialize(Some(&headers))
            .map_err(|e| deserialize_error(e, &record))?;
        out.push(row);
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, csv::Position::line);
    Error::Parse {
        line,
        column: 0,
        message: e.to_string(),
    }
}

fn deserialize_error(e: csv::Error, record: &csv::StringRecord) -> Error {
    let line = record.position().map_or(0, csv::Position::line);
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => Error::Parse {
            line,
            column: err.field().map_or(0, |f| f as usize + 1),
            message: err.kind().to_string(),
        },
        _ => Error::Parse {
            line,
            column: 0,
            message: e.to_string(),
        },
    }
}

/// Parses and validates every game of a bundle, ordered by `game_id`.
pub fn parse_game_bundle(src: &BundleSources) -> Result<Vec<GameRecord>> {
    let games: Vec<GameRow> = read_rows(&src.games)?;
    let team_rows: Vec<TeamPathRow> = read_rows(&src.team_paths)?;
    let player_rows: Vec<PlayerPathRow> = match &src.player_paths {
        Some(s) => read_rows(s)?,
        None => Vec::new(),
    };
    let oncourt_rows: Vec<OnCourtRow> = match &src.oncourt {
        Some(s) => read_rows(s)?,
        None => Vec::new(),
    };

    let mut meta: BTreeMap<String, GameRow> = BTreeMap::new();
    for g in games {
        if meta.contains_key(&g.game_id) {
            return Err(consistency(&g.game_id, "games.csv", 0, "duplicate game_id"));
        }
        meta.insert(g.game_id.clone(), g);
    }

    // (game, stat) -> t_index -> value
    let mut team: BTreeMap<(String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    for row in team_rows {
        let slot = team
            .entry((row.game_id.clone(), row.stat_id.clone()))
            .or_default();
        if slot.insert(row.t_index, row.value).is_some() {
            return Err(consistency(
                &row.game_id,
                &row.stat_id,
                row.t_index,
                "duplicate grid point",
            ));
        }
    }
    let mut player: BTreeMap<(String, String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    for row in player_rows {
        let key = (
            row.game_id.clone(),
            row.player_id.clone(),
            row.stat_id.clone(),
        );
        if player
            .entry(key)
            .or_default()
            .insert(row.t_index, row.value)
            .is_some()
        {
            return Err(consistency(
                &row.game_id,
                &row.stat_id,
                row.t_index,
                "duplicate grid point",
            ));
        }
    }
    let mut spans: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in oncourt_rows {
        spans
            .entry((row.game_id, row.player_id))
            .or_default()
            .push((row.in_t, row.out_t));
    }

    for (game_id, stat_id) in team.keys() {
        if !meta.contains_key(game_id) {
            return Err(consistency(
                game_id,
                stat_id,
                0,
                "game not listed in games.csv",
            ));
        }
    }
    for (game_id, _, stat_id) in player.keys() {
        if !meta.contains_key(game_id) {
            return Err(consistency(
                game_id,
                stat_id,
                0,
                "game not listed in games.csv",
            ));
        }
    }
    for (game_id, _) in spans.keys() {
        if !meta.contains_key(game_id) {
            return Err(consistency(
                game_id,
                "oncourt",
                0,
                "game not listed in games.csv",
            ));
        }
    }

    let mut out = Vec::with_capacity(meta.len());
    for (game_id, g) in &meta {
        let dense = |stat: &str, points: &BTreeMap<usize, f64>| -> Result<Vec<f64>> {
            (0..=g.grid_r)
                .map(|r| {
                    points
                        .get(&r)
                        .copied()
                        .ok_or_else(|| consistency(game_id, stat, r, "missing grid point"))
                })
                .collect::<Result<Vec<f64>>>()
                .and_then(|v| {
                    if let Some((&extra, _)) = points.range(g.grid_r + 1..).next() {
                        Err(consistency(
                            game_id,
                            stat,
                            extra,
                            "grid index beyond grid_R",
                        ))
                    } else {
                        Ok(v)
                    }
                })
        };

        let mut team_paths = BTreeMap::new();
        let mut score_for = None;
        let mut score_against = None;
        for ((gid, stat), points) in team.range((game_id.clone(), String::new())..) {
            if gid != game_id {
                break;
            }
            let values = dense(stat, points)?;
            match stat.as_str() {
                SCORE_FOR => score_for = Some(values),
                SCORE_AGAINST => score_against = Some(values),
                _ => {
                    let path = StatPath::raw(stat.clone(), values)
                        .map_err(|e| consistency(game_id, stat, 0, &e.to_string()))?;
                    team_paths.insert(stat.clone(), path);
                }
            }
        }
        let score_for =
            score_for.ok_or_else(|| consistency(game_id, SCORE_FOR, 0, "missing score path"))?;
        let score_against = score_against
            .ok_or_else(|| consistency(game_id, SCORE_AGAINST, 0, "missing score path"))?;

        let mut player_paths: BTreeMap<String, BTreeMap<String, StatPath>> = BTreeMap::new();
        for ((gid, pid, stat), points) in
            player.range((game_id.clone(), String::new(), String::new())..)
        {
            if gid != game_id {
                break;
            }
            let values = dense(stat, points)?;
            let path = StatPath::raw(stat.clone(), values)
                .map_err(|e| consistency(game_id, stat, 0, &format!("{pid}: {e}")))?;
            player_paths
                .entry(pid.clone())
                .or_default()
                .insert(stat.clone(), path);
        }

        let mut on_court = BTreeMap::new();
        for ((gid, pid), intervals) in spans.range((game_id.clone(), String::new())..) {
            if gid != game_id {
                break;
            }
            let mut intervals = intervals.clone();
            intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
            on_court.insert(
                pid.clone(),
                OnCourtSpan {
                    player_id: pid.clone(),
                    intervals,
                },
            );
        }

        let final_score = ScorePair::new(g.final_a, g.final_b)
            .map_err(|e| consistency(game_id, "final", g.grid_r, &e.to_string()))?;
        let record = GameRecord {
            game_id: game_id.clone(),
            team_id: g.team_id.clone().unwrap_or_else(|| "team".to_string()),
            opponent_id: g.opponent_id.clone(),
            grid_r: g.grid_r,
            team_paths,
            player_paths,
            on_court,
            score_for,
            score_against,
            final_score,
        };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_game_bundle(dir: &Path) -> Result<Vec<GameRecord>> {
    parse_game_bundle(&BundleSources::read_dir(dir)?)
}

fn consistency(game_id: &str, stat_id: &str, index: usize, message: &str) -> Error {
    Error::Consistency {
        game_id: game_id.to_string(),
        stat_id: stat_id.to_string(),
        index,
        message: message.to_string(),
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders games in bundle format. Output is deterministic.
pub fn render_game_bundle(games: &[GameRecord]) -> Result<BundleSources> {
    let mut games_csv = String::from("game_id,opponent_id,final_a,final_b,grid_R,team_id\n");
    let mut team_rows = Vec::new();
    let mut player_rows = Vec::new();
    let mut oncourt_rows = Vec::new();
    for g in games {
        games_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g.game_id, g.opponent_id, g.final_score.a, g.final_score.b, g.grid_r, g.team_id
        ));
        let mut push_team = |stat: &str, values: &[f64]| {
            for (r, &value) in values.iter().enumerate() {
                team_rows.push(TeamPathRow {
                    game_id: g.game_id.clone(),
                    t_index: r,
                    stat_id: stat.to_string(),
                    value,
                });
            }
        };
        push_team(SCORE_FOR, &g.score_for);
        push_team(SCORE_AGAINST, &g.score_against);
        for (stat, p) in &g.team_paths {
            push_team(stat, &p.values);
        }
        for (pid, stats) in &g.player_paths {
            for (stat, p) in stats {
                for (r, &value) in p.values.iter().enumerate() {
                    player_rows.push(PlayerPathRow {
                        game_id: g.game_id.clone(),
                        player_id: pid.clone(),
                        t_index: r,
                        stat_id: stat.clone(),
                        value,
                    });
                }
            }
        }
        for (pid, span) in &g.on_court {
            for &(in_t, out_t) in &span.intervals {
                oncourt_rows.push(OnCourtRow {
                    game_id: g.game_id.clone(),
                    player_id: pid.clone(),
                    in_t,
                    out_t,
                });
            }
        }
    }
    Ok(BundleSources {
        games: games_csv,
        team_paths: to_csv(&team_rows)?,
        player_paths: Some(if player_rows.is_empty() {
            "game_id,player_id,t_index,stat_id,value\n".to_string()
        } else {
            to_csv(&player_rows)?
        }),
        oncourt: Some(if oncourt_rows.is_empty() {
            "game_id,player_id,in_t,out_t\n".to_string()
        } else {
            to_csv(&oncourt_rows)?
        }),
    })
}

pub fn write_game_bundle(dir: &Path, games: &[GameRecord]) -> Result<()> {
    let src = render_game_bundle(games)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("games.csv"), src.games)?;
    fs::write(dir.join("team_paths.csv"), src.team_paths)?;
    if let Some(p) = src.player_paths {
        fs::write(dir.join("player_paths.csv"), p)?;
    }
    if let Some(o) = src.oncourt {
        fs::write(dir.join("oncourt.csv"), o)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Digitized series

/// An `mT` series read off a chart, with the charted win probability if present.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitizedSeries {
    pub mt: Vec<f64>,
    pub pw: Option<Vec<f64>>,
}

impl DigitizedSeries {
    pub fn grid_r(&self) -> usize {
        self.mt.len() - 1
    }
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    t_index: usize,
    mt: f64,
    pw: Option<f64>,
}

/// Parses `t_index,mt[,pw]` rows covering `0..=R` in order.
pub fn parse_series(text: &str) -> Result<DigitizedSeries> {
    let rows: Vec<SeriesRow> = read_rows(text)?;
    if rows.len() < 3 {
        return Err(Error::InvalidParameter(
            "a series needs at least three points".into(),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.t_index != i {
            return Err(Error::Parse {
                line: i as u64 + 2,
                column: 1,
                message: format!("expected t_index {i}, found {}", row.t_index),
            });
        }
    }
    let has_pw = rows.iter().all(|r| r.pw.is_some());
    Ok(DigitizedSeries {
        mt: rows.iter().map(|r| r.mt).collect(),
        pw: has_pw.then(|| rows.iter().map(|r| r.pw.unwrap_or(f64::NAN)).collect()),
    })
}

pub fn load_series(path: &Path) -> Result<DigitizedSeries> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_series(&text)
}

// ---------------------------------------------------------------------------
// Model file

/// Decimal text with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(field: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidModel(format!("field {field}: `{s}` is not a number")))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    schema_version: u32,
    team_id: String,
    variant: VariantDoc,
    n_games: usize,
    alpha0: String,
    sigma2: String,
    tau2: String,
    coefficients: Vec<CoefficientDoc>,
    scaler: Vec<ScalerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VariantDoc {
    kind: TScoreKind,
    kappa: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientDoc {
    name: String,
    estimate: String,
    std_error: String,
    t_value: String,
    p_value: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScalerDoc {
    stat_id: String,
    m: String,
    v: String,
}

/// Serializes a model as a pretty-printed, versioned JSON document.
pub fn model_to_string(model: &FittedModel) -> String {
    let coefficients = model
        .inference
        .iter()
        .map(|c| CoefficientDoc {
            name: c.name.clone(),
            estimate: fmt_f64(c.estimate),
            std_error: fmt_f64(c.std_error),
            t_value: fmt_f64(c.t_value),
            p_value: fmt_f64(c.p_value),
        })
        .collect();
    // Scalers follow coefficient order rather than map order.
    let scaler = model
        .stat_ids
        .iter()
        .filter_map(|id| model.scaler.entries.get(id).map(|s| (id, s)))
        .map(|(id, s)| ScalerDoc {
            stat_id: id.clone(),
            m: fmt_f64(s.m),
            v: fmt_f64(s.v),
        })
        .collect();
    let doc = ModelDoc {
        schema_version: MODEL_SCHEMA_VERSION,
        team_id: model.team_id.clone(),
        variant: VariantDoc {
            kind: model.variant.kind,
            kappa: fmt_f64(model.variant.kappa),
        },
        n_games: model.n_games,
        alpha0: fmt_f64(model.alpha0),
        sigma2: fmt_f64(model.sigma2),
        tau2: fmt_f64(model.tau2),
        coefficients,
        scaler,
        note: model.note.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("model document serializes");
    s.push('\n');
    s
}

/// Parses a model document and re-checks every model invariant.
pub fn model_from_str(text: &str) -> Result<FittedModel> {
    let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| json_error(&e))?;
    let version = probe
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::InvalidModel("missing schema_version".into()))?;
    if version != u64::from(MODEL_SCHEMA_VERSION) {
        return Err(Error::VersionMismatch {
            expected: MODEL_SCHEMA_VERSION,
            found: version as u32,
        });
    }
    let doc: ModelDoc = serde_json::from_value(probe).map_err(|e| json_error(&e))?;
    if doc.coefficients.is_empty() {
        return Err(Error::InvalidModel("no coefficients".into()));
    }
    let mut inference = Vec::with_capacity(doc.coefficients.len());
    for c in &doc.coefficients {
        inference.push(CoefficientInference {
            name: c.name.clone(),
            estimate: parse_f64(&c.name, &c.estimate)?,
            std_error: parse_f64(&c.name, &c.std_error)?,
            t_value: parse_f64(&c.name, &c.t_value)?,
            p_value: parse_f64(&c.name, &c.p_value)?,
        });
    }
    let stat_ids: Vec<String> = inference[1..].iter().map(|c| c.name.clone()).collect();
    let alpha = inference[1..].iter().map(|c| c.estimate).collect();
    let mut entries = BTreeMap::new();
    for s in &doc.scaler {
        let scaler = Scaler::new(parse_f64("m", &s.m)?, parse_f64("v", &s.v)?)
            .map_err(|e| Error::InvalidModel(format!("scaler {}: {e}", s.stat_id)))?;
        entries.insert(s.stat_id.clone(), scaler);
    }
    let model = FittedModel {
        team_id: doc.team_id,
        variant: TScoreVariant::new(doc.variant.kind, parse_f64("kappa", &doc.variant.kappa)?)?,
        alpha0: parse_f64("alpha0", &doc.alpha0)?,
        alpha,
        sigma2: parse_f64("sigma2", &doc.sigma2)?,
        tau2: parse_f64("tau2", &doc.tau2)?,
        scaler: Standardizer { entries },
        inference,
        n_games: doc.n_games,
        stat_ids,
        note: doc.note,
    };
    if model.inference[0].estimate.to_bits() != model.alpha0.to_bits() {
        return Err(Error::InvalidModel(
            "first coefficient must be the TFS estimate alpha0".into(),
        ));
    }
    model.validate()?;
    Ok(model)
}

fn json_error(e: &serde_json::Error) -> Error {
    Error::Parse {
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn save_model(path: &Path, model: &FittedModel) -> Result<()> {
    fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FittedModel> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    model_from_str(&text)
}

/// Save-then-load through the text format.
pub fn model_roundtrip(model: &FittedModel) -> Result<FittedModel> {
    model_from_str(&model_to_string(model))
}

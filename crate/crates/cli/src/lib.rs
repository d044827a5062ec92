//! The `tflow` command line: fit, replay, evaluate, simulate and serve.

pub mod commands;
pub mod service;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tflow_core::data::STANDARD_STATS;
use tflow_core::flow::{PtsDenominator, DEFAULT_K_TARGET};
use tflow_core::process::DEFAULT_GRID_R;
use tflow_core::{Error, Result, ScoreAnchor, TScoreVariant};

use commands::{
    parse_h, parse_weight, EvaluateArgs, FitArgs, Opponents, ReplayArgs, ReplayInput, SimulateArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "tflow",
    version,
    about = "T-score dominance modeling and live win probability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the linear T-score model to a game bundle.
    Fit {
        #[arg(long)]
        games: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Team to fit when the bundle holds several.
        #[arg(long)]
        team: Option<String>,
        /// T-score variant, e.g. `symratio` or `logratio:kappa=0.5`.
        #[arg(long, default_value = "symratio")]
        variant: String,
        /// Comma-separated stat ids in coefficient order.
        #[arg(long, value_delimiter = ',')]
        stats: Option<Vec<String>>,
    },
    /// Replay games (or a digitized mT series) into mT, T*, PW and IoF.
    Replay {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "series", required_unless_present = "series")]
        games: Option<PathBuf>,
        /// CSV with columns `t_index,mt[,pw]`.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Team to replay when the bundle holds several.
        #[arg(long)]
        team: Option<String>,
        #[command(flatten)]
        opponents: OpponentArgs,
        #[arg(long, default_value_t = DEFAULT_GRID_R)]
        grid_r: usize,
        /// `score` (realized score) or `level` (current mT).
        #[arg(long, default_value = "score")]
        anchor: String,
        #[command(flatten)]
        fire: FireArgs,
        /// PW level for the drop stopping time.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-player PSS, PCS, X-index, STATS X and PTS tables.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        games: PathBuf,
        #[arg(long)]
        team: Option<String>,
        #[command(flatten)]
        opponents: OpponentArgs,
        #[arg(long, default_value = "score")]
        anchor: String,
        #[command(flatten)]
        fire: FireArgs,
        /// STATS X map: `game` (theta x) or `linear:<slope>`.
        #[arg(long, default_value = "game")]
        h: String,
        /// Court-time weight: `uniform` or `inverse-sqrt`.
        #[arg(long, default_value = "uniform")]
        x_weight: String,
        /// `all_games` or `appearances`.
        #[arg(long, default_value = "all_games")]
        pts_denominator: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic league with known coefficients.
    Simulate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Scoring events per team per game.
        #[arg(long, default_value_t = 42.0)]
        lambda: f64,
        /// Games per team.
        #[arg(long, default_value_t = 60)]
        games: usize,
        #[arg(long, default_value_t = 4)]
        teams: usize,
        /// Residual standard deviation of the final T-score.
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_R)]
        grid_r: usize,
        #[arg(long, default_value = "symratio")]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the live game service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory of model files; each `<name>.json` is served as `<name>`.
        #[arg(long)]
        models: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct OpponentArgs {
    /// Opponent TFS used for every game (or as fallback).
    #[arg(long)]
    opponent_tfs: Option<f64>,
    /// CSV with columns `opponent_id,tfs`.
    #[arg(long)]
    opponents: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FireArgs {
    /// Fixed IoF threshold; selected from the path when absent.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_K_TARGET)]
    k_target: usize,
}

impl OpponentArgs {
    fn load(&self) -> Result<Opponents> {
        Opponents::load(self.opponents.as_deref(), self.opponent_tfs)
    }
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            games,
            out,
            team,
            variant,
            stats,
        } => commands::run_fit(&FitArgs {
            games,
            out,
            variant: variant.parse::<TScoreVariant>()?,
            team,
            stats: stats.unwrap_or_else(|| STANDARD_STATS.iter().map(|s| s.to_string()).collect()),
        }),
        Command::Replay {
            model,
            games,
            series,
            team,
            opponents,
            grid_r,
            anchor,
            fire,
            epsilon,
            out,
        } => {
            let input = match (games, series) {
                (Some(g), None) => ReplayInput::Games(g),
                (None, Some(s)) => ReplayInput::Series(s),
                _ => {
                    return Err(Error::InvalidParameter(
                        "give exactly one of --games or --series".into(),
                    ))
                }
            };
            commands::run_replay(&ReplayArgs {
                model,
                input,
                team,
                opponents: opponents.load()?,
                grid_r,
                anchor: anchor.parse::<ScoreAnchor>()?,
                theta: fire.theta,
                k_target: fire.k_target,
                epsilon,
                out,
            })
        }
        Command::Evaluate {
            model,
            games,
            team,
            opponents,
            anchor,
            fire,
            h,
            x_weight,
            pts_denominator,
            out,
        } => commands::run_evaluate(&EvaluateArgs {
            model,
            games,
            team,
            opponents: opponents.load()?,
            anchor: anchor.parse::<ScoreAnchor>()?,
            theta: fire.theta,
            k_target: fire.k_target,
            h: parse_h(&h)?,
            weight: parse_weight(&x_weight)?,
            denominator: pts_denominator.parse::<PtsDenominator>()?,
            out,
        }),
        Command::Simulate {
            seed,
            lambda,
            games,
            teams,
            sigma,
            grid_r,
            variant,
            out,
        } => commands::run_simulate(&SimulateArgs {
            seed,
            lambda,
            games,
            teams,
            sigma,
            grid_r,
            variant: variant.parse::<TScoreVariant>()?,
            out,
        }),
        Command::Serve { addr, models } => {
            let models = service::load_models(&models)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Io(e.to_string()))?;
            rt.block_on(service::serve(&addr, models))
                .map_err(|e| Error::Io(format!("{addr}: {e}")))
        }
    }
}

/// One-line, machine-parsable error report.
pub fn error_line(e: &Error) -> String {
    format!(
        "error: {}: {}",
        e.category(),
        e.to_string().replace('\n', " ")
    )
}

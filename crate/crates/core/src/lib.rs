//! Dominance modeling for team sports.
//!
//! A game is summarized by a T-score `T(a, b)`; its time evolution is driven
//! by diffusion-standardized cumulative box-score STATS. From a linear fit of
//! final T-scores this crate derives a closed-form in-game win probability,
//! "interval on fire" dominance windows, and team and player indices.

pub mod data;
pub mod error;
pub mod flow;
mod linalg;
pub mod live;
pub mod model;
pub mod normal;
pub mod process;
pub mod simulate;
pub mod standardize;
pub mod tscore;

pub use error::{Error, Result};
pub use model::{fit, FittedModel};
pub use process::{MatchContext, ProcessPath, ScoreAnchor};
pub use tscore::{ScorePair, TScoreKind, TScoreVariant};

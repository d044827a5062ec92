//! T-score functions: continuous dominance values for a final (or running) score.
//!
//! A T-score maps a score pair `(a, b)` (points for, points against) to the real
//! line such that `T(a, b) > c` exactly when `a > b`, where `c` is the draw
//! benchmark of the family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five supported T-score families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TScoreKind {
    /// `a - b`
    #[serde(rename = "diff")]
    Difference,
    /// `2 - b/a` when `a >= b`, `a/b` otherwise.
    #[serde(rename = "symratio")]
    SymmetricRatio,
    /// `ln((a + kappa) / (b + kappa))`
    #[serde(rename = "logratio")]
    LogRatio,
    /// `(a - b) / (a + b + kappa)`
    #[serde(rename = "reldiff")]
    RelativeDifference,
    /// `(a - b) / sqrt(a + b + kappa)`
    #[serde(rename = "normalized")]
    Normalized,
}

impl TScoreKind {
    pub const ALL: [TScoreKind; 5] = [
        TScoreKind::Difference,
        TScoreKind::SymmetricRatio,
        TScoreKind::LogRatio,
        TScoreKind::RelativeDifference,
        TScoreKind::Normalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TScoreKind::Difference => "diff",
            TScoreKind::SymmetricRatio => "symratio",
            TScoreKind::LogRatio => "logratio",
            TScoreKind::RelativeDifference => "reldiff",
            TScoreKind::Normalized => "normalized",
        }
    }
}

impl FromStr for TScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TScoreKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown T-score variant `{s}`")))
    }
}

/// A non-negative pair of scores: `a` for, `b` against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub a: f64,
    pub b: f64,
}

impl ScorePair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
            return Err(Error::InvalidScore { a, b });
        }
        Ok(ScorePair { a, b })
    }

    /// The same game seen from the other bench.
    pub fn swapped(self) -> Self {
        ScorePair {
            a: self.b,
            b: self.a,
        }
    }
}

/// A T-score family together with its stabilizer `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TScoreVariant {
    pub kind: TScoreKind,
    pub kappa: f64,
}

impl TScoreVariant {
    pub fn new(kind: TScoreKind, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be finite and non-negative, got {kappa}"
            )));
        }
        Ok(TScoreVariant { kind, kappa })
    }

    pub fn symmetric_ratio() -> Self {
        TScoreVariant {
            kind: TScoreKind::SymmetricRatio,
            kappa: 0.0,
        }
    }

    /// Value of `T` on a tied score.
    pub fn draw_benchmark(&self) -> f64 {
        match self.kind {
            TScoreKind::SymmetricRatio => 1.0,
            TScoreKind::Difference
            | TScoreKind::LogRatio
            | TScoreKind::RelativeDifference
            | TScoreKind::Normalized => 0.0,
        }
    }

    pub fn t_score(&self, s: ScorePair) -> Result<f64> {
        let ScorePair { a, b } = ScorePair::new(s.a, s.b)?;
        let kappa = self.kappa;
        if self.kind == TScoreKind::LogRatio && kappa == 0.0 && (a == 0.0 || b == 0.0) {
            return Err(Error::Domain { a, b });
        }
        // Ties map to the benchmark exactly, including the 0/0 cases.
        if a == b {
            return Ok(self.draw_benchmark());
        }
        let t = match self.kind {
            TScoreKind::Difference => a - b,
            TScoreKind::SymmetricRatio => {
                if a >= b {
                    2.0 - b / a
                } else {
                    a / b
                }
            }
            TScoreKind::LogRatio => ((a + kappa) / (b + kappa)).ln(),
            TScoreKind::RelativeDifference => (a - b) / (a + b + kappa),
            TScoreKind::Normalized => (a - b) / (a + b + kappa).sqrt(),
        };
        Ok(t)
    }

    /// Convenience wrapper around [`TScoreVariant::t_score`] for raw numbers.
    pub fn eval(&self, a: f64, b: f64) -> Result<f64> {
        self.t_score(ScorePair { a, b })
    }
}

impl Default for TScoreVariant {
    fn default() -> Self {
        TScoreVariant::symmetric_ratio()
    }
}

impl fmt::Display for TScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TScoreKind::Difference | TScoreKind::SymmetricRatio => f.write_str(self.kind.name()),
            _ => write!(f, "{}:kappa={}", self.kind.name(), self.kappa),
        }
    }
}

/// Parses `symratio`, `logratio:kappa=0.5` or `logratio,kappa=0.5`.
impl FromStr for TScoreVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split([':', ',']);
        let kind: TScoreKind = parts.next().unwrap_or_default().parse()?;
        let mut kappa = 0.0;
        for part in parts {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let value = part.strip_prefix("kappa=").ok_or_else(|| {
                Error::InvalidParameter(format!("unexpected variant option `{part}`"))
            })?;
            kappa = value
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad kappa `{value}`")))?;
        }
        TScoreVariant::new(kind, kappa)
    }
}

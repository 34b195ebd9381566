//! Resolved run configuration. Every flag lands here and the whole struct
//! round-trips through JSON.

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use qcond::annex::default_p_grid;
use qcond::operator::Tolerance;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    VerifyAssumptions,
    Grover,
    Teleport,
    Annex,
    All,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyAssumptions => "verify-assumptions",
            Self::Grover => "grover",
            Self::Teleport => "teleport",
            Self::Annex => "annex",
            Self::All => "all",
        }
    }

    pub fn runs(self, section: CommandKind) -> bool {
        self == section || self == Self::All
    }
}

/// `--r` value: a fixed count or the per-`n` optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Iterations {
    Auto,
    Fixed(usize),
}

impl FromStr for Iterations {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        s.parse().map(Self::Fixed).map_err(|_| format!("expected a non-negative integer or `auto`, got `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub dims: Vec<usize>,
    pub trials: usize,
    /// 0 draws a fresh rank per trial.
    pub rank_e: usize,
    pub rank_f: usize,
    /// Two matrix-literal files (`e`, then `f`) replacing the random pairs.
    pub matrix_files: Vec<PathBuf>,
}

impl Default for AssumptionParams {
    fn default() -> Self {
        Self { dims: vec![2, 3, 4, 8], trials: 1000, rank_e: 0, rank_f: 0, matrix_files: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverParams {
    pub n: Vec<usize>,
    pub multiplicity: Vec<usize>,
    /// `None` sweeps `0..=r_max`.
    pub r: Option<Iterations>,
    pub r_max: usize,
    pub target: usize,
}

impl Default for GroverParams {
    fn default() -> Self {
        Self { n: vec![2, 4, 8, 16, 64], multiplicity: vec![1, 2], r: None, r_max: 20, target: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportParams {
    pub alpha: Option<Complex64>,
    pub beta: Option<Complex64>,
    pub trials: usize,
    pub force_outcome: Option<usize>,
}

impl Default for TeleportParams {
    fn default() -> Self {
        Self { alpha: None, beta: None, trials: 100, force_outcome: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnexParams {
    pub p_grid: Vec<f64>,
    pub r_max: usize,
}

impl Default for AnnexParams {
    fn default() -> Self {
        Self { p_grid: default_p_grid(), r_max: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub seed: u64,
    /// Pass threshold for every reported check.
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub assumptions: AssumptionParams,
    pub grover: GroverParams,
    pub teleport: TeleportParams,
    pub annex: AnnexParams,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            seed: 0,
            tol: Tolerance::default().abs_tol,
            out: None,
            json: false,
            assumptions: AssumptionParams::default(),
            grover: GroverParams::default(),
            teleport: TeleportParams::default(),
            annex: AnnexParams::default(),
        }
    }

    /// Semantic checks clap cannot express. The message is shown as a usage error.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(format!("--tol must be positive and finite, got {}", self.tol));
        }
        let a = &self.assumptions;
        if !matches!(a.matrix_files.len(), 0 | 2) {
            return Err("--matrix-file takes exactly two files: e, then f".into());
        }
        if a.matrix_files.is_empty() {
            if a.dims.is_empty() || a.dims.iter().any(|&d| d < 2) {
                return Err("--dims needs values of at least 2".into());
            }
            if a.trials == 0 {
                return Err("--trials must be at least 1".into());
            }
            if a.dims.iter().any(|&d| a.rank_e > d || a.rank_f > d) {
                return Err("ranks cannot exceed the dimension".into());
            }
        }
        let g = &self.grover;
        if g.n.is_empty() || g.n.iter().any(|&n| n < 2) {
            return Err("--n needs database sizes of at least 2".into());
        }
        if g.multiplicity.is_empty() || g.multiplicity.contains(&0) {
            return Err("--multiplicity must be at least 1".into());
        }
        if g.target == 0 {
            return Err("--target is one-based".into());
        }
        let t = &self.teleport;
        match (t.alpha, t.beta) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                let norm = a.norm_sqr() + b.norm_sqr();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(format!("|alpha|^2 + |beta|^2 must be 1, got {norm}"));
                }
            }
            _ => return Err("--alpha and --beta go together".into()),
        }
        if t.trials == 0 {
            return Err("--trials must be at least 1".into());
        }
        if t.force_outcome.is_some_and(|k| !(1..=4).contains(&k)) {
            return Err("--force-outcome takes 1, 2, 3 or 4".into());
        }
        if self.annex.p_grid.is_empty() || self.annex.p_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err("--p-grid values must lie strictly between 0 and 1".into());
        }
        Ok(())
    }
}

/// Complex literal such as `0.6`, `0.8i`, `-i` or `0.6+0.8i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let trimmed = s.trim();
    trimmed.parse::<Complex64>().map_err(|_| format!("`{s}` is not a complex literal (try `0.6`, `0.8i` or `0.6+0.8i`)"))
}

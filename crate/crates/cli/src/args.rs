//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{parse_complex, CommandKind, Iterations, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "qcond", version, about = "Verify projection-calculus identities, Grover search and teleportation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Root seed; every random draw derives from it
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Pass threshold for all checks
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,

    /// Directory for the report files
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Print the summary as JSON instead of text
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the structural assumptions and lemmas on random and fixed pairs
    VerifyAssumptions {
        /// Dimensions to sample
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Random pairs per dimension
        #[arg(long)]
        trials: Option<usize>,
        /// Rank of e (0 = random per trial)
        #[arg(long)]
        rank_e: Option<usize>,
        /// Rank of f (0 = random per trial)
        #[arg(long)]
        rank_f: Option<usize>,
        /// Matrix-literal JSON for e and f; give the flag twice
        #[arg(long, value_name = "FILE")]
        matrix_file: Vec<PathBuf>,
    },
    /// Sweep Grover iterations against the closed form
    Grover {
        /// Database sizes
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Rank of each event
        #[arg(long, value_delimiter = ',')]
        multiplicity: Option<Vec<usize>>,
        /// Iteration count, or `auto` for the optimum per size
        #[arg(long)]
        r: Option<Iterations>,
        /// Sweep bound when --r is absent
        #[arg(long)]
        r_max: Option<usize>,
        /// One-based target index
        #[arg(long)]
        target: Option<usize>,
    },
    /// Run the teleportation protocol
    Teleport {
        /// Amplitude of |0⟩, e.g. 0.6
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        alpha: Option<Complex64>,
        /// Amplitude of |1⟩, e.g. 0.8i
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        beta: Option<Complex64>,
        /// Number of runs
        #[arg(long)]
        trials: Option<usize>,
        /// Take Alice's outcome k instead of sampling it
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        force_outcome: Option<u8>,
    },
    /// Audit the matrix-power derivation of the closed form
    Annex {
        /// Values of p
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p_grid: Option<Vec<f64>>,
        /// Largest power
        #[arg(long)]
        r_max: Option<usize>,
    },
    /// Everything above with default parameters
    All,
}

fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s)
}

impl Cli {
    pub fn into_config(self) -> RunConfig {
        let kind = match &self.command {
            Command::VerifyAssumptions { .. } => CommandKind::VerifyAssumptions,
            Command::Grover { .. } => CommandKind::Grover,
            Command::Teleport { .. } => CommandKind::Teleport,
            Command::Annex { .. } => CommandKind::Annex,
            Command::All => CommandKind::All,
        };
        let mut cfg = RunConfig::new(kind);
        cfg.seed = self.common.seed;
        cfg.tol = self.common.tol;
        cfg.out = self.common.out;
        cfg.json = self.common.json;
        match self.command {
            Command::VerifyAssumptions { dims, trials, rank_e, rank_f, matrix_file } => {
                let a = &mut cfg.assumptions;
                a.dims = dims.unwrap_or(std::mem::take(&mut a.dims));
                a.trials = trials.unwrap_or(a.trials);
                a.rank_e = rank_e.unwrap_or(a.rank_e);
                a.rank_f = rank_f.unwrap_or(a.rank_f);
                a.matrix_files = matrix_file;
            }
            Command::Grover { n, multiplicity, r, r_max, target } => {
                let g = &mut cfg.grover;
                g.n = n.unwrap_or(std::mem::take(&mut g.n));
                g.multiplicity = multiplicity.unwrap_or(std::mem::take(&mut g.multiplicity));
                g.r = r;
                g.r_max = r_max.unwrap_or(g.r_max);
                g.target = target.unwrap_or(g.target);
            }
            Command::Teleport { alpha, beta, trials, force_outcome } => {
                let t = &mut cfg.teleport;
                t.alpha = alpha;
                t.beta = beta;
                t.trials = trials.unwrap_or(t.trials);
                t.force_outcome = force_outcome.map(usize::from);
            }
            Command::Annex { p_grid, r_max } => {
                let a = &mut cfg.annex;
                a.p_grid = p_grid.unwrap_or(std::mem::take(&mut a.p_grid));
                a.r_max = r_max.unwrap_or(a.r_max);
            }
            Command::All => {}
        }
        cfg
    }
}

//! Command-line grammar and the JSON override file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "orthosub", version, about = "Exact quantum and classical experiments on the orthogonal-subgroup problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the exact quantum algorithm on freshly sampled promise functions.
    Quantum(QuantumArgs),
    /// Monte Carlo run of the classical query strategy.
    Classical(ClassicalArgs),
    /// Count promise functions consistent with a classical transcript.
    Count(CountArgs),
    /// Replay the worked four-bit example on a forced branch.
    ReproduceExample(ExampleArgs),
    /// Check the amplitude profile of coset-difference states.
    VerifyLemma(LemmaArgs),
    /// Quantum and classical success side by side at the same n.
    Contrast(ContrastArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed; fixes every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// JSON file whose fields replace the matching flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantumArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Leave out the partial measurement of the second register.
    #[arg(long)]
    pub skip_step3: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalArgs {
    #[arg(long)]
    pub n: usize,
    /// Query budget; defaults to floor(2^(n/3)).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Refuse budgets above floor(2^(n/3)).
    #[arg(long)]
    pub check_bounds: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub n: usize,
    /// Number of queries when --queries is absent; defaults to floor(2^(n/3)).
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated query points, MSB first.
    #[arg(long, value_delimiter = ',')]
    pub queries: Option<Vec<String>>,
    /// Comma-separated answers; taken from the oracle when absent.
    #[arg(long, value_delimiter = ',')]
    pub answers: Option<Vec<String>>,
    /// Promise function as JSON; a seeded random one is used otherwise.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Require the enumeration cross-check (n <= 4).
    #[arg(long)]
    pub brute_force: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExampleArgs {
    /// Promise function as JSON; the built-in example otherwise.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Step-3 outcome to replay, MSB first.
    #[arg(long, default_value = "01")]
    pub force_branch: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long)]
    pub n: usize,
    /// Random tuples to check when n > 4; smaller n is exhaustive.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ContrastArgs {
    #[arg(long, default_value_t = 9)]
    pub n: usize,
    /// Classical query budget; defaults to floor(2^(n/3)).
    #[arg(long)]
    pub k: Option<usize>,
    /// Classical Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1000)]
    pub quantum_trials: u64,
    #[arg(long)]
    pub skip_step3: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Fields accepted in a `--config` file. Each present field replaces the
/// flag of the same name where the command has one.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverride {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub trials: Option<u64>,
    pub quantum_trials: Option<u64>,
    pub seed: Option<u64>,
    pub skip_step3: Option<bool>,
    pub check_bounds: Option<bool>,
    pub brute_force: Option<bool>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub force_branch: Option<String>,
    pub queries: Option<Vec<String>>,
    pub answers: Option<Vec<String>>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ConfigOverride {
    fn common(&mut self, common: &mut CommonArgs) {
        set(&mut common.seed, self.seed.take());
        set(&mut common.format, self.format.take());
        set(&mut common.workers, self.workers.take());
        if let Some(out) = self.out.take() {
            common.out = Some(out);
        }
    }

    pub fn apply(mut self, command: &mut Command) {
        match command {
            Command::Quantum(a) => {
                set(&mut a.n, self.n);
                set(&mut a.trials, self.trials);
                set(&mut a.skip_step3, self.skip_step3);
                self.common(&mut a.common);
            }
            Command::Classical(a) => {
                set(&mut a.n, self.n);
                set(&mut a.k, self.k.map(Some));
                set(&mut a.trials, self.trials);
                set(&mut a.check_bounds, self.check_bounds);
                self.common(&mut a.common);
            }
            Command::Count(a) => {
                set(&mut a.n, self.n);
                set(&mut a.k, self.k.map(Some));
                set(&mut a.queries, self.queries.take().map(Some));
                set(&mut a.answers, self.answers.take().map(Some));
                set(&mut a.brute_force, self.brute_force);
                self.common(&mut a.common);
            }
            Command::ReproduceExample(a) => {
                set(&mut a.force_branch, self.force_branch.take());
                self.common(&mut a.common);
            }
            Command::VerifyLemma(a) => {
                set(&mut a.n, self.n);
                set(&mut a.trials, self.trials);
                self.common(&mut a.common);
            }
            Command::Contrast(a) => {
                set(&mut a.n, self.n);
                set(&mut a.k, self.k.map(Some));
                set(&mut a.trials, self.trials);
                set(&mut a.quantum_trials, self.quantum_trials);
                set(&mut a.skip_step3, self.skip_step3);
                self.common(&mut a.common);
            }
        }
    }
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Quantum(a) => &a.common,
            Command::Classical(a) => &a.common,
            Command::Count(a) => &a.common,
            Command::ReproduceExample(a) => &a.common,
            Command::VerifyLemma(a) => &a.common,
            Command::Contrast(a) => &a.common,
        }
    }
}

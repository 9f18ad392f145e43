use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Seed used when neither `--seed` nor `SHUFFLE_MIX_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_190_611;

#[derive(Debug, Parser, Serialize)]
#[command(name = "shuffle-mix", version, about = "Partial mixing experiments for semi-random transposition shuffles")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "SHUFFLE_MIX_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Data file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// CSV where the command has a table, JSON otherwise.
    Auto,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Top,
    Random,
    Cyclic,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact TV curve of k tracked cards from one start.
    ExactTv(ExactTvArgs),
    /// Exact worst-case TV curve over starts.
    WorstTv(WorstTvArgs),
    /// Exact k-partial mixing time.
    MixTime(MixTimeArgs),
    /// Exact TV around the cutoff centre.
    Cutoff(CutoffArgs),
    /// Plug-in Monte Carlo TV estimate.
    McTv(McTvArgs),
    /// TV lower bound from the fixed-card statistic.
    LowerBound(LowerBoundArgs),
    /// Coupling simulations.
    #[command(subcommand)]
    Couple(CoupleCommand),
    /// Left-hand hits on the tracked cards.
    Hits(HitsArgs),
    /// Moments of the min(H, R) time model.
    TauHat(TauHatArgs),
    /// The p_s recursion and its closed forms.
    P0(P0Args),
    /// Second eigenvalue of the limit phase matrix across epsilon.
    EigScan(EigScanArgs),
    /// Optimal epsilon for the limit phase matrix.
    EigOpt(EigOptArgs),
    /// Cyclic one-card bound over time.
    CyclicBound(CyclicBoundArgs),
    /// Cyclic mixing-time bound for k cards.
    CyclicMix(CyclicMixArgs),
    /// Re-run an experiment from its metadata sidecar.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ExactTv(_) => "exact-tv",
            Command::WorstTv(_) => "worst-tv",
            Command::MixTime(_) => "mix-time",
            Command::Cutoff(_) => "cutoff",
            Command::McTv(_) => "mc-tv",
            Command::LowerBound(_) => "lower-bound",
            Command::Couple(CoupleCommand::OneCard(_)) => "couple one-card",
            Command::Couple(CoupleCommand::TwoHand(_)) => "couple two-hand",
            Command::Couple(CoupleCommand::KDeck(_)) => "couple k-deck",
            Command::Hits(_) => "hits",
            Command::TauHat(_) => "tau-hat",
            Command::P0(_) => "p0",
            Command::EigScan(_) => "eig-scan",
            Command::EigOpt(_) => "eig-opt",
            Command::CyclicBound(_) => "cyclic-bound",
            Command::CyclicMix(_) => "cyclic-mix",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DeckArgs {
    #[arg(long, value_enum, default_value_t = RuleArg::Top)]
    pub rule: RuleArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactTvArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    #[arg(long, default_value_t = 100)]
    pub t_max: u64,
    /// 1-based starting positions of the tracked cards (default 1..=k).
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<usize>>,
    /// Time index of the first step.
    #[arg(long, default_value_t = 1)]
    pub start_time: u64,
    /// Largest state space evolved exactly.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct WorstTvArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    #[arg(long, default_value_t = 100)]
    pub t_max: u64,
    /// Scan every start even when a symmetry reduction exists.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct MixTimeArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    /// TV threshold.
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct CutoffArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2.0, -1.0, 0.0, 1.0, 2.0])]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct McTvArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    #[arg(long)]
    pub t: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<usize>>,
    /// Largest frequency table kept in memory.
    #[arg(long)]
    pub table_cap: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct LowerBoundArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    #[arg(long)]
    pub t: u64,
    /// Count of fixed special cards the event must exceed.
    #[arg(long, default_value_t = 1)]
    pub threshold: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<usize>>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupleCommand {
    /// One tracked card in an arbitrary and a uniform deck.
    OneCard(OneCardArgs),
    /// Two-hand coupling for random-to-random.
    TwoHand(TwoHandArgs),
    /// Main deck against k auxiliary decks.
    KDeck(KDeckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingCommon {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Steps per trial (default 20n).
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Times for the survival table (default n, 2n, 3n).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<u64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct OneCardArgs {
    #[arg(long, value_enum, default_value_t = RuleArg::Cyclic)]
    pub rule: RuleArg,
    #[command(flatten)]
    pub common: CouplingCommon,
    /// Start of the card in the arbitrary deck.
    #[arg(long, default_value_t = 1)]
    pub sigma: usize,
    /// Start of the card in the second deck (uniform if omitted).
    #[arg(long)]
    pub pi: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TwoHandArgs {
    #[command(flatten)]
    pub common: CouplingCommon,
    #[arg(long, default_value_t = 1)]
    pub sigma: usize,
    #[arg(long)]
    pub pi: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct KDeckArgs {
    #[arg(long, value_enum, default_value_t = RuleArg::Cyclic)]
    pub rule: RuleArg,
    #[command(flatten)]
    pub common: CouplingCommon,
    #[arg(long)]
    pub k: usize,
    /// Starting positions of the special cards (default 1..=k).
    #[arg(long, value_delimiter = ',')]
    pub specials: Option<Vec<usize>>,
    /// Starting position of the followed non-special card (default k+1).
    #[arg(long)]
    pub probe: Option<usize>,
    /// Run every trial to the horizon and keep counting triggers.
    #[arg(long)]
    pub diagnostic: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct HitsArgs {
    #[command(flatten)]
    pub deck: DeckArgs,
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct TauHatArgs {
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct P0Args {
    #[arg(long, default_value_t = 0.442)]
    pub eps: f64,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EigScanArgs {
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    #[arg(long, default_value_t = 500)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EigOptArgs {
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundConstant {
    /// Constant of the one-card bound (fitted at n=60 if omitted).
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CyclicBoundArgs {
    #[arg(long)]
    pub n: usize,
    /// Defaults to 10n.
    #[arg(long)]
    pub t_max: Option<u64>,
    #[command(flatten)]
    pub constant: BoundConstant,
}

#[derive(Debug, Args, Serialize)]
pub struct CyclicMixArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub constant: BoundConstant,
}

#[derive(Debug, Args, Serialize)]
pub struct RerunArgs {
    /// Metadata sidecar of the run to repeat.
    pub meta: PathBuf,
}

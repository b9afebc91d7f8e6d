use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "regretlab", version, about = "Regret, divergences and their characterisation checks")]
pub struct Cli {
    /// Seed for every randomised command.
    #[arg(long, global = true, env = "REGRETLAB_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value functions, action and state regret.
    #[command(subcommand)]
    Regret(RegretCmd),
    /// Closed-form divergences.
    #[command(subcommand)]
    Div(DivCmd),
    /// Randomised monotonicity, sufficiency and locality checks.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Code lengths, Huffman codes and block codes.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Scoring rules.
    #[command(subcommand)]
    Score(ScoreCmd),
    /// Exergy and Gibbs states of independent spins.
    #[command(subcommand)]
    Thermo(ThermoCmd),
    /// Log-optimal portfolios.
    #[command(subcommand)]
    Folio(FolioCmd),
    /// States of block-diagonal algebras.
    #[command(subcommand)]
    State(StateCmd),
    /// Re-run the worked examples and report pass/fail.
    Reproduce {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    NegEntropy,
    Sqnorm,
    Brier,
}

/// Either a finite action set or a smooth generator.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ValueSource {
    /// JSON action set.
    #[arg(long)]
    pub actions: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub generator: Option<Generator>,
}

#[derive(Debug, Subcommand)]
pub enum RegretCmd {
    /// F(s), the optimal actions and the regret of each action.
    Eval {
        #[command(flatten)]
        source: ValueSource,
        #[arg(long)]
        state: PathBuf,
        /// Extra observable whose regret is reported.
        #[arg(long)]
        action: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Regret of acting optimally for s0 when the state is s1.
    State {
        #[command(flatten)]
        source: ValueSource,
        #[arg(long)]
        s1: PathBuf,
        #[arg(long)]
        s0: PathBuf,
    },
    /// |Σ t_i D(s_i, s) − Σ t_i D(s_i, s̄) − D(s̄, s)|.
    BregmanResidual {
        /// Named divergence; otherwise the regret of --actions or --generator.
        #[arg(long)]
        div: Option<String>,
        #[arg(long, conflicts_with = "div")]
        actions: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with_all = ["div", "actions"])]
        generator: Option<Generator>,
        #[arg(long)]
        states: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long)]
        s: PathBuf,
    },
    /// max |F(s₁) − D(s₁, s₀) − ⟨a, s₁⟩| over random s₁.
    Reconstruct {
        #[command(flatten)]
        source: ValueSource,
        /// Divergence to test; defaults to the regret of the value function.
        #[arg(long)]
        div: Option<String>,
        #[arg(long)]
        s0: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// The two-action interval example.
    Example1,
}

#[derive(Debug, Subcommand)]
pub enum DivCmd {
    /// kl, qre, is, sqeuclid, brier or log-score between two inputs.
    Compute {
        #[arg(long)]
        name: String,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Separable Bregman divergence of a scalar convex function.
    Separable {
        #[arg(long, value_enum)]
        phi: Phi,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Itakura-Saito distance of λ+t and μ+t with its t-derivative.
    Translate {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Phi {
    Square,
    XLnX,
    XLnXMinusX,
    NegLn,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub div: String,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Relative violation threshold.
    #[arg(long, default_value_t = regretlab::sufficiency::VIOLATION_REL_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampler {
    Stochastic,
    DoublyStochastic,
    Cptp,
    CptpTranspose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairKind {
    /// Split every point in two and merge back.
    Split,
    /// Measure-and-prepare pairs that swap an orthogonal remainder.
    Locality,
}

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    Monotone {
        #[command(flatten)]
        args: CheckArgs,
        #[arg(long, value_enum, default_value_t = Sampler::Stochastic)]
        sampler: Sampler,
    },
    Sufficient {
        #[command(flatten)]
        args: CheckArgs,
        #[arg(long, value_enum, default_value_t = PairKind::Split)]
        pair: PairKind,
    },
    Local {
        #[command(flatten)]
        args: CheckArgs,
    },
    /// Least-squares fit D ≈ c·KL on interior pairs.
    Fit {
        #[command(flatten)]
        args: CheckArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum CodeCmd {
    Huffman {
        #[arg(long)]
        probs: PathBuf,
        #[arg(long, default_value_t = 2)]
        beta: u32,
    },
    /// Ideal lengths −log_β p.
    Shannon {
        #[arg(long)]
        probs: PathBuf,
        #[arg(long, default_value_t = 2)]
        beta: u32,
    },
    /// H_β(P) ≤ L* ≤ H_β(P) + 1 with L* from exhaustive search.
    Bounds {
        #[arg(long)]
        probs: PathBuf,
        #[arg(long, default_value_t = 2)]
        beta: u32,
    },
    /// Block lengths ⌈Σℓ⌉ for strings of length n.
    Blockcode {
        /// Real code lengths; defaults to −log_β of --probs.
        #[arg(long, required_unless_present = "probs")]
        lengths: Option<PathBuf>,
        #[arg(long)]
        probs: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        beta: u32,
        #[arg(long)]
        n: usize,
        /// Number of sampled strings; 0 enumerates all of them.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    Kraft {
        #[arg(long)]
        lengths: PathBuf,
        #[arg(long, default_value_t = 2)]
        beta: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScoreCmd {
    /// Scores of forecast Q per outcome, and the expected payoff under P.
    Eval {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        p: Option<PathBuf>,
    },
    Regret {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    Proper {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Properness and locality of the local rule f(x, Q) = g(Q(x)).
    Local {
        #[arg(long, value_enum)]
        g: LocalG,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LocalG {
    Ln,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Boltzmann {
    /// k = 1.
    Natural,
    /// k in J/K.
    Si,
}

#[derive(Debug, Args)]
pub struct SpinArgs {
    #[arg(long)]
    pub mu: f64,
    /// JSON array of fields h_j.
    #[arg(long)]
    pub fields: PathBuf,
    #[arg(long)]
    pub beta: f64,
}

#[derive(Debug, Subcommand)]
pub enum ThermoCmd {
    Exergy {
        #[command(flatten)]
        spins: SpinArgs,
        #[arg(long)]
        beta0: f64,
        #[arg(long, value_enum, default_value_t = Boltzmann::Natural)]
        k: Boltzmann,
    },
    /// Partition function, energy, entropy and optionally the full Gibbs state.
    Gibbs {
        #[command(flatten)]
        spins: SpinArgs,
        /// Spin configuration such as "+-+" whose energy is reported.
        #[arg(long)]
        config: Option<String>,
        /// Include all 2ⁿ probabilities.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct MarketSource {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// A built-in market; only 5 exists.
    #[arg(long, value_parser = clap::value_parser!(u32).range(5..=5))]
    pub example: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum FolioCmd {
    Optimal {
        #[command(flatten)]
        market: MarketSource,
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = regretlab::portfolio::DEFAULT_TOL)]
        tol: f64,
    },
    Regret {
        #[command(flatten)]
        market: MarketSource,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// CSV of (t, G(1 − t, t)) for a two-outcome market.
    Curve {
        #[command(flatten)]
        market: MarketSource,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Doubling rate and optimality residual of a given portfolio.
    Rate {
        #[command(flatten)]
        market: MarketSource,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        p: PathBuf,
    },
    Dominates {
        #[command(flatten)]
        market: MarketSource,
        #[arg(long)]
        b1: PathBuf,
        #[arg(long)]
        b2: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Optimality intervals of each asset in a two-outcome market.
    Thresholds {
        #[command(flatten)]
        market: MarketSource,
        /// Also locate each interval by bisection on the optimality residual.
        #[arg(long)]
        bisect: bool,
    },
    Gambling {
        #[command(flatten)]
        market: MarketSource,
    },
    /// Monotonicity of the portfolio regret under random stochastic maps.
    Monotone {
        #[command(flatten)]
        market: MarketSource,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum StateCmd {
    Validate {
        #[arg(long)]
        state: PathBuf,
    },
    Spectrum {
        #[arg(long)]
        state: PathBuf,
    },
    Entropy {
        #[arg(long)]
        state: PathBuf,
    },
    Inner {
        #[arg(long)]
        observable: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
    Mix {
        #[arg(long)]
        states: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
    },
    Orthogonal {
        #[arg(long)]
        s1: PathBuf,
        #[arg(long)]
        s2: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "lss-eval",
    version,
    about = "Longest-supported-subsequence faithfulness evaluation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Keep case when tokenizing.
    #[arg(long, global = true)]
    pub no_lowercase: bool,
    /// Highest n-gram order for BLEU (1-4).
    #[arg(long, global = true, default_value_t = 4)]
    pub bleu_max_n: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Debug logging on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dataset preparation.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// LSS-BLEU of one claim/LSS pair, or a metric over JSONL pairs on stdin.
    Score(ScoreArgs),
    /// Produce an LSS for every example.
    Generate(GenerateArgs),
    /// Experiments.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Check that every LSS is a subsequence of its claim.
    Validate(DataArg),
}

#[derive(Args, Debug)]
pub struct DataArg {
    /// Dataset, one JSON record per line.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Args, Debug)]
pub struct DataOut {
    #[command(flatten)]
    pub data: DataArg,
    /// Output file; must differ from the input.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum DatasetCommand {
    /// Normalize whitespace, strip invisible characters, drop mid-sentence references.
    Clean(DataOut),
    /// Downsample examples whose LSS is the whole claim.
    Balance {
        #[command(flatten)]
        io: DataOut,
        /// `mean` (of the other ratio buckets), a count, or a fraction like `0.1`.
        #[arg(long, default_value = "mean")]
        target: String,
    },
    /// Majority-vote three annotations per record into one example.
    Adjudicate {
        #[command(flatten)]
        io: DataOut,
        /// Where records without any agreeing pair go.
        #[arg(long)]
        unresolved: Option<PathBuf>,
    },
    /// LSS/claim length-ratio histogram.
    Stats(DataArg),
    /// Drop examples whose reference plus claim exceed a token budget.
    FilterLength {
        #[command(flatten)]
        io: DataOut,
        #[arg(long, default_value_t = 512)]
        max_tokens: usize,
    },
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long, required_unless_present = "pairs")]
    pub claim: Option<String>,
    #[arg(long, required_unless_present = "pairs")]
    pub lss: Option<String>,
    /// Read {id, text_a, text_b} lines on stdin and write {id, score} lines.
    #[arg(long, conflicts_with_all = ["claim", "lss"])]
    pub pairs: bool,
    /// Metric for --pairs mode, scoring text_a against text_b.
    #[arg(long, default_value = "BLEU", requires = "pairs")]
    pub metric: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    Extractive,
    Remote,
    Replay,
    Identity,
    Empty,
}

#[derive(Args, Debug, Clone)]
pub struct GeneratorArgs {
    #[arg(long, value_enum, default_value = "extractive")]
    pub generator: GeneratorKind,
    /// Captured outputs for the replay generator.
    #[arg(long)]
    pub replay_file: Option<PathBuf>,
    /// Completion endpoint for the remote generator.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Built-in template name (`t5`, `instruct-lss`) or a file path.
    #[arg(long, default_value = "t5")]
    pub prompt_template: String,
    /// Environment variable holding the bearer token.
    #[arg(long, default_value = lss_core::generator::DEFAULT_TOKEN_ENV)]
    pub token_env: String,
    /// Replay file written from a remote batch.
    #[arg(long)]
    pub capture: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    /// Extra request field, `key=value`; the value is parsed as JSON when possible.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub io: DataOut,
    #[command(flatten)]
    pub generator: GeneratorArgs,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Score generated LSS against gold LSS, per system.
    Generation {
        #[command(flatten)]
        data: DataArg,
        /// `name=kind[:arg]`, e.g. `t5=replay:runs/t5.jsonl`; repeatable.
        #[arg(long = "system", required = true)]
        systems: Vec<String>,
        /// `train`, `validation`, `test` or `all`.
        #[arg(long, default_value = "test")]
        split: String,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate metrics with human ratings under each scoring setting.
    Correlation {
        #[command(flatten)]
        data: DataArg,
        #[command(flatten)]
        generator: GeneratorArgs,
        /// Replayed LSS* outputs for the generated LSS*-Claim column.
        #[arg(long)]
        lss_star_replay_file: Option<PathBuf>,
        /// External metric, `name=command`; repeatable.
        #[arg(long = "scorer", value_name = "NAME=COMMAND")]
        scorers: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean LSS-BLEU per summarization model.
    CompareModels {
        /// `name=path` of a corpus file; repeatable.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<String>,
        #[command(flatten)]
        generator: GeneratorArgs,
        #[arg(long, default_value_t = 512)]
        max_tokens: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

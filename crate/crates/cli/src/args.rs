use clap::{Args, Parser, Subcommand};

use cfrank::config::RunConfig;

/// Declares a flag struct whose every field is optional, together with its
/// config keys and the layer its set flags contribute.
macro_rules! flag_set {
    ($(#[$meta:meta])* $name:ident { $($field:ident : $ty:ty => $key:literal, $help:literal;)* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args)]
        pub struct $name {
            $(
                #[arg(long = $key, help = $help)]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            pub fn layer(&self) -> RunConfig {
                let mut c = RunConfig::new();
                $(
                    if let Some(v) = &self.$field {
                        c.set($key, v);
                    }
                )*
                c
            }
        }
    };
}

#[derive(Debug, Parser)]
#[command(
    name = "cfrank",
    version,
    about = "Collaborative ranking: data preparation, Graph DNA, training, evaluation, benchmarks",
    after_help = "Every option can also come from a key=value config file (--config) using the flag \
                  name as key, or from an environment variable CFRANK_<KEY> (upper case, '-' as '_'). \
                  Precedence: flags > environment > config file > defaults."
)]
pub struct Cli {
    /// key=value configuration file.
    #[arg(long, global = true, env = "CFRANK_CONFIG")]
    pub config: Option<String>,

    /// Worker threads for the solvers (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Single-threaded execution.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

pub const GLOBAL_KEYS: &[&str] = &["threads", "seed", "deterministic"];

impl Cli {
    pub fn global_layer(&self) -> RunConfig {
        let mut c = RunConfig::new();
        if let Some(t) = self.threads {
            c.set("threads", t);
        }
        if let Some(s) = self.seed {
            c.set("seed", s);
        }
        if self.deterministic {
            c.set("deterministic", true);
        }
        c
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a ratings file into a train/test dataset directory.
    Split(SplitArgs),
    /// Generate a synthetic dataset with a social graph.
    Synth(SynthArgs),
    /// Encode a graph into Graph DNA Bloom-filter rows.
    Encode(EncodeArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset's test ratings.
    Eval(EvalArgs),
    /// Time the pairwise kernels over a ratings-per-user grid.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Split(_) => "split",
            Command::Synth(_) => "synth",
            Command::Encode(_) => "encode",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
        }
    }

    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Split(_) => SplitArgs::KEYS,
            Command::Synth(_) => SynthArgs::KEYS,
            Command::Encode(_) => EncodeArgs::KEYS,
            Command::Train(_) => TrainArgs::KEYS,
            Command::Eval(_) => EvalArgs::KEYS,
            Command::Bench(_) => BenchArgs::KEYS,
        }
    }

    pub fn layer(&self) -> RunConfig {
        match self {
            Command::Split(a) => a.layer(),
            Command::Synth(a) => a.layer(),
            Command::Encode(a) => a.layer(),
            Command::Train(a) => a.layer(),
            Command::Eval(a) => a.layer(),
            Command::Bench(a) => a.layer(),
        }
    }
}

/// Every key any command accepts.
pub fn all_keys() -> impl Iterator<Item = &'static str> {
    [
        GLOBAL_KEYS,
        SplitArgs::KEYS,
        SynthArgs::KEYS,
        EncodeArgs::KEYS,
        TrainArgs::KEYS,
        EvalArgs::KEYS,
        BenchArgs::KEYS,
    ]
    .into_iter()
    .flatten()
    .copied()
}

flag_set!(SplitArgs {
    ratings: String => "ratings", "Ratings file: 'user item rating [timestamp]' lines";
    mode: String => "mode", "explicit | implicit (default explicit)";
    binarize: u8 => "binarize", "Turn explicit ratings >= this level into implicit 1's, the rest into observed 0's";
    n_train: usize => "n-train", "Ratings per user kept for training (drops users with fewer than n-train + min-test)";
    min_test: usize => "min-test", "Minimum held-out ratings per user with n-train (default 10)";
    test_frac: f64 => "test-frac", "Held-out fraction per user when n-train is not set (default 0.2)";
    out: String => "out", "Output dataset directory";
});

flag_set!(SynthArgs {
    users: usize => "users", "Users (default 10000)";
    items: usize => "items", "Items (default 2000)";
    rank: usize => "rank", "Embedding rank (default 50)";
    influence: f64 => "influence", "Neighbor influence weight w (default 0.6)";
    steps: usize => "steps", "Propagation steps T (default 3)";
    edge_prob: f64 => "edge-prob", "Friendship edge probability (default 0.001)";
    train_frac: f64 => "train-frac", "Share of cells observed for training (default 0.05)";
    test_frac: f64 => "test-frac", "Share of cells observed for testing (default 0.02)";
    out: String => "out", "Output dataset directory";
});

flag_set!(EncodeArgs {
    graph: String => "graph", "Graph edge list 'u v [w]'";
    data: String => "data", "Dataset directory whose user ids label the graph nodes";
    bits: usize => "c", "Bits per node filter";
    hashes: usize => "k", "Hash functions";
    capacity: usize => "capacity", "Size filters for this many keys (instead of c and k)";
    fp_rate: f64 => "fp-rate", "False-positive rate with capacity (default 0.1)";
    depth: usize => "depth", "Propagation depth d (default 3)";
    theta: f64 => "theta", "Cap on a filter's size estimate (default: capacity, else unlimited)";
    out: String => "out", "Output encoding file";
});

flag_set!(TrainArgs {
    algorithm: String => "algorithm", "mf | grmf | grwmf | cofactor | primal-cr | primal-crpp | sql-rank";
    data: String => "data", "Dataset directory";
    mode: String => "mode", "Override the dataset's feedback mode";
    graph: String => "graph", "Side graph over users";
    encoding: String => "encoding", "Graph DNA encoding (augments the graph, or is the Co-Factor side matrix)";
    rank: usize => "rank", "Latent rank";
    lambda: f64 => "lambda", "Ridge weight";
    mu: f64 => "mu", "Graph regularization weight";
    rho_zero: f64 => "rho-zero", "Weight of zero cells in implicit MF";
    step: f64 => "step", "Initial step size";
    decay: f64 => "decay", "Per-epoch step decay";
    epochs: usize => "epochs", "Training epochs";
    outer_iters: usize => "outer-iters", "Primal-CR alternating iterations";
    tol: f64 => "tol", "Primal-CR relative decrease tolerance";
    cg_max_iter: usize => "cg-max-iter", "Primal-CR CG iterations per Newton step";
    cg_tol: f64 => "cg-tol", "Primal-CR relative CG residual";
    u_newton_steps: usize => "u-newton-steps", "Primal-CR Newton steps per user per iteration";
    list_k: usize => "list-k", "SQL-Rank top-k truncation (default full list)";
    rho_neg: f64 => "rho-neg", "SQL-Rank sampled negatives per observed 1";
    queuing: bool => "queuing", "SQL-Rank: redraw lists every epoch (true|false)";
    out: String => "out", "Output directory for model.txt, log.tsv and config.txt";
});

flag_set!(EvalArgs {
    data: String => "data", "Dataset directory";
    model: String => "model", "Model file";
    ks: String => "ks", "Comma-separated cutoffs (default 1,5,10)";
    relevance: u8 => "relevance", "Explicit ratings >= this are relevant for precision (default 4)";
    halflife: f64 => "halflife", "Half-life utility decay (default 5)";
    baseline_model: String => "baseline-model", "Model trained without a graph (enables RGG)";
    graph_model: String => "graph-model", "Model trained with the raw graph (enables RGG)";
    out: String => "out", "Output report file (default: stdout)";
});

flag_set!(BenchArgs {
    users: usize => "users", "Users (default 2000)";
    rank: usize => "rank", "Rank (default 32)";
    grid: String => "grid", "Comma-separated ratings per user (default 50,100,200,400)";
    levels: u8 => "levels", "Rating levels (default 5)";
    reps: usize => "reps", "Repetitions per cell (default 3)";
    hessvecs: usize => "hessvecs", "Hessian-vector products per epoch (default 5)";
    kernels: String => "kernels", "Comma-separated kernels: crpp, cr, naive (default crpp,naive)";
    out: String => "out", "Output timing table";
});

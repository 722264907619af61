use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cobert::run::{self, RunConfig};
use cobert::Error;

/// Persona-aware response selection: corpus building, training, evaluation and analysis.
#[derive(Parser, Debug)]
#[command(name = "cobert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a dataset from a thread file.
    Corpus(Common),
    /// Generate a synthetic persona-coupled dataset.
    Synth(Common),
    /// Train a model.
    Train(Common),
    /// Evaluate a checkpoint on the test split.
    Eval(Common),
    /// Train and evaluate one model per ablation configuration.
    Ablate(Common),
    /// Style-similarity analysis and persona-cap sweep.
    Analyze(Common),
    /// Rank a response pool for one context and persona.
    Respond(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Base seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Checkpoint file.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Persona sentence cap.
    #[arg(long)]
    np: Option<usize>,
    /// Context utterance cap.
    #[arg(long)]
    nx: Option<usize>,
    /// Negatives per positive during training.
    #[arg(long)]
    neg: Option<usize>,
    /// Candidate set size for evaluation.
    #[arg(long)]
    candidates: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Thread file (corpus).
    #[arg(long)]
    threads: Option<PathBuf>,
    /// Comma-separated ablation presets (ablate).
    #[arg(long)]
    configs: Option<String>,
    /// Ablation preset for training.
    #[arg(long)]
    ablation: Option<String>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Context file (respond).
    #[arg(long)]
    context: Option<PathBuf>,
    /// Persona file (respond).
    #[arg(long)]
    persona: Option<PathBuf>,
    /// Response pool file (respond).
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Number of ranked responses to print (respond).
    #[arg(long)]
    top_k: Option<usize>,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::new(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Usage(e.to_string()))?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let flags: [(&str, Option<String>); 17] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("jobs", self.jobs.map(|v| v.to_string())),
            ("data", path(&self.data)),
            ("checkpoint", path(&self.checkpoint)),
            ("np", self.np.map(|v| v.to_string())),
            ("nx", self.nx.map(|v| v.to_string())),
            ("neg", self.neg.map(|v| v.to_string())),
            ("candidates", self.candidates.map(|v| v.to_string())),
            ("out", path(&self.out)),
            ("threads", path(&self.threads)),
            ("configs", self.configs.clone()),
            ("ablation", self.ablation.clone()),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("context", path(&self.context)),
            ("persona", path(&self.persona)),
            ("pool", path(&self.pool)),
            ("top_k", self.top_k.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, command): (&Common, fn(&RunConfig, run::Log<'_>) -> cobert::Result<String>) = match &cli.command {
        Command::Corpus(c) => (c, run::corpus),
        Command::Synth(c) => (c, run::synth),
        Command::Train(c) => (c, run::train),
        Command::Eval(c) => (c, run::eval),
        Command::Ablate(c) => (c, run::ablate),
        Command::Analyze(c) => (c, run::analyze),
        Command::Respond(c) => (c, run::respond),
    };
    let result = common.run_config().and_then(|cfg| {
        if let Some(jobs) = cfg.raw("jobs") {
            let jobs: usize = jobs.parse().map_err(|_| Error::Usage(format!("--jobs expects a count, got {jobs:?}")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        eprintln!("fingerprint={}", cfg.fingerprint());
        command(&cfg, &mut |line| eprintln!("{line}"))
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Error::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

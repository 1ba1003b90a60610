use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use argconcept::config::{CorpusFormat, PipelineConfig, SolverKind};
use argconcept::pipeline::{self, lexicon_file, QUALITY_FILE, RECORDS_FILE};
use argconcept::solver::oracle_check;
use argconcept::taxonomy::CoverageMode;
use argconcept::weighting::{MarginalScope, WeightMode};
use argconcept::{Error, Ratio};

#[derive(Parser)]
#[command(name = "argconcept", version, about = "Conceptualize verb arguments over an isA taxonomy")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    taxonomy: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    coverage: Option<CoverageMode>,
    #[arg(long, global = true, value_enum)]
    format: Option<CorpusFormat>,
    /// Overlap threshold, e.g. 0.2 or 1/5.
    #[arg(long, global = true)]
    tau: Option<Ratio>,
    /// Comma-separated concept-set sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, global = true, value_enum)]
    mode: Option<WeightMode>,
    #[arg(long, global = true, value_enum)]
    marginals: Option<MarginalScope>,
    #[arg(long, global = true)]
    min_count: Option<u64>,
    #[arg(long, global = true)]
    max_window: Option<usize>,
    #[arg(long, global = true)]
    candidate_cap: Option<usize>,
    #[arg(long, global = true)]
    node_budget: Option<u64>,
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverKind>,
    /// Retry with smaller k when no k-clique exists.
    #[arg(long, global = true)]
    relax_k: bool,
    /// `verb<TAB>k` file.
    #[arg(long, global = true)]
    k_overrides: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    swap_fraction: Option<f64>,
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus files or directories to argument records.
    Extract { corpus: Vec<PathBuf> },
    /// Argument records to argument quality.
    Weigh {
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Argument quality to one concept lexicon per k.
    Conceptualize {
        #[arg(long)]
        quality: Option<PathBuf>,
    },
    /// Judge (verb, role, term) pairs against a lexicon.
    Identify {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Swap-based identification accuracy for one or more lexicons.
    Eval {
        #[arg(long, required = true)]
        lexicon: Vec<PathBuf>,
        #[arg(long)]
        positives: PathBuf,
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Compare branch and bound against brute force on random graphs.
    OracleCheck {
        #[arg(long, default_value_t = 10_000)]
        instances: usize,
        #[arg(long, default_value_t = 15)]
        max_n: usize,
    },
    /// extract, weigh and conceptualize in one go.
    Run { corpus: Vec<PathBuf> },
}

impl Overrides {
    fn apply(self, c: &mut PipelineConfig) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        set(&mut c.taxonomy_path, self.taxonomy);
        set(&mut c.coverage_mode, self.coverage);
        set(&mut c.format, self.format);
        set(&mut c.tau, self.tau);
        set(&mut c.k, self.k);
        set(&mut c.mode, self.mode);
        set(&mut c.marginals, self.marginals);
        set(&mut c.min_count, self.min_count);
        set(&mut c.extraction.max_window, self.max_window);
        set(&mut c.seed, self.seed);
        set(&mut c.swap_fraction, self.swap_fraction);
        set(&mut c.output_dir, self.out);
        set(&mut c.solver, self.solver);
        if self.candidate_cap.is_some() {
            c.candidate_cap = self.candidate_cap;
        }
        if self.node_budget.is_some() {
            c.node_budget = self.node_budget;
        }
        if self.k_overrides.is_some() {
            c.k_overrides = self.k_overrides;
        }
        c.relax_k |= self.relax_k;
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serializes"));
}

fn run(cli: Cli) -> argconcept::Result<bool> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::from_toml_file(p)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut config);
    config.validate()?;
    let out = config.output_dir.clone();
    let threads = cli.threads;
    let config = &config;
    pipeline::with_threads(threads, || match cli.command {
        Command::Extract { corpus } => {
            let mut config = config.clone();
            if !corpus.is_empty() {
                config.corpus_paths = corpus;
            }
            print_json(&pipeline::run_extract(&config)?);
            Ok(true)
        }
        Command::Weigh { records } => {
            print_json(&pipeline::run_weigh(config, &records.unwrap_or_else(|| out.join(RECORDS_FILE)))?);
            Ok(true)
        }
        Command::Conceptualize { quality } => {
            print_json(&pipeline::run_conceptualize(config, &quality.unwrap_or_else(|| out.join(QUALITY_FILE)))?);
            Ok(true)
        }
        Command::Identify { lexicon, pairs } => {
            println!("{}", pipeline::run_identify(config, &lexicon, &pairs)?.display());
            Ok(true)
        }
        Command::Eval { lexicon, positives, overrides } => {
            let report = pipeline::run_eval(config, &lexicon, &positives, overrides.as_deref())?;
            for r in &report.results {
                println!(
                    "{}\tmode={}\tk={}\taccuracy={:.4}\t({}/{})",
                    r.lexicon.display(),
                    r.mode,
                    r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
                    r.report.accuracy(),
                    r.report.overall.correct,
                    r.report.overall.total
                );
            }
            Ok(true)
        }
        Command::OracleCheck { instances, max_n } => {
            let report = oracle_check(config.seed, instances, max_n)?;
            println!(
                "{} instances ({} solved, {} without a k-clique), {} mismatches, {:.2?}",
                report.instances,
                report.solved,
                report.no_solution,
                report.mismatches.len(),
                report.elapsed
            );
            for m in &report.mismatches {
                println!("mismatch: {}", serde_json::to_string(m).expect("mismatch serializes"));
            }
            Ok(report.passed())
        }
        Command::Run { corpus } => {
            let mut config = config.clone();
            if !corpus.is_empty() {
                config.corpus_paths = corpus;
            }
            let summary = pipeline::run_all(&config)?;
            print_json(&summary);
            for k in &config.k {
                println!("{}", out.join(lexicon_file(*k)).display());
            }
            Ok(true)
        }
    })?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

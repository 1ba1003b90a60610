//! End-to-end stages over files. Each stage reads its inputs, writes one or
//! more outputs atomically under `output_dir`, and returns a summary.
//!
//! Data problems (unreadable corpus files, malformed sentences) are counted and
//! logged; configuration problems are errors.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{header_value, require_file, write_header, CorpusFormat, PipelineConfig};
use crate::error::{Error, Result};
use crate::evaluation::{apply_overrides, evaluate, generate_swaps, identify, ERRORS_CSV_HEADER, parse_overrides, parse_pairs, write_errors_csv, write_pairs, AccuracyReport, EvalPair};
use crate::extraction::{parse_arcs, parse_conllu, parse_records, write_records, ArgumentRecord, ExtractStats, Extraction};
use crate::io::{expand_inputs, read_to_string, write_atomic};
use crate::lexicon::{conceptualize, ConceptLexicon, SolveParams};
use crate::taxonomy::{load_taxonomy, Taxonomy};
use crate::weighting::QualityTable;

pub const RECORDS_FILE: &str = "records.tsv";
pub const QUALITY_FILE: &str = "quality.tsv";

pub fn lexicon_file(k: usize) -> String {
    format!("lexicon_k{k}.jsonl")
}

pub fn load_config_taxonomy(config: &PipelineConfig) -> Result<Taxonomy> {
    config.require_taxonomy()?;
    let taxonomy = load_taxonomy(&config.taxonomy_path, config.load_options())?;
    let report = taxonomy.report();
    if !report.cycles.is_empty() {
        warn!("taxonomy has {} isA cycle(s)", report.cycles.len());
    }
    Ok(taxonomy)
}

fn taxonomy_line(taxonomy: &Taxonomy) -> (&'static str, String) {
    ("taxonomy-hash", taxonomy.fingerprint())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractSummary {
    pub files: usize,
    pub corrupt_files: Vec<PathBuf>,
    pub stats: ExtractStats,
    pub records: usize,
    pub output: PathBuf,
}

fn extract_file(path: &Path, taxonomy: &Taxonomy, config: &PipelineConfig) -> std::result::Result<Extraction, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    let text = String::from_utf8(bytes).map_err(|_| "not valid UTF-8".to_string())?;
    let mut ex = Extraction::new();
    match config.format {
        CorpusFormat::Conllu => {
            let doc = parse_conllu(&text, config.extraction.pos_column);
            if doc.sentences.is_empty() && !doc.malformed.is_empty() {
                return Err(format!("no readable sentences ({} malformed)", doc.malformed.len()));
            }
            for (line, msg) in &doc.malformed {
                warn!("{}:{line}: {msg}", path.display());
            }
            for s in &doc.sentences {
                ex.add_sentence(s, taxonomy, &config.extraction);
            }
            ex.stats.malformed += doc.malformed.len() as u64;
        }
        CorpusFormat::Arcs => {
            let (arcs, bad) = parse_arcs(&text);
            if arcs.is_empty() && !bad.is_empty() {
                return Err(format!("no readable arcs ({} malformed)", bad.len()));
            }
            for (line, msg) in &bad {
                warn!("{}:{line}: {msg}", path.display());
            }
            for a in &arcs {
                ex.add_arc(a, &config.extraction);
            }
            ex.stats.malformed += bad.len() as u64;
        }
    }
    Ok(ex)
}

/// Corpus files to argument records (`records.tsv`).
pub fn run_extract(config: &PipelineConfig) -> Result<ExtractSummary> {
    config.validate()?;
    let taxonomy = load_config_taxonomy(config)?;
    for p in &config.corpus_paths {
        require_file(p, "corpus")?;
    }
    let files = expand_inputs(&config.corpus_paths)?;
    if files.is_empty() {
        warn!("no corpus files found");
    }
    let results: Vec<std::result::Result<Extraction, String>> =
        files.par_iter().map(|f| extract_file(f, &taxonomy, config)).collect();
    let mut total = Extraction::new();
    let mut corrupt = Vec::new();
    for (file, r) in files.iter().zip(results) {
        match r {
            Ok(ex) => total = total.merge(ex),
            Err(msg) => {
                warn!("skipping {}: {msg}", file.display());
                corrupt.push(file.clone());
            }
        }
    }
    if !files.is_empty() && corrupt.len() == files.len() {
        return Err(Error::Config(format!("all {} corpus file(s) were unreadable", files.len())));
    }
    if !corrupt.is_empty() {
        warn!("{} of {} corpus file(s) skipped", corrupt.len(), files.len());
    }
    let records = total.records();
    let output = config.output_dir.join(RECORDS_FILE);
    write_atomic(&output, |out| {
        write_header(out, "records", config, &[taxonomy_line(&taxonomy)])?;
        write_records(out, &records)
    })?;
    info!("{} records from {} sentences", records.len(), total.stats.sentences);
    Ok(ExtractSummary {
        files: files.len(),
        corrupt_files: corrupt,
        stats: total.stats,
        records: records.len(),
        output,
    })
}

/// Drop records seen fewer than `min_count` times.
pub fn filter_min_count(records: Vec<ArgumentRecord>, min_count: u64) -> Vec<ArgumentRecord> {
    records.into_iter().filter(|r| r.count >= min_count).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeighSummary {
    pub records_in: usize,
    pub records_kept: usize,
    pub entries: usize,
    pub output: PathBuf,
}

/// Argument records to the quality table (`quality.tsv`).
pub fn run_weigh(config: &PipelineConfig, records_path: &Path) -> Result<WeighSummary> {
    config.validate()?;
    let text = read_to_string(records_path)?;
    let records = parse_records(&text, records_path)?;
    let records_in = records.len();
    let records = filter_min_count(records, config.min_count);
    let table = QualityTable::build(&records, config.marginals);
    let output = config.output_dir.join(QUALITY_FILE);
    let mut extra = Vec::new();
    if let Some(h) = header_value(&text, "taxonomy-hash") {
        extra.push(("taxonomy-hash", h.to_owned()));
    }
    write_atomic(&output, |out| {
        write_header(out, "quality", config, &extra)?;
        table.write_tsv(out)
    })?;
    Ok(WeighSummary {
        records_in,
        records_kept: records.len(),
        entries: table.len(),
        output,
    })
}

pub fn solve_params(config: &PipelineConfig, k: usize) -> Result<SolveParams> {
    Ok(SolveParams {
        k,
        tau: config.tau,
        mode: config.mode,
        candidate_cap: config.candidate_cap,
        node_budget: config.node_budget,
        relax_k: config.relax_k,
        solver: config.solver,
        k_overrides: config.load_k_overrides()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptualizeSummary {
    pub k: usize,
    pub entries: usize,
    pub no_solution: usize,
    pub output: PathBuf,
}

/// Quality table to one lexicon per configured k (`lexicon_k{k}.jsonl`).
pub fn run_conceptualize(config: &PipelineConfig, quality_path: &Path) -> Result<Vec<ConceptualizeSummary>> {
    config.validate()?;
    let taxonomy = load_config_taxonomy(config)?;
    let text = read_to_string(quality_path)?;
    if let Some(h) = header_value(&text, "taxonomy-hash") {
        if h != taxonomy.fingerprint() {
            warn!("{} was extracted with a different taxonomy", quality_path.display());
        }
    }
    let table = QualityTable::parse_tsv(&text, quality_path)?;
    let mut summaries = Vec::new();
    for &k in &config.k {
        let lexicon = conceptualize(&taxonomy, &table, &solve_params(config, k)?)?;
        let output = config.output_dir.join(lexicon_file(k));
        write_lexicon(&output, "lexicon", config, &lexicon)?;
        let no_solution = lexicon.entries().filter(|e| e.concepts.is_empty()).count();
        if no_solution > 0 {
            warn!("k={k}: {no_solution} (verb, role) pair(s) without a solution");
        }
        summaries.push(ConceptualizeSummary {
            k,
            entries: lexicon.len(),
            no_solution,
            output,
        });
    }
    Ok(summaries)
}

pub fn write_lexicon(path: &Path, kind: &str, config: &PipelineConfig, lexicon: &ConceptLexicon) -> Result<()> {
    write_atomic(path, |out| {
        write_header(out, kind, config, &[("taxonomy-hash", lexicon.taxonomy_hash.clone())])?;
        lexicon.write_entries(out)
    })
}

/// Load a lexicon and refuse it if it was built from another taxonomy.
pub fn load_lexicon(path: &Path, taxonomy: &Taxonomy) -> Result<ConceptLexicon> {
    let lexicon = ConceptLexicon::parse(&read_to_string(path)?, path)?;
    let loaded = taxonomy.fingerprint();
    if lexicon.taxonomy_hash != loaded {
        return Err(Error::TaxonomyMismatch {
            lexicon: lexicon.taxonomy_hash,
            loaded,
        });
    }
    Ok(lexicon)
}

/// Judge each pair as given and write `predictions.tsv`:
/// `verb role term predicted matched reason`.
pub fn run_identify(config: &PipelineConfig, lexicon_path: &Path, pairs_path: &Path) -> Result<PathBuf> {
    let taxonomy = load_config_taxonomy(config)?;
    let lexicon = load_lexicon(lexicon_path, &taxonomy)?;
    let pairs = parse_pairs(&read_to_string(pairs_path)?, pairs_path)?;
    let predictions: Vec<_> = pairs.par_iter().map(|p| identify(&lexicon, &taxonomy, p)).collect();
    let output = config.output_dir.join("predictions.tsv");
    write_atomic(&output, |out| {
        write_header(out, "predictions", config, &[taxonomy_line(&taxonomy)])?;
        for (p, pred) in pairs.iter().zip(&predictions) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                p.verb,
                p.role,
                p.term,
                pred.label,
                pred.matched.as_deref().unwrap_or("-"),
                pred.reason
            )?;
        }
        Ok(())
    })?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconScore {
    /// File name only, so reports do not depend on where outputs live.
    pub lexicon: PathBuf,
    pub mode: String,
    pub k: Option<usize>,
    pub report: AccuracyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub taxonomy_hash: String,
    pub pairs: usize,
    pub negatives: usize,
    pub overridden: usize,
    pub results: Vec<LexiconScore>,
}

/// Build the labelled set from positives (swaps plus optional overrides).
pub fn labelled_pairs(config: &PipelineConfig, positives_path: &Path, overrides_path: Option<&Path>) -> Result<(Vec<EvalPair>, usize)> {
    let positives = parse_pairs(&read_to_string(positives_path)?, positives_path)?;
    let mut pairs = generate_swaps(&positives, config.seed, config.swap_fraction)?;
    let overridden = match overrides_path {
        Some(p) => apply_overrides(&mut pairs, &parse_overrides(&read_to_string(p)?, p)?),
        None => 0,
    };
    Ok((pairs, overridden))
}

/// The identification protocol: swap, judge against each lexicon, score.
/// Writes `eval_pairs.tsv`, `eval_report.json` and `eval_errors.csv`.
pub fn run_eval(config: &PipelineConfig, lexicon_paths: &[PathBuf], positives_path: &Path, overrides_path: Option<&Path>) -> Result<EvalReport> {
    config.validate()?;
    let taxonomy = load_config_taxonomy(config)?;
    let lexicons = lexicon_paths
        .iter()
        .map(|p| load_lexicon(p, &taxonomy))
        .collect::<Result<Vec<_>>>()?;
    let (pairs, overridden) = labelled_pairs(config, positives_path, overrides_path)?;

    let mut results = Vec::new();
    for (path, lexicon) in lexicon_paths.iter().zip(&lexicons) {
        let (_, report) = evaluate(lexicon, &taxonomy, &pairs)?;
        let first = lexicon.entries().next();
        results.push(LexiconScore {
            lexicon: path.file_name().map(PathBuf::from).unwrap_or_else(|| path.clone()),
            mode: first.map(|e| e.mode.to_string()).unwrap_or_default(),
            k: first.map(|e| e.k),
            report,
        });
    }
    let report = EvalReport {
        config_hash: config.hash(),
        taxonomy_hash: taxonomy.fingerprint(),
        pairs: pairs.len(),
        negatives: pairs.iter().filter(|p| p.label == crate::evaluation::Label::Negative).count(),
        overridden,
        results,
    };

    let dir = &config.output_dir;
    write_atomic(&dir.join("eval_pairs.tsv"), |out| {
        write_header(out, "eval-pairs", config, &[taxonomy_line(&taxonomy)])?;
        write_pairs(out, &pairs)
    })?;
    write_atomic(&dir.join("eval_report.json"), |out| {
        serde_json::to_writer_pretty(&mut *out, &report)?;
        out.write_all(b"\n")
    })?;
    write_atomic(&dir.join("eval_errors.csv"), |out| {
        writeln!(out, "# config-hash: {}", report.config_hash)?;
        writeln!(out, "{ERRORS_CSV_HEADER}")?;
        for r in &report.results {
            write_errors_csv(out, &r.mode, r.k, &r.report.errors)?;
        }
        Ok(())
    })?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub extract: ExtractSummary,
    pub weigh: WeighSummary,
    pub conceptualize: Vec<ConceptualizeSummary>,
}

/// extract, weigh and conceptualize in sequence.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary> {
    let extract = run_extract(config)?;
    let weigh = run_weigh(config, &extract.output)?;
    let conceptualize = run_conceptualize(config, &weigh.output)?;
    Ok(RunSummary {
        extract,
        weigh,
        conceptualize,
    })
}

/// Run `f` on a dedicated pool of `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

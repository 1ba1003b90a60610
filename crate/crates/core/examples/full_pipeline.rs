//! Run extract, weigh and conceptualize over the toy fixtures into a
//! temporary directory and print the resulting lexicon.

use std::path::Path;

use argconcept::config::PipelineConfig;
use argconcept::pipeline::{lexicon_file, run_all};

fn main() -> argconcept::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = tempfile::tempdir().expect("temp dir");
    let config = PipelineConfig {
        taxonomy_path: root.join("toy_taxonomy.tsv"),
        corpus_paths: vec![root.join("toy_corpus.conllu")],
        k: vec![2],
        output_dir: out.path().to_path_buf(),
        ..Default::default()
    };
    let summary = run_all(&config)?;
    println!("{} sentences -> {} records -> {} weighted arguments", summary.extract.stats.sentences, summary.extract.records, summary.weigh.entries);
    let lexicon = std::fs::read_to_string(out.path().join(lexicon_file(2))).expect("lexicon written");
    for line in lexicon.lines().filter(|l| !l.starts_with('#')) {
        let e: serde_json::Value = serde_json::from_str(line).expect("json line");
        let concepts: Vec<&str> = e["concepts"].as_array().unwrap().iter().map(|c| c["concept"].as_str().unwrap()).collect();
        println!("{:>6} {:<7} {}", e["verb"].as_str().unwrap(), e["role"].as_str().unwrap(), concepts.join(", "));
    }
    Ok(())
}

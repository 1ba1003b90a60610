use std::fs;
use std::path::{Path, PathBuf};

use argconcept::config::{header_value, PipelineConfig};
use argconcept::pipeline::{run_conceptualize, run_eval, run_extract, run_identify, run_weigh, QUALITY_FILE};
use argconcept::Error;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        taxonomy_path: fixture("toy_taxonomy.tsv"),
        corpus_paths: vec![fixture("toy_corpus.conllu")],
        k: vec![2],
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

#[test]
fn extract_matches_golden_records() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_extract(&config(dir.path())).unwrap();
    assert_eq!(summary.files, 1);
    assert!(summary.corrupt_files.is_empty());
    assert_eq!(data_lines(&summary.output), data_lines(&fixture("golden/toy_records.tsv")));
    let text = fs::read_to_string(&summary.output).unwrap();
    assert_eq!(header_value(&text, "config-hash"), Some(config(dir.path()).hash().as_str()));
}

#[test]
fn empty_corpus_dir_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.corpus_paths = vec![corpus.path().to_path_buf()];
    let summary = run_extract(&c).unwrap();
    assert_eq!((summary.files, summary.records), (0, 0));
    assert!(data_lines(&summary.output).is_empty());
}

#[test]
fn corrupt_files_are_counted_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = tempfile::tempdir().unwrap();
    fs::copy(fixture("toy_corpus.conllu"), corpus.path().join("a.conllu")).unwrap();
    fs::write(corpus.path().join("b.conllu"), [0xff, 0xfe, 0x00, 0x41]).unwrap();
    fs::write(corpus.path().join("c.conllu"), "1\tbroken\n\n").unwrap();
    let mut c = config(dir.path());
    c.corpus_paths = vec![corpus.path().to_path_buf()];
    let summary = run_extract(&c).unwrap();
    assert_eq!(summary.files, 3);
    assert_eq!(summary.corrupt_files.len(), 2);
    assert_eq!(data_lines(&summary.output), data_lines(&fixture("golden/toy_records.tsv")));

    c.corpus_paths = vec![corpus.path().join("b.conllu")];
    assert!(matches!(run_extract(&c), Err(Error::Config(_))));
}

#[test]
fn weigh_matches_golden_and_handles_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path());
    let summary = run_weigh(&c, &fixture("golden/toy_records.tsv")).unwrap();
    assert_eq!(data_lines(&summary.output), data_lines(&fixture("golden/toy_quality.tsv")));

    let empty = dir.path().join("empty.tsv");
    fs::write(&empty, "# nothing\n").unwrap();
    assert_eq!(run_weigh(&c, &empty).unwrap().entries, 0);

    let one = dir.path().join("one.tsv");
    let eat: Vec<String> = data_lines(&fixture("golden/toy_records.tsv")).into_iter().filter(|l| l.starts_with("eat\t")).collect();
    fs::write(&one, eat.join("\n") + "\n").unwrap();
    run_weigh(&c, &one).unwrap();
    assert!(data_lines(&dir.path().join(QUALITY_FILE)).iter().all(|l| l.starts_with("eat\t")));
}

#[test]
fn min_count_filter() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.min_count = 1;
    let all = run_weigh(&c, &fixture("golden/toy_records.tsv")).unwrap();
    c.min_count = 5;
    let some = run_weigh(&c, &fixture("golden/toy_records.tsv")).unwrap();
    assert_eq!(all.records_in, some.records_in);
    assert!(some.records_kept < all.records_kept);
}

#[test]
fn conceptualize_records_no_solution_for_large_k() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.k = vec![2, 40];
    let summaries = run_conceptualize(&c, &fixture("golden/toy_quality.tsv")).unwrap();
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[1].no_solution, summaries[1].entries);
    assert!(summaries[0].no_solution < summaries[0].entries);
}

#[test]
fn eval_refuses_a_lexicon_from_another_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path());
    let other = dir.path().join("other.tsv");
    fs::write(&other, "corn\tfood\n").unwrap();
    let mut wrong = c.clone();
    wrong.taxonomy_path = other;
    let lexicon = fixture("golden/toy_lexicon_k2.jsonl");
    let err = run_eval(&wrong, std::slice::from_ref(&lexicon), &fixture("toy_eval_positives.tsv"), None).unwrap_err();
    assert!(matches!(err, Error::TaxonomyMismatch { .. }));

    let report = run_eval(&c, &[lexicon], &fixture("toy_eval_positives.tsv"), None).unwrap();
    assert_eq!(report.pairs, 100);
    assert_eq!(report.negatives, 50);
    for name in ["eval_pairs.tsv", "eval_report.json", "eval_errors.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn overrides_relabel_swapped_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.seed = 1;
    let overrides = dir.path().join("overrides.tsv");
    fs::write(&overrides, "wear\tobject\tpiano\tpositive\n").unwrap();
    let lexicon = fixture("golden/toy_lexicon_k2.jsonl");
    let report = run_eval(&c, &[lexicon], &fixture("toy_eval_positives.tsv"), Some(&overrides)).unwrap();
    assert_eq!(report.overridden, 1);
    assert_eq!(report.negatives, 49);
}

#[test]
fn identify_all_positive_gold_with_perfect_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path());
    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, "eat\tobject\tcorn\tpositive\ta\nwear\tobject\that\tpositive\tb\nplay\tobject\tstar wars\tpositive\tc\n").unwrap();
    let out = run_identify(&c, &fixture("golden/toy_lexicon_k2.jsonl"), &pairs).unwrap();
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.split('\t').nth(3) == Some("positive")), "{lines:?}");
    assert_eq!(lines[0].split('\t').nth(4), Some("food"));
}

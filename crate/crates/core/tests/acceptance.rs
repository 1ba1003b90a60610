//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use argconcept::config::{PipelineConfig, SolverKind, DEFAULT_K, DEFAULT_TAU};
use argconcept::evaluation::{evaluate, generate_swaps, identify, parse_pairs, Label};
use argconcept::extraction::{ArgumentRecord, PatternKey, PatternKind};
use argconcept::lexicon::{conceptualize, ConceptLexicon, LexiconEntry, SolveParams};
use argconcept::pipeline::{self, lexicon_file, with_threads};
use argconcept::solver::{
    build_concept_graph, oracle_check, random_graph, solve_bb, solve_bruteforce, unpruned_node_count, ConceptGraph, ConceptVertex,
};
use argconcept::taxonomy::{load_taxonomy, CoverageMode, LoadOptions, TermId};
use argconcept::weighting::{concept_weight, entropy_of_counts, pattern_entropy, MarginalScope, QualityTable, WeightMode};
use argconcept::{Ratio, Role, Taxonomy};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn toy_config(out: &Path) -> PipelineConfig {
    // the config stores paths relative to the package root
    std::env::set_current_dir(env!("CARGO_MANIFEST_DIR")).unwrap();
    let mut c = PipelineConfig::from_toml_file(&fixture("toy.toml")).unwrap();
    c.output_dir = out.to_path_buf();
    c
}

fn toy_taxonomy() -> Taxonomy {
    load_taxonomy(fixture("toy_taxonomy.tsv"), LoadOptions::default()).unwrap()
}

fn golden_quality() -> QualityTable {
    let path = fixture("golden/toy_quality.tsv");
    QualityTable::parse_tsv(&fs::read_to_string(&path).unwrap(), &path).unwrap()
}

fn golden_lexicon() -> ConceptLexicon {
    let path = fixture("golden/toy_lexicon_k2.jsonl");
    ConceptLexicon::parse(&fs::read_to_string(&path).unwrap(), &path).unwrap()
}

/// Exhaustive search written independently of the library: best total weight
/// over k-subsets that are pairwise adjacent.
fn enumerate_best(weights: &[f64], adjacent: &dyn Fn(usize, usize) -> bool, k: usize) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for set in (0..weights.len()).combinations(k) {
        if !set.iter().tuple_combinations().all(|(&a, &b)| adjacent(a, b)) {
            continue;
        }
        let score: f64 = set.iter().map(|&i| weights[i]).sum();
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, set));
        }
    }
    best
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let report = oracle_check(1, 10_000, 15).map_err(|e| e.to_string())?;
    ensure(report.passed(), format!("{} mismatches, first: {:?}", report.mismatches.len(), report.mismatches.first()))?;
    ensure(report.solved > 1000, format!("only {} solved instances", report.solved))?;

    // second opinion from the local enumerator on a separate stream
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        use rand::Rng;
        let n = rng.gen_range(1..=12);
        let density = rng.gen_range(1..=10) as f64 / 10.0;
        let k = rng.gen_range(1..=n);
        let g = random_graph(&mut rng, n, density);
        let got = solve_bb(&g, k, None).map_err(|e| e.to_string())?;
        let want = enumerate_best(&g.weights(), &|a, b| g.adjacent(a, b), k);
        ensure(got.score() == want.as_ref().map(|w| w.0), format!("n={n} k={k}: {:?} vs {want:?}", got.score()))?;
        ensure(got.indices().map(<[_]>::to_vec) == want.map(|w| w.1), format!("n={n} k={k}: chosen set differs"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "10000 instances, {} solved, {} without a k-clique, 0 mismatches, {elapsed:.2?}",
        report.solved, report.no_solution
    ))
}

fn criterion_2() -> Check {
    let vertices = [5.0, 4.0, 3.0, 2.0]
        .iter()
        .enumerate()
        .map(|(i, &w)| ConceptVertex { concept: TermId(i as u32), weight: w, coverage: 1 })
        .collect();
    let missing = |a: usize, b: usize| matches!((a.min(b), a.max(b)), (0, 3) | (1, 3));
    let g = ConceptGraph::new("v", Role::Object, DEFAULT_TAU, vertices, |a, b| !missing(a, b));
    let bb = solve_bb(&g, 3, None).map_err(|e| e.to_string())?;
    let brute = solve_bruteforce(&g, 3).map_err(|e| e.to_string())?;
    ensure(bb.indices() == Some(&[0, 1, 2][..]), format!("bb chose {:?}", bb.indices()))?;
    ensure(brute.indices() == Some(&[0, 1, 2][..]), format!("brute force chose {:?}", brute.indices()))?;
    ensure(bb.score() == Some(12.0) && brute.score() == Some(12.0), "score is not 12")?;
    let feasible: Vec<Vec<usize>> = (0..4)
        .combinations(3)
        .filter(|s| s.iter().tuple_combinations().all(|(&a, &b)| !missing(a, b)))
        .collect();
    ensure(feasible == vec![vec![0, 1, 2]], format!("feasible 3-cliques: {feasible:?}"))?;
    Ok("k=3 optimum {c0,c1,c2}, score 12, unique, both solvers".into())
}

fn criterion_3() -> Check {
    // entropy, against the natural-log form
    let ln_entropy = |counts: &[u64]| {
        let n: u64 = counts.iter().sum();
        -counts.iter().map(|&c| c as f64 / n as f64).map(|p| p * p.ln()).sum::<f64>() / std::f64::consts::LN_2
    };
    ensure(entropy_of_counts([1, 1, 1, 1]) == 2.0, "uniform-4 entropy is not exactly 2")?;
    let h = entropy_of_counts([3, 1]);
    ensure((h - 0.8113).abs() < 1e-4 && (h - ln_entropy(&[3, 1])).abs() < 1e-6, format!("{{3,1}} entropy {h}"))?;
    let mut rec = ArgumentRecord { verb: "v".into(), role: Role::Object, arg: "a".into(), count: 4, patterns: BTreeMap::new() };
    for (i, c) in [3u64, 1].into_iter().enumerate() {
        rec.patterns.insert(PatternKey::new(PatternKind::Child, "NN", "dobj", &format!("T{i}"), "det"), c);
    }
    ensure((pattern_entropy(&rec) - h).abs() == 0.0, "record entropy differs")?;

    // overlap {a,b,c} x {b,c,d,e}
    let t = Taxonomy::from_pairs(
        [("a", "c1"), ("b", "c1"), ("c", "c1"), ("b", "c2"), ("c", "c2"), ("d", "c2"), ("e", "c2")],
        CoverageMode::Direct,
    )
    .map_err(|e| e.to_string())?;
    let ov = t.overlap(t.id("c1").unwrap(), t.id("c2").unwrap()).map_err(|e| e.to_string())?;
    let e1: BTreeSet<&str> = ["a", "b", "c"].into();
    let e2: BTreeSet<&str> = ["b", "c", "d", "e"].into();
    let inter = e1.intersection(&e2).count() as u64;
    let min = e1.len().min(e2.len()) as u64;
    ensure(ov == Ratio::new(inter, min) && ov == Ratio::new(2, 3), format!("overlap {ov}"))?;

    // MI at exact independence: counts form a rank-one table
    let rec = |verb: &str, arg: &str, count: u64| {
        let mut patterns = BTreeMap::new();
        patterns.insert(PatternKey::new(PatternKind::Child, "NN", "dobj", "DT", "det"), count);
        ArgumentRecord { verb: verb.into(), role: Role::Object, arg: arg.into(), count, patterns }
    };
    let records = [rec("v1", "a1", 2), rec("v1", "a2", 4), rec("v2", "a1", 3), rec("v2", "a2", 6)];
    let stats = argconcept::weighting::CorpusStats::from_records(&records, MarginalScope::WithinRole);
    for r in &records {
        // c(v,a) * N == c(v) * c(a) here
        let lhs = r.count * 15;
        let rhs = stats.verb_marginal(&r.verb, Role::Object) * stats.arg_marginal(&r.arg, Role::Object);
        ensure(lhs == rhs, "fixture is not independent")?;
        ensure(stats.binary_mi(&r.verb, Role::Object, &r.arg).map_err(|e| e.to_string())? == -1, "independence MI is not -1")?;
    }

    // concept weight additivity on a two-argument fixture
    let t = Taxonomy::from_pairs([("x", "c"), ("y", "c"), ("z", "d")], CoverageMode::Direct).map_err(|e| e.to_string())?;
    let q = |quality: f64, count: u64| argconcept::weighting::QualityEntry { entropy: quality.abs(), mi: 1, quality, count };
    let table = QualityTable::from_entries([
        (("v".into(), Role::Object, "x".into()), q(1.0, 3)),
        (("v".into(), Role::Object, "y".into()), q(0.5, 5)),
        (("v".into(), Role::Object, "z".into()), q(2.0, 7)),
    ]);
    let c = t.id("c").unwrap();
    let ac = concept_weight(&t, &table, "v", Role::Object, c, WeightMode::Ac);
    let bl = concept_weight(&t, &table, "v", Role::Object, c, WeightMode::Bl);
    ensure(ac == 1.5 && bl == 8.0, format!("weights {ac} / {bl}"))?;
    let g = build_concept_graph(&t, &table, "v", Role::Object, DEFAULT_TAU, WeightMode::Ac, None);
    let s = solve_bb(&g, 2, None).map_err(|e| e.to_string())?;
    ensure(s.score() == Some(ac + 2.0), format!("objective {:?}", s.score()))?;
    Ok("entropy 2.0 / 0.811278, overlap 2/3, MI -1 at independence, weight and objective additivity".into())
}

fn criterion_4() -> Check {
    let unpruned = unpruned_node_count(100, 5);
    let mut worst_fraction = 0.0f64;
    let mut worst_time = Duration::ZERO;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 100, 0.5);
        let start = Instant::now();
        let out = solve_bb(&g, 5, None).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        let fraction = out.explored_nodes() as f64 / unpruned as f64;
        ensure(out.solution().is_some(), format!("seed {seed}: no solution"))?;
        ensure(fraction < 0.05, format!("seed {seed}: explored {} of {unpruned}", out.explored_nodes()))?;
        ensure(t < Duration::from_secs(2), format!("seed {seed}: {t:?}"))?;
        worst_fraction = worst_fraction.max(fraction);
        worst_time = worst_time.max(t);
    }
    Ok(format!("20 instances, worst explored fraction {worst_fraction:.2e} of {unpruned}, worst time {worst_time:.2?}"))
}

/// Taxonomy coverage read straight from the TSV.
fn coverage_from_tsv() -> HashMap<String, BTreeSet<String>> {
    let mut cov: HashMap<String, BTreeSet<String>> = HashMap::new();
    for line in fs::read_to_string(fixture("toy_taxonomy.tsv")).unwrap().lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        cov.entry(cols[1].to_string()).or_default().insert(cols[0].to_string());
    }
    cov
}

fn criterion_5() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = toy_config(dir.path());
    ensure(config.tau == Ratio::new(1, 5) && config.k == [2], "toy config is not tau=0.2, k=2")?;
    ensure(config.solver == SolverKind::Bruteforce, "golden config does not use the brute-force path")?;
    pipeline::run_all(&config).map_err(|e| e.to_string())?;
    for (produced, golden) in [("records.tsv", "toy_records.tsv"), ("quality.tsv", "toy_quality.tsv"), ("lexicon_k2.jsonl", "toy_lexicon_k2.jsonl")] {
        let a = fs::read(dir.path().join(produced)).map_err(|e| e.to_string())?;
        let b = fs::read(fixture(&format!("golden/{golden}"))).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{produced} differs from golden {golden}"))?;
    }

    // the branch-and-bound path agrees on everything but the node count
    let bb_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bb = toy_config(bb_dir.path());
    bb.solver = SolverKind::Bb;
    pipeline::run_all(&bb).map_err(|e| e.to_string())?;
    let bb_lex = ConceptLexicon::parse(&fs::read_to_string(bb_dir.path().join(lexicon_file(2))).unwrap(), Path::new("bb")).unwrap();
    let golden = golden_lexicon();
    let strip = |e: &LexiconEntry| LexiconEntry { explored_nodes: 0, ..e.clone() };
    ensure(bb_lex.len() == golden.len(), "entry count differs")?;
    for (a, b) in bb_lex.entries().zip(golden.entries()) {
        ensure(strip(a) == strip(b), format!("bb and golden differ on {} {}", a.verb, a.role))?;
    }

    // independent audit: recompute concept weights from the golden quality file
    // and the raw taxonomy, then check every entry is a best feasible pair
    let cov = coverage_from_tsv();
    let text = fs::read_to_string(fixture("golden/toy_quality.tsv")).unwrap();
    let mut args: BTreeMap<(String, String), Vec<(String, f64)>> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let c: Vec<&str> = line.split('\t').collect();
        args.entry((c[0].into(), c[1].into())).or_default().push((c[2].into(), c[5].parse().unwrap()));
    }
    let mut solved = 0;
    for ((verb, role), list) in &args {
        let mut concepts: Vec<(&String, f64)> = cov
            .iter()
            .filter(|(_, ents)| list.iter().any(|(a, _)| ents.contains(a)))
            .map(|(c, ents)| (c, list.iter().filter(|(a, _)| ents.contains(a)).map(|(_, q)| q).sum()))
            .collect();
        concepts.sort_by(|a, b| a.0.cmp(b.0));
        let weights: Vec<f64> = concepts.iter().map(|c| c.1).collect();
        let ok = |a: usize, b: usize| {
            let (x, y) = (&cov[concepts[a].0], &cov[concepts[b].0]);
            (x.intersection(y).count() * 5) < x.len().min(y.len())
        };
        let role: Role = role.parse().unwrap();
        let entry = golden.get(verb, role).ok_or(format!("golden lacks {verb} {role}"))?;
        match enumerate_best(&weights, &ok, 2) {
            None => ensure(entry.concepts.is_empty(), format!("{verb} {role}: golden has a solution, audit found none"))?,
            Some((best, _)) => {
                let chosen: Vec<usize> = entry
                    .concepts
                    .iter()
                    .map(|c| concepts.iter().position(|x| *x.0 == c.concept).unwrap())
                    .collect();
                ensure(chosen.len() == 2 && ok(chosen[0], chosen[1]), format!("{verb} {role}: infeasible golden pair"))?;
                let score: f64 = chosen.iter().map(|&i| weights[i]).sum();
                ensure((score - best).abs() < 1e-9, format!("{verb} {role}: golden {score} vs best {best}"))?;
                solved += 1;
            }
        }
    }
    ensure(args.len() == golden.len(), "audit covers a different set of (verb, role)")?;
    Ok(format!("records, quality and k=2 lexicon byte-identical; bb agrees; {solved}/{} entries audited optimal", args.len()))
}

fn criterion_6() -> Check {
    let taxonomy = toy_taxonomy();
    let table = golden_quality();
    let ac = golden_lexicon();
    let mut params = SolveParams::new(2, DEFAULT_TAU, WeightMode::Bl);
    let bl = conceptualize(&taxonomy, &table, &params).map_err(|e| e.to_string())?;

    let positives = parse_pairs(&fs::read_to_string(fixture("toy_eval_positives.tsv")).unwrap(), Path::new("positives")).unwrap();
    let pairs = generate_swaps(&positives, 1, 0.5).map_err(|e| e.to_string())?;
    for (verb, term) in [("wear", "piano"), ("play", "clothing")] {
        let p = pairs
            .iter()
            .find(|p| p.verb == verb && p.role == Role::Object && p.term == term)
            .ok_or(format!("swap did not produce \"{verb} {term}\""))?;
        ensure(p.label == Label::Negative, format!("\"{verb} {term}\" is not labelled negative"))?;
        for (name, lex) in [("ac", &ac), ("bl", &bl)] {
            ensure(identify(lex, &taxonomy, p).label == Label::Negative, format!("{name} predicts \"{verb} {term}\" positive"))?;
        }
    }
    let (_, ac_report) = evaluate(&ac, &taxonomy, &pairs).map_err(|e| e.to_string())?;
    let (_, bl_report) = evaluate(&bl, &taxonomy, &pairs).map_err(|e| e.to_string())?;
    ensure(
        ac_report.accuracy() >= bl_report.accuracy(),
        format!("AC {:.3} < BL {:.3}", ac_report.accuracy(), bl_report.accuracy()),
    )?;

    // enlarging each concept set one concept at a time (k = 1, 2, 3) never
    // turns a positive prediction negative
    params.mode = WeightMode::Ac;
    params.k = 3;
    params.relax_k = true;
    let k3 = conceptualize(&taxonomy, &table, &params).map_err(|e| e.to_string())?;
    let prefix = |k: usize| {
        let mut lex = ConceptLexicon::new(k3.taxonomy_hash.clone());
        for e in k3.entries() {
            let mut e = e.clone();
            e.concepts.truncate(k);
            lex.insert(e);
        }
        lex
    };
    let lexicons: Vec<ConceptLexicon> = (1..=3).map(prefix).collect();
    let mut checked = 0;
    for p in pairs.iter().chain(&positives) {
        for w in lexicons.windows(2) {
            if identify(&w[0], &taxonomy, p).label == Label::Positive {
                ensure(identify(&w[1], &taxonomy, p).label == Label::Positive, format!("{} {} {} flips", p.verb, p.role, p.term))?;
            }
            checked += 1;
        }
    }
    Ok(format!(
        "\"wear piano\" and \"play clothing\" negative; accuracy AC {:.2} >= BL {:.2}; monotone over {checked} k-steps",
        ac_report.accuracy(),
        bl_report.accuracy()
    ))
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn full_run(threads: usize) -> std::result::Result<(tempfile::TempDir, BTreeMap<String, Vec<u8>>), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = toy_config(dir.path());
    config.solver = SolverKind::Bb;
    config.k = vec![1, 2, 3];
    config.seed = 1;
    with_threads(threads, || -> argconcept::Result<()> {
        pipeline::run_all(&config)?;
        let lexicons: Vec<PathBuf> = config.k.iter().map(|&k| dir.path().join(lexicon_file(k))).collect();
        pipeline::run_eval(&config, &lexicons, &fixture("toy_eval_positives.tsv"), None)?;
        Ok(())
    })
    .map_err(|e| e.to_string())?
    .map_err(|e| e.to_string())?;
    let files = read_dir_bytes(dir.path());
    Ok((dir, files))
}

fn criterion_7() -> Check {
    let (_a, first) = full_run(1)?;
    let (_b, second) = full_run(1)?;
    let (_c, wide) = full_run(8)?;
    ensure(first.len() >= 7, format!("only {} output files", first.len()))?;
    for (name, bytes) in &first {
        ensure(second.get(name) == Some(bytes), format!("{name} differs between identical runs"))?;
        ensure(wide.get(name) == Some(bytes), format!("{name} differs between 1 and 8 workers"))?;
    }
    Ok(format!("{} output files byte-identical across repeat runs and 1 vs 8 workers", first.len()))
}

fn criterion_8() -> Check {
    let c = PipelineConfig::default();
    ensure(DEFAULT_TAU == Ratio::new(1, 5) && c.tau == "0.2".parse::<Ratio>().unwrap(), format!("default tau {}", c.tau))?;
    ensure(DEFAULT_K == [5, 10, 15] && c.k == [5, 10, 15], format!("default k {:?}", c.k))?;

    // overlap exactly tau: no edge; just below: edge
    let mut pairs: Vec<(String, String)> = Vec::new();
    for i in 0..6 {
        pairs.push((format!("e{i}"), "a".into()));
    }
    pairs.push(("e0".into(), "b".into()));
    for i in 0..4 {
        pairs.push((format!("x{i}"), "b".into()));
    }
    pairs.push(("e0".into(), "c".into()));
    for i in 0..6 {
        pairs.push((format!("y{i}"), "c".into()));
    }
    let t = Taxonomy::from_pairs(pairs.iter().map(|(e, c)| (e.as_str(), c.as_str())), CoverageMode::Direct).map_err(|e| e.to_string())?;
    let id = |s: &str| t.id(s).unwrap();
    ensure(t.overlap(id("a"), id("b")).unwrap() == Ratio::new(1, 5), "a/b overlap is not 1/5")?;
    ensure(t.overlap(id("a"), id("c")).unwrap() == Ratio::new(1, 6), "a/c overlap is not 1/6")?;
    let q = argconcept::weighting::QualityEntry { entropy: 1.0, mi: 1, quality: 1.0, count: 2 };
    let table = QualityTable::from_entries([(("v".into(), Role::Object, "e0".into()), q)]);
    let g = build_concept_graph(&t, &table, "v", Role::Object, DEFAULT_TAU, WeightMode::Ac, None);
    let pos = |s: &str| g.vertices().iter().position(|v| v.concept == id(s)).unwrap();
    ensure(!g.adjacent(pos("a"), pos("b")), "overlap == tau produced an edge")?;
    ensure(g.adjacent(pos("a"), pos("c")), "overlap < tau produced no edge")?;
    ensure(!g.adjacent(pos("b"), pos("c")) || t.overlap(id("b"), id("c")).unwrap() < DEFAULT_TAU, "b/c edge inconsistent")?;
    Ok("tau=1/5, k={5,10,15}; overlap 1/5 excluded, 1/6 admitted".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("solver oracle equivalence", criterion_1),
        ("four-concept worked instance", criterion_2),
        ("formula suite", criterion_3),
        ("pruning effectiveness", criterion_4),
        ("end-to-end golden", criterion_5),
        ("identification harness", criterion_6),
        ("determinism", criterion_7),
        ("parameter fidelity", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Swap-based identification on the toy lexicon: build negatives, judge every
//! pair and compare the entropy-weighted lexicon with the count baseline.

use std::fs;
use std::path::Path;

use argconcept::config::DEFAULT_TAU;
use argconcept::evaluation::{evaluate, generate_swaps, identify, parse_pairs, Label};
use argconcept::lexicon::{conceptualize, SolveParams};
use argconcept::taxonomy::{load_taxonomy, LoadOptions};
use argconcept::weighting::{QualityTable, WeightMode};

fn main() -> argconcept::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let taxonomy = load_taxonomy(root.join("toy_taxonomy.tsv"), LoadOptions::default())?;
    let quality_path = root.join("golden/toy_quality.tsv");
    let table = QualityTable::parse_tsv(&fs::read_to_string(&quality_path).expect("fixture"), &quality_path)?;
    let positives_path = root.join("toy_eval_positives.tsv");
    let positives = parse_pairs(&fs::read_to_string(&positives_path).expect("fixture"), &positives_path)?;
    let pairs = generate_swaps(&positives, 1, 0.5)?;

    for mode in [WeightMode::Ac, WeightMode::Bl] {
        let lexicon = conceptualize(&taxonomy, &table, &SolveParams::new(2, DEFAULT_TAU, mode))?;
        let (_, report) = evaluate(&lexicon, &taxonomy, &pairs)?;
        println!("{mode}: accuracy {:.2} ({}/{})", report.accuracy(), report.overall.correct, report.overall.total);
        for (role, tally) in &report.by_role {
            println!("    {role}: {:.2}", tally.accuracy);
        }
        if mode == WeightMode::Ac {
            for p in pairs.iter().filter(|p| p.label == Label::Negative).take(6) {
                let pred = identify(&lexicon, &taxonomy, p);
                println!("    {} {} -> {} ({})", p.verb, p.term, pred.label, pred.reason);
            }
        }
    }
    Ok(())
}

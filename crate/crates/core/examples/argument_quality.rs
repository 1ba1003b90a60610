//! Weight the toy corpus's arguments and compare the two concept weightings
//! for one verb.

use std::path::Path;

use argconcept::extraction::{extract_instances, parse_conllu, ExtractionConfig, PosColumn};
use argconcept::taxonomy::{load_taxonomy, LoadOptions};
use argconcept::weighting::{concept_weights, MarginalScope, QualityTable, WeightMode};
use argconcept::Role;

fn main() -> argconcept::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let taxonomy = load_taxonomy(root.join("toy_taxonomy.tsv"), LoadOptions::default())?;
    let text = std::fs::read_to_string(root.join("toy_corpus.conllu")).expect("fixture exists");
    let doc = parse_conllu(&text, PosColumn::Auto);
    let records = extract_instances(&doc.sentences, &taxonomy, &ExtractionConfig::default()).records();
    let table = QualityTable::build(&records, MarginalScope::WithinRole);

    let verb = std::env::args().nth(1).unwrap_or_else(|| "drive".into());
    println!("{verb} / object arguments:");
    for (arg, q) in table.arguments(&verb, Role::Object) {
        println!("  {arg:<10} entropy {:.3}  mi {:+}  quality {:.3}  count {}", q.entropy, q.mi, q.quality, q.count);
    }
    for mode in [WeightMode::Ac, WeightMode::Bl] {
        let weights = concept_weights(&taxonomy, &table, &verb, Role::Object, mode);
        let row: Vec<String> = weights.iter().map(|(c, w)| format!("{}={w:.2}", taxonomy.surface(*c))).collect();
        println!("{mode}: {}", row.join("  "));
    }
    Ok(())
}

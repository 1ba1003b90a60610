//! Load the toy taxonomy and print pairwise concept overlaps, marking which
//! pairs may sit together in one concept set at the default threshold.

use argconcept::config::DEFAULT_TAU;
use argconcept::taxonomy::{load_taxonomy, LoadOptions};

fn main() -> argconcept::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy_taxonomy.tsv").to_string());
    let t = load_taxonomy(&path, LoadOptions::default())?;
    println!("{} terms, {} isA edges, fingerprint {}", t.term_count(), t.edge_count(), &t.fingerprint()[..12]);

    let concepts: Vec<_> = t.concepts().collect();
    for (i, &a) in concepts.iter().enumerate() {
        for &b in &concepts[i + 1..] {
            let overlap = t.overlap(a, b)?;
            if overlap.numer() > 0 {
                let verdict = if overlap < DEFAULT_TAU { "compatible" } else { "conflict" };
                println!("{:>10} / {:<10} overlap {:<5} {verdict}", t.surface(a), t.surface(b), overlap.to_string());
            }
        }
    }
    println!("isa(chicken, food) = {}", t.isa("chicken", "food"));
    println!("isa(piano, garment) = {}", t.isa("piano", "garment"));
    Ok(())
}

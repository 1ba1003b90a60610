//! Cross-check branch and bound against exhaustive search on random graphs.

use argconcept::solver::oracle_check;

fn main() -> argconcept::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let report = oracle_check(42, instances, 15)?;
    println!(
        "{} instances: {} solved, {} without a k-clique, {} mismatches",
        report.instances,
        report.solved,
        report.no_solution,
        report.mismatches.len()
    );
    println!("nodes explored: bb {} vs brute force {} ({:.2?})", report.bb_nodes, report.brute_nodes, report.elapsed);
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}

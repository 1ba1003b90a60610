//! Solve the four-concept worked instance, then a random 100-concept graph,
//! and report how much of the search tree the bound pruned.

use argconcept::config::DEFAULT_TAU;
use argconcept::solver::{random_graph, solve_bb, unpruned_node_count, ConceptGraph, ConceptVertex};
use argconcept::taxonomy::TermId;
use argconcept::Role;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> argconcept::Result<()> {
    let vertices = [5.0, 4.0, 3.0, 2.0]
        .iter()
        .enumerate()
        .map(|(i, &weight)| ConceptVertex { concept: TermId(i as u32), weight, coverage: 1 })
        .collect();
    // complete graph minus (c0, c3) and (c1, c3)
    let g = ConceptGraph::new("v", Role::Object, DEFAULT_TAU, vertices, |a, b| !matches!((a.min(b), a.max(b)), (0, 3) | (1, 3)));
    let out = solve_bb(&g, 3, None)?;
    println!("k=3: {:?} score {:?} after {} nodes", out.indices(), out.score(), out.explored_nodes());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_graph(&mut rng, 100, 0.5);
    let start = std::time::Instant::now();
    let out = solve_bb(&g, 5, None)?;
    println!(
        "|C|=100 k=5: {:?} score {:?}, {} of {} nodes in {:.2?}",
        out.indices(),
        out.score(),
        out.explored_nodes(),
        unpruned_node_count(100, 5),
        start.elapsed()
    );
    Ok(())
}

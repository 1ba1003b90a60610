//! Maximum-weight k-clique search over a concept graph.
//!
//! Vertices are candidate concepts for one `(verb, role)`, sorted by
//! descending weight; two concepts are adjacent when their overlap is
//! strictly below `tau`. [`solve_bb`] is a depth-first include/exclude
//! search over that order, pruned by clique feasibility and by an optimistic
//! bound equal to the current partial score plus the next `k - chosen`
//! weights. [`solve_bruteforce`] enumerates all k-subsets and is the
//! reference the search is checked against.
//!
//! Both paths share one tie rule: among equal-score optima the
//! lexicographically smallest sorted index set wins.

use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extraction::Role;
use crate::ratio::Ratio;
use crate::taxonomy::{Taxonomy, TermId};
use crate::weighting::{concept_weights, QualityTable, WeightMode};

/// Largest graph the brute-force oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptVertex {
    pub concept: TermId,
    pub weight: f64,
    /// `|E_c|` in the taxonomy.
    pub coverage: usize,
}

/// Fixed-size adjacency bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix { n, words, bits: vec![0; n * words] }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptGraph {
    pub verb: String,
    pub role: Role,
    pub tau: Ratio,
    vertices: Vec<ConceptVertex>,
    adjacency: BitMatrix,
}

impl ConceptGraph {
    /// Sort `vertices` (descending weight, then ascending id) and install the
    /// edges given by `adjacent` over the *input* indices. Self-pairs are
    /// never queried; the relation is symmetrised with OR.
    pub fn new<F>(verb: impl Into<String>, role: Role, tau: Ratio, vertices: Vec<ConceptVertex>, adjacent: F) -> Self
    where
        F: Fn(usize, usize) -> bool,
    {
        let mut order: Vec<usize> = (0..vertices.len()).collect();
        order.sort_by(|&a, &b| {
            vertices[b]
                .weight
                .total_cmp(&vertices[a].weight)
                .then(vertices[a].concept.cmp(&vertices[b].concept))
        });
        let n = order.len();
        let mut adjacency = BitMatrix::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacent(order[i], order[j]) || adjacent(order[j], order[i]) {
                    adjacency.set(i, j);
                    adjacency.set(j, i);
                }
            }
        }
        let vertices = order.into_iter().map(|i| vertices[i].clone()).collect();
        ConceptGraph {
            verb: verb.into(),
            role,
            tau,
            vertices,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices in search order.
    pub fn vertices(&self) -> &[ConceptVertex] {
        &self.vertices
    }

    pub fn weights(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.weight).collect()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.adjacency.get(i, j)
    }

    pub fn edge_count(&self) -> usize {
        (0..self.len()).map(|i| ((i + 1)..self.len()).filter(|&j| self.adjacent(i, j)).count()).sum()
    }

    pub fn is_clique(&self, indices: &[usize]) -> bool {
        indices.iter().tuple_combinations().all(|(&a, &b)| self.adjacent(a, b))
    }

    /// Same graph with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ConceptGraph {
        let mut g = self.clone();
        for v in &mut g.vertices {
            v.weight *= factor;
        }
        g
    }
}

/// Concept graph for one `(verb, role)`: every concept covering a scored
/// argument, weighted by `mode`, optionally cut to the `candidate_cap`
/// heaviest, with edges where overlap is strictly below `tau`.
pub fn build_concept_graph(
    taxonomy: &Taxonomy,
    table: &QualityTable,
    verb: &str,
    role: Role,
    tau: Ratio,
    mode: WeightMode,
    candidate_cap: Option<usize>,
) -> ConceptGraph {
    let weights = concept_weights(taxonomy, table, verb, role, mode);
    let mut vertices: Vec<ConceptVertex> = weights
        .into_iter()
        .map(|(concept, weight)| ConceptVertex {
            concept,
            weight,
            coverage: taxonomy.covered_entities(concept).map(<[_]>::len).unwrap_or(0),
        })
        .collect();
    vertices.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.concept.cmp(&b.concept)));
    if let Some(cap) = candidate_cap {
        if vertices.len() > cap {
            log::info!("{verb}/{role}: keeping top {cap} of {} candidate concepts", vertices.len());
            vertices.truncate(cap);
        }
    }
    let ids: Vec<TermId> = vertices.iter().map(|v| v.concept).collect();
    ConceptGraph::new(verb, role, tau, vertices, |a, b| {
        taxonomy.overlap(ids[a], ids[b]).map(|o| o < tau).unwrap_or(false)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    /// Sorted vertex indices into the graph's search order.
    pub indices: Vec<usize>,
    pub concepts: Vec<TermId>,
    pub score: f64,
    pub explored_nodes: u64,
    /// False when a node budget cut the search short.
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Outcome {
    Solved(Solution),
    NoSolution { explored_nodes: u64, optimal: bool },
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solved(s) => Some(s),
            Outcome::NoSolution { .. } => None,
        }
    }

    pub fn explored_nodes(&self) -> u64 {
        match self {
            Outcome::Solved(s) => s.explored_nodes,
            Outcome::NoSolution { explored_nodes, .. } => *explored_nodes,
        }
    }

    pub fn score(&self) -> Option<f64> {
        self.solution().map(|s| s.score)
    }

    pub fn indices(&self) -> Option<&[usize]> {
        self.solution().map(|s| s.indices.as_slice())
    }
}

/// Optimistic completion score: `partial` plus the weights of positions
/// `start .. start + needed` (fewer if the list runs out). Summed left to
/// right so it dominates any completion in floating point as well.
pub fn bound(weights: &[f64], start: usize, needed: usize, partial: f64) -> f64 {
    let end = (start + needed).min(weights.len());
    let mut b = partial;
    for &w in &weights[start.min(end)..end] {
        b += w;
    }
    b
}

struct Search<'g> {
    graph: &'g ConceptGraph,
    weights: Vec<f64>,
    k: usize,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    nodes: u64,
    budget: Option<u64>,
    cut: bool,
}

impl Search<'_> {
    fn beats(&self, value: f64) -> bool {
        match &self.best {
            None => true,
            Some((best, _)) => value > *best,
        }
    }

    fn fits(&self, i: usize) -> bool {
        self.chosen.iter().all(|&j| self.graph.adjacent(i, j))
    }

    fn branch(&mut self, i: usize, partial: f64) {
        if self.cut {
            return;
        }
        if let Some(limit) = self.budget {
            if self.nodes >= limit {
                self.cut = true;
                return;
            }
        }
        self.nodes += 1;

        let picked = self.chosen.len();
        if picked == self.k {
            if self.beats(partial) {
                self.best = Some((partial, self.chosen.clone()));
            }
            return;
        }
        let n = self.weights.len();
        if i >= n {
            return;
        }
        let needed = self.k - picked;

        // include c_i
        if self.fits(i) && self.beats(bound(&self.weights, i, needed, partial)) {
            self.chosen.push(i);
            self.branch(i + 1, partial + self.weights[i]);
            self.chosen.pop();
        }
        // exclude c_i, only if enough vertices remain to finish
        if n - (i + 1) >= needed && self.beats(bound(&self.weights, i + 1, needed, partial)) {
            self.branch(i + 1, partial);
        }
    }
}

/// Branch-and-bound maximum-weight k-clique. `node_budget` caps the number
/// of search nodes; when it is hit the best clique found so far is returned
/// with `optimal == false`.
pub fn solve_bb(graph: &ConceptGraph, k: usize, node_budget: Option<u64>) -> Result<Outcome> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > graph.len() {
        return Ok(Outcome::NoSolution { explored_nodes: 0, optimal: true });
    }
    let mut search = Search {
        graph,
        weights: graph.weights(),
        k,
        chosen: Vec::with_capacity(k),
        best: None,
        nodes: 0,
        budget: node_budget,
        cut: false,
    };
    search.branch(0, 0.0);
    let optimal = !search.cut;
    Ok(match search.best {
        Some((score, indices)) => Outcome::Solved(Solution {
            concepts: indices.iter().map(|&i| graph.vertices[i].concept).collect(),
            indices,
            score,
            explored_nodes: search.nodes,
            optimal,
        }),
        None => Outcome::NoSolution {
            explored_nodes: search.nodes,
            optimal,
        },
    })
}

/// Exhaustive reference solver; refuses graphs above [`BRUTE_FORCE_LIMIT`].
pub fn solve_bruteforce(graph: &ConceptGraph, k: usize) -> Result<Outcome> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if graph.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::OracleTooLarge {
            size: graph.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let weights = graph.weights();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visited = 0u64;
    // combinations() yields index sets in lexicographic order
    for subset in (0..graph.len()).combinations(k) {
        visited += 1;
        if !graph.is_clique(&subset) {
            continue;
        }
        let mut score = 0.0;
        for &i in &subset {
            score += weights[i];
        }
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, subset));
        }
    }
    Ok(match best {
        Some((score, indices)) => Outcome::Solved(Solution {
            concepts: indices.iter().map(|&i| graph.vertices[i].concept).collect(),
            indices,
            score,
            explored_nodes: visited,
            optimal: true,
        }),
        None => Outcome::NoSolution {
            explored_nodes: visited,
            optimal: true,
        },
    })
}

/// Σ_{i≤k} C(n, i): node visits of an include/exclude search with no pruning
/// other than stopping at k chosen.
pub fn unpruned_node_count(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for i in 0..=k.min(n) {
        if i > 0 {
            c = c * (n - i + 1) as u128 / i as u128;
        }
        total += c;
    }
    total
}

/// Random test instance: weights are multiples of 0.5 in `[-4, 8]` (so exact
/// ties and negatives are common) and each pair is an edge with probability
/// `density`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> ConceptGraph {
    let vertices: Vec<ConceptVertex> = (0..n)
        .map(|i| ConceptVertex {
            concept: TermId(i as u32),
            weight: rng.gen_range(-8i32..=16) as f64 * 0.5,
            coverage: 0,
        })
        .collect();
    let edges: std::collections::HashSet<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(density.clamp(0.0, 1.0)))
        .collect();
    ConceptGraph::new("random", Role::Object, Ratio::new(1, 5), vertices, |a, b| edges.contains(&(a.min(b), a.max(b))))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleMismatch {
    pub instance: usize,
    pub n: usize,
    pub k: usize,
    pub density: f64,
    pub bb: Option<(f64, Vec<usize>)>,
    pub brute: Option<(f64, Vec<usize>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub solved: usize,
    pub no_solution: usize,
    pub mismatches: Vec<OracleMismatch>,
    pub bb_nodes: u64,
    pub brute_nodes: u64,
    pub elapsed: Duration,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compare [`solve_bb`] with [`solve_bruteforce`] on `instances` seeded random
/// graphs with 1..=`max_n` vertices, density in {0.1, ..., 1.0} and k in 1..=n.
pub fn oracle_check(seed: u64, instances: usize, max_n: usize) -> Result<OracleReport> {
    let max_n = max_n.clamp(1, BRUTE_FORCE_LIMIT);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut report = OracleReport {
        instances,
        solved: 0,
        no_solution: 0,
        mismatches: Vec::new(),
        bb_nodes: 0,
        brute_nodes: 0,
        elapsed: Duration::ZERO,
    };
    for instance in 0..instances {
        let n = rng.gen_range(1..=max_n);
        let density = rng.gen_range(1..=10) as f64 / 10.0;
        let k = rng.gen_range(1..=n);
        let graph = random_graph(&mut rng, n, density);
        let bb = solve_bb(&graph, k, None)?;
        let brute = solve_bruteforce(&graph, k)?;
        report.bb_nodes += bb.explored_nodes();
        report.brute_nodes += brute.explored_nodes();
        let key = |o: &Outcome| o.solution().map(|s| (s.score, s.indices.clone()));
        let (a, b) = (key(&bb), key(&brute));
        if a != b {
            report.mismatches.push(OracleMismatch { instance, n, k, density, bb: a, brute: b });
        } else if a.is_some() {
            report.solved += 1;
        } else {
            report.no_solution += 1;
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

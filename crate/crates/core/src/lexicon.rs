//! The concept lexicon: the chosen concepts per `(verb, role)` for one k.
//!
//! Serialized as `#` provenance header lines followed by one JSON object per
//! `(verb, role)`.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{header_value, SolverKind};
use crate::error::{Error, Result};
use crate::extraction::Role;
use crate::ratio::Ratio;
use crate::solver::{build_concept_graph, solve_bb, solve_bruteforce, ConceptGraph, Outcome};
use crate::taxonomy::Taxonomy;
use crate::weighting::{QualityTable, WeightMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconConcept {
    pub concept: String,
    pub weight: f64,
    pub coverage: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStatus {
    Solved,
    NoSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub verb: String,
    pub role: Role,
    /// Requested size.
    pub k: usize,
    /// Size actually solved for; smaller than `k` only with relaxation.
    pub k_used: usize,
    pub tau: Ratio,
    pub mode: WeightMode,
    pub status: EntryStatus,
    /// Chosen concepts in descending weight order.
    pub concepts: Vec<LexiconConcept>,
    pub score: Option<f64>,
    pub optimal: bool,
    pub explored_nodes: u64,
    pub candidates: usize,
}

/// Knobs for [`conceptualize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub k: usize,
    pub tau: Ratio,
    pub mode: WeightMode,
    pub candidate_cap: Option<usize>,
    pub node_budget: Option<u64>,
    pub relax_k: bool,
    pub solver: SolverKind,
    pub k_overrides: BTreeMap<String, usize>,
}

impl SolveParams {
    pub fn new(k: usize, tau: Ratio, mode: WeightMode) -> Self {
        SolveParams {
            k,
            tau,
            mode,
            candidate_cap: None,
            node_budget: None,
            relax_k: false,
            solver: SolverKind::Bb,
            k_overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConceptLexicon {
    /// Fingerprint of the taxonomy the lexicon was built from.
    pub taxonomy_hash: String,
    entries: BTreeMap<(String, Role), LexiconEntry>,
}

impl ConceptLexicon {
    pub fn new(taxonomy_hash: impl Into<String>) -> Self {
        ConceptLexicon {
            taxonomy_hash: taxonomy_hash.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, entry: LexiconEntry) {
        self.entries.insert((entry.verb.clone(), entry.role), entry);
    }

    pub fn get(&self, verb: &str, role: Role) -> Option<&LexiconEntry> {
        self.entries.get(&(verb.to_owned(), role))
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One JSON object per line, in `(verb, role)` order.
    pub fn write_entries<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        for e in self.entries.values() {
            serde_json::to_writer(&mut *out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parse a lexicon file; the `taxonomy-hash` header line is required.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let hash = header_value(text, "taxonomy-hash")
            .ok_or_else(|| Error::parse(origin, 1, "missing taxonomy-hash header"))?;
        let mut lexicon = ConceptLexicon::new(hash);
        for (no, line) in crate::io::data_lines(text) {
            let entry: LexiconEntry =
                serde_json::from_str(line).map_err(|e| Error::parse(origin, no, e.to_string()))?;
            lexicon.insert(entry);
        }
        Ok(lexicon)
    }
}

fn solve(graph: &ConceptGraph, k: usize, params: &SolveParams) -> Result<Outcome> {
    match params.solver {
        SolverKind::Bb => solve_bb(graph, k, params.node_budget),
        SolverKind::Bruteforce => solve_bruteforce(graph, k),
    }
}

/// Solve one `(verb, role)`.
pub fn conceptualize_one(taxonomy: &Taxonomy, table: &QualityTable, verb: &str, role: Role, params: &SolveParams) -> Result<LexiconEntry> {
    let k = params.k_overrides.get(verb).copied().unwrap_or(params.k);
    let graph = build_concept_graph(taxonomy, table, verb, role, params.tau, params.mode, params.candidate_cap);
    let mut k_used = k;
    let mut explored = 0;
    let mut outcome = solve(&graph, k_used, params)?;
    explored += outcome.explored_nodes();
    while params.relax_k && outcome.solution().is_none() && k_used > 1 {
        k_used -= 1;
        outcome = solve(&graph, k_used, params)?;
        explored += outcome.explored_nodes();
    }
    let (status, concepts, score, optimal) = match &outcome {
        Outcome::Solved(s) => {
            let concepts = s
                .indices
                .iter()
                .map(|&i| {
                    let v = &graph.vertices()[i];
                    LexiconConcept {
                        concept: taxonomy.surface(v.concept).to_owned(),
                        weight: v.weight,
                        coverage: v.coverage,
                    }
                })
                .collect();
            (EntryStatus::Solved, concepts, Some(s.score), s.optimal)
        }
        Outcome::NoSolution { optimal, .. } => (EntryStatus::NoSolution, Vec::new(), None, *optimal),
    };
    Ok(LexiconEntry {
        verb: verb.to_owned(),
        role,
        k,
        k_used,
        tau: params.tau,
        mode: params.mode,
        status,
        concepts,
        score,
        optimal,
        explored_nodes: explored,
        candidates: graph.len(),
    })
}

/// Solve every `(verb, role)` in the quality table. Instances run in
/// parallel; the result does not depend on the worker count.
pub fn conceptualize(taxonomy: &Taxonomy, table: &QualityTable, params: &SolveParams) -> Result<ConceptLexicon> {
    let keys = table.verb_roles();
    let entries: Vec<Result<LexiconEntry>> = keys
        .par_iter()
        .map(|(verb, role)| conceptualize_one(taxonomy, table, verb, *role, params))
        .collect();
    let mut lexicon = ConceptLexicon::new(taxonomy.fingerprint());
    for e in entries {
        lexicon.insert(e?);
    }
    Ok(lexicon)
}

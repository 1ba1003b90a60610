//! The isA taxonomy: term interning, entity coverage and concept overlap.
//!
//! A taxonomy file holds one `entity<TAB>concept[<TAB>count]` edge per line.
//! Terms are normalized (lowercased, whitespace collapsed) and interned into
//! dense [`TermId`]s in order of first appearance, so loading the same file
//! twice yields the same ids.
//!
//! The set of entities a concept covers depends on [`CoverageMode`]:
//! `direct` uses only the immediate isA children, `transitive` uses the
//! reachability closure over incoming isA edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use log::warn;
use petgraph::graph::NodeIndex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ratio::Ratio;

/// Lowercase, trim and collapse internal whitespace. Idempotent.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for (i, tok) in s.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.extend(tok.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Dense id of an interned term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMode {
    /// A concept covers its direct isA children only.
    #[default]
    Direct,
    /// A concept covers everything that reaches it through isA edges.
    Transitive,
}

impl fmt::Display for CoverageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageMode::Direct => "direct",
            CoverageMode::Transitive => "transitive",
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub coverage: CoverageMode,
    /// Reject self-loop lines instead of skipping them with a warning.
    pub strict: bool,
}

/// Data-quality findings collected while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub duplicate_edges: usize,
    pub self_loops_skipped: usize,
    /// Strongly connected components of size > 1 (transitive mode only).
    pub cycles: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    surfaces: Vec<String>,
    ids: HashMap<String, TermId>,
    edges: BTreeSet<(TermId, TermId)>,
    counts: BTreeMap<(TermId, TermId), u64>,
    mode: CoverageMode,
    // per term: sorted covered entities / sorted concepts covering it
    coverage: Vec<Vec<TermId>>,
    covering: Vec<Vec<TermId>>,
    report: LoadReport,
}

/// Read a taxonomy TSV file.
pub fn load_taxonomy(path: impl AsRef<Path>, options: LoadOptions) -> Result<Taxonomy> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Taxonomy::from_reader(BufReader::new(file), path, options)
}

impl Taxonomy {
    /// Parse TSV lines from any reader; `origin` is only used in error messages.
    pub fn from_reader<R: BufRead>(reader: R, origin: &Path, options: LoadOptions) -> Result<Taxonomy> {
        let mut builder = Builder::default();
        let mut lines = 0;
        for (no, line) in reader.lines().enumerate() {
            let line_no = no + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            lines += 1;
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() != 2 && cols.len() != 3 {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("expected 2 or 3 tab-separated columns, found {}", cols.len()),
                ));
            }
            let count = match cols.get(2) {
                Some(c) => Some(c.trim().parse::<u64>().map_err(|_| {
                    Error::parse(origin, line_no, format!("count {c:?} is not a non-negative integer"))
                })?),
                None => None,
            };
            let (entity, concept) = (normalize(cols[0]), normalize(cols[1]));
            if entity.is_empty() || concept.is_empty() {
                return Err(Error::parse(origin, line_no, "empty term"));
            }
            if entity == concept {
                if options.strict {
                    return Err(Error::parse(origin, line_no, format!("self-loop on {entity:?}")));
                }
                warn!("{}:{}: skipping self-loop on {:?}", origin.display(), line_no, entity);
                builder.report.self_loops_skipped += 1;
                continue;
            }
            builder.add(&entity, &concept, count);
        }
        builder.report.lines = lines;
        builder.finish(options.coverage)
    }

    /// Build from in-memory `(entity, concept)` pairs; self-loops are skipped.
    pub fn from_pairs<'a, I>(pairs: I, coverage: CoverageMode) -> Result<Taxonomy>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut builder = Builder::default();
        for (e, c) in pairs {
            let (e, c) = (normalize(e), normalize(c));
            if e == c {
                builder.report.self_loops_skipped += 1;
                continue;
            }
            builder.add(&e, &c, None);
        }
        builder.finish(coverage)
    }

    pub fn coverage_mode(&self) -> CoverageMode {
        self.mode
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn term_count(&self) -> usize {
        self.surfaces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (TermId, TermId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count_column(&self, entity: TermId, concept: TermId) -> Option<u64> {
        self.counts.get(&(entity, concept)).copied()
    }

    /// Look up a term; the input is normalized first.
    pub fn id(&self, surface: &str) -> Option<TermId> {
        self.ids.get(&normalize(surface)).copied()
    }

    /// Look up an already-normalized term.
    pub fn id_normalized(&self, surface: &str) -> Option<TermId> {
        self.ids.get(surface).copied()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.id(surface).is_some()
    }

    pub fn surface(&self, id: TermId) -> &str {
        &self.surfaces[id.index()]
    }

    fn check(&self, id: TermId) -> Result<()> {
        if id.index() < self.surfaces.len() {
            Ok(())
        } else {
            Err(Error::UnknownTerm(id.to_string()))
        }
    }

    /// `E_c`: sorted entities covered by `c` under the configured mode.
    pub fn covered_entities(&self, concept: TermId) -> Result<&[TermId]> {
        self.check(concept)?;
        Ok(&self.coverage[concept.index()])
    }

    /// Sorted concepts whose coverage contains `entity`.
    pub fn concepts_covering(&self, entity: TermId) -> Result<&[TermId]> {
        self.check(entity)?;
        Ok(&self.covering[entity.index()])
    }

    /// Terms with nonempty coverage, in id order.
    pub fn concepts(&self) -> impl Iterator<Item = TermId> + '_ {
        self.coverage
            .iter()
            .enumerate()
            .filter(|(_, cov)| !cov.is_empty())
            .map(|(i, _)| TermId(i as u32))
    }

    /// `|E_c1 ∩ E_c2| / min(|E_c1|, |E_c2|)`, zero when either side is empty.
    pub fn overlap(&self, c1: TermId, c2: TermId) -> Result<Ratio> {
        let a = self.covered_entities(c1)?;
        let b = self.covered_entities(c2)?;
        let den = a.len().min(b.len());
        if den == 0 {
            return Ok(Ratio::ZERO);
        }
        Ok(Ratio::new(sorted_intersection_len(a, b) as u64, den as u64))
    }

    pub fn isa_id(&self, entity: TermId, concept: TermId) -> bool {
        self.coverage
            .get(concept.index())
            .is_some_and(|cov| cov.binary_search(&entity).is_ok())
    }

    /// `true` iff `entity` is covered by `concept`; unknown terms give `false`.
    pub fn isa(&self, entity: &str, concept: &str) -> bool {
        match (self.id(entity), self.id(concept)) {
            (Some(e), Some(c)) => self.isa_id(e, c),
            _ => false,
        }
    }

    /// SHA-256 over the coverage mode and the edge list in surface order.
    pub fn fingerprint(&self) -> String {
        let mut pairs: Vec<(&str, &str)> = self
            .edges
            .iter()
            .map(|&(e, c)| (self.surface(e), self.surface(c)))
            .collect();
        pairs.sort_unstable();
        let mut hasher = Sha256::new();
        hasher.update(self.mode.to_string().as_bytes());
        hasher.update(b"\n");
        for (e, c) in pairs {
            hasher.update(e.as_bytes());
            hasher.update(b"\t");
            hasher.update(c.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

pub(crate) fn sorted_intersection_len(a: &[TermId], b: &[TermId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Default)]
struct Builder {
    surfaces: Vec<String>,
    ids: HashMap<String, TermId>,
    edges: BTreeSet<(TermId, TermId)>,
    counts: BTreeMap<(TermId, TermId), u64>,
    report: LoadReport,
}

impl Builder {
    fn intern(&mut self, s: &str) -> TermId {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = TermId(self.surfaces.len() as u32);
        self.surfaces.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }

    fn add(&mut self, entity: &str, concept: &str, count: Option<u64>) {
        let e = self.intern(entity);
        let c = self.intern(concept);
        if !self.edges.insert((e, c)) {
            self.report.duplicate_edges += 1;
        }
        if let Some(n) = count {
            *self.counts.entry((e, c)).or_insert(0) += n;
        }
    }

    fn finish(mut self, mode: CoverageMode) -> Result<Taxonomy> {
        if self.edges.is_empty() {
            return Err(Error::EmptyTaxonomy);
        }
        let n = self.surfaces.len();
        let mut children: Vec<Vec<TermId>> = vec![Vec::new(); n];
        for &(e, c) in &self.edges {
            children[c.index()].push(e);
        }
        let coverage: Vec<Vec<TermId>> = match mode {
            CoverageMode::Direct => children,
            CoverageMode::Transitive => {
                self.report.cycles = cycles(&self.surfaces, &self.edges);
                for cycle in &self.report.cycles {
                    warn!("isA cycle among {} terms: {}", cycle.len(), cycle.join(", "));
                }
                (0..n).map(|c| reachable(&children, TermId(c as u32))).collect()
            }
        };
        let mut covering: Vec<Vec<TermId>> = vec![Vec::new(); n];
        for (c, cov) in coverage.iter().enumerate() {
            for e in cov {
                covering[e.index()].push(TermId(c as u32));
            }
        }
        Ok(Taxonomy {
            surfaces: self.surfaces,
            ids: self.ids,
            edges: self.edges,
            counts: self.counts,
            mode,
            coverage,
            covering,
            report: self.report,
        })
    }
}

/// Everything that reaches `root` via isA edges, excluding `root` itself.
fn reachable(children: &[Vec<TermId>], root: TermId) -> Vec<TermId> {
    let mut seen = vec![false; children.len()];
    let mut stack = vec![root];
    let mut out = Vec::new();
    seen[root.index()] = true;
    while let Some(t) = stack.pop() {
        for &child in &children[t.index()] {
            if !seen[child.index()] {
                seen[child.index()] = true;
                out.push(child);
                stack.push(child);
            }
        }
    }
    out.sort_unstable();
    out
}

fn cycles(surfaces: &[String], edges: &BTreeSet<(TermId, TermId)>) -> Vec<Vec<String>> {
    let mut graph = petgraph::graph::DiGraph::<(), ()>::with_capacity(surfaces.len(), edges.len());
    for _ in 0..surfaces.len() {
        graph.add_node(());
    }
    for &(e, c) in edges {
        graph.add_edge(NodeIndex::new(e.index()), NodeIndex::new(c.index()), ());
    }
    let mut out: Vec<Vec<String>> = petgraph::algo::tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1)
        .map(|scc| {
            let mut names: Vec<String> = scc.iter().map(|n| surfaces[n.index()].clone()).collect();
            names.sort();
            names
        })
        .collect();
    out.sort();
    out
}

const CACHE_MAGIC: &[u8; 4] = b"ACTX";
pub const CACHE_VERSION: u32 = 1;

impl Taxonomy {
    /// Write a binary index: magic, format version, source digest, then the edge list.
    pub fn write_cache(&self, path: impl AsRef<Path>, source_digest: &str) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        put_str(&mut buf, source_digest);
        buf.push(match self.mode {
            CoverageMode::Direct => 0,
            CoverageMode::Transitive => 1,
        });
        buf.extend_from_slice(&(self.surfaces.len() as u64).to_le_bytes());
        for s in &self.surfaces {
            put_str(&mut buf, s);
        }
        buf.extend_from_slice(&(self.edges.len() as u64).to_le_bytes());
        for &(e, c) in &self.edges {
            buf.extend_from_slice(&e.0.to_le_bytes());
            buf.extend_from_slice(&c.0.to_le_bytes());
            match self.counts.get(&(e, c)) {
                Some(n) => {
                    buf.push(1);
                    buf.extend_from_slice(&n.to_le_bytes());
                }
                None => buf.push(0),
            }
        }
        crate::io::write_atomic(path, |w| w.write_all(&buf))
    }

    /// Read a binary index. Returns `Ok(None)` when the cache is stale: wrong
    /// version, other coverage mode, or a different source digest.
    pub fn read_cache(path: impl AsRef<Path>, source_digest: &str, mode: CoverageMode) -> Result<Option<Taxonomy>> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let mut cur = Cursor { bytes: &bytes, pos: 0, path };
        if cur.take(4)? != CACHE_MAGIC {
            return Err(Error::parse(path, 0, "not a taxonomy cache"));
        }
        if cur.u32()? != CACHE_VERSION {
            return Ok(None);
        }
        if cur.string()? != source_digest {
            return Ok(None);
        }
        let cached_mode = match cur.take(1)?[0] {
            0 => CoverageMode::Direct,
            1 => CoverageMode::Transitive,
            _ => return Err(Error::parse(path, 0, "bad coverage mode byte")),
        };
        if cached_mode != mode {
            return Ok(None);
        }
        let mut builder = Builder::default();
        let n_terms = cur.u64()? as usize;
        for _ in 0..n_terms {
            let s = cur.string()?;
            builder.intern(&s);
        }
        let n_edges = cur.u64()? as usize;
        for _ in 0..n_edges {
            let e = TermId(cur.u32()?);
            let c = TermId(cur.u32()?);
            if e.index() >= n_terms || c.index() >= n_terms {
                return Err(Error::parse(path, 0, "edge endpoint out of range"));
            }
            builder.edges.insert((e, c));
            if cur.take(1)?[0] == 1 {
                builder.counts.insert((e, c), cur.u64()?);
            }
        }
        builder.finish(mode).map(Some)
    }
}

/// Load `tsv`, going through the binary cache at `cache` when it is fresh and
/// refreshing it otherwise.
pub fn load_taxonomy_cached(tsv: impl AsRef<Path>, cache: impl AsRef<Path>, options: LoadOptions) -> Result<Taxonomy> {
    let tsv = tsv.as_ref();
    let cache = cache.as_ref();
    let raw = fs::read(tsv).map_err(|e| Error::io(tsv, e))?;
    let digest = hex::encode(Sha256::digest(&raw));
    if cache.exists() {
        match Taxonomy::read_cache(cache, &digest, options.coverage) {
            Ok(Some(t)) => return Ok(t),
            Ok(None) => log::info!("taxonomy cache {} is stale, rebuilding", cache.display()),
            Err(e) => warn!("ignoring unreadable taxonomy cache: {e}"),
        }
    }
    let taxonomy = Taxonomy::from_reader(BufReader::new(raw.as_slice()), tsv, options)?;
    taxonomy.write_cache(cache, &digest)?;
    Ok(taxonomy)
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::parse(self.path, 0, "truncated taxonomy cache"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::parse(self.path, 0, "invalid utf-8 in cache"))
    }
}

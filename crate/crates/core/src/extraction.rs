//! Argument extraction from dependency-parsed text.
//!
//! Subjects come from `nsubj` and `agent` arcs, objects from `dobj` and
//! `nsubjpass` arcs whose head is verbal. Every occurrence also emits one
//! dependency pattern per child of the argument and one per sibling (other
//! dependent of the same head). Occurrences are aggregated per
//! `(verb, role, argument)`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{normalize, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subject,
    Object,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Subject, Role::Object];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Subject => "subject",
            Role::Object => "object",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "subject" | "subj" => Ok(Role::Subject),
            "object" | "obj" => Ok(Role::Object),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepToken {
    /// 1-based position.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// 0 is the root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub id: Option<String>,
    pub tokens: Vec<DepToken>,
}

impl Sentence {
    pub fn new(tokens: Vec<DepToken>) -> Self {
        Sentence { id: None, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Panics on an out-of-range index.
    pub fn token(&self, index: usize) -> &DepToken {
        &self.tokens[index - 1]
    }

    pub fn dependents(&self, head: usize) -> impl Iterator<Item = &DepToken> {
        self.tokens.iter().filter(move |t| t.head == head)
    }

    /// Structural check. `Ok(n_roots)` on success; root counts other than 1
    /// are tolerated and left to the caller to warn about.
    pub fn validate(&self) -> std::result::Result<usize, String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("empty sentence".into());
        }
        let mut roots = 0;
        for (pos, t) in self.tokens.iter().enumerate() {
            if t.index != pos + 1 {
                return Err(format!("token {} out of sequence (expected {})", t.index, pos + 1));
            }
            if t.head > n {
                return Err(format!("token {} has head {} beyond sentence length {}", t.index, t.head, n));
            }
            if t.head == t.index {
                return Err(format!("token {} is its own head", t.index));
            }
            if t.head == 0 {
                roots += 1;
            }
        }
        Ok(roots)
    }

    /// Membership mask (1-based, slot 0 unused) of the subtree rooted at `root`.
    pub fn subtree(&self, root: usize) -> Vec<bool> {
        let n = self.tokens.len();
        let mut mask = vec![false; n + 1];
        mask[root] = true;
        let mut stack = vec![root];
        while let Some(h) = stack.pop() {
            for t in self.dependents(h) {
                if !mask[t.index] {
                    mask[t.index] = true;
                    stack.push(t.index);
                }
            }
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Child,
    Sibling,
}

/// POS/deprel quadruple of the argument and one child or sibling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternKey {
    pub kind: PatternKind,
    pub pos_arg: String,
    pub dep_arg: String,
    pub pos_other: String,
    pub dep_other: String,
}

impl PatternKey {
    pub fn new(kind: PatternKind, pos_arg: &str, dep_arg: &str, pos_other: &str, dep_other: &str) -> Self {
        PatternKey {
            kind,
            pos_arg: pos_arg.to_owned(),
            dep_arg: dep_arg.to_owned(),
            pos_other: pos_other.to_owned(),
            dep_other: dep_other.to_owned(),
        }
    }
}

impl fmt::Display for PatternKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PatternKind::Child => "child",
            PatternKind::Sibling => "sibling",
        };
        write!(f, "{kind}|{}|{}|{}|{}", self.pos_arg, self.dep_arg, self.pos_other, self.dep_other)
    }
}

impl FromStr for PatternKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 5 {
            return Err(format!("pattern {s:?} must have 5 '|'-separated fields"));
        }
        let kind = match parts[0] {
            "child" => PatternKind::Child,
            "sibling" => PatternKind::Sibling,
            other => return Err(format!("unknown pattern kind {other:?}")),
        };
        if parts[1..].iter().any(|p| p.is_empty()) {
            return Err(format!("pattern {s:?} has an empty tag field"));
        }
        Ok(PatternKey::new(kind, parts[1], parts[2], parts[3], parts[4]))
    }
}

/// Aggregated observations of one `(verb, role, argument)` triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentRecord {
    pub verb: String,
    pub role: Role,
    pub arg: String,
    pub count: u64,
    pub patterns: BTreeMap<PatternKey, u64>,
}

impl ArgumentRecord {
    pub fn pattern_total(&self) -> u64 {
        self.patterns.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PosColumn {
    /// XPOS when present, else UPOS.
    #[default]
    Auto,
    Upos,
    Xpos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub max_window: usize,
    /// Head POS tags counted as verbal; a trailing `*` makes an entry a prefix.
    pub verb_tags: Vec<String>,
    /// Deprel aliases mapped onto the canonical labels before matching.
    pub deprel_aliases: BTreeMap<String, String>,
    pub pos_column: PosColumn,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        let aliases = [("obj", "dobj"), ("nsubj:pass", "nsubjpass"), ("obl:agent", "agent")];
        ExtractionConfig {
            max_window: 4,
            verb_tags: vec!["VB*".into(), "VERB".into()],
            deprel_aliases: aliases.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            pos_column: PosColumn::Auto,
        }
    }
}

impl ExtractionConfig {
    pub fn is_verbal(&self, pos: &str) -> bool {
        self.verb_tags.iter().any(|tag| match tag.strip_suffix('*') {
            Some(prefix) => pos.starts_with(prefix),
            None => pos == tag,
        })
    }

    pub fn canonical_deprel<'a>(&'a self, deprel: &'a str) -> &'a str {
        self.deprel_aliases.get(deprel).map(String::as_str).unwrap_or(deprel)
    }

    pub fn role_of(&self, deprel: &str) -> Option<Role> {
        match self.canonical_deprel(deprel) {
            "nsubj" | "agent" => Some(Role::Subject),
            "dobj" | "nsubjpass" => Some(Role::Object),
            _ => None,
        }
    }
}

type RecordKey = (String, Role, String);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct RecordData {
    count: u64,
    patterns: BTreeMap<PatternKey, u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub sentences: u64,
    pub malformed: u64,
    pub root_warnings: u64,
    pub instances: u64,
}

impl ExtractStats {
    fn merge(&mut self, other: &ExtractStats) {
        self.sentences += other.sentences;
        self.malformed += other.malformed;
        self.root_warnings += other.root_warnings;
        self.instances += other.instances;
    }
}

/// Order-independent aggregate of extracted instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    records: BTreeMap<RecordKey, RecordData>,
    pub stats: ExtractStats,
}

impl Extraction {
    pub fn new() -> Self {
        Self::default()
    }

    fn observe(&mut self, verb: String, role: Role, arg: String, count: u64, patterns: Vec<PatternKey>) {
        let entry = self.records.entry((verb, role, arg)).or_default();
        entry.count += count;
        for p in patterns {
            *entry.patterns.entry(p).or_insert(0) += count;
        }
        self.stats.instances += count;
    }

    /// Commutative, associative merge.
    pub fn merge(mut self, other: Extraction) -> Extraction {
        let (mut big, small) = if self.records.len() >= other.records.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, std::mem::take(&mut self))
        };
        for (key, data) in small.records {
            let entry = big.records.entry(key).or_default();
            entry.count += data.count;
            for (p, c) in data.patterns {
                *entry.patterns.entry(p).or_insert(0) += c;
            }
        }
        big.stats.merge(&small.stats);
        big
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in `(verb, role, arg)` order.
    pub fn records(&self) -> Vec<ArgumentRecord> {
        self.records
            .iter()
            .map(|((verb, role, arg), d)| ArgumentRecord {
                verb: verb.clone(),
                role: *role,
                arg: arg.clone(),
                count: d.count,
                patterns: d.patterns.clone(),
            })
            .collect()
    }

    /// Add one dependency tree.
    pub fn add_sentence(&mut self, sentence: &Sentence, taxonomy: &Taxonomy, config: &ExtractionConfig) {
        self.stats.sentences += 1;
        match sentence.validate() {
            Err(msg) => {
                warn!("skipping malformed sentence {}: {msg}", sentence.id.as_deref().unwrap_or("<unnamed>"));
                self.stats.malformed += 1;
                return;
            }
            Ok(1) => {}
            Ok(roots) => {
                warn!("sentence {} has {roots} roots", sentence.id.as_deref().unwrap_or("<unnamed>"));
                self.stats.root_warnings += 1;
            }
        }
        for arg in &sentence.tokens {
            let Some(role) = config.role_of(&arg.deprel) else { continue };
            if arg.head == 0 {
                continue;
            }
            let head = sentence.token(arg.head);
            if !config.is_verbal(&head.pos) {
                continue;
            }
            let verb = normalize(&head.lemma);
            let phrase = expand_phrase(sentence, arg.index, taxonomy, config.max_window);
            let patterns = patterns_for(sentence, arg, config);
            self.observe(verb, role, phrase, 1, patterns);
        }
    }

    /// Add one pre-aggregated arcs record.
    pub fn add_arc(&mut self, arc: &ArcRecord, config: &ExtractionConfig) {
        self.stats.sentences += 1;
        let Some(role) = config.role_of(&arc.arg.deprel) else { return };
        if !config.is_verbal(&arc.head_pos) {
            return;
        }
        let dep_arg = config.canonical_deprel(&arc.arg.deprel);
        let patterns = arc
            .siblings
            .iter()
            .map(|s| PatternKey::new(PatternKind::Sibling, &arc.arg.pos, dep_arg, &s.pos, config.canonical_deprel(&s.deprel)))
            .collect();
        self.observe(normalize(&arc.head_word), role, normalize(&arc.arg.word), arc.count, patterns);
    }
}

fn patterns_for(sentence: &Sentence, arg: &DepToken, config: &ExtractionConfig) -> Vec<PatternKey> {
    let dep_arg = config.canonical_deprel(&arg.deprel);
    let children = sentence
        .dependents(arg.index)
        .map(|c| PatternKey::new(PatternKind::Child, &arg.pos, dep_arg, &c.pos, config.canonical_deprel(&c.deprel)));
    let siblings = sentence
        .dependents(arg.head)
        .filter(|s| s.index != arg.index)
        .map(|s| PatternKey::new(PatternKind::Sibling, &arg.pos, dep_arg, &s.pos, config.canonical_deprel(&s.deprel)));
    children.chain(siblings).collect()
}

/// Sequential extraction over a sentence stream.
pub fn extract_instances<'a, I>(sentences: I, taxonomy: &Taxonomy, config: &ExtractionConfig) -> Extraction
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut out = Extraction::new();
    for s in sentences {
        out.add_sentence(s, taxonomy, config);
    }
    out
}

/// Parallel extraction; the result equals [`extract_instances`] on the same input.
pub fn extract_instances_par(sentences: &[Sentence], taxonomy: &Taxonomy, config: &ExtractionConfig) -> Extraction {
    sentences
        .par_iter()
        .fold(Extraction::new, |mut acc, s| {
            acc.add_sentence(s, taxonomy, config);
            acc
        })
        .reduce(Extraction::new, Extraction::merge)
}

/// Longest contiguous span (≤ `max_window` tokens) inside the argument's
/// subtree that contains the argument and names a taxonomy term; the
/// argument's lemma when no multi-token span matches.
pub fn expand_phrase(sentence: &Sentence, arg_index: usize, taxonomy: &Taxonomy, max_window: usize) -> String {
    let arg = sentence.token(arg_index);
    let lemma = normalize(&arg.lemma);
    let n = sentence.len();
    let in_subtree = sentence.subtree(arg_index);
    let longest = max_window.min(n);
    for len in (2..=longest).rev() {
        let first = arg_index.saturating_sub(len - 1).max(1);
        for start in first..=arg_index {
            let end = start + len - 1;
            if end > n {
                break;
            }
            if !(start..=end).all(|i| in_subtree[i]) {
                continue;
            }
            let surface = normalize(&join_span(sentence, start, end, None));
            if taxonomy.id_normalized(&surface).is_some() {
                return surface;
            }
            let lemmatized = normalize(&join_span(sentence, start, end, Some(arg_index)));
            if taxonomy.id_normalized(&lemmatized).is_some() {
                return lemmatized;
            }
        }
    }
    lemma
}

fn join_span(sentence: &Sentence, start: usize, end: usize, lemma_at: Option<usize>) -> String {
    (start..=end)
        .map(|i| {
            let t = sentence.token(i);
            if Some(i) == lemma_at {
                t.lemma.as_str()
            } else {
                t.form.as_str()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Result of reading one CoNLL-U document.
#[derive(Debug, Default)]
pub struct ConlluDocument {
    pub sentences: Vec<Sentence>,
    /// Sentences dropped at parse time, with the line where the problem was found.
    pub malformed: Vec<(usize, String)>,
}

/// Parse CoNLL-U text. Multiword-token and empty-node lines are ignored, as are
/// columns after DEPREL.
pub fn parse_conllu(text: &str, pos_column: PosColumn) -> ConlluDocument {
    let mut doc = ConlluDocument::default();
    let mut tokens = Vec::new();
    let mut id = None;
    let mut error: Option<(usize, String)> = None;

    let flush = |tokens: &mut Vec<DepToken>, id: &mut Option<String>, error: &mut Option<(usize, String)>, doc: &mut ConlluDocument| {
        if let Some(e) = error.take() {
            doc.malformed.push(e);
        } else if !tokens.is_empty() {
            doc.sentences.push(Sentence {
                id: id.clone(),
                tokens: std::mem::take(tokens),
            });
        }
        tokens.clear();
        *id = None;
    };

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut id, &mut error, &mut doc);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("sent_id") {
                id = Some(v.trim_start_matches([' ', '=']).trim().to_owned());
            }
            continue;
        }
        if error.is_some() {
            continue;
        }
        match parse_token_line(line, pos_column) {
            Ok(Some(tok)) => tokens.push(tok),
            Ok(None) => {}
            Err(msg) => error = Some((line_no, msg)),
        }
    }
    flush(&mut tokens, &mut id, &mut error, &mut doc);
    doc
}

fn parse_token_line(line: &str, pos_column: PosColumn) -> std::result::Result<Option<DepToken>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 8 {
        return Err(format!("expected 10 columns, found {}", cols.len()));
    }
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let index: usize = cols[0].parse().map_err(|_| format!("bad token id {:?}", cols[0]))?;
    if index == 0 {
        return Err("token id 0".into());
    }
    let head: usize = cols[6].parse().map_err(|_| format!("bad head {:?}", cols[6]))?;
    let form = cols[1].to_owned();
    let lemma = match cols[2] {
        "_" | "" => form.to_lowercase(),
        l => l.to_owned(),
    };
    let (upos, xpos) = (cols[3], cols[4]);
    let pos = match pos_column {
        PosColumn::Upos => upos,
        PosColumn::Xpos => xpos,
        PosColumn::Auto if xpos != "_" && !xpos.is_empty() => xpos,
        PosColumn::Auto => upos,
    };
    if pos.is_empty() || cols[7].is_empty() {
        return Err("empty POS or deprel".into());
    }
    Ok(Some(DepToken {
        index,
        form,
        lemma,
        pos: pos.to_owned(),
        head,
        deprel: cols[7].to_owned(),
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcToken {
    pub word: String,
    pub pos: String,
    pub deprel: String,
}

/// One line of the pre-aggregated arcs format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcRecord {
    pub head_word: String,
    pub head_pos: String,
    pub arg: ArcToken,
    pub siblings: Vec<ArcToken>,
    pub count: u64,
}

impl FromStr for ArcRecord {
    type Err = String;

    /// `head_word/pos<TAB>arg_word/pos/deprel[,sib_word/pos/deprel...]<TAB>count`
    fn from_str(line: &str) -> std::result::Result<Self, Self::Err> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(format!("expected 3 tab-separated columns, found {}", cols.len()));
        }
        let (head_word, head_pos) = cols[0]
            .rsplit_once('/')
            .filter(|(w, p)| !w.is_empty() && !p.is_empty())
            .ok_or_else(|| format!("bad head {:?}", cols[0]))?;
        let mut items = cols[1].split(',').map(parse_arc_token);
        let arg = items.next().ok_or("missing argument")??;
        let siblings = items.collect::<std::result::Result<Vec<_>, _>>()?;
        let count: u64 = cols[2].trim().parse().map_err(|_| format!("bad count {:?}", cols[2]))?;
        if count == 0 {
            return Err("count must be positive".into());
        }
        Ok(ArcRecord {
            head_word: head_word.to_owned(),
            head_pos: head_pos.to_owned(),
            arg,
            siblings,
            count,
        })
    }
}

fn parse_arc_token(s: &str) -> std::result::Result<ArcToken, String> {
    let mut parts = s.rsplitn(3, '/');
    let deprel = parts.next().unwrap_or_default();
    let pos = parts.next().unwrap_or_default();
    let word = parts.next().unwrap_or_default();
    if word.is_empty() || pos.is_empty() || deprel.is_empty() {
        return Err(format!("bad arc token {s:?}, expected word/pos/deprel"));
    }
    Ok(ArcToken {
        word: word.to_owned(),
        pos: pos.to_owned(),
        deprel: deprel.to_owned(),
    })
}

/// Parse arcs text, returning parsed records and `(line, message)` for bad lines.
pub fn parse_arcs(text: &str) -> (Vec<ArcRecord>, Vec<(usize, String)>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (no, line) in crate::io::data_lines(text) {
        match line.parse::<ArcRecord>() {
            Ok(r) => ok.push(r),
            Err(e) => bad.push((no, e)),
        }
    }
    (ok, bad)
}

/// `verb<TAB>role<TAB>arg<TAB>count<TAB>pattern:count;...`
pub fn write_records<W: Write + ?Sized>(out: &mut W, records: &[ArgumentRecord]) -> io::Result<()> {
    for r in records {
        let patterns: Vec<String> = r.patterns.iter().map(|(p, c)| format!("{p}:{c}")).collect();
        writeln!(out, "{}\t{}\t{}\t{}\t{}", r.verb, r.role, r.arg, r.count, patterns.join(";"))?;
    }
    Ok(())
}

pub fn parse_records(text: &str, origin: &Path) -> Result<Vec<ArgumentRecord>> {
    let mut out = Vec::new();
    for (no, line) in crate::io::data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(origin, no, format!("expected 5 columns, found {}", cols.len())));
        }
        let role = cols[1].parse::<Role>().map_err(|e| Error::parse(origin, no, e))?;
        let count: u64 = cols[3]
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| Error::parse(origin, no, format!("bad count {:?}", cols[3])))?;
        let mut patterns = BTreeMap::new();
        for item in cols[4].split(';').filter(|s| !s.is_empty()) {
            let (p, c) = item
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(origin, no, format!("bad pattern entry {item:?}")))?;
            let key: PatternKey = p.parse().map_err(|e: String| Error::parse(origin, no, e))?;
            let c: u64 = c
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| Error::parse(origin, no, format!("bad pattern count in {item:?}")))?;
            *patterns.entry(key).or_insert(0) += c;
        }
        out.push(ArgumentRecord {
            verb: cols[0].to_owned(),
            role,
            arg: cols[2].to_owned(),
            count,
            patterns,
        });
    }
    Ok(out)
}

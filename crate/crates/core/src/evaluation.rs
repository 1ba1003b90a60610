//! Argument identification: swap-based negatives, isA judgement against a
//! lexicon, and accuracy reporting.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::Role;
use crate::lexicon::ConceptLexicon;
use crate::taxonomy::{normalize, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "1" | "+" => Ok(Label::Positive),
            "negative" | "neg" | "0" | "-" => Ok(Label::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub verb: String,
    pub role: Role,
    pub term: String,
    pub label: Label,
    pub source_id: String,
}

impl EvalPair {
    pub fn new(verb: &str, role: Role, term: &str, label: Label, source_id: &str) -> Self {
        EvalPair {
            verb: normalize(verb),
            role,
            term: normalize(term),
            label,
            source_id: source_id.to_owned(),
        }
    }
}

/// `verb<TAB>role<TAB>term<TAB>label<TAB>source_id`
pub fn parse_pairs(text: &str, origin: &Path) -> Result<Vec<EvalPair>> {
    let mut out = Vec::new();
    for (no, line) in crate::io::data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(origin, no, format!("expected 5 columns, found {}", cols.len())));
        }
        let role = cols[1].parse().map_err(|e| Error::parse(origin, no, e))?;
        let label = cols[3].parse().map_err(|e| Error::parse(origin, no, e))?;
        out.push(EvalPair::new(cols[0], role, cols[2], label, cols[4]));
    }
    Ok(out)
}

pub fn write_pairs<W: Write + ?Sized>(out: &mut W, pairs: &[EvalPair]) -> io::Result<()> {
    for p in pairs {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", p.verb, p.role, p.term, p.label, p.source_id)?;
    }
    Ok(())
}

/// Manual relabeling: `verb<TAB>role<TAB>term<TAB>label`.
pub fn parse_overrides(text: &str, origin: &Path) -> Result<HashMap<(String, Role, String), Label>> {
    let mut out = HashMap::new();
    for (no, line) in crate::io::data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(origin, no, format!("expected 4 columns, found {}", cols.len())));
        }
        let role = cols[1].parse().map_err(|e| Error::parse(origin, no, e))?;
        let label = cols[3].parse().map_err(|e| Error::parse(origin, no, e))?;
        out.insert((normalize(cols[0]), role, normalize(cols[2])), label);
    }
    Ok(out)
}

pub fn apply_overrides(pairs: &mut [EvalPair], overrides: &HashMap<(String, Role, String), Label>) -> usize {
    let mut changed = 0;
    for p in pairs {
        if let Some(&label) = overrides.get(&(p.verb.clone(), p.role, p.term.clone())) {
            if p.label != label {
                p.label = label;
                changed += 1;
            }
        }
    }
    changed
}

/// Turn positives into a labelled set: ⌊fraction·n⌋ pairs are selected in a
/// seeded order and matched two at a time (same role, different verb,
/// different term); each matched couple exchanges terms and both become
/// negative. Everything else stays positive, in input order.
pub fn generate_swaps(pairs: &[EvalPair], seed: u64, fraction: f64) -> Result<Vec<EvalPair>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("swap fraction must be in [0, 1], got {fraction}")));
    }
    let mut out: Vec<EvalPair> = pairs.iter().map(|p| EvalPair { label: Label::Positive, ..p.clone() }).collect();
    if let Some(first) = pairs.first() {
        if pairs.iter().all(|p| p.verb == first.verb) {
            return Err(Error::SingleVerbSwap);
        }
    }
    let target = (fraction * pairs.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut waiting: BTreeMap<Role, Vec<usize>> = BTreeMap::new();
    let mut swapped = 0;
    for idx in order {
        if swapped + 2 > target {
            break;
        }
        let p = &pairs[idx];
        let queue = waiting.entry(p.role).or_default();
        match queue.iter().position(|&j| pairs[j].verb != p.verb && pairs[j].term != p.term) {
            Some(pos) => {
                let j = queue.remove(pos);
                out[idx].term = pairs[j].term.clone();
                out[j].term = pairs[idx].term.clone();
                out[idx].label = Label::Negative;
                out[j].label = Label::Negative;
                swapped += 2;
            }
            None => queue.push(idx),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub label: Label,
    /// First matching concept in weight order.
    pub matched: Option<String>,
    pub reason: String,
}

/// Positive iff the term is covered by one of the verb's concepts.
pub fn identify(lexicon: &ConceptLexicon, taxonomy: &Taxonomy, pair: &EvalPair) -> Prediction {
    let Some(entry) = lexicon.get(&pair.verb, pair.role) else {
        return Prediction {
            label: Label::Negative,
            matched: None,
            reason: "verb not in lexicon".into(),
        };
    };
    if !taxonomy.contains(&pair.term) {
        return Prediction {
            label: Label::Negative,
            matched: None,
            reason: "term not in taxonomy".into(),
        };
    }
    match entry.concepts.iter().find(|c| taxonomy.isa(&pair.term, &c.concept)) {
        Some(c) => Prediction {
            label: Label::Positive,
            matched: Some(c.concept.clone()),
            reason: format!("isA {}", c.concept),
        },
        None => Prediction {
            label: Label::Negative,
            matched: None,
            reason: "no concept covers term".into(),
        },
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += usize::from(ok);
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub index: usize,
    pub verb: String,
    pub role: Role,
    pub term: String,
    pub gold: Label,
    pub predicted: Label,
    pub source_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub overall: Tally,
    pub by_role: BTreeMap<Role, Tally>,
    pub errors: Vec<ErrorRow>,
}

impl AccuracyReport {
    pub fn accuracy(&self) -> f64 {
        self.overall.accuracy
    }
}

/// Fraction of predictions that match the gold labels, pooled and per role.
pub fn score(predictions: &[Prediction], gold: &[EvalPair]) -> Result<AccuracyReport> {
    if predictions.len() != gold.len() || gold.is_empty() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let mut overall = Tally::default();
    let mut by_role: BTreeMap<Role, Tally> = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, (p, g)) in predictions.iter().zip(gold).enumerate() {
        let ok = p.label == g.label;
        overall.add(ok);
        by_role.entry(g.role).or_default().add(ok);
        if !ok {
            errors.push(ErrorRow {
                index: i,
                verb: g.verb.clone(),
                role: g.role,
                term: g.term.clone(),
                gold: g.label,
                predicted: p.label,
                source_id: g.source_id.clone(),
                reason: p.reason.clone(),
            });
        }
    }
    Ok(AccuracyReport { overall, by_role, errors })
}

/// Identify every pair against a lexicon and score it.
pub fn evaluate(lexicon: &ConceptLexicon, taxonomy: &Taxonomy, pairs: &[EvalPair]) -> Result<(Vec<Prediction>, AccuracyReport)> {
    let predictions: Vec<Prediction> = pairs.iter().map(|p| identify(lexicon, taxonomy, p)).collect();
    let report = score(&predictions, pairs)?;
    Ok((predictions, report))
}

/// Column names for [`write_errors_csv`] rows.
pub const ERRORS_CSV_HEADER: &str = "mode,k,index,verb,role,term,gold,predicted,source_id,reason";

/// Error rows only; the caller writes [`ERRORS_CSV_HEADER`] once.
pub fn write_errors_csv<W: Write + ?Sized>(out: &mut W, mode: &str, k: Option<usize>, errors: &[ErrorRow]) -> io::Result<()> {
    let k = k.map(|k| k.to_string()).unwrap_or_default();
    for e in errors {
        writeln!(
            out,
            "{mode},{k},{},{},{},{},{},{},{},{}",
            e.index,
            csv_field(&e.verb),
            e.role,
            csv_field(&e.term),
            e.gold,
            e.predicted,
            csv_field(&e.source_id),
            csv_field(&e.reason)
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

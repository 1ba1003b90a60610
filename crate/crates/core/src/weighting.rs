//! Argument quality and concept weights.
//!
//! The quality of an argument for a verb is the base-2 entropy of its
//! dependency-pattern distribution multiplied by the sign of its pointwise
//! mutual information with the verb. A concept's weight is the sum of the
//! qualities (or, for the counting baseline, the occurrence counts) of the
//! arguments it covers.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{ArgumentRecord, Role};
use crate::taxonomy::{Taxonomy, TermId};

/// Where the marginals `p(v)` and `p(e)` are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalScope {
    /// Subject and object statistics are kept apart.
    #[default]
    WithinRole,
    /// Counts from both roles are pooled.
    CorpusWide,
}

/// How concept weights are rolled up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Sum of argument qualities.
    #[default]
    Ac,
    /// Sum of argument occurrence counts.
    Bl,
    /// Number of distinct covered arguments.
    BlTypes,
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::Ac => "ac",
            WeightMode::Bl => "bl",
            WeightMode::BlTypes => "bl-types",
        })
    }
}

/// Base-2 Shannon entropy of a pattern multiset. Empty and single-pattern
/// multisets give exactly 0.
pub fn pattern_entropy(record: &ArgumentRecord) -> f64 {
    entropy_of_counts(record.patterns.values().copied())
}

pub fn entropy_of_counts<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    if counts.len() <= 1 {
        return 0.0;
    }
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Entropy times the MI sign.
pub fn quality(entropy: f64, mi: i8) -> f64 {
    entropy * f64::from(mi)
}

type PairKey = (String, Role, String);

/// Maximum-likelihood co-occurrence counts.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    scope: MarginalScope,
    pair_count: BTreeMap<PairKey, u64>,
    // marginal keys carry the role only in within-role scope
    verb_marginal: HashMap<(Option<Role>, String), u64>,
    arg_marginal: HashMap<(Option<Role>, String), u64>,
    grand_total: HashMap<Option<Role>, u64>,
}

impl CorpusStats {
    pub fn from_records(records: &[ArgumentRecord], scope: MarginalScope) -> Self {
        let mut stats = CorpusStats {
            scope,
            ..Default::default()
        };
        for r in records {
            if r.count == 0 {
                continue;
            }
            *stats.pair_count.entry((r.verb.clone(), r.role, r.arg.clone())).or_insert(0) += r.count;
            let rk = stats.role_key(r.role);
            *stats.verb_marginal.entry((rk, r.verb.clone())).or_insert(0) += r.count;
            *stats.arg_marginal.entry((rk, r.arg.clone())).or_insert(0) += r.count;
            *stats.grand_total.entry(rk).or_insert(0) += r.count;
        }
        stats
    }

    fn role_key(&self, role: Role) -> Option<Role> {
        match self.scope {
            MarginalScope::WithinRole => Some(role),
            MarginalScope::CorpusWide => None,
        }
    }

    pub fn scope(&self) -> MarginalScope {
        self.scope
    }

    pub fn pair_count(&self, verb: &str, role: Role, arg: &str) -> Option<u64> {
        self.pair_count.get(&(verb.to_owned(), role, arg.to_owned())).copied()
    }

    pub fn verb_marginal(&self, verb: &str, role: Role) -> u64 {
        self.verb_marginal.get(&(self.role_key(role), verb.to_owned())).copied().unwrap_or(0)
    }

    pub fn arg_marginal(&self, arg: &str, role: Role) -> u64 {
        self.arg_marginal.get(&(self.role_key(role), arg.to_owned())).copied().unwrap_or(0)
    }

    pub fn grand_total(&self, role: Role) -> u64 {
        self.grand_total.get(&self.role_key(role)).copied().unwrap_or(0)
    }

    /// `+1` iff `p(v,e) > p(v)·p(e)`, decided on integer counts.
    pub fn binary_mi(&self, verb: &str, role: Role, arg: &str) -> Result<i8> {
        let joint = self.pair_count(verb, role, arg).ok_or_else(|| Error::PairNotFound {
            verb: verb.to_owned(),
            role: role.to_string(),
            arg: arg.to_owned(),
        })?;
        let lhs = joint as u128 * self.grand_total(role) as u128;
        let rhs = self.verb_marginal(verb, role) as u128 * self.arg_marginal(arg, role) as u128;
        Ok(if lhs > rhs { 1 } else { -1 })
    }
}

/// Free-function form of [`CorpusStats::binary_mi`].
pub fn binary_mi(stats: &CorpusStats, verb: &str, role: Role, arg: &str) -> Result<i8> {
    stats.binary_mi(verb, role, arg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityEntry {
    pub entropy: f64,
    pub mi: i8,
    pub quality: f64,
    /// Occurrence count of the argument, used by the counting baseline.
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityTable {
    entries: BTreeMap<PairKey, QualityEntry>,
}

impl QualityTable {
    /// Score every record; `records` are assumed already filtered by count.
    pub fn build(records: &[ArgumentRecord], scope: MarginalScope) -> Self {
        let stats = CorpusStats::from_records(records, scope);
        let entries: Vec<(PairKey, QualityEntry)> = records
            .par_iter()
            .filter(|r| r.count > 0)
            .map(|r| {
                let entropy = pattern_entropy(r);
                let mi = stats.binary_mi(&r.verb, r.role, &r.arg).expect("record is in its own stats");
                let q = quality(entropy, mi);
                let entry = QualityEntry {
                    entropy,
                    mi,
                    quality: if q == 0.0 { 0.0 } else { q },
                    count: r.count,
                };
                ((r.verb.clone(), r.role, r.arg.clone()), entry)
            })
            .collect();
        QualityTable {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn from_entries<I: IntoIterator<Item = ((String, Role, String), QualityEntry)>>(entries: I) -> Self {
        QualityTable {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, verb: &str, role: Role, arg: &str) -> Option<&QualityEntry> {
        self.entries.get(&(verb.to_owned(), role, arg.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Role, &str, &QualityEntry)> {
        self.entries.iter().map(|((v, r, a), e)| (v.as_str(), *r, a.as_str(), e))
    }

    /// Distinct `(verb, role)` keys in order.
    pub fn verb_roles(&self) -> Vec<(String, Role)> {
        let mut out: Vec<(String, Role)> = self.entries.keys().map(|(v, r, _)| (v.clone(), *r)).collect();
        out.dedup();
        out
    }

    /// Scored arguments of one `(verb, role)`, ordered by argument.
    pub fn arguments<'a>(&'a self, verb: &'a str, role: Role) -> impl Iterator<Item = (&'a str, &'a QualityEntry)> + 'a {
        let lo = (verb.to_owned(), role, String::new());
        self.entries
            .range(lo..)
            .take_while(move |((v, r, _), _)| v == verb && *r == role)
            .map(|((_, _, a), e)| (a.as_str(), e))
    }

    /// `verb role arg entropy mi quality count`, sorted by verb, role, then
    /// descending quality. The trailing count column feeds the baseline.
    pub fn write_tsv<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        let mut rows: Vec<(&PairKey, &QualityEntry)> = self.entries.iter().collect();
        rows.sort_by(|(ka, ea), (kb, eb)| {
            (&ka.0, ka.1)
                .cmp(&(&kb.0, kb.1))
                .then(eb.quality.total_cmp(&ea.quality))
                .then(ka.2.cmp(&kb.2))
        });
        for ((verb, role, arg), e) in rows {
            writeln!(
                out,
                "{verb}\t{role}\t{arg}\t{:.6}\t{}\t{:.6}\t{}",
                e.entropy,
                if e.mi > 0 { "+1" } else { "-1" },
                e.quality,
                e.count
            )?;
        }
        Ok(())
    }

    /// Parse a quality dump. Six-column rows (no count) load with count 0.
    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, line) in crate::io::data_lines(text) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 && cols.len() != 7 {
                return Err(Error::parse(origin, no, format!("expected 6 or 7 columns, found {}", cols.len())));
            }
            let role = cols[1].parse::<Role>().map_err(|e| Error::parse(origin, no, e))?;
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(origin, no, format!("bad number {s:?}")))
            };
            let entropy = num(cols[3])?;
            let mi: i8 = match cols[4] {
                "+1" | "1" => 1,
                "-1" => -1,
                other => return Err(Error::parse(origin, no, format!("mi must be +1 or -1, got {other:?}"))),
            };
            let quality = num(cols[5])?;
            let count = match cols.get(6) {
                Some(c) => c.parse::<u64>().map_err(|_| Error::parse(origin, no, format!("bad count {c:?}")))?,
                None => 0,
            };
            entries.insert(
                (cols[0].to_owned(), role, cols[2].to_owned()),
                QualityEntry { entropy, mi, quality, count },
            );
        }
        Ok(QualityTable { entries })
    }
}

fn contribution(entry: &QualityEntry, mode: WeightMode) -> f64 {
    match mode {
        WeightMode::Ac => entry.quality,
        WeightMode::Bl => entry.count as f64,
        WeightMode::BlTypes => 1.0,
    }
}

/// Weight of one concept for `(verb, role)`.
pub fn concept_weight(taxonomy: &Taxonomy, table: &QualityTable, verb: &str, role: Role, concept: TermId, mode: WeightMode) -> f64 {
    let mut w = 0.0;
    for (arg, entry) in table.arguments(verb, role) {
        if let Some(e) = taxonomy.id_normalized(arg) {
            if taxonomy.isa_id(e, concept) {
                w += contribution(entry, mode);
            }
        }
    }
    w
}

/// Weights of every concept covering at least one scored argument of
/// `(verb, role)`. Agrees exactly with [`concept_weight`] per concept.
pub fn concept_weights(taxonomy: &Taxonomy, table: &QualityTable, verb: &str, role: Role, mode: WeightMode) -> BTreeMap<TermId, f64> {
    let mut out: BTreeMap<TermId, f64> = BTreeMap::new();
    for (arg, entry) in table.arguments(verb, role) {
        let Some(e) = taxonomy.id_normalized(arg) else { continue };
        for &c in taxonomy.concepts_covering(e).expect("id from taxonomy") {
            *out.entry(c).or_insert(0.0) += contribution(entry, mode);
        }
    }
    out
}

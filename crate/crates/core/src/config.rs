//! Pipeline configuration and the provenance header written into every output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extraction::ExtractionConfig;
use crate::ratio::Ratio;
use crate::taxonomy::{CoverageMode, LoadOptions};
use crate::weighting::{MarginalScope, WeightMode};

/// Default overlap threshold.
pub const DEFAULT_TAU: Ratio = Ratio::new(1, 5);
/// Default concept-set sizes.
pub const DEFAULT_K: [usize; 3] = [5, 10, 15];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Conllu,
    Arcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Branch and bound.
    #[default]
    Bb,
    /// Exhaustive enumeration (small graphs only).
    Bruteforce,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Bb => "bb",
            SolverKind::Bruteforce => "bruteforce",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub taxonomy_path: PathBuf,
    pub coverage_mode: CoverageMode,
    pub strict_taxonomy: bool,
    pub corpus_paths: Vec<PathBuf>,
    pub format: CorpusFormat,
    pub tau: Ratio,
    pub k: Vec<usize>,
    pub mode: WeightMode,
    pub marginals: MarginalScope,
    pub min_count: u64,
    pub candidate_cap: Option<usize>,
    pub node_budget: Option<u64>,
    pub relax_k: bool,
    pub k_overrides: Option<PathBuf>,
    pub solver: SolverKind,
    pub seed: u64,
    pub swap_fraction: f64,
    pub extraction: ExtractionConfig,
    /// Not part of the provenance hash.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            taxonomy_path: PathBuf::new(),
            coverage_mode: CoverageMode::Direct,
            strict_taxonomy: false,
            corpus_paths: Vec::new(),
            format: CorpusFormat::Conllu,
            tau: DEFAULT_TAU,
            k: DEFAULT_K.to_vec(),
            mode: WeightMode::Ac,
            marginals: MarginalScope::WithinRole,
            min_count: 2,
            candidate_cap: Some(500),
            node_budget: None,
            relax_k: false,
            k_overrides: None,
            solver: SolverKind::Bb,
            seed: 0,
            swap_fraction: 0.5,
            extraction: ExtractionConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            coverage: self.coverage_mode,
            strict: self.strict_taxonomy,
        }
    }

    /// Value checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        if self.tau.numer() == 0 || self.tau > Ratio::new(1, 1) {
            return Err(Error::Config(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(Error::Config("every k must be at least 1".into()));
        }
        if self.extraction.max_window == 0 {
            return Err(Error::Config("max_window must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.swap_fraction) {
            return Err(Error::Config(format!("swap fraction must be in [0, 1], got {}", self.swap_fraction)));
        }
        if self.candidate_cap == Some(0) {
            return Err(Error::Config("candidate cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn require_taxonomy(&self) -> Result<()> {
        require_file(&self.taxonomy_path, "taxonomy")
    }

    /// Canonical JSON used for provenance.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Per-verb k from a `verb<TAB>k` file.
    pub fn load_k_overrides(&self) -> Result<BTreeMap<String, usize>> {
        let Some(path) = &self.k_overrides else { return Ok(BTreeMap::new()) };
        let text = crate::io::read_to_string(path)?;
        let mut out = BTreeMap::new();
        for (no, line) in crate::io::data_lines(&text) {
            let (verb, k) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, no, "expected verb<TAB>k"))?;
            let k: usize = k
                .trim()
                .parse()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::parse(path, no, format!("bad k {k:?}")))?;
            out.insert(crate::taxonomy::normalize(verb), k);
        }
        Ok(out)
    }
}

pub(crate) fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::Config(format!("no {what} path given")));
    }
    if !path.exists() {
        return Err(Error::Config(format!("{what} path {} does not exist", path.display())));
    }
    Ok(())
}

/// `# argconcept <kind> v1`, `# config: …`, `# config-hash: …` and any extra
/// `# key: value` lines.
pub fn write_header<W: Write + ?Sized>(out: &mut W, kind: &str, config: &PipelineConfig, extra: &[(&str, String)]) -> io::Result<()> {
    writeln!(out, "# argconcept {kind} v1")?;
    writeln!(out, "# config: {}", config.to_json())?;
    writeln!(out, "# config-hash: {}", config.hash())?;
    for (k, v) in extra {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

/// Value of a `# key: value` header line, if present.
pub fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# ")?.strip_prefix(key)?.strip_prefix(": "))
}

//! Verb argument conceptualization over an isA taxonomy.
//!
//! For each verb and syntactic role, argument instances are extracted from
//! dependency trees, weighted by pattern entropy and a binary mutual
//! information sign, and abstracted into k taxonomy concepts with low pairwise
//! overlap by solving a maximum-weight k-clique problem.
//!
//! The stages are usable on their own ([`taxonomy`], [`extraction`],
//! [`weighting`], [`solver`], [`lexicon`], [`evaluation`]) or chained over files
//! through [`pipeline`].

pub mod config;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod io;
pub mod lexicon;
pub mod pipeline;
pub mod ratio;
pub mod solver;
pub mod taxonomy;
pub mod weighting;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use extraction::Role;
pub use lexicon::ConceptLexicon;
pub use ratio::Ratio;
pub use taxonomy::Taxonomy;

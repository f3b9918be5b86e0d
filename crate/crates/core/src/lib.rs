//! Targeted data augmentation for low-resource event extraction.
//!
//! The pipeline retrieves corpus sentences sharing a trigger with an
//! annotated event structure, enriches the structure with type-compatible
//! entities from those sentences, asks a generation agent for new positive
//! and negative/asserted mentions, keeps only generations that pass a
//! two-way entailment check against the structure's template passage, and
//! curates the result into few-shot, epoch-plan and audit artifacts.

pub mod clients;
pub mod config;
pub mod corpus;
pub mod curation;
pub mod dataset;
pub mod enrich;
pub mod eval;
pub mod generation;
pub mod model;
pub mod ontology;
pub mod pipeline;
pub mod prompt;
pub mod text;
pub mod validation;

pub use model::{AnnotatedSentence, Argument, DatasetPartition, EventMention, EventStructure, PartitionKind};
pub use ontology::{load_ontology, EventOntology};

/// Derives an independent RNG stream from a seed and a key, so parallel
/// work units draw the same numbers regardless of scheduling.
pub fn substream(seed: u64, key: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::ontology::EventOntology;

    pub const FIXTURE_ONTOLOGY: &str = include_str!("../../../fixtures/ontology.toml");

    pub fn pardon_ontology() -> EventOntology {
        EventOntology::from_toml_str(FIXTURE_ONTOLOGY, "fixtures/ontology.toml").expect("fixture ontology is valid")
    }
}

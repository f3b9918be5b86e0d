//! Add-or-replace enrichment of event structures with context entities.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ContextCandidate;
use crate::model::{Argument, EventStructure};
use crate::ontology::{EventOntology, StructureError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Add,
    Replace,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub role: String,
    /// Empty for additions.
    pub old_filler: String,
    pub new_filler: String,
    pub new_filler_entity_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedStructure {
    pub base: EventStructure,
    pub edits: Vec<Edit>,
    pub result: EventStructure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplaceMode {
    AddOnly,
    #[default]
    AddOrReplace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichPolicy {
    pub mode: ReplaceMode,
    /// Chance that an entity with no vacant compatible role replaces an
    /// occupied one. The RNG is only consulted when this is below 1.
    pub replace_probability: f64,
}

impl Default for EnrichPolicy {
    fn default() -> Self {
        EnrichPolicy { mode: ReplaceMode::AddOrReplace, replace_probability: 1.0 }
    }
}

impl EnrichPolicy {
    pub fn add_only() -> Self {
        EnrichPolicy { mode: ReplaceMode::AddOnly, replace_probability: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("edit {index}: no `{role}` argument with filler `{filler}` to replace")]
    MissingFiller { index: usize, role: String, filler: String },
}

/// Re-applies an edit log to a base structure.
pub fn apply_edits(base: &EventStructure, edits: &[Edit]) -> Result<EventStructure, ReplayError> {
    let mut out = base.clone();
    for (index, e) in edits.iter().enumerate() {
        match e.kind {
            EditKind::Add => out.arguments.push(Argument::new(&e.role, &e.new_filler)),
            EditKind::Replace => {
                let slot = out
                    .arguments
                    .iter_mut()
                    .find(|a| a.role == e.role && a.filler == e.old_filler)
                    .ok_or_else(|| ReplayError::MissingFiller {
                        index,
                        role: e.role.clone(),
                        filler: e.old_filler.clone(),
                    })?;
                slot.filler = e.new_filler.clone();
            }
        }
    }
    Ok(out)
}

/// Tailors `structure` with the entities of one context candidate.
///
/// Entities are taken in candidate order. Each one goes to the first vacant
/// role (declaration order) whose allowed entity types include it; failing
/// that, and if the policy allows, it replaces the first filler of the first
/// compatible occupied role not already edited in this call. Anything else is
/// skipped. The trigger is never touched.
pub fn enrich<R: Rng + ?Sized>(
    structure: &EventStructure,
    candidate: &ContextCandidate,
    ontology: &EventOntology,
    policy: &EnrichPolicy,
    rng: &mut R,
) -> Result<EnrichedStructure, StructureError> {
    let def = ontology.validate_structure(structure)?;
    let mut result = structure.clone();
    let mut edits = Vec::new();
    let mut touched: BTreeSet<&str> = BTreeSet::new();
    for ent in &candidate.entities {
        let compatible: Vec<&str> =
            def.roles.iter().filter(|r| r.accepts(&ent.entity_type)).map(|r| r.name.as_str()).collect();
        if let Some(role) = compatible.iter().copied().find(|r| result.is_vacant(r)) {
            result.arguments.push(Argument::new(role, &ent.text));
            touched.insert(role);
            edits.push(Edit {
                kind: EditKind::Add,
                role: role.to_owned(),
                old_filler: String::new(),
                new_filler: ent.text.clone(),
                new_filler_entity_type: ent.entity_type.clone(),
            });
            continue;
        }
        if policy.mode == ReplaceMode::AddOnly {
            continue;
        }
        let Some(role) = compatible.iter().copied().find(|r| !touched.contains(r)) else {
            continue;
        };
        if policy.replace_probability < 1.0 && !rng.random_bool(policy.replace_probability.clamp(0.0, 1.0)) {
            continue;
        }
        let slot = result.arguments.iter_mut().find(|a| a.role == role).expect("occupied role has a filler");
        if slot.filler == ent.text {
            continue;
        }
        let old = std::mem::replace(&mut slot.filler, ent.text.clone());
        touched.insert(role);
        edits.push(Edit {
            kind: EditKind::Replace,
            role: role.to_owned(),
            old_filler: old,
            new_filler: ent.text.clone(),
            new_filler_entity_type: ent.entity_type.clone(),
        });
    }
    Ok(EnrichedStructure { base: structure.clone(), edits, result })
}

/// One enrichment together with the context it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichedVariant {
    pub structure_index: usize,
    pub enriched: EnrichedStructure,
    pub context: ContextCandidate,
}

/// Enriches each structure with its candidates, keeping at most
/// `max_variants` distinct results per structure.
///
/// Candidates are visited in an order shuffled by the RNG substream for
/// `(seed, structure index)`, so results do not depend on how structures are
/// scheduled. The first candidate producing a given result is kept.
///
/// # Panics
/// Panics if `max_variants` is zero or the slices differ in length.
pub fn enrich_batch(
    structures: &[EventStructure],
    candidates_per_structure: &[Vec<ContextCandidate>],
    ontology: &EventOntology,
    policy: &EnrichPolicy,
    seed: u64,
    max_variants: usize,
) -> Result<Vec<Vec<EnrichedVariant>>, StructureError> {
    assert!(max_variants >= 1, "max_variants must be at least 1");
    assert_eq!(structures.len(), candidates_per_structure.len(), "one candidate list per structure");
    use rayon::prelude::*;
    structures
        .par_iter()
        .zip(candidates_per_structure.par_iter())
        .enumerate()
        .map(|(i, (s, cands))| {
            let mut rng = crate::substream(seed, i as u64);
            let mut order: Vec<&ContextCandidate> = cands.iter().filter(|c| !c.entities.is_empty()).collect();
            order.shuffle(&mut rng);
            let mut out: Vec<EnrichedVariant> = Vec::new();
            for c in order {
                if out.len() >= max_variants {
                    break;
                }
                let e = enrich(s, c, ontology, policy, &mut rng)?;
                if out.iter().all(|v| v.enriched.result != e.result) {
                    out.push(EnrichedVariant { structure_index: i, enriched: e, context: c.clone() });
                }
            }
            Ok(out)
        })
        .collect()
}

//! Domain types: event structures, annotated sentences and dataset partitions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::generation::GeneratedExample;
use crate::text;

/// Reserved non-event label. Never declared in an ontology file.
pub const OTHER_LABEL: &str = "Other";

/// One `(role, filler)` pair of an event structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub filler: String,
}

impl Argument {
    pub fn new(role: impl Into<String>, filler: impl Into<String>) -> Self {
        Argument { role: role.into(), filler: filler.into() }
    }
}

/// A trigger plus its arguments for a single event type.
///
/// Roles may repeat (two adjudicators) or be absent entirely.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventStructure {
    pub event_type: String,
    pub trigger: String,
    pub arguments: Vec<Argument>,
}

impl EventStructure {
    pub fn new(event_type: impl Into<String>, trigger: impl Into<String>) -> Self {
        EventStructure { event_type: event_type.into(), trigger: trigger.into(), arguments: Vec::new() }
    }

    pub fn with(mut self, role: impl Into<String>, filler: impl Into<String>) -> Self {
        self.arguments.push(Argument::new(role, filler));
        self
    }

    pub fn fillers<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.arguments.iter().filter(move |a| a.role == role).map(|a| a.filler.as_str())
    }

    pub fn is_vacant(&self, role: &str) -> bool {
        !self.arguments.iter().any(|a| a.role == role)
    }
}

/// A trigger occurrence with character offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// An argument occurrence with character offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentSpan {
    pub role: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// An event mention anchored in a sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMention {
    pub event_type: String,
    pub trigger: TriggerSpan,
    #[serde(default)]
    pub arguments: Vec<ArgumentSpan>,
}

impl EventMention {
    /// The offset-free structure of this mention.
    pub fn structure(&self) -> EventStructure {
        EventStructure {
            event_type: self.event_type.clone(),
            trigger: self.trigger.text.clone(),
            arguments: self.arguments.iter().map(|a| Argument::new(&a.role, &a.text)).collect(),
        }
    }

    /// Anchors a structure in `text` by locating the trigger and each filler.
    /// Returns `None` when the trigger cannot be found; unlocatable arguments
    /// are dropped.
    pub fn align(structure: &EventStructure, text: &str) -> Option<EventMention> {
        let (start, end) = text::find_char_span(text, &structure.trigger)?;
        let trigger = TriggerSpan { text: text::char_slice(text, start, end)?.to_owned(), start, end };
        let arguments = structure
            .arguments
            .iter()
            .filter_map(|a| {
                let (start, end) = text::find_char_span(text, &a.filler)?;
                Some(ArgumentSpan {
                    role: a.role.clone(),
                    text: text::char_slice(text, start, end)?.to_owned(),
                    start,
                    end,
                })
            })
            .collect();
        Some(EventMention { event_type: structure.event_type.clone(), trigger, arguments })
    }
}

/// A sentence and its event annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence_id: String,
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<EventMention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Box<GeneratedExample>>,
}

impl AnnotatedSentence {
    pub fn new(sentence_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        AnnotatedSentence {
            sentence_id: sentence_id.into(),
            tokens: text::whitespace_tokens(&text),
            text,
            mentions: Vec::new(),
            provenance: None,
        }
    }

    /// Adds a mention located by string search. Panics if the trigger is absent;
    /// intended for fixtures and tests.
    pub fn with_structure(mut self, structure: &EventStructure) -> Self {
        let m = EventMention::align(structure, &self.text)
            .unwrap_or_else(|| panic!("trigger `{}` not found in `{}`", structure.trigger, self.text));
        self.mentions.push(m);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Base,
    Novel,
    Generated,
    GeneratedValidated,
}

impl PartitionKind {
    pub fn is_generated(self) -> bool {
        matches!(self, PartitionKind::Generated | PartitionKind::GeneratedValidated)
    }
}

/// A typed container of annotated sentences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetPartition {
    pub kind: PartitionKind,
    pub examples: Vec<AnnotatedSentence>,
}

impl DatasetPartition {
    pub fn new(kind: PartitionKind) -> Self {
        DatasetPartition { kind, examples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn event_types(&self) -> BTreeSet<String> {
        self.mentions().map(|m| m.event_type.clone()).collect()
    }

    pub fn mentions(&self) -> impl Iterator<Item = &EventMention> {
        self.examples.iter().flat_map(|s| s.mentions.iter())
    }

    pub fn mention_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for m in self.mentions() {
            *counts.entry(m.event_type.clone()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("base and novel partitions share event types: {shared:?}")]
pub struct DisjointnessError {
    pub shared: Vec<String>,
}

/// Checks that base and novel event types only overlap on the reserved label.
pub fn check_disjoint(base: &DatasetPartition, novel: &DatasetPartition) -> Result<(), DisjointnessError> {
    let base_types = base.event_types();
    let shared: Vec<String> = novel
        .event_types()
        .into_iter()
        .filter(|t| t != OTHER_LABEL && base_types.contains(t))
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(DisjointnessError { shared })
    }
}

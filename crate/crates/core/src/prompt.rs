//! Template passages and generation prompts.
//!
//! Placeholders understood in configured prompt strings:
//! `{event_type_name}`, `{list_of_context_entities}` and `{event_template}`
//! in the positive instruction, and `[SENT]` in the rewrite prompts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ContextCandidate;
use crate::enrich::EnrichedStructure;
use crate::model::EventStructure;
use crate::ontology::{EventOntology, StructureError, TemplatePiece};

pub const TRIGGER_CLAUSE: &str = "Event trigger is ";
pub const SENT_SLOT: &str = "[SENT]";
pub const ASSERTED_PREFIX: &str = "It is asserted but did not necessarily occur that ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    Believed,
    Hypothetical,
    Promised,
    Desired,
}

impl Polarity {
    pub const REWRITES: [Polarity; 5] =
        [Polarity::Negative, Polarity::Believed, Polarity::Hypothetical, Polarity::Promised, Polarity::Desired];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Believed => "believed",
            Polarity::Hypothetical => "hypothetical",
            Polarity::Promised => "promised",
            Polarity::Desired => "desired",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Polarity::Positive]
            .into_iter()
            .chain(Polarity::REWRITES)
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PromptError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown prompt kind `{0}`")]
    UnknownKind(String),
    #[error("`{0}` is not a rewrite kind")]
    NotRewrite(Polarity),
    #[error("source sentence is empty")]
    EmptySource,
    #[error("prompt for `{kind}` must contain `{placeholder}` exactly once")]
    Placeholder { kind: String, placeholder: String },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextualizeMode {
    /// Vacant roles keep the template's generic slot phrase.
    Strict,
    /// Vacant roles read "an unspecific <Role>".
    UnspecificFill,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatePassage {
    pub event_type: String,
    pub text: String,
    /// Roles rendered with the unspecific phrase.
    pub unspecified_roles: Vec<String>,
}

pub fn unspecific_phrase(role: &str) -> String {
    format!("an unspecific {role}")
}

/// Renders a structure as "Event trigger is <trigger>. <argument template>".
pub fn textualize(
    structure: &EventStructure,
    ontology: &EventOntology,
    mode: TextualizeMode,
) -> Result<TemplatePassage, StructureError> {
    render(structure, ontology, mode, None)
}

/// Strict rendering except that `role` reads "an unspecific <role>" even
/// when it is filled.
pub fn textualize_with_unspecific_role(
    structure: &EventStructure,
    ontology: &EventOntology,
    role: &str,
) -> Result<TemplatePassage, StructureError> {
    render(structure, ontology, TextualizeMode::Strict, Some(role))
}

fn render(
    structure: &EventStructure,
    ontology: &EventOntology,
    mode: TextualizeMode,
    forced: Option<&str>,
) -> Result<TemplatePassage, StructureError> {
    let def = ontology.validate_structure(structure)?;
    let mut args = String::new();
    let mut unspecified_roles = Vec::new();
    for piece in &def.template {
        match piece {
            TemplatePiece::Text(t) => args.push_str(t),
            TemplatePiece::Slot(i) => {
                let role = &def.roles[*i];
                let fillers: Vec<&str> = structure.fillers(&role.name).collect();
                if forced == Some(role.name.as_str()) || fillers.is_empty() && mode == TextualizeMode::UnspecificFill {
                    args.push_str(&unspecific_phrase(&role.name));
                    unspecified_roles.push(role.name.clone());
                } else if !fillers.is_empty() {
                    args.push_str(&fillers.join(" and "));
                } else {
                    args.push_str(&role.slot_phrase);
                }
            }
        }
    }
    Ok(TemplatePassage {
        event_type: def.name.clone(),
        text: format!("{TRIGGER_CLAUSE}{}. {args}", structure.trigger),
        unspecified_roles,
    })
}

/// The passage with the argument template marked as asserted rather than
/// occurred, for validating non-positive generations.
pub fn asserted_passage(p: &TemplatePassage) -> TemplatePassage {
    let text = match p.text.split_once(". ") {
        Some((trigger, args)) => format!("{trigger}. {ASSERTED_PREFIX}{args}"),
        None => format!("{ASSERTED_PREFIX}{}", p.text),
    };
    TemplatePassage { text, ..p.clone() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum PromptSource {
    Structure { enriched: EnrichedStructure, context: ContextCandidate },
    /// `trigger` is a hint for agents that edit the sentence mechanically;
    /// it is not part of the prompt text.
    Sentence {
        text: String,
        #[serde(default)]
        trigger: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationPrompt {
    pub kind: Polarity,
    pub system_preamble: String,
    pub user_message: String,
    pub source: PromptSource,
}

impl GenerationPrompt {
    /// Hex SHA-256 over the kind and both message strings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind.as_str().as_bytes());
        h.update([0]);
        h.update(self.system_preamble.as_bytes());
        h.update([0]);
        h.update(self.user_message.as_bytes());
        hex::encode(h.finalize())
    }

    /// System preamble and user message as one instruction string.
    pub fn full_text(&self) -> String {
        match (self.system_preamble.is_empty(), self.user_message.is_empty()) {
            (true, _) => self.user_message.clone(),
            (_, true) => self.system_preamble.clone(),
            _ => format!("{} {}", self.system_preamble, self.user_message),
        }
    }
}

/// Prompt strings. Defaults are the published instruction and rewrite
/// prompts; the positive instruction is split into a system preamble and a
/// user message that join with a single space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub positive_system: String,
    pub positive_user: String,
    pub rewrites: BTreeMap<Polarity, String>,
}

pub const DEFAULT_POSITIVE_SYSTEM: &str = "You are a helpful assistant in generating fluent and reasonable sentences with event mentions. An Event is a specific occurrence involving participants. An Event is something that happens. An Event can frequently be described as a change of state. Please be sure the given event information is in the generated sentence. However, the given context information is optional in generation.";

pub const DEFAULT_POSITIVE_USER: &str =
    "Generate a sentence with {event_type_name} event, with optional context information: {list_of_context_entities}. {event_template}.";

pub const DEFAULT_NEGATIVE: &str = "An Event is NEGATIVE when it is explicitly indicated that the Event did not occur. Negative example 1: His wife was sitting in the backseat and was 'not hurt'. Negative example 2: Yeltsin ordered Skuratov's suspension, but parliament repeatedly 'refused to sack' him. Given the generated sentence, \"[SENT]\", change it into a negative expression that the Event did not occur.";

pub const DEFAULT_BELIEVED: &str = "Believed Events are event mentions that some people or organizations think or believe would happen but are not necessarily real or true event occurrences. Example 1: Rumors of 'arrests' circulated in Vancouver. Example 2: The charity was suspected of 'giving' money to al Qaeda. Given the generated sentence you provide, '[SENT]', change it into a believed event sentence:";

pub const DEFAULT_HYPOTHETICAL: &str = "Hypothetical events are event mentions that are supposed to happen but are not necessarily real or true event occurrences. Example 1: Should he not 'pay' the money, they would 'kill' him. Example 2: A demonstration of how he would behave if he were to 'become' President. Given the generated sentence you provide, '[SENT]', change it into a hypothetical event sentence:";

pub const DEFAULT_PROMISED: &str = "Promised Events are event mentions that are promised to happen but are not necessarily real or true event occurrences. Example 1: He said he would 'leave' town. Example 2: Promises of 'aid' made by Arab and European countries. Given the generated sentence you provide, '[SENT]', change it into a promised event sentence:";

pub const DEFAULT_DESIRED: &str = "Desired events are event mentions that are desired to happen but not necessarily real or true event occurrences. Example: They wanted to 'acquire' the company last year. Given the generated sentence you provide, \"[SENT]\", change it into a Desired event sentence:";

impl Default for PromptConfig {
    fn default() -> Self {
        let rewrites = [
            (Polarity::Negative, DEFAULT_NEGATIVE),
            (Polarity::Believed, DEFAULT_BELIEVED),
            (Polarity::Hypothetical, DEFAULT_HYPOTHETICAL),
            (Polarity::Promised, DEFAULT_PROMISED),
            (Polarity::Desired, DEFAULT_DESIRED),
        ]
        .into_iter()
        .map(|(k, v)| (k, v.to_owned()))
        .collect();
        PromptConfig {
            positive_system: DEFAULT_POSITIVE_SYSTEM.to_owned(),
            positive_user: DEFAULT_POSITIVE_USER.to_owned(),
            rewrites,
        }
    }
}

impl PromptConfig {
    /// Checks placeholders: every rewrite kind present with one `[SENT]`,
    /// and the positive strings mention each placeholder once.
    pub fn validate(&self) -> Result<(), PromptError> {
        for kind in Polarity::REWRITES {
            let ok = self.rewrites.get(&kind).is_some_and(|t| t.matches(SENT_SLOT).count() == 1);
            if !ok {
                return Err(PromptError::Placeholder { kind: kind.to_string(), placeholder: SENT_SLOT.into() });
            }
        }
        let positive = format!("{} {}", self.positive_system, self.positive_user);
        for ph in ["{event_type_name}", "{list_of_context_entities}", "{event_template}"] {
            if positive.matches(ph).count() != 1 {
                return Err(PromptError::Placeholder { kind: "positive".into(), placeholder: ph.into() });
            }
        }
        Ok(())
    }

    pub fn rewrite_template(&self, kind: Polarity) -> Result<&str, PromptError> {
        if kind == Polarity::Positive {
            return Err(PromptError::NotRewrite(kind));
        }
        self.rewrites.get(&kind).map(String::as_str).ok_or_else(|| PromptError::UnknownKind(kind.to_string()))
    }
}

fn fill_positive(s: &str, event_type: &str, entities: &str, template: &str) -> String {
    s.replace("{event_type_name}", event_type)
        .replace("{list_of_context_entities}", entities)
        .replace("{event_template}", template)
}

/// Builds the positive generation instruction for an enriched structure.
pub fn build_positive_prompt(
    enriched: &EnrichedStructure,
    context: &ContextCandidate,
    ontology: &EventOntology,
    config: &PromptConfig,
) -> Result<GenerationPrompt, PromptError> {
    let passage = textualize(&enriched.result, ontology, TextualizeMode::Strict)?;
    // The instruction supplies the closing period itself.
    let template = passage.text.trim_end().trim_end_matches('.');
    let entities = context.entities.iter().map(|e| e.text.as_str()).collect::<Vec<_>>().join(", ");
    let et = &enriched.result.event_type;
    Ok(GenerationPrompt {
        kind: Polarity::Positive,
        system_preamble: fill_positive(&config.positive_system, et, &entities, template),
        user_message: fill_positive(&config.positive_user, et, &entities, template),
        source: PromptSource::Structure { enriched: enriched.clone(), context: context.clone() },
    })
}

/// Builds one of the rewrite prompts around a previously generated sentence.
pub fn build_rewrite_prompt(
    kind: Polarity,
    source_sentence: &str,
    config: &PromptConfig,
) -> Result<GenerationPrompt, PromptError> {
    let template = config.rewrite_template(kind)?;
    if source_sentence.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    Ok(GenerationPrompt {
        kind,
        system_preamble: String::new(),
        user_message: template.replacen(SENT_SLOT, source_sentence, 1),
        source: PromptSource::Sentence { text: source_sentence.to_owned(), trigger: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextEntity;
    use crate::testutil::pardon_ontology;

    fn enriched_pardon() -> EventStructure {
        EventStructure::new("Justice:Pardon", "clear")
            .with("Adjudicator", "court")
            .with("Adjudicator", "board of pardon and paroles")
            .with("Defendant", "Paul Laxalt")
            .with("Place", "Nevada")
    }

    #[test]
    fn strict_fill_of_pardon() {
        let p = textualize(&enriched_pardon(), &pardon_ontology(), TextualizeMode::Strict).unwrap();
        assert_eq!(
            p.text,
            "Event trigger is clear. Paul Laxalt in Nevada was pardoned by court and board of pardon and paroles."
        );
        assert!(p.unspecified_roles.is_empty());
    }

    #[test]
    fn modes_differ_only_on_vacant_roles() {
        let mut s = enriched_pardon();
        s.arguments.retain(|a| a.role != "Place");
        let o = pardon_ontology();
        let strict = textualize(&s, &o, TextualizeMode::Strict).unwrap();
        let unspec = textualize(&s, &o, TextualizeMode::UnspecificFill).unwrap();
        assert!(strict.text.contains("Paul Laxalt in somewhere was"));
        assert!(unspec.text.contains("Paul Laxalt in an unspecific Place was"));
        assert_eq!(unspec.unspecified_roles, vec!["Place"]);
        assert_eq!(strict.text.replace("somewhere", "an unspecific Place"), unspec.text);
    }

    #[test]
    fn zero_arguments_strict() {
        let p = textualize(&EventStructure::new("Justice:Pardon", "pardon"), &pardon_ontology(), TextualizeMode::Strict)
            .unwrap();
        assert_eq!(p.text, "Event trigger is pardon. somebody in somewhere was pardoned by some adjudicator.");
    }

    #[test]
    fn unknown_type_rejected() {
        let err = textualize(&EventStructure::new("Nope", "x"), &pardon_ontology(), TextualizeMode::Strict);
        assert!(matches!(err, Err(StructureError::UnknownEventType(_))));
    }

    #[test]
    fn positive_prompt_matches_instruction() {
        let s = enriched_pardon();
        let e = EnrichedStructure { base: s.clone(), edits: vec![], result: s };
        let ctx = ContextCandidate {
            source_sentence_id: 3,
            entities: vec![
                ContextEntity::new("Paul Laxalt", "PER"),
                ContextEntity::new("1988", "DATE"),
                ContextEntity::new("Nevada", "GPE"),
            ],
        };
        let cfg = PromptConfig::default();
        let p = build_positive_prompt(&e, &ctx, &pardon_ontology(), &cfg).unwrap();
        assert!(p.full_text().contains("Generate a sentence with Justice:Pardon event"));
        assert!(p.full_text().ends_with(
            "optional context information: Paul Laxalt, 1988, Nevada. Event trigger is clear. Paul Laxalt in Nevada was pardoned by court and board of pardon and paroles."
        ));
        assert_eq!(p.hash(), build_positive_prompt(&e, &ctx, &pardon_ontology(), &cfg).unwrap().hash());
        let empty = ContextCandidate { source_sentence_id: 3, entities: vec![] };
        let p = build_positive_prompt(&e, &empty, &pardon_ontology(), &cfg).unwrap();
        assert!(p.user_message.contains("context information: . Event trigger"));
    }

    #[test]
    fn rewrite_prompt_errors() {
        let cfg = PromptConfig::default();
        assert_eq!(build_rewrite_prompt(Polarity::Negative, "  ", &cfg), Err(PromptError::EmptySource));
        assert_eq!(build_rewrite_prompt(Polarity::Positive, "x", &cfg), Err(PromptError::NotRewrite(Polarity::Positive)));
        assert!("sarcastic".parse::<Polarity>().is_err());
        let p = build_rewrite_prompt(Polarity::Believed, "He left.", &cfg).unwrap();
        assert!(p.user_message.contains("Rumors of 'arrests' circulated"));
        assert!(p.user_message.contains("'He left.'"));
        cfg.validate().unwrap();
    }

    #[test]
    fn asserted_prefix_goes_after_trigger_clause() {
        let p = textualize(&enriched_pardon(), &pardon_ontology(), TextualizeMode::Strict).unwrap();
        assert_eq!(
            asserted_passage(&p).text,
            "Event trigger is clear. It is asserted but did not necessarily occur that Paul Laxalt in Nevada was pardoned by court and board of pardon and paroles."
        );
    }
}

//! Event ontology: event types, typed argument roles and per-type templates.
//!
//! The ontology is read from a TOML file:
//!
//! ```toml
//! [[event_types]]
//! name = "Justice:Pardon"
//! template = "somebody in somewhere was pardoned by some adjudicator."
//! # optional sentence frame used by the offline stub agent
//! frame = "The {Adjudicator.1}[ in {Place}] {trigger}[ {Defendant}]."
//!
//! [[event_types.roles]]
//! name = "Defendant"
//! entity_types = ["PER"]
//! slot = "somebody"
//! ```
//!
//! Each role's `slot` phrase must occur exactly once in the type's
//! `template`, at word boundaries. Frames use `{Role}` (all fillers joined
//! with "and"), `{Role.N}` (N-th filler, 1-based), `{trigger}`, and
//! `[...]` for a group that is dropped when any placeholder inside it is vacant.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::model::{EventStructure, OTHER_LABEL};

#[derive(Debug, thiserror::Error)]
pub enum OntologyError {
    #[error("cannot read ontology {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("invalid ontology ({}): {message}", location(.event_type, .role))]
    Invalid { event_type: Option<String>, role: Option<String>, message: String },
}

fn location(event_type: &Option<String>, role: &Option<String>) -> String {
    match (event_type, role) {
        (Some(t), Some(r)) => format!("event type `{t}`, role `{r}`"),
        (Some(t), None) => format!("event type `{t}`"),
        _ => "ontology".to_owned(),
    }
}

fn invalid(event_type: Option<&str>, role: Option<&str>, message: impl Into<String>) -> OntologyError {
    OntologyError::Invalid {
        event_type: event_type.map(str::to_owned),
        role: role.map(str::to_owned),
        message: message.into(),
    }
}

/// A structure that does not conform to the ontology.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("unknown event type `{0}`")]
    UnknownEventType(String),
    #[error("`{role}` is not a declared role of `{event_type}`")]
    UndeclaredRole { event_type: String, role: String },
    #[error("empty trigger")]
    EmptyTrigger,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleDef {
    pub name: String,
    pub entity_types: BTreeSet<String>,
    pub slot_phrase: String,
}

impl RoleDef {
    pub fn accepts(&self, entity_type: &str) -> bool {
        self.entity_types.contains(entity_type)
    }
}

/// Parsed argument template: literal text interleaved with role slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemplatePiece {
    Text(String),
    Slot(usize),
}

/// Parsed stub-agent frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FramePiece {
    Text(String),
    Trigger,
    /// Role index and optional 1-based filler position.
    Role(usize, Option<usize>),
    Optional(Vec<FramePiece>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventTypeDef {
    pub name: String,
    pub roles: Vec<RoleDef>,
    pub template_source: String,
    pub template: Vec<TemplatePiece>,
    pub frame: Option<Vec<FramePiece>>,
}

impl EventTypeDef {
    pub fn role(&self, name: &str) -> Option<&RoleDef> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn role_index(&self, name: &str) -> Option<usize> {
        self.roles.iter().position(|r| r.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventOntology {
    types: Vec<EventTypeDef>,
    by_name: HashMap<String, usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOntology {
    #[serde(default)]
    event_types: Vec<RawEventType>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEventType {
    name: String,
    template: String,
    #[serde(default)]
    frame: Option<String>,
    #[serde(default)]
    roles: Vec<RawRole>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRole {
    name: String,
    entity_types: Vec<String>,
    slot: String,
}

/// Reads and validates an ontology file.
pub fn load_ontology(path: &Path) -> Result<EventOntology, OntologyError> {
    let src = fs::read_to_string(path).map_err(|source| OntologyError::Io { path: path.to_owned(), source })?;
    EventOntology::from_toml_str(&src, &path.display().to_string())
}

fn line_col(src: &str, byte: usize) -> (usize, usize) {
    let before = &src[..byte.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl EventOntology {
    pub fn from_toml_str(src: &str, origin: &str) -> Result<Self, OntologyError> {
        let raw: RawOntology = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(src, s.start));
            OntologyError::Parse { origin: origin.to_owned(), line, column, message: e.message().to_owned() }
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawOntology) -> Result<Self, OntologyError> {
        if raw.event_types.is_empty() {
            return Err(invalid(None, None, "no event types declared"));
        }
        let mut types = Vec::with_capacity(raw.event_types.len());
        let mut by_name = HashMap::new();
        for rt in raw.event_types {
            let name = rt.name.trim().to_owned();
            if name.is_empty() {
                return Err(invalid(None, None, "event type with empty name"));
            }
            if name == OTHER_LABEL {
                return Err(invalid(Some(&name), None, "`Other` is reserved and cannot be declared"));
            }
            if by_name.contains_key(&name) {
                return Err(invalid(Some(&name), None, "duplicate event type"));
            }
            let mut roles: Vec<RoleDef> = Vec::with_capacity(rt.roles.len());
            for rr in rt.roles {
                let rname = rr.name.trim().to_owned();
                if rname.is_empty() {
                    return Err(invalid(Some(&name), None, "role with empty name"));
                }
                if roles.iter().any(|r| r.name == rname) {
                    return Err(invalid(Some(&name), Some(&rname), "duplicate role"));
                }
                let entity_types: BTreeSet<String> =
                    rr.entity_types.iter().map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect();
                if entity_types.is_empty() {
                    return Err(invalid(Some(&name), Some(&rname), "allowed entity types are empty"));
                }
                let slot_phrase = rr.slot.trim().to_owned();
                if slot_phrase.is_empty() {
                    return Err(invalid(Some(&name), Some(&rname), "empty slot phrase"));
                }
                if let Some(other) = roles.iter().find(|r| r.slot_phrase == slot_phrase) {
                    return Err(invalid(
                        Some(&name),
                        Some(&rname),
                        format!("slot phrase `{slot_phrase}` already used by role `{}`", other.name),
                    ));
                }
                roles.push(RoleDef { name: rname, entity_types, slot_phrase });
            }
            let template = parse_template(&rt.template, &roles).map_err(|m| invalid(Some(&name), None, m))?;
            for (i, role) in roles.iter().enumerate() {
                let n = template.iter().filter(|p| **p == TemplatePiece::Slot(i)).count();
                if n != 1 {
                    return Err(invalid(
                        Some(&name),
                        Some(&role.name),
                        format!("slot phrase `{}` occurs {n} times in the template, expected once", role.slot_phrase),
                    ));
                }
            }
            let frame = match &rt.frame {
                Some(f) => Some(parse_frame(f, &roles).map_err(|m| invalid(Some(&name), None, m))?),
                None => None,
            };
            by_name.insert(name.clone(), types.len());
            types.push(EventTypeDef { name, roles, template_source: rt.template, template, frame });
        }
        Ok(EventOntology { types, by_name })
    }

    pub fn get(&self, name: &str) -> Option<&EventTypeDef> {
        self.by_name.get(name).map(|&i| &self.types[i])
    }

    pub fn event_types(&self) -> &[EventTypeDef] {
        &self.types
    }

    /// Union of all allowed entity types across roles.
    pub fn entity_labels(&self) -> BTreeSet<String> {
        self.types.iter().flat_map(|t| t.roles.iter()).flat_map(|r| r.entity_types.iter().cloned()).collect()
    }

    /// Fails when some role accepts an entity type missing from `labels`.
    pub fn check_label_coverage(&self, labels: &BTreeSet<String>) -> Result<(), OntologyError> {
        for t in &self.types {
            for r in &t.roles {
                if let Some(missing) = r.entity_types.iter().find(|e| !labels.contains(*e)) {
                    return Err(invalid(
                        Some(&t.name),
                        Some(&r.name),
                        format!("entity type `{missing}` is not in the configured NER label set"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn validate_structure(&self, s: &EventStructure) -> Result<&EventTypeDef, StructureError> {
        let def = self.get(&s.event_type).ok_or_else(|| StructureError::UnknownEventType(s.event_type.clone()))?;
        if s.trigger.trim().is_empty() {
            return Err(StructureError::EmptyTrigger);
        }
        if let Some(a) = s.arguments.iter().find(|a| def.role(&a.role).is_none()) {
            return Err(StructureError::UndeclaredRole { event_type: s.event_type.clone(), role: a.role.clone() });
        }
        Ok(def)
    }
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric())
}

fn parse_template(src: &str, roles: &[RoleDef]) -> Result<Vec<TemplatePiece>, String> {
    let mut order: Vec<usize> = (0..roles.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(roles[i].slot_phrase.len()));
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut pos = 0;
    while pos < src.len() {
        let rest = &src[pos..];
        let prev = src[..pos].chars().next_back();
        let hit = order.iter().copied().find(|&i| {
            let p = &roles[i].slot_phrase;
            rest.starts_with(p.as_str()) && !is_word_char(prev) && !is_word_char(rest[p.len()..].chars().next())
        });
        match hit {
            Some(i) => {
                if !text.is_empty() {
                    pieces.push(TemplatePiece::Text(std::mem::take(&mut text)));
                }
                pieces.push(TemplatePiece::Slot(i));
                pos += roles[i].slot_phrase.len();
            }
            None => {
                let c = rest.chars().next().expect("non-empty rest");
                text.push(c);
                pos += c.len_utf8();
            }
        }
    }
    if !text.is_empty() {
        pieces.push(TemplatePiece::Text(text));
    }
    if pieces.is_empty() {
        return Err("empty template".into());
    }
    Ok(pieces)
}

fn parse_frame(src: &str, roles: &[RoleDef]) -> Result<Vec<FramePiece>, String> {
    let mut stack: Vec<Vec<FramePiece>> = vec![Vec::new()];
    let mut text = String::new();
    let mut chars = src.chars();
    fn flush(text: &mut String, stack: &mut [Vec<FramePiece>]) {
        if !text.is_empty() {
            stack.last_mut().expect("frame stack").push(FramePiece::Text(std::mem::take(text)));
        }
    }
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                flush(&mut text, &mut stack);
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(c) => name.push(c),
                        None => return Err(format!("unclosed `{{` in frame `{src}`")),
                    }
                }
                let piece = if name == "trigger" {
                    FramePiece::Trigger
                } else {
                    let (role, nth) = match name.rsplit_once('.') {
                        Some((r, n)) if n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty() => {
                            let n: usize = n.parse().map_err(|_| format!("bad filler index in `{{{name}}}`"))?;
                            if n == 0 {
                                return Err(format!("filler index is 1-based in `{{{name}}}`"));
                            }
                            (r, Some(n))
                        }
                        _ => (name.as_str(), None),
                    };
                    let idx = roles
                        .iter()
                        .position(|r| r.name == role)
                        .ok_or_else(|| format!("frame references undeclared role `{role}`"))?;
                    FramePiece::Role(idx, nth)
                };
                stack.last_mut().expect("frame stack").push(piece);
            }
            '}' => return Err(format!("unmatched `}}` in frame `{src}`")),
            '[' => {
                if stack.len() > 1 {
                    return Err("nested optional groups are not supported".into());
                }
                flush(&mut text, &mut stack);
                stack.push(Vec::new());
            }
            ']' => {
                if stack.len() < 2 {
                    return Err(format!("unmatched `]` in frame `{src}`"));
                }
                flush(&mut text, &mut stack);
                let group = stack.pop().expect("group");
                stack.last_mut().expect("frame stack").push(FramePiece::Optional(group));
            }
            c => text.push(c),
        }
    }
    if stack.len() != 1 {
        return Err(format!("unclosed `[` in frame `{src}`"));
    }
    flush(&mut text, &mut stack);
    Ok(stack.pop().expect("frame stack"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EventStructure;

    const PARDON: &str = r#"
[[event_types]]
name = "Justice:Pardon"
template = "somebody in somewhere was pardoned by some adjudicator."
frame = "The {Adjudicator.1}[ in {Place}] {trigger}[ {Defendant}][, as advised by the {Adjudicator.2}]."

[[event_types.roles]]
name = "Adjudicator"
entity_types = ["PER", "ORG", "GPE"]
slot = "some adjudicator"

[[event_types.roles]]
name = "Defendant"
entity_types = ["PER"]
slot = "somebody"

[[event_types.roles]]
name = "Place"
entity_types = ["GPE", "LOC", "FAC"]
slot = "somewhere"
"#;

    #[test]
    fn loads_pardon_type() {
        let o = EventOntology::from_toml_str(PARDON, "test").unwrap();
        let t = o.get("Justice:Pardon").unwrap();
        assert_eq!(t.roles.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(), ["Adjudicator", "Defendant", "Place"]);
        assert!(t.role("Place").unwrap().accepts("GPE"));
        assert_eq!(
            t.template,
            vec![
                TemplatePiece::Slot(1),
                TemplatePiece::Text(" in ".into()),
                TemplatePiece::Slot(2),
                TemplatePiece::Text(" was pardoned by ".into()),
                TemplatePiece::Slot(0),
                TemplatePiece::Text(".".into()),
            ]
        );
        assert_eq!(t.frame.as_ref().unwrap().len(), 8);
    }

    #[test]
    fn empty_event_types_rejected() {
        let err = EventOntology::from_toml_str("event_types = []", "t").unwrap_err();
        assert!(matches!(err, OntologyError::Invalid { .. }), "{err}");
    }

    #[test]
    fn empty_entity_types_rejected_with_names() {
        let src = PARDON.replace(r#"entity_types = ["PER"]"#, "entity_types = []");
        let err = EventOntology::from_toml_str(&src, "t").unwrap_err();
        match err {
            OntologyError::Invalid { event_type, role, .. } => {
                assert_eq!(event_type.as_deref(), Some("Justice:Pardon"));
                assert_eq!(role.as_deref(), Some("Defendant"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let src = "[[event_types]]\nname = \"A\"\ntemplate = \n";
        match EventOntology::from_toml_str(src, "bad.toml").unwrap_err() {
            OntologyError::Parse { line, origin, .. } => {
                assert_eq!(line, 3);
                assert_eq!(origin, "bad.toml");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn slot_must_occur_once() {
        let src = PARDON.replace("somebody in somewhere", "someone in somewhere");
        let err = EventOntology::from_toml_str(&src, "t").unwrap_err().to_string();
        assert!(err.contains("Defendant") && err.contains("0 times"), "{err}");
    }

    #[test]
    fn reserved_and_duplicate_names_rejected() {
        let src = PARDON.replace("Justice:Pardon", "Other");
        assert!(EventOntology::from_toml_str(&src, "t").is_err());
        let dup = format!("{PARDON}\n{}", PARDON);
        assert!(EventOntology::from_toml_str(&dup, "t").unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn frame_errors() {
        let roles = vec![RoleDef { name: "A".into(), entity_types: ["PER".into()].into(), slot_phrase: "someone".into() }];
        assert!(parse_frame("{B}", &roles).is_err());
        assert!(parse_frame("[x [y]]", &roles).is_err());
        assert!(parse_frame("{A", &roles).is_err());
        assert!(parse_frame("{A.0}", &roles).is_err());
        assert_eq!(parse_frame("{A.2}", &roles).unwrap(), vec![FramePiece::Role(0, Some(2))]);
    }

    #[test]
    fn structure_validation() {
        let o = EventOntology::from_toml_str(PARDON, "t").unwrap();
        let ok = EventStructure::new("Justice:Pardon", "clear").with("Adjudicator", "court");
        assert!(o.validate_structure(&ok).is_ok());
        let bad = ok.clone().with("Victim", "x");
        assert_eq!(
            o.validate_structure(&bad).unwrap_err(),
            StructureError::UndeclaredRole { event_type: "Justice:Pardon".into(), role: "Victim".into() }
        );
        assert!(o.validate_structure(&EventStructure::new("Nope", "x")).is_err());
        assert_eq!(o.validate_structure(&EventStructure::new("Justice:Pardon", " ")), Err(StructureError::EmptyTrigger));
    }

    #[test]
    fn label_coverage() {
        let o = EventOntology::from_toml_str(PARDON, "t").unwrap();
        let full: BTreeSet<String> = ["PER", "ORG", "GPE", "LOC", "FAC", "DATE"].iter().map(|s| s.to_string()).collect();
        assert!(o.check_label_coverage(&full).is_ok());
        let partial: BTreeSet<String> = ["PER", "ORG", "GPE"].iter().map(|s| s.to_string()).collect();
        let msg = o.check_label_coverage(&partial).unwrap_err().to_string();
        assert!(msg.contains("`FAC`"), "{msg}");
    }
}

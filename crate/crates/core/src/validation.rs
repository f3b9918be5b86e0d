//! Back-validation of generated sentences against their source structures,
//! and construction of validator training pairs.
//!
//! Three entailment requests are made per example:
//!
//! | check    | premise               | hypothesis            |
//! |----------|-----------------------|-----------------------|
//! | accuracy | sentence              | strict template       |
//! | forward  | unspecific template   | sentence              |
//! | backward | sentence              | unspecific template   |
//!
//! The strict template keeps generic slot phrases for vacant roles; the
//! unspecific template writes them as "an unspecific <Role>".

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clients::{bounded_map, NliClient, NliPair, RetryPolicy};
use crate::generation::GeneratedExample;
use crate::model::DatasetPartition;
use crate::ontology::{EventOntology, StructureError};
use crate::prompt::{asserted_passage, textualize, textualize_with_unspecific_role, Polarity, TextualizeMode};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub accuracy: f64,
    pub coherence_forward: f64,
    pub coherence_backward: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(0.5)
    }
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Thresholds { accuracy: t, coherence_forward: t, coherence_backward: t }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub accuracy_score: Option<f64>,
    pub coherence_forward_score: Option<f64>,
    pub coherence_backward_score: Option<f64>,
    pub accuracy_pass: bool,
    pub coherence_pass: bool,
    pub thresholds: Thresholds,
    /// Set when scores could not be obtained; passes then follow the
    /// fail-open setting.
    pub indeterminate: bool,
    #[serde(default)]
    pub error: Option<String>,
    /// Whether the asserted-occurrence template was used.
    #[serde(default)]
    pub polarity_adjusted: bool,
}

impl ValidationVerdict {
    pub fn passed(&self) -> bool {
        self.accuracy_pass && self.coherence_pass
    }

    fn from_scores(acc: f64, fwd: f64, bwd: f64, thresholds: Thresholds, polarity_adjusted: bool) -> Self {
        ValidationVerdict {
            accuracy_score: Some(acc),
            coherence_forward_score: Some(fwd),
            coherence_backward_score: Some(bwd),
            accuracy_pass: acc >= thresholds.accuracy,
            coherence_pass: fwd >= thresholds.coherence_forward && bwd >= thresholds.coherence_backward,
            thresholds,
            indeterminate: false,
            error: None,
            polarity_adjusted,
        }
    }

    fn indeterminate(error: String, thresholds: Thresholds, fail_open: bool) -> Self {
        ValidationVerdict {
            accuracy_score: None,
            coherence_forward_score: None,
            coherence_backward_score: None,
            accuracy_pass: fail_open,
            coherence_pass: fail_open,
            thresholds,
            indeterminate: true,
            error: Some(error),
            polarity_adjusted: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    pub thresholds: Thresholds,
    /// Treat examples whose scores could not be obtained as passing.
    pub fail_open: bool,
    /// Validate non-positive generations against the asserted-occurrence
    /// template instead of the plain one.
    pub polarity_adjusted: bool,
    pub batch_size: usize,
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            thresholds: Thresholds::default(),
            fail_open: false,
            polarity_adjusted: true,
            batch_size: 32,
            concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("example `{0}` has no source structure")]
    NoSource(String),
    #[error("example `{0}` has no sentence")]
    NoSentence(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("entailment endpoint: {0}")]
    Nli(String),
}

/// The entailment requests for one example, in accuracy, forward, backward order.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckPairs {
    pub accuracy: NliPair,
    pub forward: NliPair,
    pub backward: NliPair,
    pub polarity_adjusted: bool,
}

pub fn check_pairs(
    example: &GeneratedExample,
    ontology: &EventOntology,
    polarity_adjusted: bool,
) -> Result<CheckPairs, ValidationError> {
    let s = example.structure().ok_or_else(|| ValidationError::NoSource(example.id.clone()))?;
    if example.sentence.trim().is_empty() {
        return Err(ValidationError::NoSentence(example.id.clone()));
    }
    let adjust = polarity_adjusted && example.polarity != Polarity::Positive;
    let mut strict = textualize(s, ontology, TextualizeMode::Strict)?;
    let mut unspecific = textualize(s, ontology, TextualizeMode::UnspecificFill)?;
    if adjust {
        strict = asserted_passage(&strict);
        unspecific = asserted_passage(&unspecific);
    }
    let sent = example.sentence.clone();
    Ok(CheckPairs {
        accuracy: NliPair::new(&sent, strict.text),
        forward: NliPair::new(&unspecific.text, &sent),
        backward: NliPair::new(sent, unspecific.text),
        polarity_adjusted: adjust,
    })
}

fn entail_scores(nli: &dyn NliClient, pairs: &[NliPair], retry: &RetryPolicy) -> Result<Vec<f64>, ValidationError> {
    let scores = retry.run(|_| nli.score(pairs)).map_err(|e| ValidationError::Nli(e.to_string()))?;
    if scores.len() != pairs.len() {
        return Err(ValidationError::Nli(format!("expected {} scores, got {}", pairs.len(), scores.len())));
    }
    Ok(scores.iter().map(|s| s.entail.clamp(0.0, 1.0)).collect())
}

/// Accuracy check: does the sentence entail its strict template?
pub fn check_accuracy(
    example: &GeneratedExample,
    ontology: &EventOntology,
    nli: &dyn NliClient,
    config: &ValidationConfig,
) -> Result<(f64, bool), ValidationError> {
    let pairs = check_pairs(example, ontology, config.polarity_adjusted)?;
    let score = entail_scores(nli, &[pairs.accuracy], &config.retry)?[0];
    Ok((score, score >= config.thresholds.accuracy))
}

/// Coherence check in both directions against the unspecific template.
pub fn check_coherence(
    example: &GeneratedExample,
    ontology: &EventOntology,
    nli: &dyn NliClient,
    config: &ValidationConfig,
) -> Result<(f64, f64, bool), ValidationError> {
    let pairs = check_pairs(example, ontology, config.polarity_adjusted)?;
    let s = entail_scores(nli, &[pairs.forward, pairs.backward], &config.retry)?;
    let pass = s[0] >= config.thresholds.coherence_forward && s[1] >= config.thresholds.coherence_backward;
    Ok((s[0], s[1], pass))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarityCounts {
    pub total: usize,
    pub passed: usize,
    pub indeterminate: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationOutcome {
    /// Every input example with its verdict, sorted by id.
    pub examples: Vec<GeneratedExample>,
    /// The examples whose overall verdict passed.
    pub passed: Vec<GeneratedExample>,
    pub counts: BTreeMap<Polarity, PolarityCounts>,
}

/// Scores every example and splits off the passing subset.
///
/// Requests are sent in batches of `batch_size` pairs with up to
/// `concurrency` batches in flight. A failed batch makes the examples it
/// covers indeterminate.
pub fn validate_batch(
    examples: Vec<GeneratedExample>,
    ontology: &EventOntology,
    nli: &dyn NliClient,
    config: &ValidationConfig,
) -> ValidationOutcome {
    let mut examples = examples;
    let prepared: Vec<Result<CheckPairs, ValidationError>> =
        examples.iter().map(|e| check_pairs(e, ontology, config.polarity_adjusted)).collect();
    let mut flat: Vec<(usize, NliPair)> = Vec::new();
    for (i, p) in prepared.iter().enumerate() {
        if let Ok(p) = p {
            flat.push((i, p.accuracy.clone()));
            flat.push((i, p.forward.clone()));
            flat.push((i, p.backward.clone()));
        }
    }
    let chunks: Vec<&[(usize, NliPair)]> = flat.chunks(config.batch_size.max(3)).collect();
    let results = bounded_map(&chunks, config.concurrency, |chunk| {
        let pairs: Vec<NliPair> = chunk.iter().map(|(_, p)| p.clone()).collect();
        entail_scores(nli, &pairs, &config.retry)
    });
    let mut scores: Vec<Vec<f64>> = vec![Vec::new(); examples.len()];
    let mut failures: BTreeMap<usize, String> = BTreeMap::new();
    for (chunk, result) in chunks.iter().zip(results) {
        match result {
            Ok(s) => {
                for ((i, _), v) in chunk.iter().zip(s) {
                    scores[*i].push(v);
                }
            }
            Err(e) => {
                for (i, _) in chunk.iter() {
                    failures.entry(*i).or_insert_with(|| e.to_string());
                }
            }
        }
    }
    for (i, ex) in examples.iter_mut().enumerate() {
        let verdict = match (&prepared[i], failures.get(&i)) {
            (Err(e), _) => ValidationVerdict::indeterminate(e.to_string(), config.thresholds, config.fail_open),
            (_, Some(e)) => ValidationVerdict::indeterminate(e.clone(), config.thresholds, config.fail_open),
            (Ok(p), None) => {
                let s = &scores[i];
                ValidationVerdict::from_scores(s[0], s[1], s[2], config.thresholds, p.polarity_adjusted)
            }
        };
        // A failed generation never passes, whatever the fail-open setting.
        let verdict = if ex.failed() {
            ValidationVerdict { accuracy_pass: false, coherence_pass: false, ..verdict }
        } else {
            verdict
        };
        ex.validation = Some(verdict);
    }
    examples.sort_by(|a, b| a.id.cmp(&b.id));
    let mut counts: BTreeMap<Polarity, PolarityCounts> = BTreeMap::new();
    for e in &examples {
        let v = e.validation.as_ref().expect("verdict assigned above");
        let c = counts.entry(e.polarity).or_default();
        c.total += 1;
        c.passed += usize::from(v.passed());
        c.indeterminate += usize::from(v.indeterminate);
    }
    for (p, c) in &counts {
        log::info!("validation {p}: {}/{} passed, {} indeterminate", c.passed, c.total, c.indeterminate);
    }
    let passed = examples.iter().filter(|e| e.validation.as_ref().is_some_and(ValidationVerdict::passed)).cloned().collect();
    ValidationOutcome { examples, passed, counts }
}

// ---------------------------------------------------------------------------
// Validator training pairs
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    Entail,
    NotEntail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairConstruction {
    Paired,
    UnpairedShuffle,
    UnspecificReplacement,
}

impl PairConstruction {
    pub fn label(self) -> PairLabel {
        match self {
            PairConstruction::Paired => PairLabel::Entail,
            PairConstruction::UnpairedShuffle | PairConstruction::UnspecificReplacement => PairLabel::NotEntail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatorTrainingPair {
    pub premise: String,
    pub hypothesis: String,
    pub label: PairLabel,
    pub construction: PairConstruction,
    /// Sentence the premise was taken from.
    pub sentence_id: String,
    /// For shuffled pairs, the sentence whose template was borrowed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_sentence_id: Option<String>,
    /// For replacement pairs, the role rewritten as unspecific.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced_role: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub paired: usize,
    pub unpaired_shuffle: usize,
    pub unspecific_replacement: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairError {
    #[error("base partition has no annotated mentions")]
    EmptyBase,
    #[error("unpaired shuffle needs at least two sentences with distinct templates, found {0}")]
    ShuffleImpossible(usize),
    #[error("unspecific replacement needs a mention with at least one filled role")]
    NoFilledRoles,
    #[error(transparent)]
    Structure(#[from] StructureError),
}

struct Unit {
    sentence_id: String,
    text: String,
    template: String,
    own_templates: Vec<String>,
    structure: crate::model::EventStructure,
}

/// Draws `n` indices from `0..len`, cycling through fresh shuffles so every
/// index is used before any repeats.
fn cycle_draw<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(rng);
        out.extend(order.into_iter().take(n - out.len()));
    }
    out
}

/// Builds entailment training pairs from annotated base data.
///
/// Each (sentence, mention) is a unit. Positives pair a sentence with its
/// own strict template. Shuffled negatives pair it with the template of
/// another sentence, never one of its own. Replacement negatives pair it
/// with its own template after rewriting one randomly chosen filled role as
/// "an unspecific <Role>".
pub fn build_validator_pairs<R: Rng + ?Sized>(
    base: &DatasetPartition,
    ontology: &EventOntology,
    rng: &mut R,
    counts: PairCounts,
) -> Result<Vec<ValidatorTrainingPair>, PairError> {
    let mut units = Vec::new();
    for s in &base.examples {
        let own: Vec<String> = s
            .mentions
            .iter()
            .map(|m| textualize(&m.structure(), ontology, TextualizeMode::Strict).map(|p| p.text))
            .collect::<Result<_, _>>()?;
        for (m, t) in s.mentions.iter().zip(&own) {
            units.push(Unit {
                sentence_id: s.sentence_id.clone(),
                text: s.text.clone(),
                template: t.clone(),
                own_templates: own.clone(),
                structure: m.structure(),
            });
        }
    }
    if units.is_empty() {
        return Err(PairError::EmptyBase);
    }
    let mut out = Vec::with_capacity(counts.paired + counts.unpaired_shuffle + counts.unspecific_replacement);
    for i in cycle_draw(units.len(), counts.paired, rng) {
        let u = &units[i];
        out.push(ValidatorTrainingPair {
            premise: u.text.clone(),
            hypothesis: u.template.clone(),
            label: PairLabel::Entail,
            construction: PairConstruction::Paired,
            sentence_id: u.sentence_id.clone(),
            template_sentence_id: None,
            replaced_role: None,
        });
    }
    if counts.unpaired_shuffle > 0 {
        let partners: Vec<Vec<usize>> = units
            .iter()
            .map(|u| {
                (0..units.len())
                    .filter(|&j| units[j].sentence_id != u.sentence_id && !u.own_templates.contains(&units[j].template))
                    .collect()
            })
            .collect();
        let eligible: Vec<usize> = (0..units.len()).filter(|&i| !partners[i].is_empty()).collect();
        if eligible.is_empty() {
            return Err(PairError::ShuffleImpossible(base.examples.len()));
        }
        for k in cycle_draw(eligible.len(), counts.unpaired_shuffle, rng) {
            let i = eligible[k];
            let j = partners[i][rng.random_range(0..partners[i].len())];
            out.push(ValidatorTrainingPair {
                premise: units[i].text.clone(),
                hypothesis: units[j].template.clone(),
                label: PairLabel::NotEntail,
                construction: PairConstruction::UnpairedShuffle,
                sentence_id: units[i].sentence_id.clone(),
                template_sentence_id: Some(units[j].sentence_id.clone()),
                replaced_role: None,
            });
        }
    }
    if counts.unspecific_replacement > 0 {
        let filled: Vec<usize> = (0..units.len()).filter(|&i| !units[i].structure.arguments.is_empty()).collect();
        if filled.is_empty() {
            return Err(PairError::NoFilledRoles);
        }
        for k in cycle_draw(filled.len(), counts.unspecific_replacement, rng) {
            let u = &units[filled[k]];
            let mut roles: Vec<&str> = u.structure.arguments.iter().map(|a| a.role.as_str()).collect();
            roles.dedup();
            roles.sort_unstable();
            roles.dedup();
            let role = roles[rng.random_range(0..roles.len())];
            let hyp = textualize_with_unspecific_role(&u.structure, ontology, role)?;
            out.push(ValidatorTrainingPair {
                premise: u.text.clone(),
                hypothesis: hyp.text,
                label: PairLabel::NotEntail,
                construction: PairConstruction::UnspecificReplacement,
                sentence_id: u.sentence_id.clone(),
                template_sentence_id: None,
                replaced_role: Some(role.to_owned()),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::{ClientError, LexicalNli, NliScores, RecordingNli};
    use crate::enrich::EnrichedStructure;
    use crate::model::{AnnotatedSentence, EventStructure, PartitionKind};
    use crate::testutil::pardon_ontology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example(id: &str, sentence: &str, s: EventStructure) -> GeneratedExample {
        GeneratedExample {
            id: id.into(),
            sentence: sentence.into(),
            polarity: Polarity::Positive,
            source: Some(EnrichedStructure { base: s.clone(), edits: vec![], result: s }),
            context: None,
            base_sentence_id: None,
            parent_id: None,
            agent: "test".into(),
            prompt_hash: String::new(),
            elapsed_ms: 0.0,
            prompt_tokens: 0,
            completion_tokens: 0,
            cost_usd: 0.0,
            attempts: 1,
            error: None,
            validation: None,
        }
    }

    fn laxalt() -> EventStructure {
        EventStructure::new("Justice:Pardon", "clear")
            .with("Adjudicator", "court")
            .with("Adjudicator", "board of pardon and paroles")
            .with("Defendant", "Paul Laxalt")
            .with("Place", "Nevada")
    }

    #[test]
    fn request_directions() {
        let nli = RecordingNli::new(LexicalNli::default());
        let ex = example("a", "The court in Nevada clear Paul Laxalt, as advised by the board of pardon and paroles.", laxalt());
        let cfg = ValidationConfig::default();
        let o = pardon_ontology();
        check_accuracy(&ex, &o, &nli, &cfg).unwrap();
        check_coherence(&ex, &o, &nli, &cfg).unwrap();
        let log = nli.requests();
        let strict = textualize(&laxalt(), &o, TextualizeMode::Strict).unwrap().text;
        let unspec = textualize(&laxalt(), &o, TextualizeMode::UnspecificFill).unwrap().text;
        assert_eq!(log[0], NliPair::new(&ex.sentence, &strict));
        assert_eq!(log[1], NliPair::new(&unspec, &ex.sentence));
        assert_eq!(log[2], NliPair::new(&ex.sentence, &unspec));
    }

    #[test]
    fn reflexive_entailment_passes_accuracy() {
        let o = pardon_ontology();
        let strict = textualize(&laxalt(), &o, TextualizeMode::Strict).unwrap().text;
        let ex = example("a", &strict, laxalt());
        let (score, pass) = check_accuracy(&ex, &o, &LexicalNli::default(), &ValidationConfig::default()).unwrap();
        assert_eq!(score, 1.0);
        assert!(pass);
    }

    #[test]
    fn omitted_defendant_fails_backward() {
        let o = pardon_ontology();
        let cfg = ValidationConfig::default();
        let nli = LexicalNli::default();
        let full = example("a", "The court in Nevada clear Paul Laxalt, as advised by the board of pardon and paroles.", laxalt());
        let short = example("b", "The court in Nevada clear, as advised by the board of pardon and paroles.", laxalt());
        let (fwd_full, back_full, _) = check_coherence(&full, &o, &nli, &cfg).unwrap();
        let (fwd_short, back_short, _) = check_coherence(&short, &o, &nli, &cfg).unwrap();
        assert!(back_short < back_full && fwd_short < fwd_full);
        // The backward drop is the larger one and is what crosses the threshold.
        assert!(back_full - back_short > fwd_full - fwd_short);
        assert!(fwd_short >= 0.75 && back_short < 0.75);
    }

    struct Down;
    impl NliClient for Down {
        fn score(&self, _: &[NliPair]) -> Result<Vec<NliScores>, ClientError> {
            Err(ClientError::Transport("refused".into()))
        }
        fn identity(&self) -> String {
            "down".into()
        }
    }

    #[test]
    fn endpoint_failure_is_fail_closed_by_default() {
        let o = pardon_ontology();
        let cfg = ValidationConfig { retry: RetryPolicy::none(), ..Default::default() };
        let out = validate_batch(vec![example("a", "x y", laxalt())], &o, &Down, &cfg);
        assert!(out.passed.is_empty());
        assert!(out.examples[0].validation.as_ref().unwrap().indeterminate);
        let open = ValidationConfig { fail_open: true, ..cfg };
        assert_eq!(validate_batch(vec![example("a", "x y", laxalt())], &o, &Down, &open).passed.len(), 1);
        assert!(validate_batch(vec![], &o, &Down, &open).passed.is_empty());
    }

    #[test]
    fn negative_polarity_uses_asserted_template() {
        let o = pardon_ontology();
        let mut ex = example("n", "The court did not clear Paul Laxalt.", laxalt());
        ex.polarity = Polarity::Negative;
        let p = check_pairs(&ex, &o, true).unwrap();
        assert!(p.accuracy.hypothesis.contains("It is asserted but did not necessarily occur that Paul Laxalt"));
        assert!(p.polarity_adjusted);
        assert!(!check_pairs(&ex, &o, false).unwrap().accuracy.hypothesis.contains("asserted"));
    }

    fn base() -> DatasetPartition {
        let mut p = DatasetPartition::new(PartitionKind::Base);
        p.examples.push(
            AnnotatedSentence::new("b1", "Governor Smith pardoned Rich in Jordan .").with_structure(
                &EventStructure::new("Justice:Pardon", "pardoned")
                    .with("Adjudicator", "Governor Smith")
                    .with("Defendant", "Rich")
                    .with("Place", "Jordan"),
            ),
        );
        p.examples.push(
            AnnotatedSentence::new("b2", "The court will clear Laxalt .")
                .with_structure(&EventStructure::new("Justice:Pardon", "clear").with("Defendant", "Laxalt")),
        );
        p
    }

    #[test]
    fn pair_counts_and_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = PairCounts { paired: 2, unpaired_shuffle: 1, unspecific_replacement: 1 };
        let pairs = build_validator_pairs(&base(), &pardon_ontology(), &mut rng, counts).unwrap();
        assert_eq!(pairs.len(), 4);
        assert!(pairs.iter().all(|p| p.label == p.construction.label()));
        let shuffled = pairs.iter().find(|p| p.construction == PairConstruction::UnpairedShuffle).unwrap();
        assert_ne!(Some(&shuffled.sentence_id), shuffled.template_sentence_id.as_ref());
    }

    #[test]
    fn single_sentence_cannot_shuffle() {
        let mut b = base();
        b.examples.truncate(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = PairCounts { paired: 1, unpaired_shuffle: 1, unspecific_replacement: 0 };
        assert_eq!(
            build_validator_pairs(&b, &pardon_ontology(), &mut rng, counts),
            Err(PairError::ShuffleImpossible(1))
        );
    }

    #[test]
    fn replacement_of_single_filled_role() {
        let mut b = base();
        b.examples.remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let counts = PairCounts { paired: 0, unpaired_shuffle: 0, unspecific_replacement: 1 };
        let pairs = build_validator_pairs(&b, &pardon_ontology(), &mut rng, counts).unwrap();
        let own = textualize(&b.examples[0].mentions[0].structure(), &pardon_ontology(), TextualizeMode::Strict).unwrap();
        assert_eq!(pairs[0].hypothesis, own.text.replace("Laxalt", "an unspecific Defendant"));
    }
}

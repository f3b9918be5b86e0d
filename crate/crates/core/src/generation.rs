//! Generation agents and generated-example records.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::clients::{bounded_map, http_client, join_url, post_json, ClientError, RetryPolicy};
use crate::corpus::ContextCandidate;
use crate::enrich::EnrichedStructure;
use crate::model::EventStructure;
use crate::ontology::{EventOntology, FramePiece, TemplatePiece};
use crate::prompt::{build_rewrite_prompt, GenerationPrompt, Polarity, PromptConfig, PromptSource};
use crate::text::{self, Lemmatizer};
use crate::validation::ValidationVerdict;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedExample {
    pub id: String,
    /// Empty when generation failed.
    pub sentence: String,
    pub polarity: Polarity,
    pub source: Option<EnrichedStructure>,
    #[serde(default)]
    pub context: Option<ContextCandidate>,
    /// Id of the annotated sentence the base structure came from.
    #[serde(default)]
    pub base_sentence_id: Option<String>,
    /// The positive example a rewrite was derived from.
    #[serde(default)]
    pub parent_id: Option<String>,
    pub agent: String,
    pub prompt_hash: String,
    pub elapsed_ms: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost_usd: f64,
    pub attempts: u32,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub validation: Option<ValidationVerdict>,
}

impl GeneratedExample {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// The structure the sentence is supposed to express.
    pub fn structure(&self) -> Option<&EventStructure> {
        self.source.as_ref().map(|e| &e.result)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Pricing {
    /// USD per 1,000 prompt tokens.
    pub prompt_per_1k: f64,
    /// USD per 1,000 completion tokens.
    pub completion_per_1k: f64,
}

impl Pricing {
    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        prompt_tokens as f64 / 1000.0 * self.prompt_per_1k + completion_tokens as f64 / 1000.0 * self.completion_per_1k
    }
}

/// Raw agent output for one call.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Latency reported by the agent itself; measured wall time is used when absent.
    pub reported_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { temperature: 0.7, max_tokens: 128 }
    }
}

pub trait GenerationAgent: Send + Sync {
    fn complete(&self, prompt: &GenerationPrompt, params: &SamplingParams) -> Result<Completion, ClientError>;
    fn identity(&self) -> String;
    fn pricing(&self) -> Pricing {
        Pricing::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub sampling: SamplingParams,
    pub retry: RetryPolicy,
    pub concurrency: usize,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams { sampling: SamplingParams::default(), retry: RetryPolicy::default(), concurrency: 4 }
    }
}

const ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "st", "jr", "sr", "inc", "co", "corp", "ltd", "gen", "gov", "sen", "rep", "u.s", "no"];

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '”' | '‘' | '’' | '`')
}

fn strip_quotes(s: &str) -> &str {
    let mut s = s.trim();
    loop {
        let mut cs = s.chars();
        match (cs.next(), cs.next_back()) {
            (Some(a), Some(b)) if s.chars().count() >= 2 && is_quote(a) && is_quote(b) => {
                s = s[a.len_utf8()..s.len() - b.len_utf8()].trim();
            }
            _ => return s,
        }
    }
}

/// Cuts text after its first sentence-final punctuation mark that is
/// followed by whitespace and an upper-case letter, digit or quote.
pub fn first_sentence(s: &str) -> &str {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut j = k + 1;
        while j < chars.len() && is_quote(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map_or(s.len(), |&(b, _)| b);
        if j >= chars.len() {
            return s;
        }
        if !chars[j].1.is_whitespace() {
            continue;
        }
        let next = chars[j..].iter().find(|(_, ch)| !ch.is_whitespace()).map(|&(_, ch)| ch);
        let starts_new = next.is_some_and(|n| n.is_uppercase() || n.is_ascii_digit() || is_quote(n));
        if !starts_new || c == '.' && preceded_by_abbreviation(&s[..i]) {
            continue;
        }
        return &s[..end];
    }
    s
}

fn preceded_by_abbreviation(before: &str) -> bool {
    let word = before.rsplit(|c: char| c.is_whitespace()).next().unwrap_or("").to_lowercase();
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    ABBREVIATIONS.contains(&word) || word.chars().count() == 1
}

/// Quote stripping and first-sentence truncation.
pub fn clean_completion(raw: &str) -> String {
    strip_quotes(first_sentence(strip_quotes(raw))).to_owned()
}

/// Runs one prompt through an agent and packages the result.
///
/// Empty completions are retried with the identical prompt; retryable
/// transport errors are retried with backoff. When the budget is spent the
/// example is returned with `error` set.
pub fn generate(id: impl Into<String>, prompt: &GenerationPrompt, agent: &dyn GenerationAgent, params: &GenerationParams) -> GeneratedExample {
    let pricing = agent.pricing();
    let mut ex = GeneratedExample {
        id: id.into(),
        sentence: String::new(),
        polarity: prompt.kind,
        source: None,
        context: None,
        base_sentence_id: None,
        parent_id: None,
        agent: agent.identity(),
        prompt_hash: prompt.hash(),
        elapsed_ms: 0.0,
        prompt_tokens: 0,
        completion_tokens: 0,
        cost_usd: 0.0,
        attempts: 0,
        error: None,
        validation: None,
    };
    if let PromptSource::Structure { enriched, context } = &prompt.source {
        ex.source = Some(enriched.clone());
        ex.context = Some(context.clone());
    }
    let mut last_error = String::new();
    for attempt in 0..=params.retry.retries {
        ex.attempts = attempt + 1;
        let started = Instant::now();
        let result = agent.complete(prompt, &params.sampling);
        let wall = started.elapsed().as_secs_f64() * 1000.0;
        match result {
            Ok(c) => {
                ex.elapsed_ms += c.reported_ms.unwrap_or(wall);
                ex.prompt_tokens += c.prompt_tokens;
                ex.completion_tokens += c.completion_tokens;
                ex.cost_usd += pricing.cost(c.prompt_tokens, c.completion_tokens);
                let cleaned = clean_completion(&c.text);
                if !cleaned.is_empty() {
                    ex.sentence = cleaned;
                    return ex;
                }
                last_error = "empty completion".into();
            }
            Err(e) => {
                ex.elapsed_ms += wall;
                last_error = e.to_string();
                if !e.is_retryable() {
                    break;
                }
                if attempt < params.retry.retries {
                    thread::sleep(params.retry.delay(attempt));
                }
            }
        }
        log::debug!("{}: attempt {} failed: {last_error}", ex.id, attempt + 1);
    }
    log::warn!("{}: generation failed after {} attempts: {last_error}", ex.id, ex.attempts);
    ex.error = Some(last_error);
    ex
}

/// Generates every prompt with bounded concurrency; output order follows input.
pub fn generate_batch(
    requests: &[(String, GenerationPrompt)],
    agent: &dyn GenerationAgent,
    params: &GenerationParams,
) -> Vec<GeneratedExample> {
    bounded_map(requests, params.concurrency, |(id, p)| generate(id.clone(), p, agent, params))
}

/// One rewrite child per requested kind, each tagged with the parent id and
/// inheriting the parent's source structure.
pub fn generate_negative_set(
    parent: &GeneratedExample,
    kinds: &[Polarity],
    agent: &dyn GenerationAgent,
    params: &GenerationParams,
    prompts: &PromptConfig,
) -> Vec<GeneratedExample> {
    let mut requests = Vec::new();
    let mut out = Vec::new();
    for &kind in kinds {
        let id = format!("{}-{kind}", parent.id);
        match build_rewrite_prompt(kind, &parent.sentence, prompts) {
            Ok(mut p) => {
                if let (PromptSource::Sentence { trigger, .. }, Some(s)) = (&mut p.source, parent.structure()) {
                    *trigger = Some(s.trigger.clone());
                }
                requests.push((id, p));
            }
            Err(e) => out.push(GeneratedExample {
                id,
                sentence: String::new(),
                polarity: kind,
                source: parent.source.clone(),
                context: parent.context.clone(),
                base_sentence_id: parent.base_sentence_id.clone(),
                parent_id: Some(parent.id.clone()),
                agent: agent.identity(),
                prompt_hash: String::new(),
                elapsed_ms: 0.0,
                prompt_tokens: 0,
                completion_tokens: 0,
                cost_usd: 0.0,
                attempts: 0,
                error: Some(e.to_string()),
                validation: None,
            }),
        }
    }
    for mut child in generate_batch(&requests, agent, params) {
        child.source = parent.source.clone();
        child.context = parent.context.clone();
        child.base_sentence_id = parent.base_sentence_id.clone();
        child.parent_id = Some(parent.id.clone());
        out.push(child);
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentCost {
    pub examples: usize,
    pub failed: usize,
    pub mean_seconds_per_sentence: f64,
    pub mean_cost_per_sentence: f64,
    pub total_cost_usd: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub per_agent: BTreeMap<String, AgentCost>,
}

/// Mean time and cost per example for each agent. Failed attempts count,
/// since they consumed time and tokens.
pub fn cost_report(examples: &[GeneratedExample]) -> CostSummary {
    let mut per_agent: BTreeMap<String, AgentCost> = BTreeMap::new();
    let mut secs: BTreeMap<String, f64> = BTreeMap::new();
    for e in examples {
        let c = per_agent.entry(e.agent.clone()).or_default();
        c.examples += 1;
        c.failed += usize::from(e.failed());
        c.total_cost_usd += e.cost_usd;
        c.prompt_tokens += e.prompt_tokens;
        c.completion_tokens += e.completion_tokens;
        *secs.entry(e.agent.clone()).or_default() += e.elapsed_ms / 1000.0;
    }
    for (agent, c) in per_agent.iter_mut() {
        let n = c.examples as f64;
        c.mean_seconds_per_sentence = secs[agent] / n;
        c.mean_cost_per_sentence = c.total_cost_usd / n;
    }
    CostSummary { per_agent }
}

impl CostSummary {
    pub fn table(&self) -> String {
        let mut out = String::from("agent\texamples\tfailed\ttime/sentence (s)\tcost/sentence ($)\n");
        for (a, c) in &self.per_agent {
            out.push_str(&format!(
                "{a}\t{}\t{}\t{:.3}\t{:.6}\n",
                c.examples, c.failed, c.mean_seconds_per_sentence, c.mean_cost_per_sentence
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Stub agent
// ---------------------------------------------------------------------------

/// Offline agent. Positive prompts are answered by filling the event type's
/// sentence frame with the structure; rewrite prompts are answered with
/// fixed rewrite rules around the main verb. Output depends only on the
/// prompt value.
pub struct StubAgent {
    ontology: Arc<EventOntology>,
    lemmatizer: Lemmatizer,
    pricing: Pricing,
}

impl StubAgent {
    pub fn new(ontology: Arc<EventOntology>, lemmatizer: Lemmatizer) -> Self {
        StubAgent { ontology, lemmatizer, pricing: Pricing::default() }
    }

    pub fn with_pricing(mut self, pricing: Pricing) -> Self {
        self.pricing = pricing;
        self
    }

    /// Realizes a structure as a sentence.
    pub fn realize(&self, s: &EventStructure) -> String {
        let Some(def) = self.ontology.get(&s.event_type) else {
            return format!("{} happened.", s.trigger);
        };
        let filler = |role: usize, nth: Option<usize>| -> Option<String> {
            let fillers: Vec<&str> = s.fillers(&def.roles[role].name).collect();
            match nth {
                None if !fillers.is_empty() => Some(fillers.join(" and ")),
                Some(n) => fillers.get(n.checked_sub(1)?).map(|f| f.to_string()),
                None => None,
            }
        };
        let out = match &def.frame {
            Some(frame) => {
                let mut out = String::new();
                for piece in frame {
                    match piece {
                        FramePiece::Text(t) => out.push_str(t),
                        FramePiece::Trigger => out.push_str(&s.trigger),
                        FramePiece::Role(r, n) => {
                            out.push_str(&filler(*r, *n).unwrap_or_else(|| def.roles[*r].slot_phrase.clone()))
                        }
                        FramePiece::Optional(group) => {
                            let mut g = String::new();
                            let complete = group.iter().all(|p| match p {
                                FramePiece::Text(t) => {
                                    g.push_str(t);
                                    true
                                }
                                FramePiece::Trigger => {
                                    g.push_str(&s.trigger);
                                    true
                                }
                                FramePiece::Role(r, n) => filler(*r, *n).map(|f| g.push_str(&f)).is_some(),
                                FramePiece::Optional(_) => false,
                            });
                            if complete {
                                out.push_str(&g);
                            }
                        }
                    }
                }
                out
            }
            None => {
                let mut args = String::new();
                for p in &def.template {
                    match p {
                        TemplatePiece::Text(t) => args.push_str(t),
                        TemplatePiece::Slot(i) => {
                            args.push_str(&filler(*i, None).unwrap_or_else(|| def.roles[*i].slot_phrase.clone()))
                        }
                    }
                }
                format!("{}, {}.", args.trim_end().trim_end_matches('.'), s.trigger)
            }
        };
        capitalize(out.trim())
    }

    fn base_of(&self, word: &str) -> String {
        if let Some(b) = self.lemmatizer.base_form(word) {
            return b.to_owned();
        }
        let lower = word.to_lowercase();
        if let Some(stem) = lower.strip_suffix("ied") {
            return format!("{stem}y");
        }
        if let Some(stem) = lower.strip_suffix("ed") {
            let b = stem.as_bytes();
            let n = b.len();
            if n >= 2 && b[n - 1] == b[n - 2] && !matches!(b[n - 1], b'l' | b's' | b'z') {
                return stem[..n - 1].to_owned();
            }
            if stem.ends_with(['v', 'c', 'z', 'u']) || stem.ends_with("at") || stem.ends_with("it") {
                return format!("{stem}e");
            }
            return stem.to_owned();
        }
        lower
    }

    fn is_past(&self, tok: &str) -> bool {
        let lower_start = tok.chars().next().is_some_and(char::is_lowercase);
        let past = self.lemmatizer.base_form(tok).is_some_and(|b| b != tok) || (tok.len() > 4 && tok.ends_with("ed"));
        lower_start && past && !matches!(tok, "was" | "were" | "had" | "been" | "is" | "are")
    }

    /// Character range of the main verb: the trigger when it occurs in the
    /// sentence (or the past-tense word right before it, for noun triggers
    /// such as "declared bankruptcy"), otherwise the first past-tense word.
    fn find_verb(&self, sentence: &str, trigger: Option<&str>) -> Option<(usize, usize)> {
        let words = char_words(sentence);
        if let Some(t) = trigger.filter(|t| !t.trim().is_empty()) {
            if let Some((ts, te)) = text::find_char_span(sentence, t) {
                let before = words.iter().rev().find(|(_, e, _)| *e <= ts);
                if let Some((s, e, w)) = before {
                    let gap = text::char_slice(sentence, *e, ts).unwrap_or("x");
                    if gap.trim().is_empty() && self.is_past(w) && self.base_of(t) == t.to_lowercase() {
                        return Some((*s, *e));
                    }
                }
                return Some((ts, te));
            }
        }
        words.iter().find(|(_, _, w)| self.is_past(w)).map(|(s, e, _)| (*s, *e))
    }

    pub fn rewrite(&self, kind: Polarity, sentence: &str, trigger: Option<&str>) -> String {
        let sentence = sentence.trim();
        let Some((vs, ve)) = self.find_verb(sentence, trigger) else {
            let body = lower_article(sentence);
            return match kind {
                Polarity::Negative => format!("It is not the case that {body}"),
                Polarity::Believed => format!("It is believed that {body}"),
                Polarity::Hypothetical => format!("It may be that {body}"),
                Polarity::Promised => format!("It was promised that {body}"),
                Polarity::Desired => format!("It was hoped that {body}"),
                Polarity::Positive => sentence.to_owned(),
            };
        };
        let prefix = text::char_slice(sentence, 0, vs).unwrap_or("");
        let verb = text::char_slice(sentence, vs, ve).unwrap_or("");
        let suffix = &sentence[text::char_range(sentence, ve, ve).map_or(sentence.len(), |r| r.start)..];
        let base = self.base_of(verb);
        match kind {
            Polarity::Negative => format!("{prefix}did not {base}{suffix}"),
            Polarity::Believed => format!("It is believed that {}will {base}{suffix}", lower_article(prefix)),
            Polarity::Hypothetical => format!("Suppose {}were to {base}{suffix}", lower_article(prefix)),
            Polarity::Promised => format!("{prefix}promised to {base}{suffix}"),
            Polarity::Desired => format!("{prefix}wanted to {base}{suffix}"),
            Polarity::Positive => sentence.to_owned(),
        }
    }
}

/// Word tokens with character offsets.
fn char_words(s: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut ci = 0;
    for (b, c) in s.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some((ci, b));
            }
        } else if let Some((cs, bs)) = start.take() {
            out.push((cs, ci, &s[bs..b]));
        }
        ci += 1;
    }
    if let Some((cs, bs)) = start {
        out.push((cs, ci, &s[bs..]));
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn lower_article(s: &str) -> String {
    let first = s.split_whitespace().next().unwrap_or("");
    if matches!(first, "The" | "A" | "An" | "This" | "That" | "These" | "Those" | "It") {
        let mut cs = s.chars();
        cs.next().map(|c| c.to_lowercase().chain(cs).collect()).unwrap_or_default()
    } else {
        s.to_owned()
    }
}

fn whitespace_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

impl GenerationAgent for StubAgent {
    fn complete(&self, prompt: &GenerationPrompt, _: &SamplingParams) -> Result<Completion, ClientError> {
        let text = match &prompt.source {
            PromptSource::Structure { enriched, .. } => self.realize(&enriched.result),
            PromptSource::Sentence { text, trigger } => self.rewrite(prompt.kind, text, trigger.as_deref()),
        };
        Ok(Completion {
            prompt_tokens: whitespace_count(&prompt.full_text()),
            completion_tokens: whitespace_count(&text),
            text,
            reported_ms: Some(0.0),
        })
    }

    fn identity(&self) -> String {
        "stub".to_owned()
    }

    fn pricing(&self) -> Pricing {
        self.pricing
    }
}

// ---------------------------------------------------------------------------
// Chat-completion agent
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatAgentConfig {
    pub name: String,
    /// Base URL; `/v1/chat/completions` is appended.
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    /// Maximum requests per second; 0 disables the limiter.
    pub requests_per_second: f64,
    pub pricing: Pricing,
}

impl Default for ChatAgentConfig {
    fn default() -> Self {
        ChatAgentConfig {
            name: "chat".into(),
            url: String::new(),
            model: String::new(),
            api_key_env: None,
            timeout_ms: 60_000,
            requests_per_second: 0.0,
            pricing: Pricing::default(),
        }
    }
}

/// Spaces calls at least `1 / rate` seconds apart.
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimiter {
    pub fn new(per_second: f64) -> Self {
        let interval = if per_second > 0.0 { Duration::from_secs_f64(1.0 / per_second) } else { Duration::ZERO };
        RateLimiter { interval, next: Mutex::new(Instant::now()) }
    }

    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let mut next = self.next.lock().expect("rate limiter lock");
        let now = Instant::now();
        if *next > now {
            thread::sleep(*next - now);
        }
        *next = (*next).max(now) + self.interval;
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Client for an OpenAI-compatible `POST /v1/chat/completions` endpoint.
pub struct ChatAgent {
    config: ChatAgentConfig,
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
    limiter: RateLimiter,
}

impl ChatAgent {
    pub fn new(config: ChatAgentConfig) -> Self {
        let api_key = config.api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
        ChatAgent {
            client: http_client(config.timeout_ms),
            url: join_url(&config.url, "/v1/chat/completions"),
            api_key,
            limiter: RateLimiter::new(config.requests_per_second),
            config,
        }
    }
}

impl GenerationAgent for ChatAgent {
    fn complete(&self, prompt: &GenerationPrompt, params: &SamplingParams) -> Result<Completion, ClientError> {
        let mut messages = Vec::with_capacity(2);
        if !prompt.system_preamble.is_empty() {
            messages.push(ChatMessage { role: "system", content: &prompt.system_preamble });
        }
        messages.push(ChatMessage { role: "user", content: &prompt.user_message });
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        self.limiter.acquire();
        let resp: ChatResponse = post_json(&self.client, &self.url, &body, self.api_key.as_deref())?;
        let text = resp
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ClientError::Malformed("no choices".into()))?
            .message
            .content
            .unwrap_or_default();
        let usage = resp.usage.unwrap_or_default();
        Ok(Completion {
            text,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            reported_ms: None,
        })
    }

    fn identity(&self) -> String {
        format!("{}:{}@{}", self.config.name, self.config.model, self.config.url)
    }

    fn pricing(&self) -> Pricing {
        self.config.pricing
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextEntity;
    use crate::prompt::build_positive_prompt;
    use crate::testutil::pardon_ontology;

    fn stub() -> StubAgent {
        StubAgent::new(Arc::new(pardon_ontology()), Lemmatizer::builtin())
    }

    fn pardon_prompt() -> GenerationPrompt {
        let s = EventStructure::new("Justice:Pardon", "clear")
            .with("Adjudicator", "court")
            .with("Adjudicator", "board of pardon and paroles")
            .with("Defendant", "Paul Laxalt")
            .with("Place", "Nevada");
        let e = EnrichedStructure { base: s.clone(), edits: vec![], result: s };
        let ctx = ContextCandidate { source_sentence_id: 1, entities: vec![ContextEntity::new("Nevada", "GPE")] };
        build_positive_prompt(&e, &ctx, &pardon_ontology(), &PromptConfig::default()).unwrap()
    }

    #[test]
    fn stub_realizes_pardon_frame() {
        let ex = generate("g1", &pardon_prompt(), &stub(), &GenerationParams::default());
        assert_eq!(ex.sentence, "The court in Nevada clear Paul Laxalt, as advised by the board of pardon and paroles.");
        assert!(!ex.failed());
        assert_eq!(ex.elapsed_ms, 0.0);
        let again = generate("g1", &pardon_prompt(), &stub(), &GenerationParams::default());
        assert_eq!(ex, again);
    }

    #[test]
    fn optional_groups_drop_when_vacant() {
        let s = EventStructure::new("Justice:Pardon", "pardoned").with("Adjudicator", "Governor Smith");
        assert_eq!(stub().realize(&s), "The Governor Smith pardoned.");
    }

    #[test]
    fn rewrite_rules() {
        let a = stub();
        let s = "Hazelhurst & Associates Inc. declared bankruptcy yesterday, with $22.5 million in debts.";
        assert_eq!(
            a.rewrite(Polarity::Negative, s, Some("bankruptcy")),
            "Hazelhurst & Associates Inc. did not declare bankruptcy yesterday, with $22.5 million in debts."
        );
        assert_eq!(
            a.rewrite(Polarity::Negative, "The court in Nevada clear Paul Laxalt, as advised by the board.", Some("clear")),
            "The court in Nevada did not clear Paul Laxalt, as advised by the board."
        );
        assert_eq!(
            a.rewrite(Polarity::Believed, s, None),
            "It is believed that Hazelhurst & Associates Inc. will declare bankruptcy yesterday, with $22.5 million in debts."
        );
        assert_eq!(a.rewrite(Polarity::Desired, "The army attacked the town.", None), "The army wanted to attack the town.");
        assert_eq!(a.rewrite(Polarity::Negative, "Quiet day", None), "It is not the case that Quiet day");
    }

    #[test]
    fn cleaning() {
        assert_eq!(clean_completion("  \"Hello there. More text here.\" "), "Hello there.");
        assert_eq!(clean_completion("Mr. Smith left. Then"), "Mr. Smith left.");
        assert_eq!(clean_completion("“Inc. declared bankruptcy.”"), "Inc. declared bankruptcy.");
        assert_eq!(clean_completion("   "), "");
    }

    struct Empty;
    impl GenerationAgent for Empty {
        fn complete(&self, _: &GenerationPrompt, _: &SamplingParams) -> Result<Completion, ClientError> {
            Ok(Completion { text: "  \"\" ".into(), prompt_tokens: 10, completion_tokens: 0, reported_ms: Some(5.0) })
        }
        fn identity(&self) -> String {
            "empty".into()
        }
    }

    #[test]
    fn empty_completions_exhaust_retries() {
        let params = GenerationParams { retry: RetryPolicy { retries: 2, backoff_ms: 0, max_backoff_ms: 0 }, ..Default::default() };
        let ex = generate("g", &pardon_prompt(), &Empty, &params);
        assert!(ex.failed());
        assert_eq!(ex.attempts, 3);
        assert_eq!(ex.prompt_tokens, 30);
        assert_eq!(ex.elapsed_ms, 15.0);
    }

    #[test]
    fn cost_math() {
        let p = Pricing { prompt_per_1k: 0.0015, completion_per_1k: 0.002 };
        assert!((p.cost(1000, 500) - 0.0025).abs() < 1e-12);
        let mut a = generate("a", &pardon_prompt(), &stub(), &GenerationParams::default());
        let mut b = a.clone();
        a.elapsed_ms = 2000.0;
        b.elapsed_ms = 4000.0;
        let r = cost_report(&[a, b]);
        assert_eq!(r.per_agent["stub"].mean_seconds_per_sentence, 3.0);
        assert_eq!(r.per_agent["stub"].mean_cost_per_sentence, 0.0);
    }
}

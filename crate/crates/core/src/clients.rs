//! Clients for the model endpoints the pipeline depends on (`/ner`, `/nli`,
//! `/embed`), plus deterministic in-process implementations that follow the
//! same contracts so the whole pipeline runs offline.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::text::{self, Lemmatizer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited (HTTP 429)")]
    RateLimited,
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) | ClientError::RateLimited | ClientError::Malformed(_) => true,
            ClientError::Status { status, .. } => *status >= 500,
        }
    }
}

/// Retry count and exponential backoff between attempts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { retries: 2, backoff_ms: 200, max_backoff_ms: 5_000 }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { retries: 0, backoff_ms: 0, max_backoff_ms: 0 }
    }

    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.backoff_ms.saturating_mul(1u64 << attempt.min(20)).min(self.max_backoff_ms);
        Duration::from_millis(ms)
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent.
    pub fn run<T>(&self, mut op: impl FnMut(u32) -> Result<T, ClientError>) -> Result<T, ClientError> {
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if attempt < self.retries && e.is_retryable() => {
                    log::debug!("attempt {attempt} failed: {e}; retrying");
                    thread::sleep(self.delay(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Connection settings for one HTTP endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout_ms: u64,
    pub batch_size: usize,
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: String::new(),
            timeout_ms: 30_000,
            batch_size: 16,
            concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

pub(crate) fn http_client(timeout_ms: u64) -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .expect("HTTP client configuration is static")
}

pub(crate) fn post_json<Req: Serialize + ?Sized, Resp: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &Req,
    bearer: Option<&str>,
) -> Result<Resp, ClientError> {
    let mut req = client.post(url).json(body);
    if let Some(token) = bearer {
        req = req.bearer_auth(token);
    }
    let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
    let status = resp.status();
    if status.as_u16() == 429 {
        return Err(ClientError::RateLimited);
    }
    let bytes = resp.bytes().map_err(|e| ClientError::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(ClientError::Status {
            status: status.as_u16(),
            body: String::from_utf8_lossy(&bytes).chars().take(500).collect(),
        });
    }
    serde_json::from_slice(&bytes).map_err(|e| ClientError::Malformed(e.to_string()))
}

pub(crate) fn join_url(base: &str, route: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), route)
}

/// Maps `f` over `items` with at most `cap` calls in flight; output order
/// follows input order.
pub fn bounded_map<T, R, F>(items: &[T], cap: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    use rayon::prelude::*;
    if cap <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(cap).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

// ---------------------------------------------------------------------------
// NER
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerEntity {
    pub text: String,
    pub label: String,
    pub start: usize,
    pub end: usize,
}

pub trait NerClient: Send + Sync {
    /// Tags each sentence; one entity list per input sentence.
    fn tag(&self, sentences: &[String]) -> Result<Vec<Vec<NerEntity>>, ClientError>;
    fn identity(&self) -> String;
}

#[derive(Serialize)]
struct NerRequest<'a> {
    sentences: &'a [String],
}

#[derive(Deserialize)]
struct NerResponse {
    results: Vec<Vec<NerEntity>>,
}

/// `POST /ner` client.
pub struct HttpNer {
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpNer {
    pub fn new(config: &EndpointConfig) -> Self {
        HttpNer { client: http_client(config.timeout_ms), url: join_url(&config.url, "/ner") }
    }
}

impl NerClient for HttpNer {
    fn tag(&self, sentences: &[String]) -> Result<Vec<Vec<NerEntity>>, ClientError> {
        let resp: NerResponse = post_json(&self.client, &self.url, &NerRequest { sentences }, None)?;
        if resp.results.len() != sentences.len() {
            return Err(ClientError::Malformed(format!(
                "expected {} result lists, got {}",
                sentences.len(),
                resp.results.len()
            )));
        }
        Ok(resp.results)
    }

    fn identity(&self) -> String {
        format!("http:{}", self.url)
    }
}

/// Longest-match gazetteer tagger with a four-digit-year rule for `DATE`.
#[derive(Clone, Debug)]
pub struct GazetteerNer {
    /// Sorted by descending surface length.
    entries: Vec<(String, String)>,
    digest: String,
}

impl GazetteerNer {
    pub fn new(entries: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut entries: Vec<(String, String)> =
            entries.into_iter().filter(|(s, l)| !s.is_empty() && !l.is_empty()).collect();
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        entries.dedup_by(|a, b| a.0 == b.0);
        let mut h = Sha256::new();
        for (s, l) in &entries {
            h.update(s.as_bytes());
            h.update(b"\t");
            h.update(l.as_bytes());
            h.update(b"\n");
        }
        GazetteerNer { entries, digest: hex::encode(&h.finalize()[..8]) }
    }

    /// Reads a `surface<TAB>LABEL` file.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let src = fs::read_to_string(path)?;
        Ok(Self::new(src.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).filter_map(|l| {
            let (s, lab) = l.split_once('\t')?;
            Some((s.trim().to_owned(), lab.trim().to_owned()))
        })))
    }

    pub fn tag_one(&self, sentence: &str) -> Vec<NerEntity> {
        let mut out = Vec::new();
        let mut byte = 0;
        let mut char_pos = 0;
        let mut prev: Option<char> = None;
        while byte < sentence.len() {
            let rest = &sentence[byte..];
            let at_boundary = !prev.is_some_and(char::is_alphanumeric);
            let hit = if at_boundary {
                self.entries
                    .iter()
                    .find(|(s, _)| {
                        rest.starts_with(s.as_str()) && !rest[s.len()..].chars().next().is_some_and(char::is_alphanumeric)
                    })
                    .map(|(s, l)| (s.clone(), l.clone()))
                    .or_else(|| year_at(rest).map(|y| (y.to_owned(), "DATE".to_owned())))
            } else {
                None
            };
            match hit {
                Some((surface, label)) => {
                    let n = surface.chars().count();
                    out.push(NerEntity { text: surface.clone(), label, start: char_pos, end: char_pos + n });
                    prev = surface.chars().next_back();
                    byte += surface.len();
                    char_pos += n;
                }
                None => {
                    let c = rest.chars().next().expect("non-empty");
                    prev = Some(c);
                    byte += c.len_utf8();
                    char_pos += 1;
                }
            }
        }
        out
    }
}

fn year_at(rest: &str) -> Option<&str> {
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    if digits != 4 {
        return None;
    }
    let y: u32 = rest[..4].parse().ok()?;
    (1000..=2099).contains(&y).then(|| &rest[..4])
}

impl NerClient for GazetteerNer {
    fn tag(&self, sentences: &[String]) -> Result<Vec<Vec<NerEntity>>, ClientError> {
        Ok(sentences.iter().map(|s| self.tag_one(s)).collect())
    }

    fn identity(&self) -> String {
        format!("gazetteer:{}", self.digest)
    }
}

// ---------------------------------------------------------------------------
// NLI
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NliPair {
    pub premise: String,
    pub hypothesis: String,
}

impl NliPair {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        NliPair { premise: premise.into(), hypothesis: hypothesis.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NliScores {
    pub entail: f64,
    pub neutral: f64,
    pub contradict: f64,
}

pub trait NliClient: Send + Sync {
    fn score(&self, pairs: &[NliPair]) -> Result<Vec<NliScores>, ClientError>;
    fn identity(&self) -> String;
}

#[derive(Serialize)]
struct NliRequest<'a> {
    pairs: &'a [NliPair],
}

#[derive(Deserialize)]
struct NliResponse {
    scores: Vec<NliScores>,
}

/// `POST /nli` client.
pub struct HttpNli {
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpNli {
    pub fn new(config: &EndpointConfig) -> Self {
        HttpNli { client: http_client(config.timeout_ms), url: join_url(&config.url, "/nli") }
    }
}

impl NliClient for HttpNli {
    fn score(&self, pairs: &[NliPair]) -> Result<Vec<NliScores>, ClientError> {
        let resp: NliResponse = post_json(&self.client, &self.url, &NliRequest { pairs }, None)?;
        if resp.scores.len() != pairs.len() {
            return Err(ClientError::Malformed(format!("expected {} scores, got {}", pairs.len(), resp.scores.len())));
        }
        if let Some(bad) = resp.scores.iter().find(|s| !(0.0..=1.0).contains(&s.entail)) {
            return Err(ClientError::Malformed(format!("entail score {} outside [0,1]", bad.entail)));
        }
        Ok(resp.scores)
    }

    fn identity(&self) -> String {
        format!("http:{}", self.url)
    }
}

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "was", "were", "be", "been", "being", "in", "on", "at", "by", "of", "and", "or",
    "to", "for", "with", "as", "from", "that", "this", "it", "its", "s",
];

/// Lexical entailment oracle: the entailment score is the fraction of the
/// hypothesis' content tokens (lemmatized, function words removed) that
/// also occur in the premise.
///
/// Coverage is directional, so `score(a, b)` and `score(b, a)` differ, and
/// an empty hypothesis is entailed by anything.
#[derive(Clone, Debug, Default)]
pub struct LexicalNli {
    lemmatizer: Lemmatizer,
}

impl LexicalNli {
    pub fn new(lemmatizer: Lemmatizer) -> Self {
        LexicalNli { lemmatizer }
    }

    pub fn content_tokens(&self, text: &str) -> Vec<String> {
        text::word_tokens(text)
            .into_iter()
            .map(|t| t.to_lowercase())
            .filter(|t| !FUNCTION_WORDS.contains(&t.as_str()))
            .map(|t| self.lemmatizer.lemmatize(&t))
            .collect()
    }

    pub fn entail(&self, premise: &str, hypothesis: &str) -> f64 {
        let hyp = self.content_tokens(hypothesis);
        if hyp.is_empty() {
            return 1.0;
        }
        let prem: BTreeSet<String> = self.content_tokens(premise).into_iter().collect();
        let covered = hyp.iter().filter(|t| prem.contains(*t)).count();
        (covered as f64 / hyp.len() as f64).clamp(0.0, 1.0)
    }
}

impl NliClient for LexicalNli {
    fn score(&self, pairs: &[NliPair]) -> Result<Vec<NliScores>, ClientError> {
        Ok(pairs
            .iter()
            .map(|p| {
                let entail = self.entail(&p.premise, &p.hypothesis);
                NliScores { entail, neutral: 1.0 - entail, contradict: 0.0 }
            })
            .collect())
    }

    fn identity(&self) -> String {
        "lexical-overlap".to_owned()
    }
}

/// Wraps an NLI client and records every pair it is asked to score.
pub struct RecordingNli<C> {
    pub inner: C,
    log: Mutex<Vec<NliPair>>,
}

impl<C> RecordingNli<C> {
    pub fn new(inner: C) -> Self {
        RecordingNli { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn requests(&self) -> Vec<NliPair> {
        self.log.lock().expect("log lock").clone()
    }
}

impl<C: NliClient> NliClient for RecordingNli<C> {
    fn score(&self, pairs: &[NliPair]) -> Result<Vec<NliScores>, ClientError> {
        self.log.lock().expect("log lock").extend_from_slice(pairs);
        self.inner.score(pairs)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

pub trait EmbedClient: Send + Sync {
    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, ClientError>;
    fn identity(&self) -> String;
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    sentences: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// `POST /embed` client; rejects vectors of the wrong dimension.
pub struct HttpEmbed {
    client: reqwest::blocking::Client,
    url: String,
    dimension: usize,
}

impl HttpEmbed {
    pub fn new(config: &EndpointConfig, dimension: usize) -> Self {
        HttpEmbed { client: http_client(config.timeout_ms), url: join_url(&config.url, "/embed"), dimension }
    }
}

impl EmbedClient for HttpEmbed {
    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, ClientError> {
        let resp: EmbedResponse = post_json(&self.client, &self.url, &EmbedRequest { sentences }, None)?;
        if resp.vectors.len() != sentences.len() {
            return Err(ClientError::Malformed(format!(
                "expected {} vectors, got {}",
                sentences.len(),
                resp.vectors.len()
            )));
        }
        if let Some(v) = resp.vectors.iter().find(|v| v.len() != self.dimension) {
            return Err(ClientError::Malformed(format!("expected dimension {}, got {}", self.dimension, v.len())));
        }
        Ok(resp.vectors)
    }

    fn identity(&self) -> String {
        format!("http:{}#{}", self.url, self.dimension)
    }
}

/// Hashed bag-of-words embedding, L2-normalized.
#[derive(Clone, Debug)]
pub struct HashedBowEmbedder {
    pub dimension: usize,
}

impl HashedBowEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashedBowEmbedder { dimension }
    }

    pub fn embed_one(&self, sentence: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for tok in text::word_tokens(sentence) {
            let digest = Sha256::digest(tok.to_lowercase().as_bytes());
            let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
            v[(h % self.dimension as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbedClient for HashedBowEmbedder {
    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, ClientError> {
        Ok(sentences.iter().map(|s| self.embed_one(s)).collect())
    }

    fn identity(&self) -> String {
        format!("hashed-bow:{}", self.dimension)
    }
}

/// Fixed sentence → vector table; unknown sentences are an error.
#[derive(Clone, Debug, Default)]
pub struct TableEmbedder {
    pub vectors: HashMap<String, Vec<f64>>,
}

impl EmbedClient for TableEmbedder {
    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, ClientError> {
        sentences
            .iter()
            .map(|s| self.vectors.get(s).cloned().ok_or_else(|| ClientError::Malformed(format!("no vector for `{s}`"))))
            .collect()
    }

    fn identity(&self) -> String {
        "table".to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    #[test]
    fn gazetteer_tags_paper_sentence() {
        let ner = GazetteerNer::new([
            ("Paul Laxalt".to_owned(), "PER".to_owned()),
            ("Paul".to_owned(), "PER".to_owned()),
            ("Nevada".to_owned(), "GPE".to_owned()),
        ]);
        let ents = ner.tag_one("Paul Laxalt retired in 1988 in Nevada.");
        let got: Vec<(&str, &str)> = ents.iter().map(|e| (e.text.as_str(), e.label.as_str())).collect();
        assert_eq!(got, vec![("Paul Laxalt", "PER"), ("1988", "DATE"), ("Nevada", "GPE")]);
        assert_eq!((ents[2].start, ents[2].end), (31, 37));
    }

    #[test]
    fn gazetteer_respects_word_boundaries() {
        let ner = GazetteerNer::new([("Iran".to_owned(), "GPE".to_owned())]);
        assert!(ner.tag_one("Iranian officials met in 19888.").is_empty());
    }

    #[test]
    fn lexical_nli_reflexive_and_directional() {
        let nli = LexicalNli::default();
        let s = "The court in Nevada clear Paul Laxalt.";
        assert_eq!(nli.entail(s, s), 1.0);
        assert_eq!(nli.entail("anything", ""), 1.0);
        let a = "Paul Laxalt was pardoned";
        let b = "Paul Laxalt was pardoned in Nevada by the court";
        assert_eq!(nli.entail(b, a), 1.0);
        // hypothesis tokens: paul laxalt pardon nevada court -> 3 of 5 covered
        assert!((nli.entail(a, b) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn hashed_embeddings_are_unit_and_deterministic() {
        let e = HashedBowEmbedder::new(16);
        let a = e.embed_one("the court cleared Paul Laxalt");
        assert_eq!(a, e.embed_one("the court cleared Paul Laxalt"));
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.embed_one("").iter().all(|x| *x == 0.0));
    }

    #[test]
    fn retry_policy_stops_on_fatal_errors() {
        let calls = AtomicU32::new(0);
        let p = RetryPolicy { retries: 3, backoff_ms: 0, max_backoff_ms: 0 };
        let r: Result<(), _> = p.run(|_| {
            calls.fetch_add(1, Ordering::SeqCst);
            Err(ClientError::Status { status: 400, body: String::new() })
        });
        assert!(r.is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 1);

        calls.store(0, Ordering::SeqCst);
        let r = p.run(|attempt| {
            calls.fetch_add(1, Ordering::SeqCst);
            if attempt < 2 { Err(ClientError::RateLimited) } else { Ok(attempt) }
        });
        assert_eq!(r, Ok(2));
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn backoff_is_capped() {
        let p = RetryPolicy { retries: 10, backoff_ms: 100, max_backoff_ms: 1_000 };
        assert_eq!(p.delay(0), Duration::from_millis(100));
        assert_eq!(p.delay(3), Duration::from_millis(800));
        assert_eq!(p.delay(9), Duration::from_millis(1_000));
    }

    #[test]
    fn bounded_map_preserves_order() {
        let items: Vec<u32> = (0..100).collect();
        let out = bounded_map(&items, 4, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}

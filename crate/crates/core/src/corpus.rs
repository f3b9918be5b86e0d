//! Inverted index over a sentence-per-line corpus, trigger-keyed retrieval,
//! and context-entity extraction through an NER client.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clients::{bounded_map, ClientError, NerClient, RetryPolicy};
use crate::model::EventStructure;
use crate::text::{self, Lemmatizer, Normalization};

pub type SentenceId = u32;

const INDEX_MAGIC: &str = "#eventaug-corpus-index v1";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: invalid UTF-8")]
    Encoding { path: PathBuf, line: usize },
    #[error("{path}:{line}: malformed index file: {reason}")]
    Format { path: PathBuf, line: usize, reason: String },
}

/// Sentence store plus postings from normalized token to sorted sentence ids.
///
/// Sentence ids are 1-based corpus line numbers; blank lines are skipped but
/// still consume an id.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusIndex {
    mode: Normalization,
    corpus_sha256: String,
    sentences: BTreeMap<SentenceId, String>,
    postings: BTreeMap<String, Vec<SentenceId>>,
    lemmatizer: LemmatizerHandle,
}

/// Lemmatizer wrapper that compares equal regardless of table contents, so
/// indexes compare on data only.
#[derive(Clone, Debug, Default)]
struct LemmatizerHandle(Lemmatizer);

impl PartialEq for LemmatizerHandle {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// SHA-256 of a file, hex encoded.
pub fn file_sha256(path: &Path) -> Result<String, CorpusError> {
    let mut f = File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Builds an index from a corpus file.
pub fn build_index(corpus: &Path, mode: Normalization, lemmatizer: &Lemmatizer) -> Result<CorpusIndex, CorpusError> {
    let io = |source| CorpusError::Io { path: corpus.to_owned(), source };
    let bytes = fs::read(corpus).map_err(io)?;
    let corpus_sha256 = hex::encode(Sha256::digest(&bytes));
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| CorpusError::Encoding { path: corpus.to_owned(), line: i + 1 })?;
        lines.push(line.to_owned());
    }
    if bytes.ends_with(b"\n") {
        lines.pop();
    }
    Ok(CorpusIndex::from_sentences(
        lines.into_iter().enumerate().map(|(i, s)| ((i + 1) as SentenceId, s)),
        mode,
        lemmatizer.clone(),
        corpus_sha256,
    ))
}

/// Loads the index at `index_path` when it matches the corpus hash and mode;
/// otherwise rebuilds and persists it. Returns whether a rebuild happened.
pub fn open_or_build(
    corpus: &Path,
    index_path: &Path,
    mode: Normalization,
    lemmatizer: &Lemmatizer,
) -> Result<(CorpusIndex, bool), CorpusError> {
    let hash = file_sha256(corpus)?;
    if index_path.exists() {
        match CorpusIndex::read(index_path, lemmatizer) {
            Ok(idx) if idx.corpus_sha256 == hash && idx.mode == mode => return Ok((idx, false)),
            Ok(_) => log::info!("{} is stale; rebuilding", index_path.display()),
            Err(e) => log::warn!("ignoring unreadable index: {e}"),
        }
    }
    let idx = build_index(corpus, mode, lemmatizer)?;
    idx.write(index_path)?;
    Ok((idx, true))
}

impl CorpusIndex {
    pub fn from_sentences(
        sentences: impl IntoIterator<Item = (SentenceId, String)>,
        mode: Normalization,
        lemmatizer: Lemmatizer,
        corpus_sha256: String,
    ) -> Self {
        let mut store = BTreeMap::new();
        let mut postings: BTreeMap<String, Vec<SentenceId>> = BTreeMap::new();
        for (id, s) in sentences {
            if s.trim().is_empty() {
                continue;
            }
            let toks: BTreeSet<String> = text::normalized_tokens(&s, mode, &lemmatizer).into_iter().collect();
            for t in toks {
                postings.entry(t).or_default().push(id);
            }
            store.insert(id, s);
        }
        for ids in postings.values_mut() {
            ids.sort_unstable();
            ids.dedup();
        }
        CorpusIndex { mode, corpus_sha256, sentences: store, postings, lemmatizer: LemmatizerHandle(lemmatizer) }
    }

    pub fn mode(&self) -> Normalization {
        self.mode
    }

    pub fn corpus_sha256(&self) -> &str {
        &self.corpus_sha256
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, id: SentenceId) -> Option<&str> {
        self.sentences.get(&id).map(String::as_str)
    }

    pub fn sentences(&self) -> impl Iterator<Item = (SentenceId, &str)> {
        self.sentences.iter().map(|(id, s)| (*id, s.as_str()))
    }

    pub fn postings(&self, normalized_token: &str) -> &[SentenceId] {
        self.postings.get(normalized_token).map_or(&[], Vec::as_slice)
    }

    /// Normalized, de-duplicated word tokens of a query string.
    pub fn normalize_query(&self, query: &str) -> Vec<String> {
        let mut seen = BTreeSet::new();
        text::normalized_tokens(query, self.mode, &self.lemmatizer.0)
            .into_iter()
            .filter(|t| seen.insert(t.clone()))
            .collect()
    }

    /// Ids of sentences containing every normalized token of `query`, ascending.
    pub fn matching(&self, query: &str) -> Vec<SentenceId> {
        let toks = self.normalize_query(query);
        let mut lists: Vec<&[SentenceId]> = toks.iter().map(|t| self.postings(t)).collect();
        if lists.is_empty() {
            return Vec::new();
        }
        lists.sort_by_key(|l| l.len());
        let mut acc: Vec<SentenceId> = lists[0].to_vec();
        for l in &lists[1..] {
            acc = intersect_sorted(&acc, l);
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    /// Serializes to the versioned line-oriented index format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(INDEX_MAGIC);
        out.push('\n');
        out.push_str(&format!("mode\t{}\n", self.mode.as_str()));
        out.push_str(&format!("corpus_sha256\t{}\n", self.corpus_sha256));
        out.push_str(&format!("sentences\t{}\n", self.sentences.len()));
        for (id, s) in &self.sentences {
            out.push_str(&format!("S\t{id}\t{s}\n"));
        }
        out.push_str(&format!("postings\t{}\n", self.postings.len()));
        for (tok, ids) in &self.postings {
            let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
            out.push_str(&format!("P\t{tok}\t{}\n", ids.join(" ")));
        }
        out.into_bytes()
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_bytes()).map_err(|source| CorpusError::Io { path: path.to_owned(), source })
    }

    /// Reads an index file, checking the format version and postings invariants.
    pub fn read(path: &Path, lemmatizer: &Lemmatizer) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
        let fmt = |line: usize, reason: String| CorpusError::Format { path: path.to_owned(), line, reason };
        let mut mode = None;
        let mut hash = None;
        let mut sentences = BTreeMap::new();
        let mut postings = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|_| CorpusError::Encoding { path: path.to_owned(), line: n })?;
            if n == 1 {
                if line != INDEX_MAGIC {
                    return Err(fmt(n, format!("unsupported header `{line}`")));
                }
                continue;
            }
            let (tag, rest) = line.split_once('\t').ok_or_else(|| fmt(n, "missing field separator".into()))?;
            match tag {
                "mode" => mode = Some(rest.parse::<Normalization>().map_err(|e| fmt(n, e))?),
                "corpus_sha256" => hash = Some(rest.to_owned()),
                "sentences" | "postings" => {}
                "S" => {
                    let (id, s) = rest.split_once('\t').ok_or_else(|| fmt(n, "sentence record needs id and text".into()))?;
                    let id: SentenceId = id.parse().map_err(|_| fmt(n, format!("bad sentence id `{id}`")))?;
                    sentences.insert(id, s.to_owned());
                }
                "P" => {
                    let (tok, ids) = rest.split_once('\t').ok_or_else(|| fmt(n, "posting record needs token and ids".into()))?;
                    let ids = ids
                        .split(' ')
                        .filter(|x| !x.is_empty())
                        .map(|x| x.parse::<SentenceId>().map_err(|_| fmt(n, format!("bad id `{x}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    if ids.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(fmt(n, format!("postings for `{tok}` not strictly ascending")));
                    }
                    if let Some(missing) = ids.iter().find(|id| !sentences.contains_key(*id)) {
                        return Err(fmt(n, format!("posting references unknown sentence {missing}")));
                    }
                    postings.insert(tok.to_owned(), ids);
                }
                other => return Err(fmt(n, format!("unknown record `{other}`"))),
            }
        }
        Ok(CorpusIndex {
            mode: mode.ok_or_else(|| fmt(0, "missing mode".into()))?,
            corpus_sha256: hash.ok_or_else(|| fmt(0, "missing corpus hash".into()))?,
            sentences,
            postings,
            lemmatizer: LemmatizerHandle(lemmatizer.clone()),
        })
    }
}

fn intersect_sorted(a: &[SentenceId], b: &[SentenceId]) -> Vec<SentenceId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Which matches to keep when there are more than `limit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Lowest ids first.
    #[default]
    First,
    /// Uniform sample without replacement, returned in ascending order.
    Sample,
}

/// Sentences sharing every trigger token with the structure, at most `limit`.
///
/// # Panics
/// Panics if `limit` is zero.
pub fn retrieve_by_trigger<R: Rng + ?Sized>(
    index: &CorpusIndex,
    structure: &EventStructure,
    limit: usize,
    selection: Selection,
    rng: &mut R,
) -> Vec<SentenceId> {
    assert!(limit >= 1, "retrieval limit must be at least 1");
    let matches = index.matching(&structure.trigger);
    if matches.len() <= limit {
        return matches;
    }
    match selection {
        Selection::First => matches[..limit].to_vec(),
        Selection::Sample => {
            let mut picked: Vec<SentenceId> = sample(rng, matches.len(), limit).into_iter().map(|i| matches[i]).collect();
            picked.sort_unstable();
            picked
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextEntity {
    pub text: String,
    pub entity_type: String,
}

impl ContextEntity {
    pub fn new(text: impl Into<String>, entity_type: impl Into<String>) -> Self {
        ContextEntity { text: text.into(), entity_type: entity_type.into() }
    }
}

/// Entities found in one retrieved sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCandidate {
    pub source_sentence_id: SentenceId,
    pub entities: Vec<ContextEntity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceError {
    pub sentence_id: SentenceId,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextExtraction {
    pub candidates: Vec<ContextCandidate>,
    pub errors: Vec<SentenceError>,
    /// Entities dropped because their label is outside the configured set.
    pub dropped_entities: usize,
}

#[derive(Clone, Debug)]
pub struct ExtractOptions {
    pub labels: BTreeSet<String>,
    pub batch_size: usize,
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

/// Tags the given sentences and keeps one candidate per sentence with at
/// least one in-label entity. Failed batches are reported per sentence.
pub fn extract_context(
    index: &CorpusIndex,
    sentence_ids: &[SentenceId],
    ner: &dyn NerClient,
    opts: &ExtractOptions,
) -> ContextExtraction {
    let mut out = ContextExtraction::default();
    let mut known = Vec::with_capacity(sentence_ids.len());
    for &id in sentence_ids {
        match index.sentence(id) {
            Some(s) => known.push((id, s.to_owned())),
            None => out.errors.push(SentenceError { sentence_id: id, error: "unknown sentence id".into() }),
        }
    }
    let batches: Vec<&[(SentenceId, String)]> = known.chunks(opts.batch_size.max(1)).collect();
    let results: Vec<Result<Vec<Vec<crate::clients::NerEntity>>, ClientError>> =
        bounded_map(&batches, opts.concurrency, |batch| {
            let texts: Vec<String> = batch.iter().map(|(_, s)| s.clone()).collect();
            opts.retry.run(|_| ner.tag(&texts))
        });
    for (batch, result) in batches.iter().zip(results) {
        match result {
            Ok(tagged) => {
                for ((id, _), ents) in batch.iter().zip(tagged) {
                    let mut entities = Vec::with_capacity(ents.len());
                    for e in ents {
                        if opts.labels.contains(&e.label) {
                            entities.push(ContextEntity::new(e.text, e.label));
                        } else {
                            out.dropped_entities += 1;
                        }
                    }
                    if !entities.is_empty() {
                        out.candidates.push(ContextCandidate { source_sentence_id: *id, entities });
                    }
                }
            }
            Err(e) => {
                log::warn!("NER failed for {} sentences: {e}", batch.len());
                out.errors.extend(batch.iter().map(|(id, _)| SentenceError { sentence_id: *id, error: e.to_string() }));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::GazetteerNer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus(dir: &Path, lines: &[&str]) -> PathBuf {
        let p = dir.join("corpus.txt");
        fs::write(&p, lines.join("\n") + "\n").unwrap();
        p
    }

    #[test]
    fn postings_use_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = corpus(dir.path(), &["The court met.", "He sought a pardon today.", "Nothing else."]);
        let idx = build_index(&p, Normalization::Lowercase, &Lemmatizer::builtin()).unwrap();
        assert_eq!(idx.postings("pardon"), &[2]);
        assert_eq!(idx.len(), 3);
    }

    #[test]
    fn lemmatized_mode_matches_inflections() {
        let lem = Lemmatizer::builtin();
        let dir = tempfile::tempdir().unwrap();
        let p = corpus(dir.path(), &["Officials cleared the suspects.", "The sky is blue."]);
        let idx = build_index(&p, Normalization::Lemmatized, &lem).unwrap();
        assert_eq!(idx.matching("clear"), vec![1]);
        let exact = build_index(&p, Normalization::Exact, &lem).unwrap();
        assert!(exact.matching("clear").is_empty());
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, b"ok line\nbad \xff line\n").unwrap();
        match build_index(&p, Normalization::Exact, &Lemmatizer::builtin()).unwrap_err() {
            CorpusError::Encoding { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn index_file_round_trips_and_rebuilds_on_change() {
        let lem = Lemmatizer::builtin();
        let dir = tempfile::tempdir().unwrap();
        let p = corpus(dir.path(), &["a\tb tabbed line", "", "third line here"]);
        let ip = dir.path().join("idx");
        let (idx, rebuilt) = open_or_build(&p, &ip, Normalization::Lemmatized, &lem).unwrap();
        assert!(rebuilt);
        assert_eq!(idx.sentence(1), Some("a\tb tabbed line"));
        assert_eq!(idx.sentence(2), None);
        let (again, rebuilt) = open_or_build(&p, &ip, Normalization::Lemmatized, &lem).unwrap();
        assert!(!rebuilt);
        assert_eq!(again, idx);
        let (_, rebuilt) = open_or_build(&p, &ip, Normalization::Exact, &lem).unwrap();
        assert!(rebuilt);
        fs::write(&p, "changed corpus\n").unwrap();
        let (changed, rebuilt) = open_or_build(&p, &ip, Normalization::Exact, &lem).unwrap();
        assert!(rebuilt);
        assert_eq!(changed.len(), 1);
    }

    #[test]
    fn corrupt_index_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("idx");
        fs::write(&ip, format!("{INDEX_MAGIC}\nmode\texact\ncorpus_sha256\tx\nS\t1\thi\nP\thi\t2 1\n")).unwrap();
        assert!(CorpusIndex::read(&ip, &Lemmatizer::builtin()).unwrap_err().to_string().contains("ascending"));
        fs::write(&ip, "garbage\n").unwrap();
        assert!(CorpusIndex::read(&ip, &Lemmatizer::builtin()).is_err());
    }

    #[test]
    fn retrieval_limits_and_conjunction() {
        let lines: Vec<String> = (1..=7)
            .map(|i| if i % 2 == 1 { format!("Judges clear case {i}.") } else { format!("Other news {i}.") })
            .chain(std::iter::once("The appeals court moved to clear their names.".to_owned()))
            .collect();
        let idx = CorpusIndex::from_sentences(
            lines.into_iter().enumerate().map(|(i, s)| (i as u32 + 1, s)),
            Normalization::Lemmatized,
            Lemmatizer::builtin(),
            String::new(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = EventStructure::new("Justice:Pardon", "clear");
        assert_eq!(retrieve_by_trigger(&idx, &s, 3, Selection::First, &mut rng), vec![1, 3, 5]);
        assert_eq!(retrieve_by_trigger(&idx, &s, 99, Selection::First, &mut rng), vec![1, 3, 5, 7, 8]);
        let sampled = retrieve_by_trigger(&idx, &s, 3, Selection::Sample, &mut rng);
        assert_eq!(sampled.len(), 3);
        assert!(sampled.windows(2).all(|w| w[0] < w[1]));
        let multi = EventStructure::new("Justice:Pardon", "clear names");
        assert_eq!(retrieve_by_trigger(&idx, &multi, 5, Selection::First, &mut rng), vec![8]);
        let absent = EventStructure::new("Justice:Pardon", "exonerate");
        assert!(retrieve_by_trigger(&idx, &absent, 5, Selection::First, &mut rng).is_empty());
    }

    struct FailingNer;
    impl NerClient for FailingNer {
        fn tag(&self, _: &[String]) -> Result<Vec<Vec<crate::clients::NerEntity>>, ClientError> {
            Err(ClientError::Transport("down".into()))
        }
        fn identity(&self) -> String {
            "failing".into()
        }
    }

    fn opts() -> ExtractOptions {
        ExtractOptions {
            labels: ["PER", "GPE", "DATE"].iter().map(|s| s.to_string()).collect(),
            batch_size: 2,
            concurrency: 2,
            retry: RetryPolicy::none(),
        }
    }

    #[test]
    fn context_extraction_keeps_order_and_drops_empty() {
        let idx = CorpusIndex::from_sentences(
            [
                (1, "Paul Laxalt retired in 1988 in Nevada.".to_owned()),
                (2, "nothing to see".to_owned()),
                (3, "Nevada wins.".to_owned()),
            ],
            Normalization::Lowercase,
            Lemmatizer::builtin(),
            String::new(),
        );
        let ner = GazetteerNer::new([
            ("Paul Laxalt".to_owned(), "PER".to_owned()),
            ("Nevada".to_owned(), "GPE".to_owned()),
        ]);
        let out = extract_context(&idx, &[1, 2, 3, 1], &ner, &opts());
        assert_eq!(out.candidates.iter().map(|c| c.source_sentence_id).collect::<Vec<_>>(), vec![1, 3, 1]);
        assert_eq!(
            out.candidates[0].entities,
            vec![
                ContextEntity::new("Paul Laxalt", "PER"),
                ContextEntity::new("1988", "DATE"),
                ContextEntity::new("Nevada", "GPE")
            ]
        );
        let failed = extract_context(&idx, &[1, 3, 42], &FailingNer, &opts());
        assert!(failed.candidates.is_empty());
        assert_eq!(failed.errors.len(), 3);
    }
}

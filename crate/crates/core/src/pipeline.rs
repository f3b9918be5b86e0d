//! Stage functions and the end-to-end runner.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clients::{
    EmbedClient, GazetteerNer, HashedBowEmbedder, HttpEmbed, HttpNer, HttpNli, LexicalNli, NerClient, NliClient,
};
use crate::config::{AgentKind, EmbedBackend, NerBackend, NliBackend, PipelineConfig};
use crate::corpus::{self, ContextCandidate, CorpusIndex, ExtractOptions, SentenceError, SentenceId};
use crate::curation::{self, AuditReport, DiscardOutcome, EpochBatchPlan};
use crate::dataset::{self, LoadOptions};
use crate::enrich::{enrich_batch, EnrichedStructure};
use crate::generation::{self, ChatAgent, GeneratedExample, GenerationAgent, GenerationParams, StubAgent};
use crate::model::{check_disjoint, DatasetPartition, EventStructure, PartitionKind};
use crate::ontology::{load_ontology, EventOntology};
use crate::prompt::build_positive_prompt;
use crate::text::Lemmatizer;
use crate::validation::{self, PairCounts, ValidationOutcome, ValidatorTrainingPair};

/// Failure of one pipeline stage.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct StageError {
    pub stage: String,
    pub message: String,
    /// Set when the failure is a required input that does not exist.
    pub missing_input: Option<PathBuf>,
}

impl StageError {
    pub fn new(stage: &str, message: impl ToString) -> Self {
        StageError { stage: stage.to_owned(), message: message.to_string(), missing_input: None }
    }

    pub fn missing(stage: &str, path: &Path) -> Self {
        StageError {
            stage: stage.to_owned(),
            message: format!("input file not found: {}", path.display()),
            missing_input: Some(path.to_owned()),
        }
    }
}

pub fn require_file(stage: &str, path: &Path) -> Result<(), StageError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(StageError::missing(stage, path))
    }
}

pub fn load_lemmatizer(config: &PipelineConfig) -> Result<Lemmatizer, StageError> {
    match &config.paths.lemmas {
        None => Ok(Lemmatizer::builtin()),
        Some(p) => {
            require_file("config", p)?;
            Lemmatizer::from_file(p).map_err(|e| StageError::new("config", format!("{}: {e}", p.display())))
        }
    }
}

pub fn load_ontology_for(stage: &str, config: &PipelineConfig) -> Result<EventOntology, StageError> {
    require_file(stage, &config.paths.ontology)?;
    let o = load_ontology(&config.paths.ontology).map_err(|e| StageError::new(stage, e))?;
    o.check_label_coverage(&config.ner.labels).map_err(|e| StageError::new(stage, e))?;
    Ok(o)
}

pub fn load_partition(stage: &str, path: &Path, ontology: &EventOntology, kind: PartitionKind) -> Result<DatasetPartition, StageError> {
    require_file(stage, path)?;
    let report = dataset::load_dataset(path, ontology, kind, LoadOptions { fail_fast: true }).map_err(|e| StageError::new(stage, e))?;
    Ok(report.partition)
}

pub fn ner_client(config: &PipelineConfig) -> Result<Box<dyn NerClient>, StageError> {
    Ok(match config.ner.backend {
        NerBackend::Http => Box::new(HttpNer::new(&config.ner.endpoint)),
        NerBackend::Gazetteer => {
            let p = config.ner.gazetteer.as_ref().ok_or_else(|| StageError::new("config", "ner.gazetteer not set"))?;
            require_file("retrieve", p)?;
            Box::new(GazetteerNer::from_file(p).map_err(|e| StageError::new("retrieve", format!("{}: {e}", p.display())))?)
        }
    })
}

pub fn nli_client(config: &PipelineConfig, lemmatizer: &Lemmatizer) -> Box<dyn NliClient> {
    match config.nli.backend {
        NliBackend::Lexical => Box::new(LexicalNli::new(lemmatizer.clone())),
        NliBackend::Http => Box::new(HttpNli::new(&config.nli.endpoint)),
    }
}

pub fn embed_client(config: &PipelineConfig) -> Box<dyn EmbedClient> {
    match config.embed.backend {
        EmbedBackend::Hashed => Box::new(HashedBowEmbedder::new(config.embed.dimension)),
        EmbedBackend::Http => Box::new(HttpEmbed::new(&config.embed.endpoint, config.embed.dimension)),
    }
}

pub fn agent(config: &PipelineConfig, ontology: Arc<EventOntology>, lemmatizer: &Lemmatizer) -> Box<dyn GenerationAgent> {
    match config.agent.kind {
        AgentKind::Stub => Box::new(StubAgent::new(ontology, lemmatizer.clone()).with_pricing(config.agent.stub_pricing)),
        AgentKind::Chat => Box::new(ChatAgent::new(config.agent.chat.clone())),
    }
}

pub fn generation_params(config: &PipelineConfig) -> GenerationParams {
    GenerationParams {
        sampling: config.generation.sampling,
        retry: config.generation.retry,
        concurrency: config.generation.concurrency,
    }
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// An annotated structure from the few-shot data, ready for augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedStructure {
    /// `<sentence id>#<mention index>`.
    pub id: String,
    pub sentence_id: String,
    pub structure: EventStructure,
}

pub fn seed_structures(partition: &DatasetPartition) -> Vec<SeedStructure> {
    partition
        .examples
        .iter()
        .flat_map(|s| {
            s.mentions.iter().enumerate().map(move |(j, m)| SeedStructure {
                id: format!("{}#{j}", s.sentence_id),
                sentence_id: s.sentence_id.clone(),
                structure: m.structure(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub structure_id: String,
    pub sentence_id: String,
    pub structure: EventStructure,
    pub corpus_sentence_ids: Vec<SentenceId>,
    pub candidates: Vec<ContextCandidate>,
    #[serde(default)]
    pub errors: Vec<SentenceError>,
}

/// Retrieves trigger-sharing corpus sentences for every structure and tags
/// them. Each distinct sentence is tagged once.
pub fn retrieve_context(
    index: &CorpusIndex,
    structures: &[SeedStructure],
    ner: &dyn NerClient,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Vec<RetrievalRecord>, StageError> {
    if config.retrieval.limit == 0 {
        return Err(StageError::new("retrieve", "retrieval.limit must be at least 1"));
    }
    let ids: Vec<Vec<SentenceId>> = structures
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = crate::substream(seed, i as u64);
            corpus::retrieve_by_trigger(index, &s.structure, config.retrieval.limit, config.retrieval.selection, &mut rng)
        })
        .collect();
    let all: Vec<SentenceId> = ids.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let opts = ExtractOptions {
        labels: config.ner.labels.clone(),
        batch_size: config.ner.endpoint.batch_size,
        concurrency: config.ner.endpoint.concurrency,
        retry: config.ner.endpoint.retry,
    };
    let extraction = corpus::extract_context(index, &all, ner, &opts);
    let by_id: BTreeMap<SentenceId, &ContextCandidate> =
        extraction.candidates.iter().map(|c| (c.source_sentence_id, c)).collect();
    let errors: BTreeMap<SentenceId, &SentenceError> = extraction.errors.iter().map(|e| (e.sentence_id, e)).collect();
    Ok(structures
        .iter()
        .zip(ids)
        .map(|(s, ids)| RetrievalRecord {
            structure_id: s.id.clone(),
            sentence_id: s.sentence_id.clone(),
            structure: s.structure.clone(),
            candidates: ids.iter().filter_map(|i| by_id.get(i).map(|c| (*c).clone())).collect(),
            errors: ids.iter().filter_map(|i| errors.get(i).map(|e| (*e).clone())).collect(),
            corpus_sentence_ids: ids,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichedRecord {
    /// `<structure id>.v<k>`.
    pub id: String,
    pub structure_id: String,
    pub sentence_id: String,
    pub enriched: EnrichedStructure,
    pub context: ContextCandidate,
}

pub fn enrich_all(
    records: &[RetrievalRecord],
    ontology: &EventOntology,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Vec<EnrichedRecord>, StageError> {
    if config.generation.samples_per_structure == 0 {
        return Err(StageError::new("enrich", "samples_per_structure must be at least 1"));
    }
    let structures: Vec<EventStructure> = records.iter().map(|r| r.structure.clone()).collect();
    let candidates: Vec<Vec<ContextCandidate>> = records.iter().map(|r| r.candidates.clone()).collect();
    let variants = enrich_batch(&structures, &candidates, ontology, &config.enrichment, seed, config.generation.samples_per_structure)
        .map_err(|e| StageError::new("enrich", e))?;
    let mut out = Vec::new();
    for (r, vs) in records.iter().zip(variants) {
        for (k, v) in vs.into_iter().enumerate() {
            out.push(EnrichedRecord {
                id: format!("{}.v{k}", r.structure_id),
                structure_id: r.structure_id.clone(),
                sentence_id: r.sentence_id.clone(),
                enriched: v.enriched,
                context: v.context,
            });
        }
    }
    Ok(out)
}

/// Positive generation for every enriched record, then the configured
/// rewrites of every successful positive. Output is sorted by id.
pub fn generate_all(
    records: &[EnrichedRecord],
    ontology: &EventOntology,
    agent: &dyn GenerationAgent,
    config: &PipelineConfig,
) -> Result<Vec<GeneratedExample>, StageError> {
    let params = generation_params(config);
    let mut requests = Vec::with_capacity(records.len());
    for r in records {
        let p = build_positive_prompt(&r.enriched, &r.context, ontology, &config.prompts).map_err(|e| StageError::new("generate", e))?;
        requests.push((r.id.clone(), p));
    }
    let mut positives = generation::generate_batch(&requests, agent, &params);
    for (ex, r) in positives.iter_mut().zip(records) {
        ex.base_sentence_id = Some(r.sentence_id.clone());
    }
    let mut out = Vec::new();
    for p in &positives {
        if !p.failed() && !config.generation.negative_kinds.is_empty() {
            out.extend(generation::generate_negative_set(p, &config.generation.negative_kinds, agent, &params, &config.prompts));
        }
    }
    out.extend(positives);
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn validate_all(examples: Vec<GeneratedExample>, ontology: &EventOntology, nli: &dyn NliClient, config: &PipelineConfig) -> ValidationOutcome {
    validation::validate_batch(examples, ontology, nli, &config.validation)
}

pub struct Curated {
    pub discard: DiscardOutcome,
    pub plans: Vec<EpochBatchPlan>,
    pub warnings: Vec<String>,
}

pub fn curate(
    validated: Vec<GeneratedExample>,
    base: &DatasetPartition,
    novel: &DatasetPartition,
    embed: &dyn EmbedClient,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Curated, StageError> {
    let discard = curation::discard_corrupted(validated, embed, &config.curation.discard).map_err(|e| StageError::new("curate", e))?;
    let ids = |p: &DatasetPartition| p.examples.iter().map(|s| s.sentence_id.clone()).collect::<Vec<_>>();
    let gen_ids: Vec<String> = discard.kept.iter().map(|e| e.id.clone()).collect();
    let (plans, mut warnings) = curation::plan_epochs(
        &ids(base),
        &ids(novel),
        &gen_ids,
        config.curation.epochs,
        config.curation.batch_sizes,
        seed,
        &discard.records,
    )
    .map_err(|e| StageError::new("curate", e))?;
    warnings.splice(0..0, discard.warnings.iter().cloned());
    Ok(Curated { discard, plans, warnings })
}

/// RNG substream key for validator pairs, kept apart from the per-index keys.
const PAIRS_STREAM: u64 = u64::MAX;

/// Entailment training pairs from the annotated base set.
pub fn validator_pairs(
    base: &DatasetPartition,
    ontology: &EventOntology,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Vec<ValidatorTrainingPair>, StageError> {
    let n = base.mentions().count() * config.validator_pairs.per_mention;
    let counts = PairCounts { paired: n, unpaired_shuffle: n, unspecific_replacement: n };
    validation::build_validator_pairs(base, ontology, &mut crate::substream(seed, PAIRS_STREAM), counts)
        .map_err(|e| StageError::new("validator-pairs", e))
}

// ---------------------------------------------------------------------------
// End-to-end run
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub validator_pairs: usize,
    pub seed_structures: usize,
    pub retrieved_sentences: usize,
    pub context_candidates: usize,
    pub enriched: usize,
    pub generated: usize,
    pub generation_failed: usize,
    pub validated_pass: usize,
    pub discarded: usize,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// The effective configuration, as TOML.
    pub config: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub corpus_sha256: String,
    pub index_rebuilt: bool,
    /// Agent and endpoint identities by role.
    pub identities: BTreeMap<String, String>,
    pub counts: StageCounts,
    pub stage_ms: BTreeMap<String, f64>,
    /// SHA-256 of every output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Output file names, in the order they are written.
pub const OUTPUT_FILES: [&str; 12] = [
    "corpus.idx",
    "validator_pairs.jsonl",
    "fewshot.jsonl",
    "retrieved.jsonl",
    "enriched.jsonl",
    "generated.jsonl",
    "gen_validated.jsonl",
    "discarded.jsonl",
    "epoch_plans.jsonl",
    "audit.json",
    "audit.txt",
    "cost.txt",
];

fn write_json<T: Serialize>(stage: &str, path: &Path, value: &T) -> Result<(), StageError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| StageError::new(stage, e))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

fn write_text(stage: &str, path: &Path, text: &str) -> Result<(), StageError> {
    std::fs::write(path, text).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

fn jsonl<T: Serialize>(stage: &str, path: &Path, records: &[T]) -> Result<(), StageError> {
    dataset::write_jsonl(path, records).map_err(|e| StageError::new(stage, e))
}

pub fn sha256_file(path: &Path) -> Result<String, StageError> {
    let bytes = std::fs::read(path).map_err(|e| StageError::new("manifest", format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

struct Timer(BTreeMap<String, f64>, Instant);

impl Timer {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.insert(stage.to_owned(), (now - self.1).as_secs_f64() * 1000.0);
        self.1 = now;
    }
}

/// Runs every stage and writes artifacts plus the manifest into the output
/// directory. The index is written to the configured index path; when that
/// lies outside the output directory a copy is not made and its hash is
/// still recorded.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest, StageError> {
    config.validate().map_err(|e| StageError::new("config", e))?;
    let seed = config.seed;
    let out_dir = &config.paths.output_dir;
    let mut timer = Timer(BTreeMap::new(), Instant::now());
    let mut warnings = Vec::new();

    let lemmatizer = load_lemmatizer(config)?;
    let ontology = Arc::new(load_ontology_for("load", config)?);
    let base = load_partition("load", &config.paths.base, &ontology, PartitionKind::Base)?;
    let novel_full = load_partition("load", &config.paths.novel, &ontology, PartitionKind::Novel)?;
    require_file("index", &config.paths.corpus)?;
    std::fs::create_dir_all(out_dir).map_err(|e| StageError::new("load", format!("{}: {e}", out_dir.display())))?;
    timer.lap("load");

    let index_path = config.index_path();
    if let Some(dir) = index_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| StageError::new("index", format!("{}: {e}", dir.display())))?;
    }
    let (index, rebuilt) =
        corpus::open_or_build(&config.paths.corpus, &index_path, config.index.mode, &lemmatizer).map_err(|e| StageError::new("index", e))?;
    timer.lap("index");

    let pairs = validator_pairs(&base, &ontology, config, seed)?;
    jsonl("validator-pairs", &out_dir.join("validator_pairs.jsonl"), &pairs)?;
    timer.lap("validator-pairs");

    let few = curation::sample_few_shot(&novel_full, &config.fewshot).map_err(|e| StageError::new("sample-fewshot", e))?;
    warnings.extend(few.warnings.iter().cloned());
    let novel = few.partition;
    check_disjoint(&base, &novel).map_err(|e| StageError::new("sample-fewshot", e))?;
    dataset::write_dataset(&novel, &out_dir.join("fewshot.jsonl")).map_err(|e| StageError::new("sample-fewshot", e))?;
    timer.lap("sample-fewshot");

    let seeds = seed_structures(&novel);
    let ner = ner_client(config)?;
    let retrieved = retrieve_context(&index, &seeds, ner.as_ref(), config, seed)?;
    jsonl("retrieve", &out_dir.join("retrieved.jsonl"), &retrieved)?;
    timer.lap("retrieve");

    let enriched = enrich_all(&retrieved, &ontology, config, seed)?;
    jsonl("enrich", &out_dir.join("enriched.jsonl"), &enriched)?;
    timer.lap("enrich");

    let agent = agent(config, ontology.clone(), &lemmatizer);
    let generated = generate_all(&enriched, &ontology, agent.as_ref(), config)?;
    timer.lap("generate");

    let nli = nli_client(config, &lemmatizer);
    let outcome = validate_all(generated, &ontology, nli.as_ref(), config);
    jsonl("validate", &out_dir.join("generated.jsonl"), &outcome.examples)?;
    timer.lap("validate");

    let embed = embed_client(config);
    let validated_pass = outcome.passed.len();
    let curated = curate(outcome.passed, &base, &novel, embed.as_ref(), config, seed)?;
    warnings.extend(curated.warnings.iter().cloned());
    let gen_partition = curation::to_partition(&curated.discard.kept, PartitionKind::GeneratedValidated);
    dataset::write_dataset(&gen_partition, &out_dir.join("gen_validated.jsonl")).map_err(|e| StageError::new("curate", e))?;
    jsonl("curate", &out_dir.join("discarded.jsonl"), &curated.discard.records)?;
    jsonl("curate", &out_dir.join("epoch_plans.jsonl"), &curated.plans)?;
    timer.lap("curate");

    let report: AuditReport = curation::audit(&novel, &novel, &curated.discard.kept);
    write_json("audit", &out_dir.join("audit.json"), &report)?;
    write_text("audit", &out_dir.join("audit.txt"), &report.table())?;
    write_text("audit", &out_dir.join("cost.txt"), &generation::cost_report(&outcome.examples).table())?;
    timer.lap("audit");

    let mut outputs = BTreeMap::new();
    for name in OUTPUT_FILES {
        let path = if name == "corpus.idx" { index_path.clone() } else { out_dir.join(name) };
        outputs.insert(name.to_owned(), sha256_file(&path)?);
    }
    let identities = BTreeMap::from([
        ("agent".to_owned(), agent.identity()),
        ("ner".to_owned(), ner.identity()),
        ("nli".to_owned(), nli.identity()),
        ("embed".to_owned(), embed.identity()),
    ]);
    let counts = StageCounts {
        validator_pairs: pairs.len(),
        seed_structures: seeds.len(),
        retrieved_sentences: retrieved.iter().map(|r| r.corpus_sentence_ids.len()).sum(),
        context_candidates: retrieved.iter().map(|r| r.candidates.len()).sum(),
        enriched: enriched.len(),
        generated: outcome.examples.len(),
        generation_failed: outcome.examples.iter().filter(|e| e.failed()).count(),
        validated_pass,
        discarded: curated.discard.discarded.len(),
        kept: curated.discard.kept.len(),
    };
    let manifest = RunManifest {
        config: config.to_toml(),
        seed,
        seeds: config.seeds.clone(),
        corpus_sha256: index.corpus_sha256().to_owned(),
        index_rebuilt: rebuilt,
        identities,
        counts,
        stage_ms: timer.0,
        outputs,
        warnings,
    };
    write_json("manifest", &out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

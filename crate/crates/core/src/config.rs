//! Pipeline configuration file.
//!
//! Relative paths resolve against the directory of the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clients::{EndpointConfig, RetryPolicy};
use crate::corpus::Selection;
use crate::curation::{BatchSizes, DiscardConfig, FewShotConfig};
use crate::enrich::EnrichPolicy;
use crate::generation::{ChatAgentConfig, Pricing, SamplingParams};
use crate::prompt::{Polarity, PromptConfig};
use crate::text::Normalization;
use crate::validation::ValidationConfig;

pub const DEFAULT_SEEDS: [u64; 3] = [0, 39, 42];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Seeds for repeated runs; `seed` picks the one used by a single run.
    pub seeds: Vec<u64>,
    pub paths: Paths,
    pub index: IndexConfig,
    pub retrieval: RetrievalConfig,
    pub ner: NerConfig,
    pub nli: NliConfig,
    pub embed: EmbedConfig,
    pub agent: AgentConfig,
    pub generation: GenerationConfig,
    pub enrichment: EnrichPolicy,
    pub validation: ValidationConfig,
    pub validator_pairs: ValidatorPairsConfig,
    pub fewshot: FewShotConfig,
    pub curation: CurationConfig,
    pub prompts: PromptConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            seeds: DEFAULT_SEEDS.to_vec(),
            paths: Paths::default(),
            index: IndexConfig::default(),
            retrieval: RetrievalConfig::default(),
            ner: NerConfig::default(),
            nli: NliConfig::default(),
            embed: EmbedConfig::default(),
            agent: AgentConfig::default(),
            generation: GenerationConfig::default(),
            enrichment: EnrichPolicy::default(),
            validation: ValidationConfig::default(),
            validator_pairs: ValidatorPairsConfig::default(),
            fewshot: FewShotConfig::default(),
            curation: CurationConfig::default(),
            prompts: PromptConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub ontology: PathBuf,
    pub corpus: PathBuf,
    /// Defaults to `<output_dir>/corpus.idx`.
    pub index: Option<PathBuf>,
    pub base: PathBuf,
    /// Full novel-type data the few-shot sample is drawn from.
    pub novel: PathBuf,
    pub lemmas: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            ontology: "ontology.toml".into(),
            corpus: "corpus.txt".into(),
            index: None,
            base: "base.jsonl".into(),
            novel: "novel.jsonl".into(),
            lemmas: None,
            output_dir: "out".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub mode: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub limit: usize,
    pub selection: Selection,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { limit: 20, selection: Selection::First }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NerBackend {
    #[default]
    Gazetteer,
    Http,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NerConfig {
    pub backend: NerBackend,
    pub gazetteer: Option<PathBuf>,
    pub endpoint: EndpointConfig,
    /// Entity labels kept as context; must cover every ontology entity type.
    pub labels: BTreeSet<String>,
}

impl Default for NerConfig {
    fn default() -> Self {
        NerConfig {
            backend: NerBackend::Gazetteer,
            gazetteer: Some("gazetteer.tsv".into()),
            endpoint: EndpointConfig::default(),
            labels: ["PER", "ORG", "GPE", "LOC", "FAC", "VEH", "WEA", "DATE", "MONEY"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliBackend {
    /// In-process token-overlap scorer.
    #[default]
    Lexical,
    Http,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NliConfig {
    pub backend: NliBackend,
    pub endpoint: EndpointConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedBackend {
    /// In-process hashed bag of words.
    #[default]
    Hashed,
    Http,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub backend: EmbedBackend,
    pub dimension: usize,
    pub endpoint: EndpointConfig,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig { backend: EmbedBackend::Hashed, dimension: 256, endpoint: EndpointConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    #[default]
    Stub,
    Chat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub stub_pricing: Pricing,
    pub chat: ChatAgentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub sampling: SamplingParams,
    pub retry: RetryPolicy,
    pub concurrency: usize,
    /// Enriched variants kept per annotated structure.
    pub samples_per_structure: usize,
    /// Rewrite kinds applied to every positive generation.
    pub negative_kinds: Vec<Polarity>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            sampling: SamplingParams::default(),
            retry: RetryPolicy::default(),
            concurrency: 4,
            samples_per_structure: 3,
            negative_kinds: Polarity::REWRITES.to_vec(),
        }
    }
}

/// Validator training pairs drawn from the base set. Each construction gets
/// `per_mention` pairs per annotated base mention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidatorPairsConfig {
    pub per_mention: usize,
}

impl Default for ValidatorPairsConfig {
    fn default() -> Self {
        ValidatorPairsConfig { per_mention: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub discard: DiscardConfig,
    pub epochs: usize,
    pub batch_sizes: BatchSizes,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig { discard: DiscardConfig::default(), epochs: 3, batch_sizes: BatchSizes::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn from_toml_str(src: &str) -> Result<Self, String> {
        toml::from_str(src).map_err(|e| e.to_string())
    }

    /// Loads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut cfg = Self::from_toml_str(&src).map_err(|message| ConfigError::Parse { path: path.to_owned(), message })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [&mut paths.ontology, &mut paths.corpus, &mut paths.base, &mut paths.novel, &mut paths.output_dir] {
            fix(p);
        }
        for p in [paths.index.as_mut(), paths.lemmas.as_mut(), self.ner.gazetteer.as_mut()].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn index_path(&self) -> PathBuf {
        self.paths.index.clone().unwrap_or_else(|| self.paths.output_dir.join("corpus.idx"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.retrieval.limit == 0 {
            return bad("retrieval.limit must be at least 1");
        }
        if self.generation.samples_per_structure == 0 {
            return bad("generation.samples_per_structure must be at least 1");
        }
        if self.generation.negative_kinds.contains(&Polarity::Positive) {
            return bad("generation.negative_kinds cannot contain `positive`");
        }
        if self.curation.epochs == 0 {
            return bad("curation.epochs must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.enrichment.replace_probability) {
            return bad("enrichment.replace_probability must lie in [0, 1]");
        }
        if self.embed.dimension == 0 {
            return bad("embed.dimension must be at least 1");
        }
        if self.ner.backend == NerBackend::Gazetteer && self.ner.gazetteer.is_none() {
            return bad("ner.gazetteer is required with the gazetteer backend");
        }
        self.prompts.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Canonical TOML rendering, used as the manifest snapshot.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(PipelineConfig::from_toml_str(&c.to_toml()).unwrap(), c);
        assert_eq!(c.seeds, vec![0, 39, 42]);
    }

    #[test]
    fn partial_file_and_relative_paths() {
        let mut c = PipelineConfig::from_toml_str("seed = 7\n[paths]\ncorpus = \"c.txt\"\n[validation.thresholds]\naccuracy = 0.8\n").unwrap();
        c.resolve_paths(Path::new("/data"));
        assert_eq!(c.seed, 7);
        assert_eq!(c.paths.corpus, PathBuf::from("/data/c.txt"));
        assert_eq!(c.validation.thresholds.accuracy, 0.8);
        assert_eq!(c.validation.thresholds.coherence_forward, 0.5);
        assert_eq!(c.index_path(), PathBuf::from("/data/out/corpus.idx"));
        assert!(PipelineConfig::from_toml_str("bogus = 1").is_err());
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eventaug::config::{AgentKind, PipelineConfig};
use eventaug::corpus::{self, CorpusIndex};
use eventaug::curation::{self, FewShotConfig};
use eventaug::dataset;
use eventaug::eval::{self, PredictionRecord, ReportFormat};
use eventaug::generation::GeneratedExample;
use eventaug::model::PartitionKind;
use eventaug::pipeline::{self, EnrichedRecord, RetrievalRecord, StageError};
use eventaug::text::Normalization;

#[derive(Parser)]
#[command(name = "eventaug", version, about = "Targeted event-extraction data augmentation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; flags override the config file.
#[derive(Args)]
struct Global {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `stub`, or the name of the configured chat endpoint (`agent.chat.name`).
    #[arg(long, global = true)]
    agent: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    retries: Option<u32>,
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    samples_per_structure: Option<usize>,
    /// Overrides `paths.output_dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the corpus index.
    Index {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Normalization>,
    },
    /// Retrieve and tag context sentences for every mention of a dataset.
    Retrieve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Enrich retrieved structures with their context entities.
    Enrich {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate positive and rewritten sentences for enriched structures.
    Generate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Back-validate generated examples.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also write the passing subset here.
        #[arg(long)]
        passed: Option<PathBuf>,
        /// Also write validator training pairs built from the base set here.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Centroid discard and epoch plans over validated examples.
    Curate {
        #[arg(long)]
        input: PathBuf,
        /// Few-shot novel dataset used in the plans.
        #[arg(long)]
        novel: PathBuf,
    },
    /// Draw an N-way K-shot sample.
    SampleFewshot {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Diversity and coverage report.
    Audit {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        #[arg(long, default_value = "table")]
        format: AuditFormat,
    },
    /// Score predictions against gold annotations.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Run every stage and write a manifest.
    Pipeline,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditFormat {
    Table,
    Json,
}

fn load_config(g: &Global) -> Result<PipelineConfig, StageError> {
    let mut c = match &g.config {
        Some(p) => {
            pipeline::require_file("config", p)?;
            PipelineConfig::load(p).map_err(|e| StageError::new("config", e))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(a) = &g.agent {
        c.agent.kind = if a == "stub" {
            AgentKind::Stub
        } else if *a == c.agent.chat.name {
            AgentKind::Chat
        } else {
            return Err(StageError::new(
                "config",
                format!("unknown agent `{a}`; expected `stub` or `{}`", c.agent.chat.name),
            ));
        };
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(r) = g.retries {
        c.generation.retry.retries = r;
    }
    if let Some(n) = g.concurrency {
        c.generation.concurrency = n;
        c.validation.concurrency = n;
        c.ner.endpoint.concurrency = n;
    }
    if let Some(t) = g.temperature {
        c.generation.sampling.temperature = t;
    }
    if let Some(n) = g.samples_per_structure {
        c.generation.samples_per_structure = n;
    }
    if let Some(d) = &g.output_dir {
        c.paths.output_dir = d.clone();
    }
    c.validate().map_err(|e| StageError::new("config", e))?;
    Ok(c)
}

fn read_records<T: serde::de::DeserializeOwned>(stage: &str, path: &Path) -> Result<Vec<T>, StageError> {
    pipeline::require_file(stage, path)?;
    dataset::read_jsonl(path).map_err(|e| StageError::new(stage, e))
}

fn write_records<T: serde::Serialize>(stage: &str, path: &Path, records: &[T]) -> Result<(), StageError> {
    dataset::write_jsonl(path, records).map_err(|e| StageError::new(stage, e))
}

fn open_index(stage: &str, c: &PipelineConfig) -> Result<CorpusIndex, StageError> {
    let lem = pipeline::load_lemmatizer(c)?;
    pipeline::require_file(stage, &c.paths.corpus)?;
    let path = c.index_path();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| StageError::new(stage, format!("{}: {e}", dir.display())))?;
    }
    let (idx, _) = corpus::open_or_build(&c.paths.corpus, &path, c.index.mode, &lem).map_err(|e| StageError::new(stage, e))?;
    Ok(idx)
}

fn run(cli: Cli) -> Result<(), StageError> {
    let mut c = load_config(&cli.global)?;
    match cli.command {
        Command::Index { corpus: corpus_path, index, mode } => {
            if let Some(p) = corpus_path {
                c.paths.corpus = p;
            }
            if index.is_some() {
                c.paths.index = index;
            }
            if let Some(m) = mode {
                c.index.mode = m;
            }
            let idx = open_index("index", &c)?;
            println!("{} sentences indexed ({}), corpus sha256 {}", idx.len(), idx.mode().as_str(), idx.corpus_sha256());
        }
        Command::Retrieve { input, output } => {
            let ontology = pipeline::load_ontology_for("retrieve", &c)?;
            let data = pipeline::load_partition("retrieve", &input, &ontology, PartitionKind::Novel)?;
            let idx = open_index("retrieve", &c)?;
            let ner = pipeline::ner_client(&c)?;
            let seeds = pipeline::seed_structures(&data);
            let records = pipeline::retrieve_context(&idx, &seeds, ner.as_ref(), &c, c.seed)?;
            write_records("retrieve", &output, &records)?;
        }
        Command::Enrich { input, output } => {
            let ontology = pipeline::load_ontology_for("enrich", &c)?;
            let records: Vec<RetrievalRecord> = read_records("enrich", &input)?;
            let out = pipeline::enrich_all(&records, &ontology, &c, c.seed)?;
            write_records("enrich", &output, &out)?;
        }
        Command::Generate { input, output } => {
            let lem = pipeline::load_lemmatizer(&c)?;
            let ontology = Arc::new(pipeline::load_ontology_for("generate", &c)?);
            let records: Vec<EnrichedRecord> = read_records("generate", &input)?;
            let agent = pipeline::agent(&c, ontology.clone(), &lem);
            let out = pipeline::generate_all(&records, &ontology, agent.as_ref(), &c)?;
            write_records("generate", &output, &out)?;
            eprint!("{}", eventaug::generation::cost_report(&out).table());
            if out.iter().any(GeneratedExample::failed) {
                return Err(StageError::new("generate", format!("{} of {} generations failed", out.iter().filter(|e| e.failed()).count(), out.len())));
            }
        }
        Command::Validate { input, output, passed, pairs } => {
            let lem = pipeline::load_lemmatizer(&c)?;
            let ontology = pipeline::load_ontology_for("validate", &c)?;
            let examples: Vec<GeneratedExample> = read_records("validate", &input)?;
            let nli = pipeline::nli_client(&c, &lem);
            let outcome = pipeline::validate_all(examples, &ontology, nli.as_ref(), &c);
            write_records("validate", &output, &outcome.examples)?;
            if let Some(p) = passed {
                write_records("validate", &p, &outcome.passed)?;
            }
            if let Some(p) = pairs {
                let base = pipeline::load_partition("validate", &c.paths.base, &ontology, PartitionKind::Base)?;
                write_records("validate", &p, &pipeline::validator_pairs(&base, &ontology, &c, c.seed)?)?;
            }
            for (pol, n) in &outcome.counts {
                println!("{pol}\t{}/{} passed\t{} indeterminate", n.passed, n.total, n.indeterminate);
            }
        }
        Command::Curate { input, novel } => {
            let ontology = pipeline::load_ontology_for("curate", &c)?;
            let examples: Vec<GeneratedExample> = read_records("curate", &input)?;
            let base = pipeline::load_partition("curate", &c.paths.base, &ontology, PartitionKind::Base)?;
            let novel = pipeline::load_partition("curate", &novel, &ontology, PartitionKind::Novel)?;
            let embed = pipeline::embed_client(&c);
            let passed: Vec<GeneratedExample> =
                examples.into_iter().filter(|e| e.validation.as_ref().is_some_and(|v| v.passed())).collect();
            let cur = pipeline::curate(passed, &base, &novel, embed.as_ref(), &c, c.seed)?;
            let dir = &c.paths.output_dir;
            std::fs::create_dir_all(dir).map_err(|e| StageError::new("curate", format!("{}: {e}", dir.display())))?;
            let part = curation::to_partition(&cur.discard.kept, PartitionKind::GeneratedValidated);
            dataset::write_dataset(&part, &dir.join("gen_validated.jsonl")).map_err(|e| StageError::new("curate", e))?;
            write_records("curate", &dir.join("discarded.jsonl"), &cur.discard.records)?;
            write_records("curate", &dir.join("epoch_plans.jsonl"), &cur.plans)?;
            println!("kept {}, discarded {}", cur.discard.kept.len(), cur.discard.discarded.len());
        }
        Command::SampleFewshot { input, output, n, k } => {
            let ontology = pipeline::load_ontology_for("sample-fewshot", &c)?;
            let input = input.unwrap_or_else(|| c.paths.novel.clone());
            let full = pipeline::load_partition("sample-fewshot", &input, &ontology, PartitionKind::Novel)?;
            let cfg = FewShotConfig {
                n: n.unwrap_or(c.fewshot.n),
                k: k.unwrap_or(c.fewshot.k),
                seed: cli.global.seed.unwrap_or(c.fewshot.seed),
                ..c.fewshot.clone()
            };
            let s = curation::sample_few_shot(&full, &cfg).map_err(|e| StageError::new("sample-fewshot", e))?;
            for (t, freq) in &s.order {
                println!("{t}\t{freq} in data\t{} sampled", s.taken[t]);
            }
            dataset::write_dataset(&s.partition, &output).map_err(|e| StageError::new("sample-fewshot", e))?;
        }
        Command::Audit { before, generated, format } => {
            let ontology = pipeline::load_ontology_for("audit", &c)?;
            let before = pipeline::load_partition("audit", &before, &ontology, PartitionKind::Novel)?;
            let generated: Vec<GeneratedExample> = read_records("audit", &generated)?;
            let report = curation::audit(&before, &before, &generated);
            match format {
                AuditFormat::Table => print!("{}", report.table()),
                AuditFormat::Json => println!("{}", serde_json::to_string_pretty(&report).map_err(|e| StageError::new("audit", e))?),
            }
        }
        Command::Score { gold, pred, format } => {
            pipeline::require_file("score", &gold)?;
            let gold: Vec<eventaug::AnnotatedSentence> = read_records("score", &gold)?;
            let mut g = eventaug::DatasetPartition::new(PartitionKind::Novel);
            g.examples = gold;
            let preds: Vec<PredictionRecord> = read_records("score", &pred)?;
            let s = eval::score(&g, &preds).map_err(|e| StageError::new("score", e))?;
            print!("{}", eval::report(&s, format));
        }
        Command::Pipeline => {
            let m = pipeline::run_pipeline(&c)?;
            println!(
                "{} structures, {} enriched, {} generated, {} passed validation, {} discarded, {} kept -> {}",
                m.counts.seed_structures,
                m.counts.enriched,
                m.counts.generated,
                m.counts.validated_pass,
                m.counts.discarded,
                m.counts.kept,
                c.paths.output_dir.join(pipeline::MANIFEST_FILE).display()
            );
            if m.counts.generation_failed > 0 {
                return Err(StageError::new("generate", format!("{} generations failed", m.counts.generation_failed)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({
                "stage": e.stage,
                "error": e.message,
                "path": e.missing_input.as_ref().map(|p| p.display().to_string()),
            });
            eprintln!("{line}");
            ExitCode::from(if e.missing_input.is_some() { 2 } else { 1 })
        }
    }
}

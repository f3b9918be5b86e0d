//! Few-shot sampling, per-epoch batch plans, centroid-distance discard and
//! diversity audit.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::clients::{bounded_map, ClientError, EmbedClient, RetryPolicy};
use crate::generation::GeneratedExample;
use crate::model::{AnnotatedSentence, DatasetPartition, EventMention, PartitionKind, OTHER_LABEL};
use crate::prompt::Polarity;

// ---------------------------------------------------------------------------
// Few-shot sampling
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FewShotConfig {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub split: String,
    /// Novel types to use. When empty, the `n` most frequent types are taken.
    pub types: Vec<String>,
}

impl Default for FewShotConfig {
    fn default() -> Self {
        FewShotConfig { n: 5, k: 5, seed: 42, split: String::new(), types: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FewShotError {
    #[error("N must be at least 1")]
    ZeroWays,
    #[error("need {needed} novel event types, data has {available}")]
    TooFewTypes { needed: usize, available: usize },
    #[error("configured type `{0}` has no mentions in the data")]
    UnknownType(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FewShotSample {
    pub partition: DatasetPartition,
    /// Types in processing order with their full-data mention counts.
    pub order: Vec<(String, usize)>,
    /// Mentions sampled per type.
    pub taken: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Samples sentences so that each selected novel type has at most `k`
/// mentions (exactly `k` when the data allows).
///
/// Types are processed from most to least frequent. A candidate sentence is
/// accepted only if adding all of its selected-type mentions keeps every
/// type within `k`, so mentions picked up for a frequent type count toward
/// the rarer types handled later. Mentions of unselected types are removed
/// from the output sentences, which keep their input order.
pub fn sample_few_shot(full: &DatasetPartition, config: &FewShotConfig) -> Result<FewShotSample, FewShotError> {
    if config.n == 0 {
        return Err(FewShotError::ZeroWays);
    }
    let counts = full.mention_counts();
    let mut by_freq: Vec<(String, usize)> =
        counts.iter().filter(|(t, _)| t.as_str() != OTHER_LABEL).map(|(t, c)| (t.clone(), *c)).collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut order: Vec<(String, usize)> = if config.types.is_empty() {
        if by_freq.len() < config.n {
            return Err(FewShotError::TooFewTypes { needed: config.n, available: by_freq.len() });
        }
        by_freq[..config.n].to_vec()
    } else {
        let mut v = Vec::new();
        for t in &config.types {
            let c = *counts.get(t).ok_or_else(|| FewShotError::UnknownType(t.clone()))?;
            v.push((t.clone(), c));
        }
        v
    };
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let selected: BTreeSet<&str> = order.iter().map(|(t, _)| t.as_str()).collect();
    let mut taken: BTreeMap<String, usize> = order.iter().map(|(t, _)| (t.clone(), 0)).collect();
    let mut chosen = vec![false; full.examples.len()];
    let mut warnings = Vec::new();
    let mut rng = crate::substream(config.seed, 0);

    let sentence_counts: Vec<BTreeMap<&str, usize>> = full
        .examples
        .iter()
        .map(|s| {
            let mut m = BTreeMap::new();
            for mention in &s.mentions {
                if selected.contains(mention.event_type.as_str()) {
                    *m.entry(mention.event_type.as_str()).or_insert(0) += 1;
                }
            }
            m
        })
        .collect();

    if config.k > 0 {
        for (t, total) in &order {
            let mut candidates: Vec<usize> = (0..full.examples.len())
                .filter(|&i| !chosen[i] && sentence_counts[i].contains_key(t.as_str()))
                .collect();
            candidates.shuffle(&mut rng);
            for i in candidates {
                if taken[t] >= config.k {
                    break;
                }
                let fits = sentence_counts[i].iter().all(|(u, c)| taken[*u] + c <= config.k);
                if fits {
                    chosen[i] = true;
                    for (u, c) in &sentence_counts[i] {
                        *taken.get_mut(*u).expect("selected type") += c;
                    }
                }
            }
            if taken[t] < config.k {
                let w = format!("{t}: only {} of {} requested mentions available ({total} in data)", taken[t], config.k);
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    let mut partition = DatasetPartition::new(PartitionKind::Novel);
    for (i, s) in full.examples.iter().enumerate() {
        if chosen[i] {
            let mut s = s.clone();
            s.mentions.retain(|m| selected.contains(m.event_type.as_str()));
            partition.examples.push(s);
        }
    }
    Ok(FewShotSample { partition, order, taken, warnings })
}

// ---------------------------------------------------------------------------
// Epoch plans
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub id: String,
    pub event_type: String,
    pub distance: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochBatchPlan {
    pub epoch: usize,
    pub base_ids: Vec<String>,
    pub generated_ids: Vec<String>,
    pub novel_ids: Vec<String>,
    /// Discards made while building the plans; recorded on epoch 0 only.
    pub discarded: Vec<DiscardRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchSizes {
    pub base: usize,
    pub generated: usize,
}

impl Default for BatchSizes {
    fn default() -> Self {
        BatchSizes { base: 16, generated: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("epochs must be at least 1")]
pub struct ZeroEpochs;

fn draw(ids: &[String], size: usize, rng: &mut rand_chacha::ChaCha8Rng, what: &str, warnings: &mut Vec<String>) -> Vec<String> {
    if size >= ids.len() {
        if size > ids.len() && !ids.is_empty() {
            warnings.push(format!("{what} batch of {size} requested from a pool of {}; using the whole pool", ids.len()));
        }
        return ids.to_vec();
    }
    let mut idx = sample(rng, ids.len(), size).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| ids[i].clone()).collect()
}

/// Per-epoch batch plans: a uniform sample of base and generated ids, and
/// the whole novel set, each epoch drawn from its own RNG substream.
pub fn plan_epochs(
    base_ids: &[String],
    novel_ids: &[String],
    generated_ids: &[String],
    epochs: usize,
    sizes: BatchSizes,
    seed: u64,
    discarded: &[DiscardRecord],
) -> Result<(Vec<EpochBatchPlan>, Vec<String>), ZeroEpochs> {
    if epochs == 0 {
        return Err(ZeroEpochs);
    }
    let mut warnings = Vec::new();
    let mut plans = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut rng = crate::substream(seed, epoch as u64);
        let mut w = Vec::new();
        let base = draw(base_ids, sizes.base, &mut rng, "base", &mut w);
        let generated = draw(generated_ids, sizes.generated, &mut rng, "generated", &mut w);
        if epoch == 0 {
            warnings.extend(w);
        }
        plans.push(EpochBatchPlan {
            epoch,
            base_ids: base,
            generated_ids: generated,
            novel_ids: novel_ids.to_vec(),
            discarded: if epoch == 0 { discarded.to_vec() } else { Vec::new() },
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((plans, warnings))
}

// ---------------------------------------------------------------------------
// Centroid discard
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Cosine,
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DiscardThreshold {
    /// Per-type quantile of the distances (linear interpolation).
    Quantile(f64),
    Absolute(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscardConfig {
    pub metric: DistanceMetric,
    pub threshold: DiscardThreshold,
    pub batch_size: usize,
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for DiscardConfig {
    fn default() -> Self {
        DiscardConfig {
            metric: DistanceMetric::Cosine,
            threshold: DiscardThreshold::Quantile(0.9),
            batch_size: 32,
            concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    1.0 - dot / (na * nb)
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn centroid(vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors.first().map_or(0, Vec::len);
    let mut c = vec![0.0; dim];
    for v in vectors {
        for (ci, x) in c.iter_mut().zip(v) {
            *ci += x;
        }
    }
    let n = vectors.len() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Quantile with linear interpolation between order statistics.
///
/// # Panics
/// Panics on an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Distances of each vector to the group centroid and the discard cutoff.
pub fn centroid_distances(vectors: &[Vec<f64>], metric: DistanceMetric, threshold: DiscardThreshold) -> (Vec<f64>, f64) {
    let c = centroid(vectors);
    let d: Vec<f64> = vectors
        .iter()
        .map(|v| match metric {
            DistanceMetric::Cosine => cosine_distance(v, &c),
            DistanceMetric::Euclidean => euclidean_distance(v, &c),
        })
        .collect();
    let cut = match threshold {
        DiscardThreshold::Quantile(q) => quantile(&d, q),
        DiscardThreshold::Absolute(t) => t,
    };
    (d, cut)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscardOutcome {
    pub kept: Vec<GeneratedExample>,
    pub discarded: Vec<GeneratedExample>,
    pub records: Vec<DiscardRecord>,
    pub warnings: Vec<String>,
}

fn event_type_of(e: &GeneratedExample) -> String {
    e.structure().map_or_else(|| OTHER_LABEL.to_owned(), |s| s.event_type.clone())
}

/// Drops examples far from their event type's embedding centroid.
///
/// Types with fewer than three examples are kept whole. Output keeps input
/// order within `kept` and `discarded`.
pub fn discard_corrupted(
    examples: Vec<GeneratedExample>,
    embed: &dyn EmbedClient,
    config: &DiscardConfig,
) -> Result<DiscardOutcome, ClientError> {
    let mut out = DiscardOutcome::default();
    if examples.is_empty() {
        return Ok(out);
    }
    let sentences: Vec<String> = examples.iter().map(|e| e.sentence.clone()).collect();
    let chunks: Vec<&[String]> = sentences.chunks(config.batch_size.max(1)).collect();
    let mut vectors = Vec::with_capacity(sentences.len());
    for r in bounded_map(&chunks, config.concurrency, |c| config.retry.run(|_| embed.embed(c))) {
        vectors.extend(r?);
    }
    if vectors.len() != examples.len() {
        return Err(ClientError::Malformed(format!("expected {} vectors, got {}", examples.len(), vectors.len())));
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        groups.entry(event_type_of(e)).or_default().push(i);
    }
    let mut drop = vec![false; examples.len()];
    for (t, idx) in &groups {
        if idx.len() < 3 {
            let w = format!("{t}: {} examples, too few for a centroid; nothing discarded", idx.len());
            log::warn!("{w}");
            out.warnings.push(w);
            continue;
        }
        let vs: Vec<Vec<f64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
        let (d, cut) = centroid_distances(&vs, config.metric, config.threshold);
        for (&i, &di) in idx.iter().zip(&d) {
            if di > cut {
                drop[i] = true;
                out.records.push(DiscardRecord { id: examples[i].id.clone(), event_type: t.clone(), distance: di, threshold: cut });
            }
        }
    }
    for (e, d) in examples.into_iter().zip(drop) {
        if d {
            out.discarded.push(e);
        } else {
            out.kept.push(e);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

pub type FillerKey = (String, String, String);

pub fn normalize_filler(f: &str) -> String {
    f.trim().to_lowercase()
}

/// Unique `(event type, role, normalized filler)` triples of a partition.
pub fn filler_keys(partition: &DatasetPartition) -> BTreeSet<FillerKey> {
    partition
        .mentions()
        .flat_map(|m| m.arguments.iter().map(move |a| (m.event_type.clone(), a.role.clone(), normalize_filler(&a.text))))
        .collect()
}

fn generated_keys(examples: &[GeneratedExample]) -> BTreeSet<FillerKey> {
    examples
        .iter()
        .filter_map(GeneratedExample::structure)
        .flat_map(|s| s.arguments.iter().map(move |a| (s.event_type.clone(), a.role.clone(), normalize_filler(&a.filler))))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCoverage {
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub unique_fillers_before: usize,
    pub unique_fillers_after: usize,
    pub polarity_counts: BTreeMap<Polarity, usize>,
    /// Share of validated examples that passed, per polarity.
    pub validation_pass_rates: BTreeMap<Polarity, f64>,
    pub coverage: BTreeMap<String, TypeCoverage>,
}

/// Compares filler diversity and coverage before and after augmentation.
///
/// `after` is the curated partition; `generated` holds the generated
/// examples with their verdicts. Examples that passed validation (or carry
/// no verdict) contribute to the after counts.
pub fn audit(before: &DatasetPartition, after: &DatasetPartition, generated: &[GeneratedExample]) -> AuditReport {
    let accepted: Vec<GeneratedExample> = generated
        .iter()
        .filter(|e| !e.failed() && e.validation.as_ref().is_none_or(|v| v.passed()))
        .cloned()
        .collect();
    let mut after_keys = filler_keys(after);
    after_keys.extend(generated_keys(&accepted));

    let mut polarity_counts = BTreeMap::new();
    let mut validated: BTreeMap<Polarity, (usize, usize)> = BTreeMap::new();
    for e in generated {
        *polarity_counts.entry(e.polarity).or_insert(0) += 1;
        if let Some(v) = &e.validation {
            let slot = validated.entry(e.polarity).or_insert((0, 0));
            slot.0 += usize::from(v.passed());
            slot.1 += 1;
        }
    }
    let mut coverage: BTreeMap<String, TypeCoverage> = BTreeMap::new();
    for (t, c) in before.mention_counts() {
        coverage.entry(t).or_default().before = c;
    }
    for (t, c) in after.mention_counts() {
        coverage.entry(t).or_default().after += c;
    }
    for e in &accepted {
        if let Some(s) = e.structure() {
            coverage.entry(s.event_type.clone()).or_default().after += 1;
        }
    }
    AuditReport {
        unique_fillers_before: filler_keys(before).len(),
        unique_fillers_after: after_keys.len(),
        polarity_counts,
        validation_pass_rates: validated.into_iter().map(|(p, (ok, n))| (p, ok as f64 / n as f64)).collect(),
        coverage,
    }
}

impl AuditReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "unique argument fillers: {} before, {} after\n\npolarity\texamples\tpass rate\n",
            self.unique_fillers_before, self.unique_fillers_after
        );
        for (p, n) in &self.polarity_counts {
            let rate = self.validation_pass_rates.get(p).map_or("-".to_owned(), |r| format!("{:.1}%", r * 100.0));
            out.push_str(&format!("{p}\t{n}\t{rate}\n"));
        }
        out.push_str("\nevent type\tmentions before\tmentions after\n");
        for (t, c) in &self.coverage {
            out.push_str(&format!("{t}\t{}\t{}\n", c.before, c.after));
        }
        out
    }
}

/// Turns generated examples into annotated sentences carrying their
/// provenance. The mention is located by string search; examples whose
/// trigger does not appear in the sentence get no mention.
pub fn to_partition(examples: &[GeneratedExample], kind: PartitionKind) -> DatasetPartition {
    let mut p = DatasetPartition::new(kind);
    for e in examples {
        let mut s = AnnotatedSentence::new(&e.id, &e.sentence);
        if let Some(m) = e.structure().and_then(|st| EventMention::align(st, &e.sentence)) {
            s.mentions.push(m);
        }
        s.provenance = Some(Box::new(e.clone()));
        p.examples.push(s);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::TableEmbedder;
    use crate::enrich::EnrichedStructure;
    use crate::model::EventStructure;

    fn mention_sentence(id: &str, types: &[&str]) -> AnnotatedSentence {
        let words: Vec<String> = types.iter().enumerate().map(|(i, _)| format!("w{i}")).collect();
        let mut s = AnnotatedSentence::new(id, words.join(" "));
        for (i, t) in types.iter().enumerate() {
            s = s.with_structure(&EventStructure::new(*t, format!("w{i}")));
        }
        s
    }

    fn gen(id: &str, t: &str, sentence: &str) -> GeneratedExample {
        let s = EventStructure::new(t, "x");
        GeneratedExample {
            id: id.into(),
            sentence: sentence.into(),
            polarity: Polarity::Positive,
            source: Some(EnrichedStructure { base: s.clone(), edits: vec![], result: s }),
            context: None,
            base_sentence_id: None,
            parent_id: None,
            agent: "t".into(),
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

    #[test]
    fn zero_shot_is_empty() {
        let mut full = DatasetPartition::new(PartitionKind::Novel);
        full.examples.push(mention_sentence("1", &["A"]));
        let cfg = FewShotConfig { n: 1, k: 0, ..Default::default() };
        assert!(sample_few_shot(&full, &cfg).unwrap().partition.is_empty());
    }

    #[test]
    fn shared_sentence_counts_for_rarer_type() {
        let mut full = DatasetPartition::new(PartitionKind::Novel);
        for i in 0..6 {
            full.examples.push(mention_sentence(&format!("c{i}"), &["Justice:Convict"]));
        }
        full.examples.push(mention_sentence("both", &["Justice:Convict", "Justice:Acquit"]));
        for i in 0..3 {
            full.examples.push(mention_sentence(&format!("a{i}"), &["Justice:Acquit"]));
        }
        for seed in 0..20 {
            let cfg = FewShotConfig { n: 2, k: 5, seed, ..Default::default() };
            let out = sample_few_shot(&full, &cfg).unwrap();
            assert_eq!(out.order[0].0, "Justice:Convict");
            let counts = out.partition.mention_counts();
            assert_eq!(counts["Justice:Convict"], 5);
            // The shared sentence only fits when Convict still has room for it.
            let both = out.partition.examples.iter().any(|s| s.sentence_id == "both");
            assert_eq!(counts["Justice:Acquit"], 3 + usize::from(both));
            assert_eq!(out.warnings.len(), 1, "{:?}", out.warnings);
        }
    }

    #[test]
    fn plans_are_seeded_and_bounded() {
        let base: Vec<String> = (0..10).map(|i| format!("b{i}")).collect();
        let novel = vec!["n1".to_owned()];
        let sizes = BatchSizes { base: 4, generated: 3 };
        let (a, w) = plan_epochs(&base, &novel, &[], 2, sizes, 5, &[]).unwrap();
        assert!(w.is_empty());
        assert_eq!(a[0].base_ids.len(), 4);
        assert!(a.iter().all(|p| p.generated_ids.is_empty() && p.novel_ids == novel));
        let (b, _) = plan_epochs(&base, &novel, &[], 2, sizes, 5, &[]).unwrap();
        assert_eq!(a, b);
        assert!(plan_epochs(&base, &novel, &[], 0, sizes, 5, &[]).is_err());
        let (c, w) = plan_epochs(&base, &novel, &base[..2], 1, sizes, 5, &[]).unwrap();
        assert_eq!(c[0].generated_ids.len(), 2);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn orthogonal_outlier_discarded() {
        let mut vectors = std::collections::HashMap::new();
        for (s, v) in [("a", [1.0, 0.0, 0.0]), ("b", [1.0, 0.1, 0.0]), ("c", [0.9, 0.0, 0.1]), ("d", [1.0, 0.05, 0.05]), ("o", [0.0, 0.0, 1.0])] {
            vectors.insert(s.to_owned(), v.to_vec());
        }
        let emb = TableEmbedder { vectors };
        let ex: Vec<GeneratedExample> = ["a", "b", "c", "d", "o"].iter().map(|s| gen(s, "T", s)).collect();
        let cfg = DiscardConfig { threshold: DiscardThreshold::Quantile(0.8), ..Default::default() };
        let out = discard_corrupted(ex, &emb, &cfg).unwrap();
        assert_eq!(out.discarded.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), vec!["o"]);
        assert_eq!(out.kept.len(), 4);
        assert!(discard_corrupted(vec![], &emb, &cfg).unwrap().kept.is_empty());
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.9), 3.6);
        assert_eq!(quantile(&[5.0], 0.3), 5.0);
    }

    #[test]
    fn audit_counts_new_fillers() {
        let mut before = DatasetPartition::new(PartitionKind::Novel);
        before.examples.push(
            AnnotatedSentence::new("1", "pardoned in Nevada").with_structure(
                &EventStructure::new("Justice:Pardon", "pardoned").with("Place", "Nevada"),
            ),
        );
        let mut g = gen("g", "Justice:Pardon", "s");
        let s = EventStructure::new("Justice:Pardon", "pardoned").with("Place", " NEVADA ").with("Defendant", "Paul Laxalt");
        g.source = Some(EnrichedStructure { base: s.clone(), edits: vec![], result: s });
        let r = audit(&before, &before, &[g]);
        assert_eq!(r.unique_fillers_before, 1);
        assert_eq!(r.unique_fillers_after, 2);
        assert_eq!(r.coverage["Justice:Pardon"], TypeCoverage { before: 1, after: 2 });
    }
}

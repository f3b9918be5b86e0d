//! Trigger and argument identification/classification micro-F1.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{DatasetPartition, EventMention};

/// Predicted mentions for one gold sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sentence_id: String,
    #[serde(default)]
    pub mentions: Vec<EventMention>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub gold: usize,
    pub predicted: usize,
}

impl Prf {
    /// Empty denominators give 0, except when both sides are empty.
    pub fn from_counts(matched: usize, gold: usize, predicted: usize) -> Self {
        let ratio = |num: usize, den: usize, other: usize| {
            if den > 0 {
                num as f64 / den as f64
            } else if other == 0 {
                1.0
            } else {
                0.0
            }
        };
        let precision = ratio(matched, predicted, gold);
        let recall = ratio(matched, gold, predicted);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { precision, recall, f1, matched, gold, predicted }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub tri_i: Prf,
    pub tri_c: Prf,
    pub arg_i: Prf,
    pub arg_c: Prf,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("predictions for sentence ids not in the gold set: {}", .0.join(", "))]
pub struct UnknownSentences(pub Vec<String>);

type TriggerKey = (String, usize, usize, String);
type ArgKey = (String, String, usize, usize, String);

#[derive(Default)]
struct Tuples {
    triggers: BTreeSet<TriggerKey>,
    args: BTreeSet<ArgKey>,
}

impl Tuples {
    fn add(&mut self, sid: &str, m: &EventMention) {
        self.triggers.insert((sid.to_owned(), m.trigger.start, m.trigger.end, m.event_type.clone()));
        for a in &m.arguments {
            self.args.insert((sid.to_owned(), m.event_type.clone(), a.start, a.end, a.role.clone()));
        }
    }
}

/// Matches classification tuples exactly and identification tuples as
/// multisets of their projections, so a span counts as identified as many
/// times as it is labelled on each side.
fn compare<K: Ord + Clone, P: std::hash::Hash + Eq>(
    gold: &BTreeSet<K>,
    pred: &BTreeSet<K>,
    project: impl Fn(&K) -> P,
) -> (Prf, Prf) {
    let classified = gold.intersection(pred).count();
    let mut g: HashMap<P, usize> = HashMap::new();
    for k in gold {
        *g.entry(project(k)).or_insert(0) += 1;
    }
    let mut p: HashMap<P, usize> = HashMap::new();
    for k in pred {
        *p.entry(project(k)).or_insert(0) += 1;
    }
    let identified: usize = p.iter().map(|(k, n)| (*n).min(g.get(k).copied().unwrap_or(0))).sum();
    (
        Prf::from_counts(identified, gold.len(), pred.len()),
        Prf::from_counts(classified, gold.len(), pred.len()),
    )
}

/// Scores predictions against gold mentions by character span.
///
/// Trigger identification matches the span; classification adds the event
/// type. Argument identification matches the span within an event of the
/// same type; classification adds the role. Repeated predictions count once.
pub fn score(gold: &DatasetPartition, predictions: &[PredictionRecord]) -> Result<Scores, UnknownSentences> {
    let ids: BTreeSet<&str> = gold.examples.iter().map(|s| s.sentence_id.as_str()).collect();
    let unknown: BTreeSet<String> =
        predictions.iter().filter(|p| !ids.contains(p.sentence_id.as_str())).map(|p| p.sentence_id.clone()).collect();
    if !unknown.is_empty() {
        return Err(UnknownSentences(unknown.into_iter().collect()));
    }
    let mut g = Tuples::default();
    for s in &gold.examples {
        for m in &s.mentions {
            g.add(&s.sentence_id, m);
        }
    }
    let mut p = Tuples::default();
    for r in predictions {
        for m in &r.mentions {
            p.add(&r.sentence_id, m);
        }
    }
    let (tri_i, tri_c) = compare(&g.triggers, &p.triggers, |(s, a, b, _)| (s.clone(), *a, *b));
    let (arg_i, arg_c) = compare(&g.args, &p.args, |(s, t, a, b, _)| (s.clone(), t.clone(), *a, *b));
    Ok(Scores { tri_i, tri_c, arg_i, arg_c })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Machine,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "machine" => Ok(ReportFormat::Machine),
            _ => Err(format!("unknown report format `{s}` (table | machine)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Table => "table",
            ReportFormat::Machine => "machine",
        })
    }
}

/// Table: one header row and one row of F1 x 100, in Tri-I, Tri-C, Arg-I,
/// Arg-C order. Machine: one JSON object per line keyed by metric.
pub fn report(scores: &Scores, format: ReportFormat) -> String {
    let rows = [("Tri-I", scores.tri_i), ("Tri-C", scores.tri_c), ("Arg-I", scores.arg_i), ("Arg-C", scores.arg_c)];
    match format {
        ReportFormat::Table => {
            let head: Vec<&str> = rows.iter().map(|(n, _)| *n).collect();
            let vals: Vec<String> = rows.iter().map(|(_, p)| format!("{:.1}", p.f1 * 100.0)).collect();
            format!("{}\n{}\n", head.join("\t"), vals.join("\t"))
        }
        ReportFormat::Machine => {
            let map: BTreeMap<&str, Prf> = rows.into_iter().collect();
            let mut out = String::new();
            for (k, v) in map {
                let line = serde_json::json!({ "metric": k, "scores": v });
                out.push_str(&line.to_string());
                out.push('\n');
            }
            out
        }
    }
}

/// Reads back the machine format.
pub fn parse_machine_report(text: &str) -> Result<Scores, String> {
    #[derive(Deserialize)]
    struct Line {
        metric: String,
        scores: Prf,
    }
    let mut s = Scores::default();
    let mut seen = BTreeSet::new();
    for (i, l) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let line: Line = serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
        let slot = match line.metric.as_str() {
            "Tri-I" => &mut s.tri_i,
            "Tri-C" => &mut s.tri_c,
            "Arg-I" => &mut s.arg_i,
            "Arg-C" => &mut s.arg_c,
            other => return Err(format!("line {}: unknown metric `{other}`", i + 1)),
        };
        *slot = line.scores;
        seen.insert(line.metric);
    }
    if seen.len() != 4 {
        return Err(format!("expected 4 metrics, found {}", seen.len()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnotatedSentence, PartitionKind, TriggerSpan};

    fn mention(t: &str, start: usize, end: usize, text: &str) -> EventMention {
        EventMention { event_type: t.into(), trigger: TriggerSpan { text: text.into(), start, end }, arguments: vec![] }
    }

    fn gold() -> DatasetPartition {
        let mut p = DatasetPartition::new(PartitionKind::Novel);
        let mut s = AnnotatedSentence::new("s1", "The court clear him, said the board.");
        s.mentions.push(mention("Justice:Pardon", 10, 15, "clear"));
        p.examples.push(s);
        p
    }

    #[test]
    fn one_gold_two_predicted() {
        let pred = vec![PredictionRecord {
            sentence_id: "s1".into(),
            mentions: vec![mention("Justice:Pardon", 10, 15, "clear"), mention("Justice:Pardon", 30, 35, "board")],
        }];
        let s = score(&gold(), &pred).unwrap();
        assert_eq!((s.tri_i.precision, s.tri_i.recall), (0.5, 1.0));
        assert!((s.tri_i.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.tri_c, s.tri_i);
    }

    #[test]
    fn empty_predictions_and_unknown_ids() {
        let s = score(&gold(), &[]).unwrap();
        assert_eq!((s.tri_i.precision, s.tri_i.recall, s.tri_i.f1), (0.0, 0.0, 0.0));
        assert_eq!(s.arg_c.f1, 1.0);
        let err = score(&gold(), &[PredictionRecord { sentence_id: "zz".into(), mentions: vec![] }]).unwrap_err();
        assert_eq!(err.0, vec!["zz".to_owned()]);
    }

    #[test]
    fn reports_are_stable() {
        let s = score(&gold(), &[PredictionRecord { sentence_id: "s1".into(), mentions: gold().examples[0].mentions.clone() }])
            .unwrap();
        assert_eq!(report(&s, ReportFormat::Table), "Tri-I\tTri-C\tArg-I\tArg-C\n100.0\t100.0\t100.0\t100.0\n");
        let m = report(&s, ReportFormat::Machine);
        assert_eq!(parse_machine_report(&m).unwrap(), s);
        assert_eq!(m, report(&s, ReportFormat::Machine));
    }
}

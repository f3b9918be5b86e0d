//! JSONL dataset I/O with ontology and offset validation.
//!
//! One `AnnotatedSentence` per line. Keys are emitted in declaration order,
//! so serializing the same partition always yields the same bytes.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::model::{AnnotatedSentence, DatasetPartition, PartitionKind};
use crate::ontology::EventOntology;
use crate::text;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {error}")]
    Record { path: PathBuf, error: RecordError },
    #[error("{path}: cannot serialize record: {source}")]
    Serialize { path: PathBuf, source: serde_json::Error },
}

/// Problem with a single input line. `index` is the 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("record {index}: {reason}")]
pub struct RecordError {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Stop at the first invalid record instead of collecting errors.
    pub fail_fast: bool,
}

#[derive(Debug)]
pub struct LoadReport {
    pub partition: DatasetPartition,
    /// Invalid records that were skipped.
    pub errors: Vec<RecordError>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_owned(), source }
}

/// Checks one sentence against the ontology and its own text.
pub fn validate_sentence(s: &AnnotatedSentence, ontology: &EventOntology) -> Result<(), String> {
    if s.sentence_id.is_empty() {
        return Err("empty sentence_id".into());
    }
    for (mi, m) in s.mentions.iter().enumerate() {
        ontology.validate_structure(&m.structure()).map_err(|e| format!("mention {mi}: {e}"))?;
        let check = |what: &str, start: usize, end: usize, expected: &str| -> Result<(), String> {
            match text::char_slice(&s.text, start, end) {
                None => Err(format!("mention {mi}: {what} offsets {start}..{end} outside text")),
                Some(got) if got != expected => {
                    Err(format!("mention {mi}: {what} offsets {start}..{end} cover `{got}`, recorded `{expected}`"))
                }
                Some(_) => Ok(()),
            }
        };
        check("trigger", m.trigger.start, m.trigger.end, &m.trigger.text)?;
        for a in &m.arguments {
            check(&format!("argument `{}`", a.role), a.start, a.end, &a.text)?;
        }
    }
    Ok(())
}

/// Loads a JSONL dataset into a partition of the given kind.
pub fn load_dataset(
    path: &Path,
    ontology: &EventOntology,
    kind: PartitionKind,
    options: LoadOptions,
) -> Result<LoadReport, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut partition = DatasetPartition::new(kind);
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let index = i + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<AnnotatedSentence>(&line)
            .map_err(|e| e.to_string())
            .and_then(|mut s| {
                validate_sentence(&s, ontology)?;
                if s.tokens.is_empty() && !s.text.is_empty() {
                    s.tokens = text::whitespace_tokens(&s.text);
                }
                Ok(s)
            });
        match parsed {
            Ok(s) => partition.examples.push(s),
            Err(reason) => {
                let error = RecordError { index, reason };
                if options.fail_fast {
                    return Err(DatasetError::Record { path: path.to_owned(), error });
                }
                log::warn!("{}: {error}", path.display());
                errors.push(error);
            }
        }
    }
    Ok(LoadReport { partition, errors })
}

/// Canonical JSONL bytes of a partition.
pub fn canonical_bytes(partition: &DatasetPartition) -> Vec<u8> {
    let mut out = Vec::new();
    for s in &partition.examples {
        serde_json::to_writer(&mut out, s).expect("annotated sentences always serialize");
        out.push(b'\n');
    }
    out
}

pub fn write_dataset(partition: &DatasetPartition, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, canonical_bytes(partition)).map_err(io_err(path))
}

/// Writes any serializable records as JSONL.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| DatasetError::Serialize { path: path.to_owned(), source })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads JSONL records, failing on the first malformed line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Record {
            path: path.to_owned(),
            error: RecordError { index: i + 1, reason: e.to_string() },
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventStructure, PartitionKind};
    use crate::testutil::pardon_ontology;

    fn sample() -> DatasetPartition {
        let mut p = DatasetPartition::new(PartitionKind::Base);
        p.examples.push(
            AnnotatedSentence::new(
                "s1",
                "now it 's up to the appeals court and the board of pardon and paroles to officially clear their names .",
            )
            .with_structure(
                &EventStructure::new("Justice:Pardon", "clear")
                    .with("Adjudicator", "court")
                    .with("Adjudicator", "board of pardon and paroles"),
            ),
        );
        p.examples.push(AnnotatedSentence::new("s2", "Nothing happened in Zürich ."));
        p.examples.push(
            AnnotatedSentence::new("s3", "Governor Smith pardoned Rich in Jordan .")
                .with_structure(&EventStructure::new("Justice:Pardon", "pardoned").with("Place", "Jordan")),
        );
        p
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let p = sample();
        write_dataset(&p, &path).unwrap();
        let back = load_dataset(&path, &pardon_ontology(), PartitionKind::Base, LoadOptions::default()).unwrap();
        assert!(back.errors.is_empty());
        assert_eq!(back.partition, p);
        assert_eq!(canonical_bytes(&back.partition), fs::read(&path).unwrap());
    }

    #[test]
    fn empty_file_keeps_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        let r = load_dataset(&path, &pardon_ontology(), PartitionKind::Novel, LoadOptions::default()).unwrap();
        assert!(r.partition.is_empty());
        assert_eq!(r.partition.kind, PartitionKind::Novel);
    }

    #[test]
    fn undeclared_role_is_a_record_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let mut p = sample();
        p.examples[2].mentions[0].arguments[0].role = "Victim".into();
        write_dataset(&p, &path).unwrap();
        let r = load_dataset(&path, &pardon_ontology(), PartitionKind::Base, LoadOptions::default()).unwrap();
        assert_eq!(r.partition.len(), 2);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].index, 3);
        assert!(r.errors[0].reason.contains("Victim"));

        let err = load_dataset(&path, &pardon_ontology(), PartitionKind::Base, LoadOptions { fail_fast: true })
            .unwrap_err();
        assert!(matches!(err, DatasetError::Record { error: RecordError { index: 3, .. }, .. }));
    }

    #[test]
    fn offset_mismatch_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("off.jsonl");
        let mut p = sample();
        p.examples[0].mentions[0].trigger.start += 1;
        p.examples[2].mentions[0].arguments[0].end = 999;
        write_dataset(&p, &path).unwrap();
        let r = load_dataset(&path, &pardon_ontology(), PartitionKind::Base, LoadOptions::default()).unwrap();
        assert_eq!(r.errors.iter().map(|e| e.index).collect::<Vec<_>>(), vec![1, 3]);
        assert!(r.errors[1].reason.contains("outside text"));
    }

    #[test]
    fn malformed_json_is_a_record_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        fs::write(&path, "{\"sentence_id\":\"a\",\"text\":\"x\"}\n{oops\n").unwrap();
        let r = load_dataset(&path, &pardon_ontology(), PartitionKind::Base, LoadOptions::default()).unwrap();
        assert_eq!(r.partition.len(), 1);
        assert_eq!(r.partition.examples[0].tokens, vec!["x"]);
        assert_eq!(r.errors[0].index, 2);
    }

    #[test]
    fn write_to_missing_directory_fails_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("no/such/dir/out.jsonl");
        let err = write_dataset(&sample(), &path).unwrap_err();
        assert!(err.to_string().contains("no/such/dir"), "{err}");
    }
}

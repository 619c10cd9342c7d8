//! The annotated image corpus: image records, their embedding rows and the
//! notation → images inverted lists.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notation::parse_notation;
use crate::scalar::Scalar;
use crate::vector::{read_icnx, write_icnx, EmbeddingMatrix, IndexError};

pub const EMBEDDINGS_FILE: &str = "embeddings.icnx";
pub const METADATA_FILE: &str = "metadata.jsonl";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("row count mismatch: metadata lists {records} images but the matrix has {rows} rows")]
    RowCountMismatch { records: usize, rows: usize },
    #[error("image {image_id:?} references row {row}, but the matrix has {rows} rows")]
    UnknownRowReference {
        image_id: String,
        row: usize,
        rows: usize,
    },
    #[error("row {row} is referenced by both {first:?} and {second:?}")]
    DuplicateRowReference {
        row: usize,
        first: String,
        second: String,
    },
    #[error("duplicate image id {0:?}")]
    DuplicateImageId(String),
    #[error("image {image_id:?} on line {line} has no notations")]
    EmptyNotations { line: usize, image_id: String },
    #[error("malformed metadata on line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("image {0:?} not found")]
    NotFound(String),
    #[error("embeddings: {0}")]
    Embeddings(#[from] IndexError),
    #[error("metadata I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

/// One annotated image. Serializes as a metadata line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    #[serde(rename = "id")]
    pub image_id: String,
    #[serde(rename = "row")]
    pub embedding_row: usize,
    pub notations: Vec<String>,
    #[serde(rename = "uri", default, skip_serializing_if = "Option::is_none")]
    pub source_uri: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_images: usize,
    /// Sum of the per-image, duplicate-free notation list lengths.
    pub n_assignments: usize,
    pub n_unique_notations: usize,
}

/// Non-fatal findings from ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    /// Assignments whose code does not follow the notation grammar. They
    /// are kept verbatim.
    pub unparsed_notations: usize,
    /// Repeated codes dropped from an image's own list.
    pub duplicate_assignments: usize,
}

#[derive(Debug, Clone)]
pub struct Corpus<S> {
    records: BTreeMap<String, ImageRecord>,
    inverted: BTreeMap<String, Vec<String>>,
    row_ids: Vec<String>,
    matrix: EmbeddingMatrix<S>,
}

impl<S: Scalar> Corpus<S> {
    /// Reads an ICNX embeddings file and a JSONL metadata file.
    pub fn ingest(
        embeddings_path: impl AsRef<Path>,
        metadata_path: impl AsRef<Path>,
    ) -> Result<(Self, IngestReport), CorpusError> {
        let (matrix, _row_labels) = read_icnx::<S>(embeddings_path)?;
        let file = File::open(metadata_path)?;
        let mut records = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ImageRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            records.push((idx + 1, record));
        }
        Self::from_numbered_records(matrix, records)
    }

    /// Loads a corpus written by [`Corpus::persist`].
    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, IngestReport), CorpusError> {
        let dir = dir.as_ref();
        Self::ingest(dir.join(EMBEDDINGS_FILE), dir.join(METADATA_FILE))
    }

    pub fn from_records(
        matrix: EmbeddingMatrix<S>,
        records: impl IntoIterator<Item = ImageRecord>,
    ) -> Result<(Self, IngestReport), CorpusError> {
        Self::from_numbered_records(matrix, records.into_iter().enumerate().map(|(i, r)| (i + 1, r)))
    }

    fn from_numbered_records(
        matrix: EmbeddingMatrix<S>,
        records: impl IntoIterator<Item = (usize, ImageRecord)>,
    ) -> Result<(Self, IngestReport), CorpusError> {
        let rows = matrix.count();
        let mut report = IngestReport::default();
        let mut by_id = BTreeMap::new();
        let mut row_ids: Vec<Option<String>> = vec![None; rows];

        for (line, mut record) in records {
            if record.notations.is_empty() {
                return Err(CorpusError::EmptyNotations {
                    line,
                    image_id: record.image_id,
                });
            }
            let mut seen = BTreeSet::new();
            let before = record.notations.len();
            record.notations.retain(|code| seen.insert(code.clone()));
            report.duplicate_assignments += before - record.notations.len();
            report.unparsed_notations += record
                .notations
                .iter()
                .filter(|code| parse_notation(code).is_err())
                .count();

            let row = record.embedding_row;
            let Some(slot) = row_ids.get_mut(row) else {
                return Err(CorpusError::UnknownRowReference {
                    image_id: record.image_id,
                    row,
                    rows,
                });
            };
            if let Some(first) = slot {
                return Err(CorpusError::DuplicateRowReference {
                    row,
                    first: first.clone(),
                    second: record.image_id,
                });
            }
            if by_id.contains_key(&record.image_id) {
                return Err(CorpusError::DuplicateImageId(record.image_id));
            }
            *slot = Some(record.image_id.clone());
            by_id.insert(record.image_id.clone(), record);
        }

        if by_id.len() != rows {
            return Err(CorpusError::RowCountMismatch {
                records: by_id.len(),
                rows,
            });
        }
        let row_ids: Vec<String> = row_ids.into_iter().map(|id| id.expect("every row referenced")).collect();

        let mut inverted: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for record in by_id.values() {
            for code in &record.notations {
                inverted.entry(code.clone()).or_default().push(record.image_id.clone());
            }
        }
        // Records are visited in id order, so each list is already sorted.

        Ok((
            Self {
                records: by_id,
                inverted,
                row_ids,
                matrix,
            },
            report,
        ))
    }

    /// Writes the embeddings and metadata files into `dir`.
    pub fn persist(&self, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_icnx(dir.join(EMBEDDINGS_FILE), &self.matrix, &self.row_ids)?;
        let mut out = BufWriter::new(File::create(dir.join(METADATA_FILE))?);
        for record in self.records.values() {
            let line = serde_json::to_string(record).expect("records serialize");
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            n_images: self.records.len(),
            n_assignments: self.records.values().map(|r| r.notations.len()).sum(),
            n_unique_notations: self.inverted.len(),
        }
    }

    /// Sorted ids of the images carrying `code`; empty when unseen.
    pub fn images_for_notation(&self, code: &str) -> &[String] {
        self.inverted.get(code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get_image(&self, image_id: &str) -> Result<&ImageRecord, CorpusError> {
        self.records
            .get(image_id)
            .ok_or_else(|| CorpusError::NotFound(image_id.to_string()))
    }

    pub fn records(&self) -> impl Iterator<Item = &ImageRecord> {
        self.records.values()
    }

    pub fn notation_codes(&self) -> impl Iterator<Item = &str> {
        self.inverted.keys().map(String::as_str)
    }

    pub fn matrix(&self) -> &EmbeddingMatrix<S> {
        &self.matrix
    }

    /// Image ids aligned with matrix rows.
    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

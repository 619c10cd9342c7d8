//! Blinded side-by-side comparison of two ranked systems.
//!
//! [`generate_sheet`] lays the top-10 lists of system A and system B next to
//! each other with the side of each system decided per query from a seed,
//! and writes the side assignment to a separate key file. [`tally`] reads
//! judge responses expressed as left/right, unblinds them with the key and
//! counts preferences and stated criteria per system.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entries shown per system and row.
pub const SHEET_DEPTH: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no queries given")]
    NoQueries,
    #[error("malformed response on line {line}: {message}")]
    MalformedResponse { line: usize, message: String },
    #[error("response on line {line} refers to unknown row {row_id}")]
    UnknownRow { line: usize, row_id: usize },
    #[error("malformed key on line {line}: {message}")]
    MalformedKey { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemTag {
    A,
    B,
}

impl SystemTag {
    fn other(self) -> Self {
        match self {
            SystemTag::A => SystemTag::B,
            SystemTag::B => SystemTag::A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SheetQuery {
    pub query: String,
    pub image_ref: Option<String>,
}

impl SheetQuery {
    pub fn new(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            image_ref: None,
        }
    }
}

/// One `(code, label)` result line.
pub type ResultEntry = (String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub row_id: usize,
    pub query: String,
    pub image_ref: Option<String>,
    pub left_results: Vec<ResultEntry>,
    pub right_results: Vec<ResultEntry>,
    pub left_is: SystemTag,
    pub blind_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemFailure {
    pub row_id: usize,
    pub system: SystemTag,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sheet {
    pub rows: Vec<ComparisonRow>,
    pub failures: Vec<SystemFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEntry {
    pub row_id: usize,
    pub left_is: SystemTag,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Which system is shown on the left for `query` under `seed`.
pub fn left_side(seed: u64, query: &str) -> SystemTag {
    if splitmix64(seed ^ fnv1a(query.as_bytes())) & 1 == 0 {
        SystemTag::A
    } else {
        SystemTag::B
    }
}

/// Runs both systems on every query and builds the blinded sheet.
///
/// A system that fails on a query contributes an empty list; the failure is
/// recorded in [`Sheet::failures`].
pub fn generate_sheet<A, B>(
    queries: &[SheetQuery],
    mut system_a: A,
    mut system_b: B,
    blind_seed: u64,
) -> Result<Sheet, EvalError>
where
    A: FnMut(&SheetQuery) -> Result<Vec<ResultEntry>, String>,
    B: FnMut(&SheetQuery) -> Result<Vec<ResultEntry>, String>,
{
    if queries.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let mut rows = Vec::with_capacity(queries.len());
    let mut failures = Vec::new();
    for (idx, q) in queries.iter().enumerate() {
        let row_id = idx + 1;
        let mut run = |tag: SystemTag, result: Result<Vec<ResultEntry>, String>| match result {
            Ok(mut list) => {
                list.truncate(SHEET_DEPTH);
                list
            }
            Err(message) => {
                failures.push(SystemFailure {
                    row_id,
                    system: tag,
                    message,
                });
                Vec::new()
            }
        };
        let a = run(SystemTag::A, system_a(q));
        let b = run(SystemTag::B, system_b(q));
        let left_is = left_side(blind_seed, &q.query);
        let (left_results, right_results) = match left_is {
            SystemTag::A => (a, b),
            SystemTag::B => (b, a),
        };
        rows.push(ComparisonRow {
            row_id,
            query: q.query.clone(),
            image_ref: q.image_ref.clone(),
            left_results,
            right_results,
            left_is,
            blind_seed,
        });
    }
    Ok(Sheet { rows, failures })
}

impl Sheet {
    /// Columns: `row_id, query, image_ref, left_1..left_10, right_1..right_10`.
    /// Cells read `<code>: <label>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["row_id".to_string(), "query".into(), "image_ref".into()];
        header.extend((1..=SHEET_DEPTH).map(|i| format!("left_{i}")));
        header.extend((1..=SHEET_DEPTH).map(|i| format!("right_{i}")));
        writer.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![
                row.row_id.to_string(),
                row.query.clone(),
                row.image_ref.clone().unwrap_or_default(),
            ];
            for list in [&row.left_results, &row.right_results] {
                for i in 0..SHEET_DEPTH {
                    record.push(
                        list.get(i)
                            .map(|(code, label)| format!("{code}: {label}"))
                            .unwrap_or_default(),
                    );
                }
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// JSONL lines `{"row_id": .., "left_is": "A" | "B"}`.
    pub fn write_key<W: Write>(&self, mut out: W) -> Result<(), EvalError> {
        for row in &self.rows {
            let entry = KeyEntry {
                row_id: row.row_id,
                left_is: row.left_is,
            };
            writeln!(out, "{}", serde_json::to_string(&entry).expect("key serializes"))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, sheet_path: impl AsRef<Path>, key_path: impl AsRef<Path>) -> Result<(), EvalError> {
        self.write_csv(BufWriter::new(File::create(sheet_path)?))?;
        self.write_key(BufWriter::new(File::create(key_path)?))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preferred {
    Left,
    Right,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Preciseness,
    Exhaustiveness,
}

impl FromStr for Preferred {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Preferred::Left),
            "right" => Ok(Preferred::Right),
            "none" => Ok(Preferred::None),
            other => Err(format!("preferred must be left, right or none, got {other:?}")),
        }
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preciseness" => Ok(Criterion::Preciseness),
            "exhaustiveness" => Ok(Criterion::Exhaustiveness),
            other => Err(format!("criterion must be preciseness or exhaustiveness, got {other:?}")),
        }
    }
}

impl fmt::Display for Preferred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preferred::Left => "left",
            Preferred::Right => "right",
            Preferred::None => "none",
        })
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Preciseness => "preciseness",
            Criterion::Exhaustiveness => "exhaustiveness",
        })
    }
}

/// One judge response, still in left/right terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreferenceRecord {
    pub row_id: usize,
    pub preferred: Preferred,
    pub criterion: Option<Criterion>,
}

impl PreferenceRecord {
    pub fn new(row_id: usize, preferred: Preferred, criterion: Option<Criterion>) -> Result<Self, String> {
        if preferred == Preferred::None && criterion.is_some() {
            return Err("a criterion requires a preference".into());
        }
        Ok(Self {
            row_id,
            preferred,
            criterion,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SystemTally {
    pub preferences: usize,
    pub preciseness: usize,
    pub exhaustiveness: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreferenceTally {
    pub system_a: SystemTally,
    pub system_b: SystemTally,
}

impl PreferenceTally {
    pub fn get(&self, tag: SystemTag) -> &SystemTally {
        match tag {
            SystemTag::A => &self.system_a,
            SystemTag::B => &self.system_b,
        }
    }

    fn get_mut(&mut self, tag: SystemTag) -> &mut SystemTally {
        match tag {
            SystemTag::A => &mut self.system_a,
            SystemTag::B => &mut self.system_b,
        }
    }
}

impl fmt::Display for PreferenceTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>10}{:>10}", "", "System A", "System B")?;
        let rows = [
            ("#Preferences", self.system_a.preferences, self.system_b.preferences),
            ("#Preciseness", self.system_a.preciseness, self.system_b.preciseness),
            ("#Exhaustiveness", self.system_a.exhaustiveness, self.system_b.exhaustiveness),
        ];
        for (name, a, b) in rows {
            writeln!(f, "{name:<16}{a:>10}{b:>10}")?;
        }
        Ok(())
    }
}

/// Unblinds `records` with `key` and counts per true system.
pub fn tally_records(
    records: &[PreferenceRecord],
    key: &HashMap<usize, SystemTag>,
) -> Result<PreferenceTally, EvalError> {
    let mut tally = PreferenceTally::default();
    for (idx, record) in records.iter().enumerate() {
        let Some(&left_is) = key.get(&record.row_id) else {
            return Err(EvalError::UnknownRow {
                line: idx + 1,
                row_id: record.row_id,
            });
        };
        let system = match record.preferred {
            Preferred::None => continue,
            Preferred::Left => left_is,
            Preferred::Right => left_is.other(),
        };
        let counts = tally.get_mut(system);
        counts.preferences += 1;
        match record.criterion {
            Some(Criterion::Preciseness) => counts.preciseness += 1,
            Some(Criterion::Exhaustiveness) => counts.exhaustiveness += 1,
            None => {}
        }
    }
    Ok(tally)
}

pub fn read_key<R: Read>(input: R) -> Result<HashMap<usize, SystemTag>, EvalError> {
    let mut key = HashMap::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: KeyEntry = serde_json::from_str(&line).map_err(|e| EvalError::MalformedKey {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if key.insert(entry.row_id, entry.left_is).is_some() {
            return Err(EvalError::MalformedKey {
                line: idx + 1,
                message: format!("duplicate row {}", entry.row_id),
            });
        }
    }
    Ok(key)
}

/// Reads a response CSV with header `row_id,preferred,criterion`. Line
/// numbers in errors count the header as line 1.
pub fn read_responses<R: Read>(input: R) -> Result<Vec<PreferenceRecord>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let expected = ["row_id", "preferred", "criterion"];
    if headers.len() < 3 || headers.iter().take(3).ne(expected) {
        return Err(EvalError::MalformedResponse {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2;
        let row = row?;
        let malformed = |message: String| EvalError::MalformedResponse { line, message };
        if row.len() < 2 || row.len() > 3 {
            return Err(malformed(format!("expected 3 columns, got {}", row.len())));
        }
        let row_id: usize = row[0].parse().map_err(|_| malformed(format!("bad row_id {:?}", &row[0])))?;
        let preferred: Preferred = row[1].parse().map_err(malformed)?;
        let criterion = match row.get(2).unwrap_or("") {
            "" => None,
            text => Some(text.parse::<Criterion>().map_err(malformed)?),
        };
        records.push(PreferenceRecord::new(row_id, preferred, criterion).map_err(malformed)?);
    }
    Ok(records)
}

/// Parses responses and key, then unblinds and counts.
pub fn tally<R: Read, K: Read>(responses: R, key: K) -> Result<PreferenceTally, EvalError> {
    let key = read_key(key)?;
    let records = read_responses(responses)?;
    tally_records(&records, &key).map_err(|e| match e {
        // Record index i sits on CSV line i + 1 (after the header).
        EvalError::UnknownRow { line, row_id } => EvalError::UnknownRow { line: line + 1, row_id },
        other => other,
    })
}

pub fn write_responses<W: Write>(records: &[PreferenceRecord], out: W) -> Result<(), EvalError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["row_id", "preferred", "criterion"])?;
    for r in records {
        writer.write_record([
            r.row_id.to_string(),
            r.preferred.to_string(),
            r.criterion.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Jaccard overlap of the top-`n` code sets of two ranked lists. Two empty
/// lists count as identical.
pub fn list_overlap<T: AsRef<str>, U: AsRef<str>>(a: &[T], b: &[U], n: usize) -> f64 {
    let top_a: BTreeSet<&str> = a.iter().take(n).map(AsRef::as_ref).collect();
    let top_b: BTreeSet<&str> = b.iter().take(n).map(AsRef::as_ref).collect();
    let union = top_a.union(&top_b).count();
    if union == 0 {
        return 1.0;
    }
    top_a.intersection(&top_b).count() as f64 / union as f64
}

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{parse_notation, Notation};

/// Label used for codes that appear in the corpus but not in the scheme.
pub const UNLABELED: &str = "(unlabeled)";

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("failed to read scheme file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scheme format error on line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Notation labels and the parent/child links between them.
///
/// Parents that are referenced by a code but have no entry of their own are
/// kept as gaps so the tree stays navigable from every root.
#[derive(Debug, Clone, Default)]
pub struct SchemeStore {
    entries: BTreeMap<String, String>,
    children: BTreeMap<String, Vec<String>>,
    parents: BTreeMap<String, String>,
    gaps: BTreeSet<String>,
}

impl SchemeStore {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SchemeError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses `<code>\t<label>` lines; `#` lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, SchemeError> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let Some((code, label)) = line.split_once('\t') else {
                return Err(SchemeError::Format {
                    line: line_no,
                    message: "expected <code>\\t<label>".into(),
                });
            };
            let code = code.trim();
            let notation = parse_notation(code).map_err(|e| SchemeError::Format {
                line: line_no,
                message: e.to_string(),
            })?;
            if !seen.insert(code.to_string()) {
                return Err(SchemeError::Format {
                    line: line_no,
                    message: format!("duplicate code {code}"),
                });
            }
            entries.push((notation, label.trim().to_string()));
        }
        Ok(Self::from_entries(entries))
    }

    /// Builds a store from already parsed entries. Later duplicates win.
    pub fn from_entries(entries: impl IntoIterator<Item = (Notation, String)>) -> Self {
        let mut store = SchemeStore::default();
        let mut notations = Vec::new();
        for (notation, label) in entries {
            store.entries.insert(notation.as_str().to_string(), label);
            notations.push(notation);
        }
        for notation in notations {
            store.link(&notation);
        }
        for list in store.children.values_mut() {
            list.sort();
            list.dedup();
        }
        store
    }

    fn link(&mut self, notation: &Notation) {
        let mut child = notation.clone();
        while let Some(parent) = child.parent() {
            let child_code = child.as_str().to_string();
            let parent_code = parent.as_str().to_string();
            if self.parents.contains_key(&child_code) {
                // The rest of the chain was linked by an earlier entry.
                break;
            }
            self.parents.insert(child_code.clone(), parent_code.clone());
            self.children.entry(parent_code.clone()).or_default().push(child_code);
            if !self.entries.contains_key(&parent_code) {
                self.gaps.insert(parent_code);
            }
            child = parent;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_of(&self, code: &str) -> Option<&str> {
        self.entries.get(code).map(String::as_str)
    }

    /// Label for display; codes absent from the scheme read as [`UNLABELED`].
    pub fn label_or_unlabeled(&self, code: &str) -> &str {
        self.label_of(code).unwrap_or(UNLABELED)
    }

    pub fn contains(&self, code: &str) -> bool {
        self.entries.contains_key(code)
    }

    pub fn is_gap(&self, code: &str) -> bool {
        self.gaps.contains(code)
    }

    /// Number of parent codes referenced but not defined.
    pub fn gap_count(&self) -> usize {
        self.gaps.len()
    }

    pub fn gaps(&self) -> impl Iterator<Item = &str> {
        self.gaps.iter().map(String::as_str)
    }

    /// Sorted, duplicate-free child codes (including gaps).
    pub fn children(&self, code: &str) -> &[String] {
        self.children.get(code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(c, l)| (c.as_str(), l.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_levels_without_gaps() {
        let store = SchemeStore::parse("2\tNature\n25\tearth, world as celestial body\n25I\tcity-view\n").unwrap();
        assert_eq!(store.len(), 3);
        assert_eq!(store.children("2"), ["25"]);
        assert_eq!(store.children("25"), ["25I"]);
        assert_eq!(store.gap_count(), 0);
    }

    #[test]
    fn missing_intermediate_levels_are_gaps() {
        let store = SchemeStore::parse("2\tNature\n25I141\tstreet\n").unwrap();
        assert_eq!(store.label_of("25I141"), Some("street"));
        assert_eq!(store.gap_count(), 4);
        for gap in ["25", "25I", "25I1", "25I14"] {
            assert!(store.is_gap(gap), "{gap}");
        }
        assert_eq!(store.children("2"), ["25"]);
        assert_eq!(store.children("25I14"), ["25I141"]);
    }

    #[test]
    fn missing_root_is_a_gap() {
        let store = SchemeStore::parse("34B11\tdog\n").unwrap();
        assert!(store.is_gap("3"));
        assert_eq!(store.children("3"), ["34"]);
    }

    #[test]
    fn empty_file() {
        let store = SchemeStore::parse("").unwrap();
        assert!(store.is_empty());
        assert_eq!(store.gap_count(), 0);
    }

    #[test]
    fn children_sorted_and_unique() {
        let store =
            SchemeStore::parse("3\tx\n31D15\tadult woman\n31D14\tadult man\n31D1\tadults\n31D\tx\n31\tx\n")
                .unwrap();
        assert_eq!(store.children("31D1"), ["31D14", "31D15"]);
        assert_eq!(store.children("31D"), ["31D1"]);
    }

    #[test]
    fn comments_skipped_and_labels_verbatim() {
        let store = SchemeStore::parse("# header\n25I141\tstreet\n").unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.label_or_unlabeled("25I141"), "street");
        assert_eq!(store.label_or_unlabeled("99Z"), UNLABELED);
    }

    #[test]
    fn duplicate_code_reports_line() {
        let err = SchemeStore::parse("2\ta\n# c\n2\tb\n").unwrap_err();
        assert!(matches!(err, SchemeError::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_code_reports_line() {
        let err = SchemeStore::parse("2\ta\nx25\tb\n").unwrap_err();
        assert!(matches!(err, SchemeError::Format { line: 2, .. }));
        let err = SchemeStore::parse("25 street\n").unwrap_err();
        assert!(matches!(err, SchemeError::Format { line: 1, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = SchemeStore::load("/nonexistent/scheme.tsv").unwrap_err();
        assert!(matches!(err, SchemeError::Io(_)));
    }
}

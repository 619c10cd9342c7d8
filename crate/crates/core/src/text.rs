//! TF-IDF ranked retrieval over notation labels.
//!
//! Weighting: raw term counts, smoothed idf `ln((1 + N) / (1 + df)) + 1`,
//! L2-normalized document and query vectors, cosine score.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextIndexError {
    #[error("no document produced any terms")]
    NoIndexableDocuments,
}

/// Lowercased maximal runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
struct Posting {
    doc: u32,
    count: u32,
}

#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    vocabulary: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    idf: Vec<f64>,
    postings: Vec<Vec<Posting>>,
    codes: Vec<String>,
    doc_norms: Vec<f64>,
    skipped: usize,
}

fn smooth_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfIdfIndex {
    /// Builds the index with one document per notation code. Documents
    /// without any token are skipped and counted in [`TfIdfIndex::skipped`].
    pub fn build<K, V, I>(docs: I) -> Result<Self, TextIndexError>
    where
        K: AsRef<str>,
        V: AsRef<str>,
        I: IntoIterator<Item = (K, V)>,
    {
        let sorted: BTreeMap<String, Vec<String>> = docs
            .into_iter()
            .map(|(code, text)| (code.as_ref().to_string(), tokenize(text.as_ref())))
            .collect();

        let mut vocabulary = HashMap::new();
        let mut postings: Vec<Vec<Posting>> = Vec::new();
        let mut codes = Vec::new();
        let mut skipped = 0;
        for (code, tokens) in sorted {
            if tokens.is_empty() {
                skipped += 1;
                continue;
            }
            let doc = codes.len() as u32;
            codes.push(code);
            let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
            for token in tokens {
                let next_id = vocabulary.len();
                let id = *vocabulary.entry(token).or_insert(next_id);
                if id == postings.len() {
                    postings.push(Vec::new());
                }
                *counts.entry(id).or_default() += 1;
            }
            for (term, count) in counts {
                postings[term].push(Posting { doc, count });
            }
        }
        if codes.is_empty() {
            return Err(TextIndexError::NoIndexableDocuments);
        }

        let n_docs = codes.len();
        let doc_freq: Vec<usize> = postings.iter().map(Vec::len).collect();
        let idf: Vec<f64> = doc_freq.iter().map(|&df| smooth_idf(n_docs, df)).collect();
        let mut sq_norms = vec![0.0f64; n_docs];
        for (term, list) in postings.iter().enumerate() {
            for p in list {
                let w = p.count as f64 * idf[term];
                sq_norms[p.doc as usize] += w * w;
            }
        }
        let doc_norms = sq_norms.into_iter().map(f64::sqrt).collect();

        Ok(Self {
            vocabulary,
            doc_freq,
            idf,
            postings,
            codes,
            doc_norms,
            skipped,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.codes.len()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    /// Documents dropped at build time because they had no terms.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).map(|&t| self.doc_freq[t])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&t| self.idf[t])
    }

    pub fn doc_norm(&self, code: &str) -> Option<f64> {
        self.codes
            .binary_search_by(|c| c.as_str().cmp(code))
            .ok()
            .map(|d| self.doc_norms[d])
    }

    /// Top-`n` codes by cosine similarity to `text`, score descending then
    /// code ascending. Only documents sharing a term with the query appear.
    pub fn query(&self, text: &str, n: usize) -> Vec<(String, f64)> {
        let mut query_tf: BTreeMap<usize, u32> = BTreeMap::new();
        for token in tokenize(text) {
            if let Some(&t) = self.vocabulary.get(&token) {
                *query_tf.entry(t).or_default() += 1;
            }
        }
        if query_tf.is_empty() || n == 0 {
            return Vec::new();
        }
        let query_weights: Vec<(usize, f64)> = query_tf
            .into_iter()
            .map(|(t, tf)| (t, tf as f64 * self.idf[t]))
            .collect();
        let query_norm = query_weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();

        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (term, qw) in &query_weights {
            for p in &self.postings[*term] {
                *acc.entry(p.doc).or_default() += qw * p.count as f64 * self.idf[*term];
            }
        }
        let mut scored: Vec<(String, f64)> = acc
            .into_iter()
            .map(|(doc, dot)| {
                let score = dot / (query_norm * self.doc_norms[doc as usize]);
                (self.codes[doc as usize].clone(), score.min(1.0))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(n);
        scored
    }
}

pub fn build_tfidf<K, V, I>(docs: I) -> Result<TfIdfIndex, TextIndexError>
where
    K: AsRef<str>,
    V: AsRef<str>,
    I: IntoIterator<Item = (K, V)>,
{
    TfIdfIndex::build(docs)
}

pub fn query_tfidf(index: &TfIdfIndex, text: &str, n: usize) -> Vec<(String, f64)> {
    index.query(text, n)
}

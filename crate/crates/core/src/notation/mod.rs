//! Iconclass notation codes and the label hierarchy built from them.
//!
//! A notation is a root digit followed by structural atoms (single digits,
//! single uppercase letters, or bracketed names), optionally closed by a
//! named qualifier such as `(PAUL)` and a key such as `(+11)`:
//!
//! ```text
//! notation := digit+ (letter | digit | "(" NAME ")")* ("(+" KEY ")")?
//! ```
//!
//! A bracketed name that is the last structural component is read as the
//! named qualifier; anywhere else it is a structural atom.

mod scheme;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scheme::{SchemeError, SchemeStore, UNLABELED};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotationError {
    #[error("malformed notation {text:?}: {reason}")]
    Malformed { text: String, reason: &'static str },
}

impl NotationError {
    fn new(text: &str, reason: &'static str) -> Self {
        NotationError::Malformed {
            text: text.to_string(),
            reason,
        }
    }
}

/// One structural atom of a notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    Digit(u8),
    Letter(char),
    /// A bracketed name inside the structural chain, e.g. `(LION)` in `25F23(LION)12`.
    Name(String),
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Digit(d) => write!(f, "{d}"),
            Segment::Letter(c) => write!(f, "{c}"),
            Segment::Name(name) => write!(f, "({name})"),
        }
    }
}

/// A parsed notation code.
///
/// Equality and ordering follow the canonical string form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Notation {
    segments: Vec<Segment>,
    named_qualifier: Option<String>,
    key: Option<String>,
    raw: String,
}

impl Notation {
    pub fn parse(text: &str) -> Result<Self, NotationError> {
        parse_notation(text)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn named_qualifier(&self) -> Option<&str> {
        self.named_qualifier.as_deref()
    }

    pub fn key(&self) -> Option<&str> {
        self.key.as_deref()
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    /// The main category (0..=9) this notation belongs to.
    pub fn root_digit(&self) -> u8 {
        match self.segments[0] {
            Segment::Digit(d) => d,
            _ => unreachable!("first segment is always a digit"),
        }
    }

    pub fn is_root(&self) -> bool {
        self.segments.len() == 1 && self.named_qualifier.is_none() && self.key.is_none()
    }

    /// Drops the last component: the key if present, else the named
    /// qualifier, else the last structural atom. `None` for a root digit.
    pub fn parent(&self) -> Option<Notation> {
        let mut parent = self.clone();
        if parent.key.take().is_none() && parent.named_qualifier.take().is_none() {
            if parent.segments.len() == 1 {
                return None;
            }
            parent.segments.pop();
        }
        parent.raw = serialize(&parent.segments, &parent.named_qualifier, &parent.key);
        Some(parent)
    }

    /// Chain from the immediate parent up to the root digit.
    pub fn ancestors(&self) -> Vec<Notation> {
        let mut chain = Vec::new();
        let mut current = self.parent();
        while let Some(n) = current {
            current = n.parent();
            chain.push(n);
        }
        chain
    }

    /// True when `ancestor` lies strictly above `self` in the hierarchy.
    pub fn is_descendant_of(&self, ancestor: &Notation) -> bool {
        self.ancestors().iter().any(|a| a == ancestor)
    }

    /// Rebuilds the string form from the parsed components.
    pub fn serialize(&self) -> String {
        serialize(&self.segments, &self.named_qualifier, &self.key)
    }
}

fn serialize(segments: &[Segment], qualifier: &Option<String>, key: &Option<String>) -> String {
    let mut out = String::new();
    for seg in segments {
        out.push_str(&seg.to_string());
    }
    if let Some(q) = qualifier {
        out.push('(');
        out.push_str(q);
        out.push(')');
    }
    if let Some(k) = key {
        out.push_str("(+");
        out.push_str(k);
        out.push(')');
    }
    out
}

impl fmt::Display for Notation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for Notation {
    type Err = NotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_notation(s)
    }
}

impl PartialOrd for Notation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Notation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.raw.cmp(&other.raw)
    }
}

impl Serialize for Notation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for Notation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_notation(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a notation code. The input must already be trimmed.
pub fn parse_notation(text: &str) -> Result<Notation, NotationError> {
    let mut chars = text.char_indices().peekable();
    match chars.peek() {
        None => return Err(NotationError::new(text, "empty")),
        Some((_, c)) if !c.is_ascii_digit() => {
            return Err(NotationError::new(text, "must start with a digit"))
        }
        _ => {}
    }

    let mut segments = Vec::new();
    let mut key = None;
    while let Some((start, c)) = chars.next() {
        if key.is_some() {
            return Err(NotationError::new(text, "content after key"));
        }
        match c {
            '0'..='9' => segments.push(Segment::Digit(c as u8 - b'0')),
            'A'..='Z' => segments.push(Segment::Letter(c)),
            '(' => {
                let body_start = start + 1;
                let mut body_end = None;
                for (i, c) in chars.by_ref() {
                    match c {
                        ')' => {
                            body_end = Some(i);
                            break;
                        }
                        '(' => return Err(NotationError::new(text, "nested parenthesis")),
                        _ => {}
                    }
                }
                let Some(end) = body_end else {
                    return Err(NotationError::new(text, "unbalanced parenthesis"));
                };
                let body = &text[body_start..end];
                if let Some(k) = body.strip_prefix('+') {
                    if k.is_empty() {
                        return Err(NotationError::new(text, "empty key"));
                    }
                    key = Some(k.to_string());
                } else if body.is_empty() {
                    return Err(NotationError::new(text, "empty bracketed name"));
                } else {
                    segments.push(Segment::Name(body.to_string()));
                }
            }
            ')' => return Err(NotationError::new(text, "unbalanced parenthesis")),
            _ => return Err(NotationError::new(text, "illegal character")),
        }
    }

    let named_qualifier = match segments.last() {
        Some(Segment::Name(_)) => match segments.pop() {
            Some(Segment::Name(name)) => Some(name),
            _ => unreachable!(),
        },
        _ => None,
    };

    Ok(Notation {
        segments,
        named_qualifier,
        key,
        raw: text.to_string(),
    })
}

pub fn parent_of(n: &Notation) -> Option<Notation> {
    n.parent()
}

pub fn ancestors(n: &Notation) -> Vec<Notation> {
    n.ancestors()
}

/// True iff `b` appears in `ancestors(a)`.
pub fn is_descendant(a: &Notation, b: &Notation) -> bool {
    a.is_descendant_of(b)
}

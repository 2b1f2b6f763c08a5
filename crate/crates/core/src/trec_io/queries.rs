use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokenized query text keyed by query id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySet {
    queries: BTreeMap<String, Vec<String>>,
}

impl QuerySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a query from raw text. Rejects duplicate ids and text without tokens.
    pub fn insert(&mut self, query_id: &str, text: &str) -> Result<()> {
        if self.queries.contains_key(query_id) {
            return Err(Error::validation(format!("duplicate query id {query_id}")));
        }
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::validation(format!("query {query_id} has no terms")));
        }
        self.queries.insert(query_id.to_string(), tokens);
        Ok(())
    }

    pub fn terms(&self, query_id: &str) -> Option<&[String]> {
        self.queries.get(query_id).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Parses `qid<TAB>text` lines.
pub fn parse_queries(text: &str) -> Result<QuerySet> {
    let mut set = QuerySet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected `qid<TAB>text`"))?;
        let qid = qid.trim();
        if qid.is_empty() {
            return Err(Error::parse(line_no, "empty query id"));
        }
        set.insert(qid, body)
            .map_err(|e| Error::validation(format!("line {line_no}: {e}")))?;
    }
    Ok(set)
}

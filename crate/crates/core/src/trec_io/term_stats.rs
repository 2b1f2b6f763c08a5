use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collection size and document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStatistics {
    doc_count: u64,
    doc_freq: BTreeMap<String, u64>,
}

impl TermStatistics {
    pub fn new(doc_count: u64) -> Result<Self> {
        if doc_count == 0 {
            return Err(Error::validation("document count must be positive"));
        }
        Ok(Self { doc_count, doc_freq: BTreeMap::new() })
    }

    /// Records `df` for `term` (lowercased). Requires `1 <= df <= N` and no duplicates.
    pub fn insert(&mut self, term: &str, df: u64) -> Result<()> {
        if df == 0 || df > self.doc_count {
            return Err(Error::validation(format!(
                "df({term}) = {df} outside [1, {}]",
                self.doc_count
            )));
        }
        let term = term.to_lowercase();
        if self.doc_freq.contains_key(&term) {
            return Err(Error::validation(format!("duplicate term {term}")));
        }
        self.doc_freq.insert(term, df);
        Ok(())
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn doc_freq(&self, term: &str) -> Option<u64> {
        self.doc_freq.get(term).copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, u64)> {
        self.doc_freq.iter().map(|(t, &df)| (t.as_str(), df))
    }
}

/// Parses `N <count>` followed by `term df` lines.
pub fn parse_term_stats(text: &str) -> Result<TermStatistics> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing `N <doc_count>` header"))?;
    let mut head = header.split_whitespace();
    let doc_count = match (head.next(), head.next(), head.next()) {
        (Some("N"), Some(n), None) => n
            .parse::<u64>()
            .map_err(|_| Error::parse(header_no, format!("document count `{n}` is not a positive integer")))?,
        _ => return Err(Error::parse(header_no, "missing `N <doc_count>` header")),
    };
    let mut stats = TermStatistics::new(doc_count)?;

    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(line_no, format!("expected `term df`, found {} field(s)", fields.len())));
        }
        let df: u64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("df `{}` is not a positive integer", fields[1])))?;
        stats
            .insert(fields[0], df)
            .map_err(|e| Error::validation(format!("line {line_no}: {e}")))?;
    }
    Ok(stats)
}

/// Writes the `N` header and one `term df` line per term, sorted by term.
pub fn write_term_stats(stats: &TermStatistics) -> String {
    let mut out = format!("N {}\n", stats.doc_count());
    for (t, df) in stats.terms() {
        out.push_str(&format!("{t} {df}\n"));
    }
    out
}

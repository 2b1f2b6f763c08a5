use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a judgment set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// The complete judgment file as distributed.
    Full,
    /// A subset restricted to a simulated pool.
    Induced,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Full => "full",
            Provenance::Induced => "induced",
        })
    }
}

/// Graded relevance judgments keyed by `(query_id, doc_id)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentSet {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
    provenance: Provenance,
}

impl JudgmentSet {
    pub fn new(provenance: Provenance) -> Self {
        Self { grades: BTreeMap::new(), provenance }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Adds a judgment. Re-adding the same grade is a no-op; a different
    /// grade for an existing pair is a validation error.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let docs = self.grades.entry(query_id.to_string()).or_default();
        match docs.get(doc_id) {
            Some(&g) if g != grade => Err(Error::validation(format!(
                "conflicting grades {g} and {grade} for ({query_id}, {doc_id})"
            ))),
            Some(_) => Ok(()),
            None => {
                docs.insert(doc_id.to_string(), grade);
                Ok(())
            }
        }
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.grades.get(query_id)?.get(doc_id).copied()
    }

    /// Judgments for one query, by doc id.
    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.grades.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    /// Number of judged documents for `query_id` with grade at or above `threshold`.
    pub fn relevant_count(&self, query_id: &str, threshold: u32) -> usize {
        self.grades
            .get(query_id)
            .map_or(0, |docs| docs.values().filter(|&&g| g >= threshold).count())
    }

    /// Relevant documents summed over every query.
    pub fn total_relevant(&self, threshold: u32) -> usize {
        self.grades
            .values()
            .map(|docs| docs.values().filter(|&&g| g >= threshold).count())
            .sum()
    }

    pub fn is_relevant(&self, query_id: &str, doc_id: &str, threshold: u32) -> bool {
        self.grade(query_id, doc_id).is_some_and(|g| g >= threshold)
    }

    /// Total number of judged pairs.
    pub fn len(&self) -> usize {
        self.grades.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates `(query_id, doc_id, grade)` sorted by query then doc.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.grades
            .iter()
            .flat_map(|(q, docs)| docs.iter().map(move |(d, &g)| (q.as_str(), d.as_str(), g)))
    }
}

/// Parses TREC qrels (`qid iter docid grade`) into a set with provenance `full`.
pub fn parse_qrels(text: &str) -> Result<JudgmentSet> {
    let mut set = JudgmentSet::new(Provenance::Full);
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 fields `qid iter docid grade`, found {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("grade `{}` is not an integer", fields[3])))?;
        if grade < 0 {
            return Err(Error::validation(format!("negative grade {grade} at line {line_no}")));
        }
        let grade = u32::try_from(grade)
            .map_err(|_| Error::validation(format!("grade {grade} out of range at line {line_no}")))?;
        set.insert(fields[0], fields[2], grade)
            .map_err(|e| Error::validation(format!("line {line_no}: {e}")))?;
    }
    if set.is_empty() {
        log::warn!("qrels input contains no judgments");
    }
    Ok(set)
}

/// Writes qrels sorted by query id then doc id, with the iteration field set to 0.
pub fn write_qrels(judgments: &JudgmentSet) -> String {
    let mut out = String::new();
    for (q, d, g) in judgments.iter() {
        out.push_str(&format!("{q} 0 {d} {g}\n"));
    }
    out
}

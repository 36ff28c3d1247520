//! Field-calibrated reviewer context: a corpus of de-identified abstracts
//! filtered to a rolling window ending at the target manuscript's publication
//! date.

use super::PromptError;
use crate::design::DenyList;
use chrono::NaiveDate;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextEntry {
    pub abstract_text: String,
    pub field: String,
    pub date: NaiveDate,
}

#[derive(Debug, Deserialize)]
struct CorpusRow {
    #[serde(rename = "abstract")]
    abstract_text: String,
    field: String,
    /// ISO-8601 date.
    date: String,
}

/// Abstracts available for context assembly, bounded per field.
#[derive(Debug, Clone)]
pub struct ContextCorpus {
    entries: Vec<ContextEntry>,
    cap_per_field: usize,
}

impl ContextCorpus {
    pub fn new(entries: Vec<ContextEntry>, cap_per_field: usize) -> Result<Self, PromptError> {
        let mut per_field: HashMap<&str, usize> = HashMap::new();
        for e in &entries {
            *per_field.entry(e.field.as_str()).or_default() += 1;
        }
        for (field, count) in per_field {
            if count > cap_per_field {
                return Err(PromptError::CorpusOverCap {
                    field: field.to_string(),
                    count,
                    cap: cap_per_field,
                });
            }
        }
        Ok(ContextCorpus {
            entries,
            cap_per_field,
        })
    }

    /// Loads a CSV table with header columns `abstract`, `field`, `date`.
    pub fn from_csv_path(
        path: impl AsRef<Path>,
        cap_per_field: usize,
    ) -> Result<Self, PromptError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| PromptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut reader = csv::Reader::from_reader(file);
        let mut entries = Vec::new();
        for (idx, row) in reader.deserialize::<CorpusRow>().enumerate() {
            let row = row?;
            let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| {
                PromptError::CorpusRow {
                    row: idx + 1,
                    message: format!("invalid date {:?}: {e}", row.date),
                }
            })?;
            if row.abstract_text.trim().is_empty() {
                return Err(PromptError::CorpusRow {
                    row: idx + 1,
                    message: "empty abstract".into(),
                });
            }
            entries.push(ContextEntry {
                abstract_text: row.abstract_text,
                field: row.field,
                date,
            });
        }
        ContextCorpus::new(entries, cap_per_field)
    }

    pub fn cap_per_field(&self) -> usize {
        self.cap_per_field
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// De-identification check: returns (row index, term) for every deny-list
    /// hit. The corpus is user-prepared; the harness verifies, never redacts.
    pub fn deny_list_hits(&self, deny: &DenyList) -> Vec<(usize, String)> {
        if deny.is_empty() {
            return Vec::new();
        }
        let mut hits = Vec::new();
        for (idx, e) in self.entries.iter().enumerate() {
            let lowered = e.abstract_text.to_lowercase();
            let probe = crate::design::Manuscript {
                id: String::new(),
                title: String::new(),
                field: e.field.clone(),
                publication_date: e.date,
                body: lowered,
                augmentation_log: None,
            };
            for (_, term) in crate::design::scan_deny_list(&probe, deny) {
                hits.push((idx, term));
            }
        }
        hits
    }
}

/// Selects the newest abstracts for `field` dated at or before `cutoff`
/// (newest first, input order breaking date ties), at most `cap`, and joins
/// them into the context block: each entry on its own line, prefixed
/// "Abstract: ".
pub fn assemble_context(
    corpus: &ContextCorpus,
    field: &str,
    cutoff: NaiveDate,
    cap: usize,
) -> Result<String, PromptError> {
    let mut selected: Vec<&ContextEntry> = corpus
        .entries
        .iter()
        .filter(|e| e.field == field && e.date <= cutoff)
        .collect();
    if selected.is_empty() {
        return Err(PromptError::EmptyContext {
            field: field.to_string(),
            cutoff,
        });
    }
    // stable sort: equal dates keep corpus order
    selected.sort_by_key(|e| std::cmp::Reverse(e.date));
    selected.truncate(cap);
    let block = selected
        .iter()
        .map(|e| format!("Abstract: {}", e.abstract_text))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(block)
}

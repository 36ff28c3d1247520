//! Manuscript manifest: per-manuscript metadata plus the body text loaded from
//! a plain-text file. The harness verifies de-identification against a
//! user-supplied deny list; it never edits manuscript text itself.

use super::{DesignError, Roster};
use chrono::NaiveDate;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    /// Optional path (relative to the manifest) to a deny-list file, one term per line.
    deny_list: Option<String>,
    manuscripts: Vec<ManifestRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRow {
    id: String,
    title: String,
    field: String,
    /// ISO date, e.g. "2025-02-14".
    publication_date: String,
    text_file: String,
    /// Free-text note on how the source text was prepared (de-identified, truncated, ...).
    #[serde(default)]
    augmentation_log: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manuscript {
    pub id: String,
    pub title: String,
    pub field: String,
    pub publication_date: NaiveDate,
    pub body: String,
    pub augmentation_log: Option<String>,
}

/// Case-insensitive deny list for the de-identification check.
#[derive(Debug, Clone, Default)]
pub struct DenyList {
    terms: Vec<String>,
}

impl DenyList {
    /// One term per line; blank lines and `#` comment lines are skipped.
    /// Terms are matched as case-insensitive substrings.
    pub fn parse(text: &str) -> Self {
        let terms = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        DenyList { terms }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DesignError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DesignError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn hits(&self, haystack: &str) -> Vec<String> {
        let lowered = haystack.to_lowercase();
        self.terms
            .iter()
            .filter(|t| lowered.contains(t.as_str()))
            .cloned()
            .collect()
    }
}

/// Returns deny-list terms found in the manuscript, tagged by location.
pub fn scan_deny_list(manuscript: &Manuscript, deny: &DenyList) -> Vec<(&'static str, String)> {
    let mut found = Vec::new();
    for term in deny.hits(&manuscript.title) {
        found.push(("title", term));
    }
    for term in deny.hits(&manuscript.body) {
        found.push(("body", term));
    }
    found
}

#[derive(Debug, Clone)]
pub struct ManuscriptSet {
    manuscripts: Vec<Manuscript>,
    by_id: HashMap<String, usize>,
}

impl ManuscriptSet {
    pub fn get(&self, id: &str) -> Option<&Manuscript> {
        self.by_id.get(id).map(|&i| &self.manuscripts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Manuscript> {
        self.manuscripts.iter()
    }

    pub fn len(&self) -> usize {
        self.manuscripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manuscripts.is_empty()
    }

    /// Checks that every field in the roster resolves to a manuscript whose
    /// declared field matches the roster's field name.
    pub fn check_roster(&self, roster: &Roster) -> Result<(), DesignError> {
        for f in &roster.fields {
            let ms = self.get(&f.manuscript_id).ok_or_else(|| {
                DesignError::Manifest(format!(
                    "field {:?} references manuscript {:?}, which is not in the manifest",
                    f.field_name, f.manuscript_id
                ))
            })?;
            if ms.field != f.field_name {
                return Err(DesignError::Manifest(format!(
                    "manuscript {:?} is declared for field {:?} but the roster binds it to {:?}",
                    ms.id, ms.field, f.field_name
                )));
            }
        }
        Ok(())
    }
}

/// Loads the manifest, reads each manuscript body, and runs the deny-list
/// de-identification check when the manifest declares one.
pub fn load_manuscripts(manifest_path: impl AsRef<Path>) -> Result<ManuscriptSet, DesignError> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path).map_err(|source| DesignError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let doc: ManifestDoc = toml::from_str(&text)?;
    let base: PathBuf = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    let deny = match &doc.deny_list {
        Some(rel) => DenyList::load(base.join(rel))?,
        None => DenyList::default(),
    };

    let mut manuscripts = Vec::with_capacity(doc.manuscripts.len());
    let mut by_id = HashMap::new();
    for row in doc.manuscripts {
        if by_id.contains_key(&row.id) {
            return Err(DesignError::Manifest(format!(
                "duplicate manuscript id {:?}",
                row.id
            )));
        }
        let publication_date =
            NaiveDate::parse_from_str(&row.publication_date, "%Y-%m-%d").map_err(|e| {
                DesignError::Manifest(format!(
                    "manuscript {:?} has invalid publication_date {:?}: {e}",
                    row.id, row.publication_date
                ))
            })?;
        let text_path = base.join(&row.text_file);
        let body = std::fs::read_to_string(&text_path).map_err(|source| DesignError::Io {
            path: text_path.display().to_string(),
            source,
        })?;
        if body.trim().is_empty() {
            return Err(DesignError::Manifest(format!(
                "manuscript {:?} has an empty text file",
                row.id
            )));
        }
        let manuscript = Manuscript {
            id: row.id,
            title: row.title,
            field: row.field,
            publication_date,
            body,
            augmentation_log: row.augmentation_log,
        };
        let found = scan_deny_list(&manuscript, &deny);
        if !found.is_empty() {
            let place = found[0].0;
            let mut terms: Vec<String> = found.into_iter().map(|(_, t)| t).collect();
            terms.dedup();
            return Err(DesignError::DenyListHit {
                id: manuscript.id,
                terms,
                place,
            });
        }
        by_id.insert(manuscript.id.clone(), manuscripts.len());
        manuscripts.push(manuscript);
    }
    Ok(ManuscriptSet { manuscripts, by_id })
}

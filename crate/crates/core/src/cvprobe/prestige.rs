//! Prestige classification of PhD-granting institutions from a user-supplied
//! map file. US entries carry a Carnegie class (R1 = high); international
//! entries carry a world rank (top 100 = high). Lookups normalize case and
//! punctuation and honor an alias column; anything unmatched is Unknown.

use super::{CvError, PhdPrestige};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Separator between alternate names inside the `aliases` column.
const ALIAS_SEPARATOR: char = ';';

#[derive(Debug, Deserialize)]
struct MapRow {
    institution: String,
    country: String,
    #[serde(default)]
    carnegie_class: String,
    #[serde(default)]
    world_rank: Option<u32>,
    #[serde(default)]
    aliases: String,
}

/// Lowercases, strips punctuation, and collapses whitespace so that
/// "Univ. of  Texas-Austin" and "univ of texas austin" hit the same key.
pub fn normalize_institution(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_space = false;
    for ch in name.chars() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

fn is_us(country: &str) -> bool {
    matches!(
        normalize_institution(country).as_str(),
        "us" | "usa" | "united states" | "united states of america"
    )
}

#[derive(Debug, Clone)]
pub struct PrestigeMap {
    // normalized name (canonical or alias) -> classification
    entries: BTreeMap<String, PhdPrestige>,
    n_institutions: usize,
}

impl PrestigeMap {
    /// Builds an empty map; every lookup resolves to Unknown.
    pub fn empty() -> Self {
        PrestigeMap {
            entries: BTreeMap::new(),
            n_institutions: 0,
        }
    }

    /// Loads a delimited map with header columns
    /// `institution,country,carnegie_class,world_rank,aliases`.
    pub fn from_csv_path(path: &Path) -> Result<Self, CvError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CvError::PrestigeMap(format!("{}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for row in reader.deserialize::<MapRow>() {
            rows.push(row.map_err(|e| CvError::PrestigeMap(format!("{}: {e}", path.display())))?);
        }
        Self::from_rows(rows)
    }

    /// Same as [`PrestigeMap::from_csv_path`] for in-memory text.
    pub fn from_csv_str(text: &str) -> Result<Self, CvError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for row in reader.deserialize::<MapRow>() {
            rows.push(row.map_err(|e| CvError::PrestigeMap(e.to_string()))?);
        }
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<MapRow>) -> Result<Self, CvError> {
        let mut entries: BTreeMap<String, PhdPrestige> = BTreeMap::new();
        let mut insert = |name: &str, class: PhdPrestige| -> Result<(), CvError> {
            let key = normalize_institution(name);
            if key.is_empty() {
                return Err(CvError::PrestigeMap(format!(
                    "institution name {name:?} normalizes to nothing"
                )));
            }
            match entries.insert(key.clone(), class) {
                Some(prev) if prev != class => Err(CvError::PrestigeMap(format!(
                    "{name:?} maps to both {prev} and {class}"
                ))),
                _ => Ok(()),
            }
        };

        let n_institutions = rows.len();
        for row in &rows {
            let class = if is_us(&row.country) {
                if row.carnegie_class.eq_ignore_ascii_case("r1") {
                    PhdPrestige::High
                } else {
                    PhdPrestige::Low
                }
            } else {
                // unranked international entries sit outside the top 100 by
                // definition of the cutoff
                match row.world_rank {
                    Some(rank) if rank <= 100 => PhdPrestige::High,
                    _ => PhdPrestige::Low,
                }
            };
            insert(&row.institution, class)?;
            for alias in row.aliases.split(ALIAS_SEPARATOR) {
                let alias = alias.trim();
                if !alias.is_empty() {
                    insert(alias, class)?;
                }
            }
        }
        Ok(PrestigeMap {
            entries,
            n_institutions,
        })
    }

    /// High/Low per the map, Unknown when the name (after normalization)
    /// matches neither a canonical name nor an alias.
    pub fn classify(&self, institution: &str) -> PhdPrestige {
        self.entries
            .get(&normalize_institution(institution))
            .copied()
            .unwrap_or(PhdPrestige::Unknown)
    }

    /// Number of institutions loaded (aliases not counted).
    pub fn len(&self) -> usize {
        self.n_institutions
    }

    pub fn is_empty(&self) -> bool {
        self.n_institutions == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP: &str = "\
institution,country,carnegie_class,world_rank,aliases
Stanford University,USA,R1,,
Arizona State University Campus Immersion,USA,R1,,Arizona State University
San Jose State University,USA,M1,,
University of Oxford,United Kingdom,,3,Oxford University
University of Mumbai,India,,711,
";

    #[test]
    fn us_r1_is_high_and_other_classes_are_low() {
        let map = PrestigeMap::from_csv_str(MAP).unwrap();
        assert_eq!(map.classify("Stanford University"), PhdPrestige::High);
        assert_eq!(map.classify("San Jose State University"), PhdPrestige::Low);
    }

    #[test]
    fn international_rank_cutoff_is_100() {
        let map = PrestigeMap::from_csv_str(MAP).unwrap();
        assert_eq!(map.classify("University of Oxford"), PhdPrestige::High);
        assert_eq!(map.classify("University of Mumbai"), PhdPrestige::Low);
    }

    #[test]
    fn aliases_and_normalization_resolve_name_variants() {
        let map = PrestigeMap::from_csv_str(MAP).unwrap();
        assert_eq!(map.classify("Arizona State University"), PhdPrestige::High);
        assert_eq!(map.classify("  stanford  university."), PhdPrestige::High);
        assert_eq!(map.classify("OXFORD UNIVERSITY"), PhdPrestige::High);
    }

    #[test]
    fn unmatched_names_stay_unknown() {
        let map = PrestigeMap::from_csv_str(MAP).unwrap();
        assert_eq!(map.classify("Standford University"), PhdPrestige::Unknown);
        assert_eq!(PrestigeMap::empty().classify("Stanford University"), PhdPrestige::Unknown);
    }

    #[test]
    fn conflicting_duplicate_entries_are_an_error() {
        let bad = "\
institution,country,carnegie_class,world_rank,aliases
Alpha University,USA,R1,,
Alpha University,USA,M2,,
";
        assert!(matches!(
            PrestigeMap::from_csv_str(bad),
            Err(CvError::PrestigeMap(_))
        ));
    }

    #[test]
    fn normalization_collapses_punctuation_and_case() {
        assert_eq!(
            normalize_institution("Univ. of  Texas-Austin"),
            "univ of texas austin"
        );
        assert_eq!(normalize_institution("MIT"), "mit");
        assert_eq!(normalize_institution("--"), "");
    }
}

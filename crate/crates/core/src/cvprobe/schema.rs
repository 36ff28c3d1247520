//! Strict response parsing for the three generation steps. Every response is
//! a JSON array holding exactly one object; the object's key set must match
//! the step's contract exactly, so an extra field is as fatal as a missing
//! one. Rejections return the reason string stored on the malformed record.

use super::{FacultyRank, ImpactFields, PersonalFields, PublicationRecord, TenureStatus};
use serde_json::{Map, Value};

const PERSONAL_KEYS: [&str; 6] = [
    "index",
    "phd_granting_institution",
    "phd_graduation_year",
    "faculty_rank",
    "tenure_status",
    "num_publications",
];

const IMPACT_KEYS: [&str; 6] = [
    "index",
    "total_citations",
    "h_index",
    "i10_index",
    "average_first_year_citations",
    "average_impact_factor",
];

const PUBLICATION_WRAPPER_KEYS: [&str; 2] = ["profile_pub_index", "publications"];

const PUBLICATION_KEYS: [&str; 6] = [
    "co_authors",
    "topic",
    "journal",
    "journal_impact_factor",
    "year",
    "citations_first_year",
];

/// Drops a single surrounding markdown code fence if present. Key-set and
/// type checks stay strict; this only forgives the most common transport
/// wrapper remote models add.
fn strip_fence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(rest) = t.strip_prefix("```") {
        if let Some(inner) = rest.strip_suffix("```") {
            // first line may carry a language tag
            return match inner.find('\n') {
                Some(nl) => inner[nl + 1..].trim(),
                None => inner.trim(),
            };
        }
    }
    t
}

fn single_object(raw: &str) -> Result<Map<String, Value>, String> {
    let text = strip_fence(raw);
    if text.is_empty() {
        return Err("empty response".into());
    }
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("response is not valid JSON: {e}"))?;
    match value {
        Value::Array(items) => {
            if items.len() != 1 {
                return Err(format!(
                    "expected a single-element JSON array, got {} elements",
                    items.len()
                ));
            }
            match items.into_iter().next().unwrap() {
                Value::Object(map) => Ok(map),
                other => Err(format!("array element is {}, not an object", kind_of(&other))),
            }
        }
        Value::Object(map) => Ok(map),
        other => Err(format!(
            "expected a JSON array or object, got {}",
            kind_of(&other)
        )),
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn check_keys(map: &Map<String, Value>, expected: &[&str]) -> Result<(), String> {
    for key in expected {
        if !map.contains_key(*key) {
            return Err(format!("missing field {key:?}"));
        }
    }
    for key in map.keys() {
        if !expected.contains(&key.as_str()) {
            return Err(format!("unexpected field {key:?}"));
        }
    }
    Ok(())
}

fn uint(map: &Map<String, Value>, key: &str) -> Result<u64, String> {
    let v = &map[key];
    match v.as_u64() {
        Some(n) => Ok(n),
        None => {
            if v.as_i64().is_some_and(|n| n < 0) || v.as_f64().is_some_and(|f| f < 0.0) {
                Err(format!("negative metrics: {key} is {v}"))
            } else {
                Err(format!("{key} must be a non-negative integer, got {v}"))
            }
        }
    }
}

fn int(map: &Map<String, Value>, key: &str) -> Result<i64, String> {
    map[key]
        .as_i64()
        .ok_or_else(|| format!("{key} must be an integer, got {}", map[key]))
}

fn non_negative_float(map: &Map<String, Value>, key: &str) -> Result<f64, String> {
    let f = map[key]
        .as_f64()
        .ok_or_else(|| format!("{key} must be a number, got {}", map[key]))?;
    if !f.is_finite() {
        return Err(format!("{key} is not finite"));
    }
    if f < 0.0 {
        return Err(format!("negative metrics: {key} is {f}"));
    }
    Ok(f)
}

fn string(map: &Map<String, Value>, key: &str) -> Result<String, String> {
    let s = map[key]
        .as_str()
        .ok_or_else(|| format!("{key} must be a string, got {}", map[key]))?;
    let s = s.trim();
    if s.is_empty() {
        return Err(format!("{key} is empty"));
    }
    Ok(s.to_string())
}

fn check_index(map: &Map<String, Value>, key: &str, expect: u64) -> Result<(), String> {
    let got = uint(map, key)?;
    if got != expect {
        return Err(format!("index mismatch: sent {expect}, got {got}"));
    }
    Ok(())
}

/// Parses a step-1 response. `expect_index` is the index the request carried;
/// the echo must match.
pub fn parse_personal(raw: &str, expect_index: u64) -> Result<PersonalFields, String> {
    let map = single_object(raw)?;
    check_keys(&map, &PERSONAL_KEYS)?;
    check_index(&map, "index", expect_index)?;

    let rank_raw = string(&map, "faculty_rank")?;
    let faculty_rank = FacultyRank::from_display(&rank_raw).ok_or_else(|| {
        format!(
            "faculty_rank must be 'Assistant Professor', 'Associate Professor', \
             or 'Full Professor', got {rank_raw:?}"
        )
    })?;
    let tenure_raw = string(&map, "tenure_status")?;
    let tenure_status = TenureStatus::from_display(&tenure_raw).ok_or_else(|| {
        format!("tenure_status must be 'Tenured' or 'Non-tenured', got {tenure_raw:?}")
    })?;

    let year = int(&map, "phd_graduation_year")?;
    let phd_graduation_year = i32::try_from(year)
        .map_err(|_| format!("phd_graduation_year {year} is outside the plausible range"))?;
    let num_publications = u32::try_from(uint(&map, "num_publications")?)
        .map_err(|_| "num_publications exceeds u32".to_string())?;

    Ok(PersonalFields {
        phd_granting_institution: string(&map, "phd_granting_institution")?,
        phd_graduation_year,
        faculty_rank,
        tenure_status,
        num_publications,
    })
}

/// Parses a step-2 response.
pub fn parse_impact(raw: &str, expect_index: u64) -> Result<ImpactFields, String> {
    let map = single_object(raw)?;
    check_keys(&map, &IMPACT_KEYS)?;
    check_index(&map, "index", expect_index)?;
    Ok(ImpactFields {
        total_citations: uint(&map, "total_citations")?,
        h_index: u32::try_from(uint(&map, "h_index")?)
            .map_err(|_| "h_index exceeds u32".to_string())?,
        i10_index: u32::try_from(uint(&map, "i10_index")?)
            .map_err(|_| "i10_index exceeds u32".to_string())?,
        average_first_year_citations: non_negative_float(&map, "average_first_year_citations")?,
        average_impact_factor: non_negative_float(&map, "average_impact_factor")?,
    })
}

/// Parses a step-3 batch response. Structural validity and the index echo are
/// enforced here; the caller compares the record count against the requested
/// batch size, because a short batch is retried rather than discarded.
pub fn parse_publications(
    raw: &str,
    expect_index: u64,
) -> Result<Vec<PublicationRecord>, String> {
    let map = single_object(raw)?;
    check_keys(&map, &PUBLICATION_WRAPPER_KEYS)?;
    check_index(&map, "profile_pub_index", expect_index)?;

    let items = map["publications"]
        .as_array()
        .ok_or_else(|| format!("publications must be an array, got {}", map["publications"]))?;
    let mut records = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| format!("publication {i} is {}, not an object", kind_of(item)))?;
        check_keys(obj, &PUBLICATION_KEYS).map_err(|e| format!("publication {i}: {e}"))?;

        let co_authors_raw = obj["co_authors"]
            .as_array()
            .ok_or_else(|| format!("publication {i}: co_authors must be an array"))?;
        let mut co_authors = Vec::with_capacity(co_authors_raw.len());
        for author in co_authors_raw {
            match author.as_str() {
                Some(s) if !s.trim().is_empty() => co_authors.push(s.trim().to_string()),
                _ => return Err(format!("publication {i}: co_authors entries must be names")),
            }
        }

        let journal_impact_factor = match &obj["journal_impact_factor"] {
            Value::String(s) if s.trim().eq_ignore_ascii_case("na") => None,
            Value::Number(_) => Some(
                non_negative_float(obj, "journal_impact_factor")
                    .map_err(|e| format!("publication {i}: {e}"))?,
            ),
            other => {
                return Err(format!(
                    "publication {i}: journal_impact_factor must be a non-negative number \
                     or 'NA', got {other}"
                ))
            }
        };

        let year = int(obj, "year").map_err(|e| format!("publication {i}: {e}"))?;
        records.push(PublicationRecord {
            co_authors,
            topic: string(obj, "topic").map_err(|e| format!("publication {i}: {e}"))?,
            journal: string(obj, "journal").map_err(|e| format!("publication {i}: {e}"))?,
            journal_impact_factor,
            year: i32::try_from(year)
                .map_err(|_| format!("publication {i}: year {year} is outside the plausible range"))?,
            citations_first_year: u32::try_from(
                uint(obj, "citations_first_year").map_err(|e| format!("publication {i}: {e}"))?,
            )
            .map_err(|_| format!("publication {i}: citations_first_year exceeds u32"))?,
        });
    }
    Ok(records)
}

//! Golden-file checks for rendered prompts: byte-level comparison against a
//! directory of frozen expected renders, with line-context diffs on mismatch.

use super::PromptError;
use std::path::PathBuf;

/// Directory of expected renders, one file per key (`<key>.txt`).
#[derive(Debug, Clone)]
pub struct GoldenStore {
    dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct GoldenReport {
    pub key: String,
    pub passed: bool,
    /// Present on failure: first mismatching line with surrounding context.
    pub diff: Option<String>,
}

impl GoldenStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GoldenStore { dir: dir.into() }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn load(&self, key: &str) -> Result<String, PromptError> {
        let path = self.path_for(key);
        std::fs::read_to_string(&path).map_err(|_| PromptError::GoldenMissing {
            key: key.to_string(),
            dir: self.dir.display().to_string(),
        })
    }
}

/// Byte-compares `rendered_text` against the stored golden for `key`.
pub fn golden_check(
    store: &GoldenStore,
    key: &str,
    rendered_text: &str,
) -> Result<GoldenReport, PromptError> {
    let expected = store.load(key)?;
    if expected == rendered_text {
        return Ok(GoldenReport {
            key: key.to_string(),
            passed: true,
            diff: None,
        });
    }
    Ok(GoldenReport {
        key: key.to_string(),
        passed: false,
        diff: Some(first_diff(&expected, rendered_text)),
    })
}

/// Locates the first differing line and formats it with two lines of context
/// on each side. Falls back to a length note when one text is a prefix of the
/// other.
fn first_diff(expected: &str, actual: &str) -> String {
    let exp: Vec<&str> = expected.lines().collect();
    let act: Vec<&str> = actual.lines().collect();
    let mut line = 0;
    while line < exp.len() && line < act.len() && exp[line] == act[line] {
        line += 1;
    }
    let mut out = String::new();
    if line >= exp.len() && line >= act.len() {
        out.push_str("texts differ only in trailing bytes (line endings or final newline)\n");
        return out;
    }
    out.push_str(&format!("first difference at line {}\n", line + 1));
    let start = line.saturating_sub(2);
    for i in start..(line + 3) {
        match (exp.get(i), act.get(i)) {
            (Some(e), Some(a)) if e == a => out.push_str(&format!("  {e}\n")),
            (e, a) => {
                if let Some(e) = e {
                    out.push_str(&format!("- {e}\n"));
                }
                if let Some(a) = a {
                    out.push_str(&format!("+ {a}\n"));
                }
            }
        }
    }
    out
}

/// Writes (or overwrites) a golden entry. Used by the refresh path of the CLI
/// and by tests that seed a store.
pub fn write_golden(store: &GoldenStore, key: &str, text: &str) -> Result<(), PromptError> {
    let path = store.path_for(key);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| PromptError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(&path, text).map_err(|source| PromptError::Io {
        path: path.display().to_string(),
        source,
    })
}

//! Bit-exact rendering of the five staged audit prompts.
//!
//! Templates are plain UTF-8 files with bracketed uppercase placeholders
//! ([FIELD], [TITLE], [PAPER_TEXT], [NAME], [INSTITUTION], [FIELD_ABSTRACTS])
//! plus the literal blinding marker line `[Blinded]: FALSE`. Rendering is a
//! single pass: substituted values are never re-scanned for placeholders, so
//! manuscript text cannot inject further substitutions.

mod context;
mod golden;

pub use context::{assemble_context, ContextCorpus, ContextEntry};
pub use golden::{golden_check, write_golden, GoldenReport, GoldenStore};

use crate::design::{Manuscript, Stage};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Marker line present verbatim in every stored template.
pub const BLINDED_MARKER_FALSE: &str = "[Blinded]: FALSE";
/// What the marker becomes on a blinded render.
pub const BLINDED_MARKER_TRUE: &str = "[Blinded]: TRUE";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template for stage {stage} contains unknown placeholder [{token}]")]
    UnknownPlaceholder { stage: Stage, token: String },
    #[error("template for stage {stage} is missing required placeholder [{token}]")]
    MissingPlaceholder { stage: Stage, token: &'static str },
    #[error("template for stage {stage} is missing the blinding marker line {BLINDED_MARKER_FALSE:?}")]
    MissingBlindedMarker { stage: Stage },
    #[error("editor-stage template for {stage} must not contain [FIELD_ABSTRACTS]")]
    ContextInEditorTemplate { stage: Stage },
    #[error("template for stage {stage} must carry [NAME] and [INSTITUTION] on exactly one line, found {found}")]
    AuthorLineShape { stage: Stage, found: usize },
    #[error("context block supplied for editor stage {0}")]
    ContextForEditorStage(Stage),
    #[error("reviewer stage {0} requires a context block")]
    MissingContext(Stage),
    #[error("no context abstracts for field {field:?} at or before {cutoff}")]
    EmptyContext { field: String, cutoff: chrono::NaiveDate },
    #[error("context corpus row {row}: {message}")]
    CorpusRow { row: usize, message: String },
    #[error("context corpus holds {count} abstracts for field {field:?}, over the per-field cap {cap}")]
    CorpusOverCap {
        field: String,
        count: usize,
        cap: usize,
    },
    #[error("corpus csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("golden entry {key:?} not found in {dir}")]
    GoldenMissing { key: String, dir: String },
}

const PLACEHOLDERS: [&str; 6] = [
    "FIELD",
    "TITLE",
    "PAPER_TEXT",
    "NAME",
    "INSTITUTION",
    "FIELD_ABSTRACTS",
];

/// One stage's prompt template, validated on construction.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub stage: Stage,
    text: String,
}

impl PromptTemplate {
    pub fn new(stage: Stage, text: impl Into<String>) -> Result<Self, PromptError> {
        let t = PromptTemplate {
            stage,
            text: text.into(),
        };
        t.validate()?;
        Ok(t)
    }

    /// The template shipped with the library for this stage.
    pub fn builtin(stage: Stage) -> Self {
        let text = match stage {
            Stage::EditorQuality => include_str!("templates/editor_quality.txt"),
            Stage::EditorDeskReject => include_str!("templates/editor_desk_reject.txt"),
            Stage::ReviewerQuality => include_str!("templates/reviewer_quality.txt"),
            Stage::ReviewerComments => include_str!("templates/reviewer_comments.txt"),
            Stage::ReviewerReject => include_str!("templates/reviewer_reject.txt"),
        };
        PromptTemplate::new(stage, text).expect("builtin templates must validate")
    }

    pub fn from_file(stage: Stage, path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PromptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PromptTemplate::new(stage, text)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn validate(&self) -> Result<(), PromptError> {
        for token in extract_tokens(&self.text) {
            if !PLACEHOLDERS.contains(&token.as_str()) {
                return Err(PromptError::UnknownPlaceholder {
                    stage: self.stage,
                    token,
                });
            }
        }
        for required in ["FIELD", "TITLE", "PAPER_TEXT"] {
            if !self.text.contains(&format!("[{required}]")) {
                return Err(PromptError::MissingPlaceholder {
                    stage: self.stage,
                    token: match required {
                        "FIELD" => "FIELD",
                        "TITLE" => "TITLE",
                        _ => "PAPER_TEXT",
                    },
                });
            }
        }
        if !self.text.contains(BLINDED_MARKER_FALSE) {
            return Err(PromptError::MissingBlindedMarker { stage: self.stage });
        }
        let has_context = self.text.contains("[FIELD_ABSTRACTS]");
        if self.stage.is_reviewer() && !has_context {
            return Err(PromptError::MissingPlaceholder {
                stage: self.stage,
                token: "FIELD_ABSTRACTS",
            });
        }
        if !self.stage.is_reviewer() && has_context {
            return Err(PromptError::ContextInEditorTemplate { stage: self.stage });
        }
        let author_lines = self
            .text
            .lines()
            .filter(|l| l.contains("[NAME]") && l.contains("[INSTITUTION]"))
            .count();
        let name_lines = self
            .text
            .lines()
            .filter(|l| l.contains("[NAME]") || l.contains("[INSTITUTION]"))
            .count();
        if author_lines != 1 || name_lines != 1 {
            return Err(PromptError::AuthorLineShape {
                stage: self.stage,
                found: name_lines,
            });
        }
        Ok(())
    }
}

/// Bracketed all-uppercase tokens (underscores allowed). The `[Blinded]`
/// marker has lowercase letters and is deliberately not a placeholder.
fn extract_tokens(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            if let Some(close) = text[i + 1..].find(']') {
                let inner = &text[i + 1..i + 1 + close];
                if !inner.is_empty()
                    && inner
                        .chars()
                        .all(|c| c.is_ascii_uppercase() || c == '_')
                {
                    tokens.push(inner.to_string());
                }
                i += close + 2;
                continue;
            }
        }
        i += 1;
    }
    tokens
}

/// All five templates for a run, loaded together so a missing stage fails at startup.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: [PromptTemplate; 5],
}

impl TemplateSet {
    pub fn builtin() -> Self {
        TemplateSet {
            templates: Stage::ALL.map(PromptTemplate::builtin),
        }
    }

    /// Loads `<stage_label>.txt` for every stage from one directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let mut loaded = Vec::with_capacity(5);
        for stage in Stage::ALL {
            loaded.push(PromptTemplate::from_file(
                stage,
                dir.join(format!("{}.txt", stage.label())),
            )?);
        }
        Ok(TemplateSet {
            templates: loaded.try_into().expect("five stages"),
        })
    }

    pub fn get(&self, stage: Stage) -> &PromptTemplate {
        &self.templates[Stage::ALL.iter().position(|s| *s == stage).unwrap()]
    }
}

/// A rendered prompt plus its content digest, used for golden checks and the
/// run ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub trial_key: String,
    pub text: String,
    /// Lowercase hex SHA-256 of `text`.
    pub content_hash: String,
}

/// Identity to substitute into the author line; `None` renders blinded.
#[derive(Debug, Clone, Copy)]
pub struct AuthorIdentity<'a> {
    pub name: &'a str,
    pub institution: &'a str,
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

/// Renders one trial's prompt. Substitution happens line by line in a single
/// pass over the template, so placeholder-shaped strings inside manuscript
/// text or abstracts are emitted untouched.
pub fn render(
    template: &PromptTemplate,
    trial_key: &str,
    manuscript: &Manuscript,
    field: &str,
    identity: Option<AuthorIdentity<'_>>,
    context_block: Option<&str>,
) -> Result<RenderedPrompt, PromptError> {
    if template.stage.is_reviewer() {
        if context_block.is_none() {
            return Err(PromptError::MissingContext(template.stage));
        }
    } else if context_block.is_some() {
        return Err(PromptError::ContextForEditorStage(template.stage));
    }

    let blinded = identity.is_none();
    let mut out = String::with_capacity(template.text.len() + manuscript.body.len());
    let mut first = true;
    for line in template.text.split('\n') {
        let is_author_line = line.contains("[NAME]") && line.contains("[INSTITUTION]");
        if is_author_line && blinded {
            continue;
        }
        if !first {
            out.push('\n');
        }
        first = false;
        substitute_line(
            line,
            manuscript,
            field,
            identity,
            context_block,
            blinded,
            &mut out,
        );
    }

    let content_hash = sha256_hex(&out);
    Ok(RenderedPrompt {
        trial_key: trial_key.to_string(),
        text: out,
        content_hash,
    })
}

fn substitute_line(
    line: &str,
    manuscript: &Manuscript,
    field: &str,
    identity: Option<AuthorIdentity<'_>>,
    context_block: Option<&str>,
    blinded: bool,
    out: &mut String,
) {
    // longest-token-first is irrelevant here because no placeholder is a
    // prefix of another; earliest match position decides
    let mut rest = line;
    loop {
        let mut next: Option<(usize, &str, &str)> = None;
        for token in PLACEHOLDERS {
            let pat_start = rest.find(&format!("[{token}]"));
            if let Some(pos) = pat_start {
                if next.map_or(true, |(best, _, _)| pos < best) {
                    let value: &str = match token {
                        "FIELD" => field,
                        "TITLE" => &manuscript.title,
                        "PAPER_TEXT" => &manuscript.body,
                        "NAME" => identity.map(|i| i.name).unwrap_or(""),
                        "INSTITUTION" => identity.map(|i| i.institution).unwrap_or(""),
                        "FIELD_ABSTRACTS" => context_block.unwrap_or(""),
                        _ => unreachable!(),
                    };
                    next = Some((pos, token, value));
                }
            }
        }
        if let Some(pos) = rest.find(BLINDED_MARKER_FALSE) {
            if next.map_or(true, |(best, _, _)| pos < best) {
                out.push_str(&rest[..pos]);
                out.push_str(if blinded {
                    BLINDED_MARKER_TRUE
                } else {
                    BLINDED_MARKER_FALSE
                });
                rest = &rest[pos + BLINDED_MARKER_FALSE.len()..];
                continue;
            }
        }
        match next {
            Some((pos, token, value)) => {
                out.push_str(&rest[..pos]);
                out.push_str(value);
                rest = &rest[pos + token.len() + 2..];
            }
            None => {
                out.push_str(rest);
                return;
            }
        }
    }
}

/// True when the rendered text contains none of the roster's name or
/// institution strings. Blinded prompts must satisfy this.
pub fn is_clean_of_identities(text: &str, roster: &crate::design::Roster) -> bool {
    roster
        .names
        .iter()
        .all(|n| !text.contains(n.display_name.as_str()))
        && roster
            .institutions
            .iter()
            .all(|i| !text.contains(i.name.as_str()))
}

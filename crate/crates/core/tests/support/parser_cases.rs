//! Canonical parser fixture table, shared between the parser test target and
//! the acceptance gate. Every case states the full expected classification.

use revaudit::design::Stage;

pub enum Expected {
    Score(u32),
    Decision(u8),
    /// Valid review with this unique-issue count.
    Review(u32),
    /// Malformed; the reason must contain this substring ("" accepts any).
    Malformed(&'static str),
}

pub struct ParserCase {
    pub label: &'static str,
    pub stage: Stage,
    pub input: &'static str,
    pub expected: Expected,
}

pub fn parser_cases() -> Vec<ParserCase> {
    use Expected::*;
    use Stage::{EditorDeskReject, EditorQuality, ReviewerComments, ReviewerReject};
    vec![
        // quality-score responses
        ParserCase { label: "bare score", stage: EditorQuality, input: "83", expected: Score(83) },
        ParserCase { label: "score with surrounding whitespace", stage: EditorQuality, input: " 83 ", expected: Score(83) },
        ParserCase { label: "score at lower bound", stage: EditorQuality, input: "1", expected: Score(1) },
        ParserCase { label: "score at upper bound", stage: EditorQuality, input: "100", expected: Score(100) },
        ParserCase { label: "score with trailing newline", stage: EditorQuality, input: "42\n", expected: Score(42) },
        ParserCase { label: "score with leading zeros", stage: EditorQuality, input: "007", expected: Score(7) },
        ParserCase { label: "score with label prefix", stage: EditorQuality, input: "Score: 83", expected: Malformed("extra text") },
        ParserCase { label: "score zero", stage: EditorQuality, input: "0", expected: Malformed("out of range") },
        ParserCase { label: "score above range", stage: EditorQuality, input: "101", expected: Malformed("out of range") },
        ParserCase { label: "score with decimal point", stage: EditorQuality, input: "83.0", expected: Malformed("extra text") },
        ParserCase { label: "score spelled out", stage: EditorQuality, input: "eighty", expected: Malformed("extra text") },
        ParserCase { label: "score empty", stage: EditorQuality, input: "", expected: Malformed("empty") },
        ParserCase { label: "score with inner space", stage: EditorQuality, input: "8 3", expected: Malformed("extra text") },
        ParserCase { label: "score negative", stage: EditorQuality, input: "-5", expected: Malformed("extra text") },
        ParserCase { label: "score overflowing u32", stage: EditorQuality, input: "99999999999999999999", expected: Malformed("out of range") },
        // desk/review decisions
        ParserCase { label: "decision reject", stage: EditorDeskReject, input: "1", expected: Decision(1) },
        ParserCase { label: "decision keep", stage: EditorDeskReject, input: "0", expected: Decision(0) },
        ParserCase { label: "decision padded", stage: ReviewerReject, input: " 1 ", expected: Decision(1) },
        ParserCase { label: "decision trailing newline", stage: ReviewerReject, input: "0\n", expected: Decision(0) },
        ParserCase { label: "decision in words", stage: EditorDeskReject, input: "reject", expected: Malformed("expected exactly 0 or 1") },
        ParserCase { label: "decision zero-padded", stage: EditorDeskReject, input: "01", expected: Malformed("expected exactly 0 or 1") },
        ParserCase { label: "decision yes", stage: ReviewerReject, input: "yes", expected: Malformed("expected exactly 0 or 1") },
        ParserCase { label: "decision empty", stage: ReviewerReject, input: "", expected: Malformed("empty") },
        ParserCase { label: "decision as float", stage: EditorDeskReject, input: "1.0", expected: Malformed("expected exactly 0 or 1") },
        // reviewer comments
        ParserCase {
            label: "review single paragraph",
            stage: ReviewerComments,
            input: "Solid identification and clean writing.\nUNIQUE_ISSUES: 3",
            expected: Review(3),
        },
        ParserCase {
            label: "review two paragraphs",
            stage: ReviewerComments,
            input: "The theory section is careful.\n\nThe empirical section is weaker; the instrument needs defending.\nUNIQUE_ISSUES: 9",
            expected: Review(9),
        },
        ParserCase { label: "review zero issues", stage: ReviewerComments, input: "UNIQUE_ISSUES: 0", expected: Review(0) },
        ParserCase {
            label: "review marker then blank lines",
            stage: ReviewerComments,
            input: "body\nUNIQUE_ISSUES: 12\n\n  \n",
            expected: Review(12),
        },
        ParserCase { label: "review without marker", stage: ReviewerComments, input: "no marker in this text at all", expected: Malformed("missing UNIQUE_ISSUES marker") },
        ParserCase { label: "review negative count", stage: ReviewerComments, input: "body\nUNIQUE_ISSUES: -2", expected: Malformed("negative") },
        ParserCase { label: "review spelled-out count", stage: ReviewerComments, input: "body\nUNIQUE_ISSUES: nine", expected: Malformed("malformed issue count") },
        ParserCase { label: "review marker without count", stage: ReviewerComments, input: "body\nUNIQUE_ISSUES:", expected: Malformed("no count") },
        ParserCase { label: "review marker missing underscore", stage: ReviewerComments, input: "body\nUNIQUE ISSUES: 4", expected: Malformed("missing UNIQUE_ISSUES marker") },
        ParserCase { label: "review count with trailing words", stage: ReviewerComments, input: "body\nUNIQUE_ISSUES: 4 problems", expected: Malformed("malformed issue count") },
        ParserCase { label: "review empty", stage: ReviewerComments, input: "", expected: Malformed("empty") },
    ]
}

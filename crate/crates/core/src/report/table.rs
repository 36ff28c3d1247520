//! Regression-table rendering: a plain-text grid for eyes, a delimited long
//! file for machines, both byte-deterministic.
//!
//! Layout is data: a table is a list of columns (heading lines, optional
//! spanning group, a fitted model) crossed with row groups (a heading, an
//! optional reference line, term rows). Every layout term must resolve in
//! every column's fit; a gap is a layout error, not a blank cell.

use std::fmt::Write as _;

use crate::cvprobe::CvRegressionSet;
use crate::design::Stage;
use crate::econometrics::{FitResult, SummaryRow, WelchTest};
use crate::terms::{self, display_label};

use super::{sha256_hex, ReportError};

#[derive(Debug)]
pub struct TableColumn {
    /// Spanning group label rendered above the heading, e.g. "Editor".
    pub group: Option<String>,
    /// Stacked heading lines, e.g. ["Quality Score", "(1-100, ln)"].
    pub heading: Vec<String>,
    pub fit: FitResult,
}

#[derive(Debug, Clone)]
pub struct RowGroup {
    pub heading: String,
    /// Reference-level line, e.g. "High Prestige (R)".
    pub reference: Option<String>,
    /// Term keys; display labels come from the shared term vocabulary.
    pub terms: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TableLayout {
    pub title: String,
    pub row_groups: Vec<RowGroup>,
    /// Digits after the decimal point for estimates and standard errors.
    pub decimals: usize,
    /// Label for the absorbed fixed-effect footer row; None drops the row.
    pub fe_row: Option<String>,
}

/// Where the numbers came from: the input ledger's hash goes in the footer
/// next to the per-column fit ids.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub ledger_sha256: String,
}

#[derive(Debug)]
pub struct RegressionTable {
    pub text: String,
    /// CSV, one row per (column, term), full float precision.
    pub delimited: String,
}

/// Twelve hex characters identifying a fit by its family, terms,
/// coefficients, and row count. Stable across runs of the same estimate.
pub fn fit_id(fit: &FitResult) -> String {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(format!("{:?}", fit.family).as_bytes());
    for term in &fit.terms {
        bytes.push(0x1f);
        bytes.extend_from_slice(term.as_bytes());
    }
    for c in fit.coefficients.iter() {
        bytes.extend_from_slice(&c.to_bits().to_le_bytes());
    }
    bytes.extend_from_slice(&(fit.n_obs as u64).to_le_bytes());
    sha256_hex(&bytes)[..12].to_string()
}

/// Row layout matching the audit table: blinding, then the identity blocks.
pub fn audit_layout() -> TableLayout {
    TableLayout {
        title: "Audit outcomes by stage".into(),
        row_groups: vec![
            RowGroup {
                heading: "Submission".into(),
                reference: Some("Blind (R)".into()),
                terms: vec![terms::NON_BLINDED.into()],
            },
            RowGroup {
                heading: "Institution".into(),
                reference: Some("High Prestige (R)".into()),
                terms: vec![terms::LOW_PRESTIGE.into()],
            },
            RowGroup {
                heading: "Gender".into(),
                reference: Some("Male (R)".into()),
                terms: vec![terms::FEMALE.into()],
            },
            RowGroup {
                heading: "Race".into(),
                reference: Some("White (R)".into()),
                terms: vec![
                    terms::BLACK.into(),
                    terms::HISPANIC.into(),
                    terms::ASIAN.into(),
                ],
            },
        ],
        decimals: 3,
        fe_row: Some("Field FE".into()),
    }
}

/// Row layout for the CV battery: the audit layout minus the blinding block,
/// since every generated CV carries an identity.
pub fn cv_layout() -> TableLayout {
    let mut layout = audit_layout();
    layout.title = "Generated CV attributes".into();
    layout.row_groups.remove(0);
    layout
}

/// Columns for the five audit stages, in canonical stage order with the
/// editor/reviewer grouping. Callers pass whichever stages they fitted.
pub fn audit_columns(fits: Vec<(Stage, FitResult)>) -> Vec<TableColumn> {
    fits.into_iter()
        .map(|(stage, fit)| {
            let (group, lines): (&str, [&str; 2]) = match stage {
                Stage::EditorQuality => ("Editor", ["Quality Score", "(1-100, ln)"]),
                Stage::EditorDeskReject => ("Editor", ["Desk Reject", "(1=yes, 0=no)"]),
                Stage::ReviewerQuality => ("Reviewer", ["Quality Score", "(1-100, ln)"]),
                Stage::ReviewerComments => ("Reviewer", ["Comments", "(#, ln1p)"]),
                Stage::ReviewerReject => ("Reviewer", ["Recommend Reject", "(1=yes, 0=no)"]),
            };
            TableColumn {
                group: Some(group.to_string()),
                heading: lines.iter().map(|s| s.to_string()).collect(),
                fit,
            }
        })
        .collect()
}

/// Columns for the eight-outcome CV battery, grouped Career Attributes /
/// Research Impact in stored column order.
pub fn cv_columns(set: CvRegressionSet) -> Vec<TableColumn> {
    set.columns
        .into_iter()
        .map(|col| {
            // outcome strings end in a parenthesized unit, split for stacking
            let heading = match col.outcome.rsplit_once(" (") {
                Some((name, unit)) => vec![name.to_string(), format!("({unit}")],
                None => vec![col.outcome.clone()],
            };
            TableColumn {
                group: Some(col.group.label().to_string()),
                heading,
                fit: col.fit,
            }
        })
        .collect()
}

fn starred(estimate: f64, se: f64) -> bool {
    estimate.abs() > 1.96 * se
}

/// Fixed-decimal format with negative zero normalized away.
fn fmt_fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn fmt_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

struct Grid {
    label_width: usize,
    widths: Vec<usize>,
}

impl Grid {
    fn line(&self, label: &str, cells: &[String]) -> String {
        let mut out = format!("{:<w$}", label, w = self.label_width);
        for (cell, width) in cells.iter().zip(&self.widths) {
            out.push_str("  ");
            let _ = write!(out, "{:>w$}", cell, w = width);
        }
        out.trim_end().to_string()
    }

    fn rule(&self) -> String {
        let total = self.label_width + self.widths.iter().map(|w| w + 2).sum::<usize>();
        "-".repeat(total)
    }
}

/// Renders the fits against the layout. Both renditions carry every
/// estimate, star, and observation count; the text adds reference rows and
/// the provenance footer.
pub fn emit_regression_table(
    columns: &[TableColumn],
    layout: &TableLayout,
    provenance: &Provenance,
) -> Result<RegressionTable, ReportError> {
    if columns.is_empty() {
        return Err(ReportError::NoColumns);
    }
    let layout_terms: Vec<&String> = layout
        .row_groups
        .iter()
        .flat_map(|g| g.terms.iter())
        .collect();
    for (ci, col) in columns.iter().enumerate() {
        for term in &layout_terms {
            if col.fit.coefficient(term).is_none() {
                return Err(ReportError::Layout {
                    column: ci + 1,
                    term: (*term).clone(),
                });
            }
        }
    }

    // body cells first; column widths depend on them
    let cell = |col: &TableColumn, term: &str| -> String {
        let est = col.fit.coefficient(term).expect("checked above");
        let se = col.fit.std_error(term).expect("checked above");
        let star = if starred(est, se) { "*" } else { "" };
        format!(
            "{}{star} ({})",
            fmt_fixed(est, layout.decimals),
            fmt_fixed(se, layout.decimals)
        )
    };

    let heading_depth = columns.iter().map(|c| c.heading.len()).max().unwrap_or(0);
    let any_adj = columns.iter().any(|c| c.fit.adj_r2.is_some());
    let any_pseudo = columns.iter().any(|c| c.fit.pseudo_r2.is_some());

    let mut widths = Vec::with_capacity(columns.len());
    for (ci, col) in columns.iter().enumerate() {
        let mut w = col.heading.iter().map(String::len).max().unwrap_or(0);
        w = w.max(format!("({})", ci + 1).len());
        for term in &layout_terms {
            w = w.max(cell(col, term).len());
        }
        w = w.max(fmt_thousands(col.fit.n_obs).len());
        if let Some(v) = col.fit.adj_r2 {
            w = w.max(fmt_fixed(v, layout.decimals).len());
        }
        if let Some(v) = col.fit.pseudo_r2 {
            w = w.max(fmt_fixed(v, layout.decimals).len());
        }
        if layout.fe_row.is_some() {
            w = w.max(3);
        }
        widths.push(w);
    }
    let label_width = layout
        .row_groups
        .iter()
        .flat_map(|g| {
            g.terms
                .iter()
                .map(|t| display_label(t).len())
                .chain(g.reference.iter().map(String::len))
                .chain(std::iter::once(g.heading.len()))
        })
        .chain(layout.fe_row.iter().map(String::len))
        .chain(["Observations".len(), "Adjusted R^2".len()])
        .max()
        .unwrap_or(0);
    let grid = Grid { label_width, widths };

    let mut text = String::new();
    text.push_str(&layout.title);
    text.push('\n');
    text.push('\n');

    // spanning group labels, centered over each contiguous run
    if columns.iter().any(|c| c.group.is_some()) {
        let mut line = " ".repeat(grid.label_width);
        let mut i = 0;
        while i < columns.len() {
            let group = columns[i].group.as_deref().unwrap_or("");
            let mut j = i;
            while j < columns.len() && columns[j].group.as_deref().unwrap_or("") == group {
                j += 1;
            }
            let span: usize =
                grid.widths[i..j].iter().map(|w| w + 2).sum::<usize>() - 2;
            line.push_str("  ");
            let pad = span.saturating_sub(group.len());
            let left = pad / 2;
            line.push_str(&" ".repeat(left));
            line.push_str(group);
            line.push_str(&" ".repeat(pad - left));
            i = j;
        }
        text.push_str(line.trim_end());
        text.push('\n');
    }

    for depth in 0..heading_depth {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| c.heading.get(depth).cloned().unwrap_or_default())
            .collect();
        text.push_str(&grid.line("", &cells));
        text.push('\n');
    }
    let numbers: Vec<String> = (1..=columns.len()).map(|i| format!("({i})")).collect();
    text.push_str(&grid.line("", &numbers));
    text.push('\n');
    text.push_str(&grid.rule());
    text.push('\n');

    for group in &layout.row_groups {
        text.push_str(&group.heading);
        text.push('\n');
        if let Some(reference) = &group.reference {
            text.push_str(reference);
            text.push('\n');
        }
        for term in &group.terms {
            let cells: Vec<String> = columns.iter().map(|c| cell(c, term)).collect();
            text.push_str(&grid.line(display_label(term), &cells));
            text.push('\n');
        }
    }

    text.push_str(&grid.rule());
    text.push('\n');
    if let Some(fe_label) = &layout.fe_row {
        let cells: Vec<String> = columns.iter().map(|_| "Yes".to_string()).collect();
        text.push_str(&grid.line(fe_label, &cells));
        text.push('\n');
    }
    let obs: Vec<String> = columns
        .iter()
        .map(|c| fmt_thousands(c.fit.n_obs))
        .collect();
    text.push_str(&grid.line("Observations", &obs));
    text.push('\n');
    if any_adj {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| {
                c.fit
                    .adj_r2
                    .map(|v| fmt_fixed(v, layout.decimals))
                    .unwrap_or_default()
            })
            .collect();
        text.push_str(&grid.line("Adjusted R^2", &cells));
        text.push('\n');
    }
    if any_pseudo {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| {
                c.fit
                    .pseudo_r2
                    .map(|v| fmt_fixed(v, layout.decimals))
                    .unwrap_or_default()
            })
            .collect();
        text.push_str(&grid.line("Pseudo R^2", &cells));
        text.push('\n');
    }
    text.push_str(&grid.rule());
    text.push('\n');
    text.push_str(
        "* 95% interval excludes zero; standard errors in parentheses; (R) marks the reference level\n",
    );
    text.push_str(&format!("ledger sha256: {}\n", provenance.ledger_sha256));
    for (ci, col) in columns.iter().enumerate() {
        text.push_str(&format!("fit {}: {}\n", ci + 1, fit_id(&col.fit)));
    }

    let delimited = delimited_rows(columns, &layout_terms)?;
    Ok(RegressionTable { text, delimited })
}

fn delimited_rows(
    columns: &[TableColumn],
    layout_terms: &[&String],
) -> Result<String, ReportError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "column", "outcome", "group", "term", "estimate", "se", "significant", "n_obs",
        "adj_r2", "pseudo_r2", "fit_id",
    ])
    .map_err(|e| ReportError::Delimited(e.to_string()))?;
    for (ci, col) in columns.iter().enumerate() {
        let outcome = col.heading.join(" ");
        let id = fit_id(&col.fit);
        for term in layout_terms {
            let est = col.fit.coefficient(term).expect("validated");
            let se = col.fit.std_error(term).expect("validated");
            wtr.write_record([
                (ci + 1).to_string(),
                outcome.clone(),
                col.group.clone().unwrap_or_default(),
                (*term).clone(),
                format!("{est}"),
                format!("{se}"),
                starred(est, se).to_string(),
                col.fit.n_obs.to_string(),
                col.fit.adj_r2.map(|v| format!("{v}")).unwrap_or_default(),
                col.fit
                    .pseudo_r2
                    .map(|v| format!("{v}"))
                    .unwrap_or_default(),
                id.clone(),
            ])
            .map_err(|e| ReportError::Delimited(e.to_string()))?;
        }
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| ReportError::Delimited(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Delimited(e.to_string()))
}

/// Summary-statistics table: one row per column of the inspected data.
pub fn emit_summary_table(rows: &[SummaryRow]) -> String {
    let label_width = rows
        .iter()
        .map(|r| r.name.len())
        .chain(std::iter::once("column".len()))
        .max()
        .unwrap_or(6);
    let mut text = format!(
        "{:<label_width$}  {:>8}  {:>12}  {:>12}  {:>12}  {:>12}\n",
        "column", "n", "mean", "sd", "min", "max"
    );
    for row in rows {
        let _ = writeln!(
            text,
            "{:<label_width$}  {:>8}  {:>12.4}  {:>12.4}  {:>12.4}  {:>12.4}",
            row.name, row.n, row.mean, row.sd, row.min, row.max
        );
    }
    text
}

/// Welch t-test table; `diff` keeps the estimator's mean(b) - mean(a) sign.
pub fn emit_ttest_table(tests: &[(String, WelchTest)]) -> String {
    let label_width = tests
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("comparison".len()))
        .max()
        .unwrap_or(10);
    let mut text = format!(
        "{:<label_width$}  {:>10}  {:>10}  {:>10}  {:>9}  {:>9}  {:>8}\n",
        "comparison", "mean(1)", "mean(2)", "diff", "t", "df", "p"
    );
    for (name, t) in tests {
        let _ = writeln!(
            text,
            "{:<label_width$}  {:>10.3}  {:>10.3}  {:>10.3}  {:>9.3}  {:>9.1}  {:>8.4}",
            name, t.mean_a, t.mean_b, t.diff, t.t, t.df, t.p
        );
    }
    text
}

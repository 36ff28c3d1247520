//! Reporting layer: turns run ledgers into analysis frames, fitted effects
//! into human-readable statements, and fit sets into plain-text tables plus
//! machine-readable delimited files.
//!
//! Everything here is deterministic. No emitter writes a timestamp, a
//! pointer, or an unordered map traversal into its output, so identical
//! inputs produce identical bytes.

mod effect;
mod frames;
mod plot;
mod table;

pub use effect::{decision_effect, log_outcome_effect, relative_effect, EffectSummary};
pub use frames::{audit_frames, AuditFrames, StageFrame, BLINDED_CLUSTER};
pub use plot::{emit_ci_plot_data, plot_rows, PlotSeries};
pub use table::{
    audit_columns, audit_layout, cv_columns, cv_layout, emit_regression_table,
    emit_summary_table, emit_ttest_table, fit_id, Provenance, RegressionTable, RowGroup,
    TableColumn, TableLayout,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("baseline rate must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("fit does not contain term {0:?}")]
    UnknownTerm(String),
    #[error("table needs at least one column")]
    NoColumns,
    #[error("column {column} is missing term {term:?}; table columns must share the layout's regressors")]
    Layout { column: usize, term: String },
    #[error("plot row {index} violates lower <= estimate <= higher")]
    PlotBounds { index: usize },
    #[error("delimited output failed: {0}")]
    Delimited(String),
}

/// Hex SHA-256 of arbitrary bytes; provenance footers hash the ledger file
/// through this so every report names the data it came from.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

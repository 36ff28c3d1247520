//! Coefficient-plot data: long-format CSV with one row per
//! (panel, attribute, stratum). Floats are written at full round-trip
//! precision; the plotting side recomputes nothing.

use crate::econometrics::StratumFit;
use crate::terms::display_label;

use super::ReportError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    /// Outcome label, one panel per outcome.
    pub panel: String,
    pub attribute: String,
    pub stratum: String,
    pub estimate: f64,
    pub lower: f64,
    pub higher: f64,
}

/// Flattens stratified fits into plot rows for the requested terms. Skipped
/// strata contribute nothing here; the caller reports them separately. A
/// term absent from a fitted stratum is an error, not a silent gap.
pub fn plot_rows(
    panel: &str,
    fits: &[StratumFit],
    terms: &[&str],
) -> Result<Vec<PlotSeries>, ReportError> {
    let mut rows = Vec::new();
    for fit in fits {
        let StratumFit::Fitted { stratum, cis, .. } = fit else {
            continue;
        };
        for term in terms {
            let ci = cis
                .iter()
                .find(|c| c.term == *term)
                .ok_or_else(|| ReportError::UnknownTerm((*term).to_string()))?;
            rows.push(PlotSeries {
                panel: panel.to_string(),
                attribute: display_label(term).to_string(),
                stratum: stratum.clone(),
                estimate: ci.estimate,
                lower: ci.lower,
                higher: ci.higher,
            });
        }
    }
    Ok(rows)
}

/// CSV with header `panel,attribute,stratum,estimate,lower,higher`. Rows
/// must satisfy lower <= estimate <= higher; a violation is rejected rather
/// than plotted as an inverted interval.
pub fn emit_ci_plot_data(rows: &[PlotSeries]) -> Result<String, ReportError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["panel", "attribute", "stratum", "estimate", "lower", "higher"])
        .map_err(|e| ReportError::Delimited(e.to_string()))?;
    for (index, row) in rows.iter().enumerate() {
        if !(row.lower <= row.estimate && row.estimate <= row.higher) {
            return Err(ReportError::PlotBounds { index });
        }
        wtr.write_record([
            row.panel.clone(),
            row.attribute.clone(),
            row.stratum.clone(),
            format!("{}", row.estimate),
            format!("{}", row.lower),
            format!("{}", row.higher),
        ])
        .map_err(|e| ReportError::Delimited(e.to_string()))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| ReportError::Delimited(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Delimited(e.to_string()))
}

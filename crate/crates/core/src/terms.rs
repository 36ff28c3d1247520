//! Regressor names shared by the audit and CV analysis frames. Tables and
//! plot files key on these strings, so both pipelines must agree on them.

pub const NON_BLINDED: &str = "non_blinded";
pub const LOW_PRESTIGE: &str = "low_prestige";
pub const FEMALE: &str = "female";
pub const BLACK: &str = "black";
pub const HISPANIC: &str = "hispanic";
pub const ASIAN: &str = "asian";

/// Identity attributes in the order tables print them. The blinded-exposure
/// term is audit-only and listed separately.
pub const IDENTITY_TERMS: [&str; 5] = [LOW_PRESTIGE, FEMALE, BLACK, HISPANIC, ASIAN];

/// Human-readable label for a term, for table row headers.
pub fn display_label(term: &str) -> &str {
    match term {
        t if t == NON_BLINDED => "Non-Blinded",
        t if t == LOW_PRESTIGE => "Low Prestige",
        t if t == FEMALE => "Female",
        t if t == BLACK => "Black",
        t if t == HISPANIC => "Hispanic",
        t if t == ASIAN => "Asian",
        other => other,
    }
}

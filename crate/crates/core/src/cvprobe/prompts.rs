//! Prompt builders for the three CV-generation steps. Each prompt carries its
//! instructions followed by a single-line JSON payload after `CV_INPUT_MARKER`,
//! so a deterministic provider can recover the inputs without shared state.

use super::{CvCell, ImpactFields, PersonalFields, PhdPrestige};
use crate::design::Prestige;
use serde::{Deserialize, Serialize};

/// Line that separates instructions from the JSON payload. Everything after
/// the first occurrence is the payload.
pub const CV_INPUT_MARKER: &str = "INPUT:";

/// Step-1 request payload. Field names are the wire contract; a provider sees
/// exactly these keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct PersonalPayload {
    pub index: u64,
    pub replicate: u32,
    #[serde(rename = "NameUsed")]
    pub name_used: String,
    #[serde(rename = "Institution")]
    pub institution: String,
    #[serde(rename = "InstitutionPrestige")]
    pub institution_prestige: String,
    pub carnegie_ranking: String,
    #[serde(rename = "Pub.Outlet")]
    pub pub_outlet: String,
    #[serde(rename = "Gender")]
    pub gender: String,
    #[serde(rename = "Race")]
    pub race: String,
}

/// Step-2 request payload: step-1 inputs plus the generated personal record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ImpactPayload {
    #[serde(flatten)]
    pub base: PersonalPayload,
    pub phd_granting_institution: String,
    pub phd_institution_carnegie_ranking: String,
    pub phd_graduation_year: i32,
    pub faculty_rank: String,
    pub tenure_status: String,
    pub num_publications: u32,
}

/// Step-3 request payload: the full profile plus the batch size to emit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct PublicationsPayload {
    pub profile_pub_index: u64,
    #[serde(flatten)]
    pub profile: ImpactPayload,
    pub total_citations: u64,
    pub h_index: u32,
    pub i10_index: u32,
    pub average_first_year_citations: f64,
    pub average_impact_factor: f64,
    pub batch_num_publications: u32,
}

fn carnegie_label(prestige: Prestige) -> &'static str {
    match prestige {
        Prestige::High => "R1",
        Prestige::Low => "Other",
    }
}

fn phd_carnegie_label(prestige: PhdPrestige) -> &'static str {
    match prestige {
        PhdPrestige::High => "R1",
        PhdPrestige::Low => "Other",
        PhdPrestige::Unknown => "Unknown",
    }
}

fn title_case(label: &str) -> String {
    let mut chars = label.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub(crate) fn personal_payload(cell: &CvCell, index: u64, replicate: u32) -> PersonalPayload {
    PersonalPayload {
        index,
        replicate,
        name_used: cell.name.clone(),
        institution: cell.institution.clone(),
        institution_prestige: title_case(cell.institution_prestige.label()),
        carnegie_ranking: carnegie_label(cell.institution_prestige).to_string(),
        pub_outlet: cell.field.clone(),
        gender: title_case(cell.gender.label()),
        race: title_case(cell.race.label()),
    }
}

pub(crate) fn impact_payload(
    cell: &CvCell,
    index: u64,
    replicate: u32,
    personal: &PersonalFields,
    phd_prestige: PhdPrestige,
) -> ImpactPayload {
    ImpactPayload {
        base: personal_payload(cell, index, replicate),
        phd_granting_institution: personal.phd_granting_institution.clone(),
        phd_institution_carnegie_ranking: phd_carnegie_label(phd_prestige).to_string(),
        phd_graduation_year: personal.phd_graduation_year,
        faculty_rank: personal.faculty_rank.display().to_string(),
        tenure_status: personal.tenure_status.display().to_string(),
        num_publications: personal.num_publications,
    }
}

fn render(instructions: &str, payload: &impl Serialize) -> String {
    // payload structs serialize in declaration order, keeping prompts
    // byte-stable across runs
    let json = serde_json::to_string(payload).expect("payload structs always serialize");
    format!("{instructions}\n\n{CV_INPUT_MARKER}\n{json}\n")
}

/// Step 1: personal record. The response contract is a JSON array holding one
/// object with exactly the six listed fields.
pub fn personal_prompt(cell: &CvCell, index: u64, replicate: u32) -> String {
    let instructions = "\
You are an academic CV writer with detailed knowledge of career paths in U.S. higher education. \
The INPUT block below describes one fictional academic: their name, current institution and its \
prestige tier, a representative publication outlet indicating their field, gender, and race or \
ethnicity. Write a realistic and internally consistent career record for this person.

Respond with a JSON array containing exactly one object. The object must have exactly these \
top-level fields, with no additions, omissions, or renamings:
- index: integer (copy the input index unchanged)
- phd_granting_institution: string (a real university that grants PhDs, plausible for the field and prestige tier)
- phd_graduation_year: integer (consistent with the current rank and tenure status)
- faculty_rank: string (exactly one of 'Assistant Professor', 'Associate Professor', 'Full Professor')
- tenure_status: string (exactly 'Tenured' or 'Non-tenured')
- num_publications: integer (total peer-reviewed journal publications, realistic for the whole profile)

Output the JSON array only. No explanations, no markdown fences, no text outside the array.";
    render(instructions, &personal_payload(cell, index, replicate))
}

/// Step 2: profile-level impact metrics for an existing personal record.
pub fn impact_prompt(
    cell: &CvCell,
    index: u64,
    replicate: u32,
    personal: &PersonalFields,
    phd_prestige: PhdPrestige,
) -> String {
    let instructions = "\
You are an academic CV analyst with detailed knowledge of citation practices across fields in \
U.S. higher education. The INPUT block below describes one fictional academic, including their \
career record. Generate realistic publication-impact metrics that are internally consistent with \
that record, in particular with num_publications, faculty_rank, and the institution's prestige \
tier.

Respond with a JSON array containing exactly one object. The object must have exactly these \
top-level fields, with no additions, omissions, or renamings:
- index: integer (copy the input index unchanged)
- total_citations: integer (citations across all peer-reviewed journal publications)
- h_index: integer (largest h such that h papers have at least h citations each)
- i10_index: integer (number of publications with at least 10 citations)
- average_first_year_citations: float (mean citations a publication receives in its first year)
- average_impact_factor: float (mean impact factor of the journals published in)

Output the JSON array only. No explanations, no markdown fences, no text outside the array.";
    render(
        instructions,
        &impact_payload(cell, index, replicate, personal, phd_prestige),
    )
}

/// Step 3: one batch of publications. `batch_num` is the exact number of
/// records the response must contain; callers size it at most `batch_limit`.
#[allow(clippy::too_many_arguments)]
pub fn publications_prompt(
    cell: &CvCell,
    profile_pub_index: u64,
    replicate: u32,
    personal: &PersonalFields,
    impact: &ImpactFields,
    phd_prestige: PhdPrestige,
    batch_num: u32,
) -> String {
    let instructions = "\
You are an academic CV writer with detailed knowledge of journals and citation practices across \
fields. The INPUT block below describes one fictional academic and their impact metrics. Generate \
a batch of realistic peer-reviewed journal publications for this person. The batch must contain \
exactly batch_num_publications entries.

Respond with a JSON array containing exactly one object. The object must have exactly these \
top-level fields, with no additions, omissions, or renamings:
- profile_pub_index: integer (copy the input profile_pub_index unchanged)
- publications: array of exactly batch_num_publications objects, each with exactly these fields:
  - co_authors: array of strings (fictional names; empty array if solo-authored)
  - topic: string (one-line summary of the paper's contribution)
  - journal: string (a real journal plausible for the field; plausible fictional names are acceptable)
  - journal_impact_factor: float, or the string 'NA' if unknown (realistic for the journal)
  - year: integer (publication year)
  - citations_first_year: integer (citations received in the first year)

Output the JSON array only. No explanations, no markdown fences, no text outside the array.";
    let payload = PublicationsPayload {
        profile_pub_index,
        profile: impact_payload(cell, profile_pub_index, replicate, personal, phd_prestige),
        total_citations: impact.total_citations,
        h_index: impact.h_index,
        i10_index: impact.i10_index,
        average_first_year_citations: impact.average_first_year_citations,
        average_impact_factor: impact.average_impact_factor,
        batch_num_publications: batch_num,
    };
    render(instructions, &payload)
}

/// Throttle/ledger key for a step-1 call.
pub fn personal_request_key(profile_key: &str) -> String {
    format!("{profile_key}|personal")
}

/// Throttle/ledger key for a step-2 call.
pub fn impact_request_key(profile_key: &str) -> String {
    format!("{profile_key}|impact")
}

/// Throttle/ledger key for one step-3 batch call (0-based batch index).
pub fn publications_request_key(profile_key: &str, batch: u32) -> String {
    format!("{profile_key}|pubs|b{batch}")
}

/// Extracts the JSON payload from a rendered prompt. Providers that synthesize
/// responses locally use this instead of any shared state.
pub(crate) fn extract_payload(prompt: &str) -> Option<&str> {
    let at = prompt.find(CV_INPUT_MARKER)?;
    Some(prompt[at + CV_INPUT_MARKER.len()..].trim())
}

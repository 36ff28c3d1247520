//! Joins the profile and publication stores into an analysis-ready dataset:
//! reclassifies PhD institutions against the supplied map, derives
//! publication-level aggregates, and runs every consistency check. Flags
//! describe; they never mutate or exclude.

use super::validate::{aggregate_pubs, validate_profile, ConsistencyFlag, PlausibilityRule};
use super::{
    CvCell, CvError, CvGenRecord, CvGenStatus, ImpactFields, PersonalFields, PhdPrestige,
    PrestigeMap, PublicationRecord, PublicationRow,
};
use std::collections::BTreeMap;

/// One complete profile with everything the regressions and tables need.
#[derive(Debug, Clone)]
pub struct CvProfile {
    pub profile_key: String,
    pub index: u64,
    pub cell: CvCell,
    pub replicate: u32,
    pub personal: PersonalFields,
    pub impact: ImpactFields,
    pub publications: Vec<PublicationRecord>,
    pub phd_prestige: PhdPrestige,
    /// Mean first-year citations over delivered publications; NaN only when
    /// no publications were delivered at all.
    pub derived_first_year_citations: Option<f64>,
    /// Mean impact factor over publications that reported one.
    pub derived_impact_factor: Option<f64>,
    pub na_impact_factors: u32,
    pub shortfall: u32,
    pub flags: Vec<ConsistencyFlag>,
}

#[derive(Debug, Clone)]
pub struct CvDataset {
    pub profiles: Vec<CvProfile>,
    /// Profiles dropped because a generation step never produced valid
    /// fields, keyed by profile with the recorded reason.
    pub malformed: Vec<(String, String)>,
    /// PhD institutions the map could not classify, with occurrence counts.
    pub unknown_institutions: BTreeMap<String, u32>,
    pub unknown_prestige: usize,
    /// Count per flag label across all profiles.
    pub flag_counts: BTreeMap<&'static str, u32>,
    pub flagged_profiles: usize,
    pub shortfall_profiles: usize,
}

impl CvDataset {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// `records` and `rows` come straight from the stores; order within `rows`
/// follows each profile's `seq`.
pub fn assemble_dataset(
    records: &[CvGenRecord],
    rows: &[PublicationRow],
    map: &PrestigeMap,
    rule: &PlausibilityRule,
) -> Result<CvDataset, CvError> {
    let mut pubs_by_key: BTreeMap<&str, Vec<&PublicationRow>> = BTreeMap::new();
    for row in rows {
        pubs_by_key.entry(&row.profile_key).or_default().push(row);
    }
    for list in pubs_by_key.values_mut() {
        list.sort_by_key(|r| r.seq);
        for (i, row) in list.iter().enumerate() {
            if row.seq != i as u32 {
                return Err(CvError::StoreJoin(format!(
                    "profile {:?} has a gap in publication sequence at {}",
                    row.profile_key, i
                )));
            }
        }
    }

    let mut profiles = Vec::with_capacity(records.len());
    let mut malformed = Vec::new();
    let mut unknown_institutions: BTreeMap<String, u32> = BTreeMap::new();
    let mut unknown_prestige = 0usize;
    let mut flag_counts: BTreeMap<&'static str, u32> = BTreeMap::new();
    let mut flagged_profiles = 0usize;
    let mut shortfall_profiles = 0usize;

    for record in records {
        let (personal, impact) = match (&record.status, &record.personal, &record.impact) {
            (CvGenStatus::Complete, Some(p), Some(i)) => (p.clone(), i.clone()),
            (CvGenStatus::Malformed { step, reason }, _, _) => {
                malformed.push((
                    record.profile_key.clone(),
                    format!("{}: {reason}", step_name(*step)),
                ));
                continue;
            }
            (CvGenStatus::Complete, _, _) => {
                return Err(CvError::StoreJoin(format!(
                    "profile {:?} is marked complete but is missing generated fields",
                    record.profile_key
                )));
            }
        };
        let publications: Vec<PublicationRecord> = pubs_by_key
            .remove(record.profile_key.as_str())
            .unwrap_or_default()
            .into_iter()
            .map(|r| r.publication.clone())
            .collect();
        if publications.len() as u32 != record.publications_delivered {
            return Err(CvError::StoreJoin(format!(
                "profile {:?} recorded {} delivered publications, store holds {}",
                record.profile_key,
                record.publications_delivered,
                publications.len()
            )));
        }

        let phd_prestige = map.classify(&personal.phd_granting_institution);
        if phd_prestige == PhdPrestige::Unknown {
            unknown_prestige += 1;
            *unknown_institutions
                .entry(personal.phd_granting_institution.clone())
                .or_insert(0) += 1;
        }

        let aggregates = aggregate_pubs(&publications);
        let flags = validate_profile(&personal, &impact, &publications, rule);
        if !flags.is_empty() {
            flagged_profiles += 1;
            for flag in &flags {
                *flag_counts.entry(flag.label()).or_insert(0) += 1;
            }
        }
        if record.shortfall > 0 {
            shortfall_profiles += 1;
        }

        profiles.push(CvProfile {
            profile_key: record.profile_key.clone(),
            index: record.index,
            cell: record.cell.clone(),
            replicate: record.replicate,
            personal,
            impact,
            publications,
            phd_prestige,
            derived_first_year_citations: aggregates
                .as_ref()
                .map(|a| a.avg_first_year_citations),
            derived_impact_factor: aggregates.as_ref().and_then(|a| a.avg_impact_factor),
            na_impact_factors: aggregates.as_ref().map(|a| a.na_impact_factors).unwrap_or(0),
            shortfall: record.shortfall,
            flags,
        });
    }

    // leftover rows belong to no surviving record; tolerate rows for
    // malformed profiles (an interrupted step can strand them) but nothing
    // else
    for key in pubs_by_key.keys() {
        if !malformed.iter().any(|(k, _)| k == *key) {
            return Err(CvError::StoreJoin(format!(
                "publication rows reference unknown profile {key:?}"
            )));
        }
    }

    Ok(CvDataset {
        profiles,
        malformed,
        unknown_institutions,
        unknown_prestige,
        flag_counts,
        flagged_profiles,
        shortfall_profiles,
    })
}

fn step_name(step: super::CvStep) -> &'static str {
    match step {
        super::CvStep::Personal => "personal",
        super::CvStep::Impact => "impact",
        super::CvStep::Publications => "publications",
    }
}

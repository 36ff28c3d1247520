//! Three-step CV generation over a bounded worker pool, persisting to two
//! append-only newline-delimited stores: one profile record per plan item and
//! one row per generated publication. Records land in plan order regardless
//! of scheduling, so same-seed mock runs produce byte-identical stores and an
//! interrupted run resumes to the same bytes.
//!
//! Retry semantics per call: transport failures follow the provider's retry
//! policy; a response that violates the schema contract (including a wrong
//! batch count) is re-asked `schema_retries` times. A batch that still comes
//! up short keeps its delivered records and books the difference as
//! shortfall; a batch that stays structurally malformed books its full size.

use super::prompts::{
    impact_prompt, impact_request_key, personal_prompt, personal_request_key,
    publications_prompt, publications_request_key,
};
use super::schema::{parse_impact, parse_personal, parse_publications};
use super::{
    cv_cells, profile_key, CvCell, CvError, ImpactFields, PersonalFields, PhdPrestige,
    PrestigeMap, PublicationRecord,
};
use crate::design::Roster;
use crate::runner::{ChatProvider, ProviderConfig, ProviderRequest, ProviderStamp, SharedThrottle};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

pub const CV_STORE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvGenConfig {
    pub provider: ProviderConfig,
    /// Largest publication batch requested per call.
    pub batch_limit: u32,
    /// CVs generated per grid cell.
    pub replicates: u32,
    /// Extra asks after a schema-violating response (transport retries are
    /// governed by `provider.retry`).
    pub schema_retries: u32,
}

impl Default for CvGenConfig {
    fn default() -> Self {
        CvGenConfig {
            provider: ProviderConfig::default(),
            batch_limit: 3,
            replicates: 5,
            schema_retries: 1,
        }
    }
}

impl CvGenConfig {
    pub fn validate(&self) -> Result<(), CvError> {
        self.provider
            .validate()
            .map_err(|e| CvError::Config(e.to_string()))?;
        if self.batch_limit == 0 {
            return Err(CvError::Config("batch_limit must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(CvError::Config("replicates must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CvRunOptions {
    /// Continue an existing store pair instead of refusing to touch it.
    pub resume: bool,
    /// Stop after this many newly generated profiles (interruption testing).
    pub stop_after: Option<usize>,
    /// Durability interval, in profiles.
    pub sync_every: usize,
}

impl Default for CvRunOptions {
    fn default() -> Self {
        CvRunOptions {
            resume: false,
            stop_after: None,
            sync_every: 50,
        }
    }
}

/// One profile to generate. `index` is the plan position and doubles as the
/// request index echoed through every response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlanItem {
    pub index: u64,
    pub cell: CvCell,
    pub replicate: u32,
    pub profile_key: String,
}

/// Cell-major enumeration: every roster cell, replicates 1..=n inside.
pub fn plan_profiles(roster: &Roster, replicates: u32) -> Vec<CvPlanItem> {
    let cells = cv_cells(roster);
    let mut plan = Vec::with_capacity(cells.len() * replicates as usize);
    for cell in cells {
        for rep in 1..=replicates {
            plan.push(CvPlanItem {
                index: plan.len() as u64,
                profile_key: profile_key(&cell, rep),
                cell: cell.clone(),
                replicate: rep,
            });
        }
    }
    plan
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvStep {
    Personal,
    Impact,
    Publications,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CvGenStatus {
    Complete,
    Malformed { step: CvStep, reason: String },
}

impl CvGenStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, CvGenStatus::Complete)
    }
}

/// One line of the profile store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGenRecord {
    pub schema_version: u32,
    pub profile_key: String,
    pub index: u64,
    pub cell: CvCell,
    pub replicate: u32,
    #[serde(flatten)]
    pub status: CvGenStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub personal: Option<PersonalFields>,
    /// Classification used in downstream prompts; Unknown when no map was
    /// supplied at generation time. Analysis reclassifies from its own map.
    pub phd_prestige_at_generation: PhdPrestige,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impact: Option<ImpactFields>,
    pub publications_delivered: u32,
    /// Requested-minus-delivered across all batches.
    pub shortfall: u32,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub batch_notes: Vec<String>,
    /// Provider calls made for this profile, retries included.
    pub attempts: u32,
    pub provider: ProviderStamp,
}

/// One line of the publication store. `seq` orders publications within a
/// profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRow {
    pub schema_version: u32,
    pub profile_key: String,
    pub seq: u32,
    pub publication: PublicationRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvGenSummary {
    pub planned: usize,
    pub preexisting: usize,
    pub written: usize,
    pub complete: usize,
    pub malformed: usize,
    pub shortfall_profiles: usize,
    pub publications_written: u64,
    pub total_attempts: u64,
    pub stopped_early: bool,
}

struct ProfileBundle {
    record: CvGenRecord,
    rows: Vec<PublicationRow>,
}

fn io_err(path: &Path, source: std::io::Error) -> CvError {
    CvError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_store_lines<T: serde::de::DeserializeOwned>(
    path: &Path,
    version_of: impl Fn(&T) -> u32,
) -> Result<Vec<T>, CvError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| CvError::StoreParse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let found = version_of(&value);
        if found != CV_STORE_SCHEMA_VERSION {
            return Err(CvError::SchemaVersion {
                found,
                expected: CV_STORE_SCHEMA_VERSION,
            });
        }
        out.push(value);
    }
    Ok(out)
}

/// Reads every profile record; a missing file is an empty store.
pub fn read_profile_store(path: &Path) -> Result<Vec<CvGenRecord>, CvError> {
    read_store_lines(path, |r: &CvGenRecord| r.schema_version)
}

/// Reads every publication row; a missing file is an empty store.
pub fn read_publication_store(path: &Path) -> Result<Vec<PublicationRow>, CvError> {
    read_store_lines(path, |r: &PublicationRow| r.schema_version)
}

/// Verifies the existing stores against the plan prefix and drops any
/// publication rows whose committing profile record never landed. Returns the
/// number of completed plan items.
fn prepare_resume(
    plan: &[CvPlanItem],
    profiles_path: &Path,
    publications_path: &Path,
    resume: bool,
) -> Result<usize, CvError> {
    let existing = read_profile_store(profiles_path)?;
    if existing.is_empty() {
        // treat stray publication rows without any profile record as corrupt
        if !read_publication_store(publications_path)?.is_empty() {
            return Err(CvError::StoreJoin(
                "publication rows exist but the profile store is empty".into(),
            ));
        }
        return Ok(0);
    }
    if !resume {
        return Err(CvError::StoreExists);
    }
    if existing.len() > plan.len() {
        return Err(CvError::StoreAheadOfPlan);
    }
    let mut expected_counts: HashMap<&str, u32> = HashMap::new();
    for (i, record) in existing.iter().enumerate() {
        if record.profile_key != plan[i].profile_key {
            return Err(CvError::ResumeMismatch {
                index: i,
                store_key: record.profile_key.clone(),
                plan_key: plan[i].profile_key.clone(),
            });
        }
        expected_counts.insert(record.profile_key.as_str(), record.publications_delivered);
    }

    // single pass over the publication store: committed rows must match the
    // per-profile delivered counts; an uncommitted tail gets truncated away
    let mut seen_counts: HashMap<String, u32> = HashMap::new();
    let mut truncate_at: Option<u64> = None;
    let mut offset: u64 = 0;
    if let Ok(file) = File::open(publications_path) {
        let reader = BufReader::new(file);
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| io_err(publications_path, e))?;
            let line_len = line.len() as u64 + 1;
            if line.trim().is_empty() {
                offset += line_len;
                continue;
            }
            let row: PublicationRow =
                serde_json::from_str(&line).map_err(|e| CvError::StoreParse {
                    path: publications_path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if expected_counts.contains_key(row.profile_key.as_str()) {
                if truncate_at.is_some() {
                    return Err(CvError::StoreJoin(format!(
                        "committed rows for {:?} appear after an uncommitted tail",
                        row.profile_key
                    )));
                }
                *seen_counts.entry(row.profile_key).or_insert(0) += 1;
            } else if truncate_at.is_none() {
                truncate_at = Some(offset);
            }
            offset += line_len;
        }
    }
    for (key, expected) in &expected_counts {
        let seen = seen_counts.get(*key).copied().unwrap_or(0);
        if seen != *expected {
            return Err(CvError::StoreJoin(format!(
                "profile {key:?} committed {expected} publications, store holds {seen}"
            )));
        }
    }
    if let Some(at) = truncate_at {
        let file = OpenOptions::new()
            .write(true)
            .open(publications_path)
            .map_err(|e| io_err(publications_path, e))?;
        file.set_len(at).map_err(|e| io_err(publications_path, e))?;
    }
    Ok(existing.len())
}

/// Runs the three generation steps for every plan item past the resume point.
pub fn generate_cvs(
    plan: &[CvPlanItem],
    provider: &dyn ChatProvider,
    config: &CvGenConfig,
    map: Option<&PrestigeMap>,
    profiles_path: &Path,
    publications_path: &Path,
    options: &CvRunOptions,
) -> Result<CvGenSummary, CvError> {
    config.validate()?;
    let done = prepare_resume(plan, profiles_path, publications_path, options.resume)?;

    let todo = &plan[done..];
    let stop = options.stop_after.unwrap_or(todo.len()).min(todo.len());
    let stopped_early = stop < todo.len();
    let todo = &todo[..stop];

    let mut summary = CvGenSummary {
        planned: plan.len(),
        preexisting: done,
        written: 0,
        complete: 0,
        malformed: 0,
        shortfall_profiles: 0,
        publications_written: 0,
        total_attempts: 0,
        stopped_early,
    };
    if todo.is_empty() {
        return Ok(summary);
    }

    let open_append = |path: &Path| -> Result<BufWriter<File>, CvError> {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map(BufWriter::new)
            .map_err(|e| io_err(path, e))
    };
    let mut profiles_out = open_append(profiles_path)?;
    let mut publications_out = open_append(publications_path)?;

    let throttle = SharedThrottle::new(
        config.provider.max_in_flight,
        config.provider.requests_per_minute,
    );
    let next = AtomicUsize::new(0);
    let stop_flag = AtomicBool::new(false);
    let workers = config.provider.max_in_flight.min(todo.len()).max(1);
    let stamp = provider.stamp();

    let mut write_error: Option<CvError> = None;
    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Box<ProfileBundle>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let throttle = &throttle;
            let next = &next;
            let stop_flag = &stop_flag;
            let stamp = &stamp;
            scope.spawn(move || loop {
                if stop_flag.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= todo.len() {
                    break;
                }
                let bundle = run_profile(&todo[i], provider, config, map, throttle, stamp);
                if tx.send((i, Box::new(bundle))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, Box<ProfileBundle>> = BTreeMap::new();
        let mut next_write = 0usize;
        let mut since_sync = 0usize;
        for (i, bundle) in rx {
            pending.insert(i, bundle);
            while let Some(bundle) = pending.remove(&next_write) {
                if let Err(e) = write_bundle(
                    &bundle,
                    &mut profiles_out,
                    &mut publications_out,
                    profiles_path,
                    publications_path,
                ) {
                    write_error = Some(e);
                    stop_flag.store(true, Ordering::Relaxed);
                    break;
                }
                tally(&bundle, &mut summary);
                next_write += 1;
                since_sync += 1;
                if since_sync >= options.sync_every {
                    since_sync = 0;
                    if let Err(e) = sync_pair(
                        &mut profiles_out,
                        &mut publications_out,
                        profiles_path,
                        publications_path,
                    ) {
                        write_error = Some(e);
                        stop_flag.store(true, Ordering::Relaxed);
                    }
                }
            }
            if write_error.is_some() {
                break;
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    sync_pair(
        &mut profiles_out,
        &mut publications_out,
        profiles_path,
        publications_path,
    )?;
    Ok(summary)
}

fn tally(bundle: &ProfileBundle, summary: &mut CvGenSummary) {
    summary.written += 1;
    summary.total_attempts += u64::from(bundle.record.attempts);
    summary.publications_written += bundle.rows.len() as u64;
    if bundle.record.status.is_complete() {
        summary.complete += 1;
    } else {
        summary.malformed += 1;
    }
    if bundle.record.shortfall > 0 {
        summary.shortfall_profiles += 1;
    }
}

fn write_bundle(
    bundle: &ProfileBundle,
    profiles_out: &mut BufWriter<File>,
    publications_out: &mut BufWriter<File>,
    profiles_path: &Path,
    publications_path: &Path,
) -> Result<(), CvError> {
    // publication rows first: the profile record is the commit marker a
    // resume trusts, so it must be the last thing written
    for row in &bundle.rows {
        let line = serde_json::to_string(row).map_err(|e| CvError::Serialize {
            context: format!("publication row {}#{}", row.profile_key, row.seq),
            message: e.to_string(),
        })?;
        publications_out
            .write_all(line.as_bytes())
            .and_then(|_| publications_out.write_all(b"\n"))
            .map_err(|e| io_err(publications_path, e))?;
    }
    publications_out
        .flush()
        .map_err(|e| io_err(publications_path, e))?;
    let line = serde_json::to_string(&bundle.record).map_err(|e| CvError::Serialize {
        context: format!("profile record {}", bundle.record.profile_key),
        message: e.to_string(),
    })?;
    profiles_out
        .write_all(line.as_bytes())
        .and_then(|_| profiles_out.write_all(b"\n"))
        .map_err(|e| io_err(profiles_path, e))
}

fn sync_pair(
    profiles_out: &mut BufWriter<File>,
    publications_out: &mut BufWriter<File>,
    profiles_path: &Path,
    publications_path: &Path,
) -> Result<(), CvError> {
    publications_out
        .flush()
        .and_then(|_| publications_out.get_ref().sync_data())
        .map_err(|e| io_err(publications_path, e))?;
    profiles_out
        .flush()
        .and_then(|_| profiles_out.get_ref().sync_data())
        .map_err(|e| io_err(profiles_path, e))
}

enum FetchOutcome<T> {
    Parsed(T),
    /// Structurally valid transport, contract-violating content.
    Rejected(String),
}

/// One logical ask: transport retries inside, schema re-asks around them.
/// `call_attempt` keeps increasing across re-asks so a deterministic provider
/// re-samples rather than repeating itself.
fn fetch_parsed<T>(
    provider: &dyn ChatProvider,
    throttle: &SharedThrottle,
    config: &CvGenConfig,
    key: &str,
    prompt: &str,
    attempts: &mut u32,
    call_attempt: &mut u32,
    parse: impl Fn(&str) -> Result<T, String>,
) -> FetchOutcome<T> {
    let policy = &config.provider.retry;
    let mut last_reason = String::new();
    for round in 0..=config.schema_retries {
        let mut raw: Option<String> = None;
        for transport_try in 1..=policy.max_attempts {
            throttle.acquire();
            *attempts += 1;
            *call_attempt += 1;
            match provider.respond(&ProviderRequest {
                key,
                prompt,
                attempt: *call_attempt,
                trial: None,
            }) {
                Ok(text) => {
                    raw = Some(text);
                    break;
                }
                Err(cause) => {
                    last_reason = format!("provider failure: {cause}");
                    if transport_try < policy.max_attempts {
                        thread::sleep(policy.backoff_after(transport_try));
                    }
                }
            }
        }
        let Some(text) = raw else {
            // a dead provider is not a schema problem; re-asking won't help
            return FetchOutcome::Rejected(last_reason);
        };
        match parse(&text) {
            Ok(value) => return FetchOutcome::Parsed(value),
            Err(reason) => last_reason = reason,
        }
        let _ = round;
    }
    FetchOutcome::Rejected(last_reason)
}

fn run_profile(
    item: &CvPlanItem,
    provider: &dyn ChatProvider,
    config: &CvGenConfig,
    map: Option<&PrestigeMap>,
    throttle: &SharedThrottle,
    stamp: &ProviderStamp,
) -> ProfileBundle {
    let mut attempts = 0u32;
    let mut record = CvGenRecord {
        schema_version: CV_STORE_SCHEMA_VERSION,
        profile_key: item.profile_key.clone(),
        index: item.index,
        cell: item.cell.clone(),
        replicate: item.replicate,
        status: CvGenStatus::Complete,
        personal: None,
        phd_prestige_at_generation: PhdPrestige::Unknown,
        impact: None,
        publications_delivered: 0,
        shortfall: 0,
        batch_notes: Vec::new(),
        attempts: 0,
        provider: stamp.clone(),
    };

    // step 1: personal record
    let mut call_attempt = 0u32;
    let p_prompt = personal_prompt(&item.cell, item.index, item.replicate);
    let p_key = personal_request_key(&item.profile_key);
    let personal = match fetch_parsed(
        provider,
        throttle,
        config,
        &p_key,
        &p_prompt,
        &mut attempts,
        &mut call_attempt,
        |raw| parse_personal(raw, item.index),
    ) {
        FetchOutcome::Parsed(p) => p,
        FetchOutcome::Rejected(reason) => {
            record.status = CvGenStatus::Malformed {
                step: CvStep::Personal,
                reason,
            };
            record.attempts = attempts;
            return ProfileBundle {
                record,
                rows: Vec::new(),
            };
        }
    };
    let phd_prestige = map
        .map(|m| m.classify(&personal.phd_granting_institution))
        .unwrap_or(PhdPrestige::Unknown);
    record.personal = Some(personal.clone());
    record.phd_prestige_at_generation = phd_prestige;

    // step 2: impact metrics
    let mut call_attempt = 0u32;
    let i_prompt = impact_prompt(&item.cell, item.index, item.replicate, &personal, phd_prestige);
    let i_key = impact_request_key(&item.profile_key);
    let impact = match fetch_parsed(
        provider,
        throttle,
        config,
        &i_key,
        &i_prompt,
        &mut attempts,
        &mut call_attempt,
        |raw| parse_impact(raw, item.index),
    ) {
        FetchOutcome::Parsed(i) => i,
        FetchOutcome::Rejected(reason) => {
            record.status = CvGenStatus::Malformed {
                step: CvStep::Impact,
                reason,
            };
            record.attempts = attempts;
            return ProfileBundle {
                record,
                rows: Vec::new(),
            };
        }
    };
    record.impact = Some(impact.clone());

    // step 3: publications in batches of at most batch_limit
    let mut rows: Vec<PublicationRow> = Vec::with_capacity(personal.num_publications as usize);
    let mut remaining = personal.num_publications;
    let mut batch_index = 0u32;
    while remaining > 0 {
        let size = remaining.min(config.batch_limit);
        let b_prompt = publications_prompt(
            &item.cell,
            item.index,
            item.replicate,
            &personal,
            &impact,
            phd_prestige,
            size,
        );
        let b_key = publications_request_key(&item.profile_key, batch_index);
        let mut call_attempt = 0u32;
        // exact-count enforcement happens outside the parser so a final short
        // batch still surrenders its records
        let mut delivered: Option<Vec<PublicationRecord>> = None;
        let mut last_reason = String::new();
        for ask in 0..=config.schema_retries {
            match fetch_parsed(
                provider,
                throttle,
                config,
                &b_key,
                &b_prompt,
                &mut attempts,
                &mut call_attempt,
                |raw| parse_publications(raw, item.index),
            ) {
                FetchOutcome::Parsed(batch) => {
                    if batch.len() == size as usize {
                        delivered = Some(batch);
                        break;
                    }
                    last_reason = format!("delivered {} of {size}", batch.len());
                    delivered = Some(batch);
                    if ask == config.schema_retries {
                        break;
                    }
                }
                FetchOutcome::Rejected(reason) => {
                    // a malformed re-ask never erases records a prior short
                    // delivery already produced
                    if delivered.is_none() {
                        last_reason = reason;
                    }
                    break;
                }
            }
        }
        match delivered {
            Some(mut batch) => {
                if batch.len() > size as usize {
                    record.batch_notes.push(format!(
                        "batch {batch_index}: truncated {} to {size}",
                        batch.len()
                    ));
                    batch.truncate(size as usize);
                } else if batch.len() < size as usize {
                    record.shortfall += size - batch.len() as u32;
                    record
                        .batch_notes
                        .push(format!("batch {batch_index}: {last_reason}"));
                }
                for publication in batch {
                    rows.push(PublicationRow {
                        schema_version: CV_STORE_SCHEMA_VERSION,
                        profile_key: item.profile_key.clone(),
                        seq: rows.len() as u32,
                        publication,
                    });
                }
            }
            None => {
                record.shortfall += size;
                record
                    .batch_notes
                    .push(format!("batch {batch_index}: {last_reason}"));
            }
        }
        remaining -= size;
        batch_index += 1;
    }
    record.publications_delivered = rows.len() as u32;
    record.attempts = attempts;
    ProfileBundle { record, rows }
}

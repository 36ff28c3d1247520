//! Plan execution. Workers run trials concurrently up to `max_in_flight`;
//! a single writer thread serializes ledger appends in plan order, so two
//! runs over the same plan produce the same bytes regardless of scheduling.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use chrono::SecondsFormat;
use serde::Serialize;

use crate::design::{CellRef, ManuscriptSet, Roster, Stage, TrialDescriptor, TrialPlan};
use crate::promptkit::{render, AuthorIdentity, ContextCorpus, TemplateSet};

use super::ledger::{read_ledger, LedgerWriter, RunLedgerRecord, LEDGER_SCHEMA_VERSION};
use super::parse::ParsedOutcome;
use super::provider::{ChatProvider, ProviderRequest, ProviderStamp};
use super::throttle::SharedThrottle;
use super::{ProviderConfig, RunnerError};

/// Immutable run inputs shared by every worker.
pub struct RunContext<'a> {
    pub roster: &'a Roster,
    pub manuscripts: &'a ManuscriptSet,
    pub templates: &'a TemplateSet,
    /// Abstract corpus for reviewer-stage context; editor-only plans may omit it.
    pub corpus: Option<&'a ContextCorpus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Records between durable checkpoints.
    pub checkpoint_every: usize,
    /// Stop cleanly after writing this many new records (used to exercise
    /// interruption; resume picks up where the ledger ends).
    pub stop_after: Option<usize>,
    /// Continue an existing ledger after verifying it is a prefix of the plan.
    pub resume: bool,
    /// Most recent abstracts per field included in reviewer context.
    pub context_cap: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checkpoint_every: 100,
            stop_after: None,
            resume: false,
            context_cap: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub planned: usize,
    /// Records already in the ledger before this invocation.
    pub preexisting: usize,
    pub written: usize,
    pub valid: usize,
    pub malformed: usize,
    pub stopped_early: bool,
    pub total_attempts: u64,
}

struct PromptPayload {
    text: String,
    sha256: String,
}

pub fn execute(
    plans: &[TrialPlan],
    ctx: &RunContext<'_>,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    ledger_path: &Path,
    options: &RunOptions,
) -> Result<RunSummary, RunnerError> {
    config.validate()?;
    ctx.manuscripts.check_roster(ctx.roster)?;
    if options.checkpoint_every == 0 {
        return Err(RunnerError::Config("checkpoint_every must be at least 1".into()));
    }

    // establish where this invocation starts
    let preexisting = if ledger_path.exists() {
        let records = read_ledger(ledger_path)?;
        if records.is_empty() {
            0
        } else if !options.resume {
            return Err(RunnerError::LedgerExists(ledger_path.display().to_string()));
        } else {
            verify_prefix(&records, plans, ctx.roster)?;
            records.len()
        }
    } else {
        0
    };

    let remaining = &plans[preexisting..];
    let take = options
        .stop_after
        .map(|n| n.min(remaining.len()))
        .unwrap_or(remaining.len());
    let todo = &remaining[..take];
    let stopped_early = take < remaining.len();

    let mut writer = LedgerWriter::open(ledger_path, preexisting)?;
    if todo.is_empty() {
        writer.checkpoint()?;
        return Ok(RunSummary {
            planned: plans.len(),
            preexisting,
            written: 0,
            valid: 0,
            malformed: 0,
            stopped_early,
            total_attempts: 0,
        });
    }

    let prompts = render_unique_prompts(todo, ctx, options.context_cap)?;
    let stamp = provider.stamp();
    let deterministic = provider.deterministic();
    let throttle = SharedThrottle::new(config.max_in_flight, config.requests_per_minute);
    let workers = config.max_in_flight.min(todo.len());

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Box<RunLedgerRecord>)>();

    let mut valid = 0usize;
    let mut malformed = 0usize;
    let mut total_attempts = 0u64;
    let mut write_err: Option<RunnerError> = None;

    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let stop = &stop;
            let throttle = &throttle;
            let prompts = &prompts;
            let stamp = &stamp;
            s.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= todo.len() {
                    break;
                }
                let plan = &todo[i];
                let descriptor = plan.resolve(ctx.roster);
                let payload = &prompts[&(plan.stage, plan.cell)];
                let record = run_one(
                    descriptor,
                    payload,
                    provider,
                    config,
                    throttle,
                    stamp,
                    deterministic,
                );
                if tx.send((i, Box::new(record))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // single writer: reorder completions back into plan order
        let mut buffer: BTreeMap<usize, Box<RunLedgerRecord>> = BTreeMap::new();
        let mut next_write = 0usize;
        'recv: for (i, rec) in rx.iter() {
            buffer.insert(i, rec);
            while let Some(rec) = buffer.remove(&next_write) {
                total_attempts += rec.attempts as u64;
                if rec.outcome.is_valid() {
                    valid += 1;
                } else {
                    malformed += 1;
                }
                if let Err(e) = writer.append(&rec) {
                    write_err = Some(e);
                    stop.store(true, Ordering::Relaxed);
                    break 'recv;
                }
                next_write += 1;
                if next_write % options.checkpoint_every == 0 {
                    if let Err(e) = writer.checkpoint() {
                        write_err = Some(e);
                        stop.store(true, Ordering::Relaxed);
                        break 'recv;
                    }
                }
            }
        }
        // channel drains as workers exit; scope joins them
    });

    if let Some(e) = write_err {
        // leave a conservative watermark behind for resumption
        let _ = writer.checkpoint();
        return Err(e);
    }
    writer.checkpoint()?;

    Ok(RunSummary {
        planned: plans.len(),
        preexisting,
        written: todo.len(),
        valid,
        malformed,
        stopped_early,
        total_attempts,
    })
}

fn verify_prefix(
    records: &[RunLedgerRecord],
    plans: &[TrialPlan],
    roster: &Roster,
) -> Result<(), RunnerError> {
    if records.len() > plans.len() {
        return Err(RunnerError::LedgerAheadOfPlan {
            records: records.len(),
            planned: plans.len(),
        });
    }
    for (i, record) in records.iter().enumerate() {
        let plan_key = plans[i].trial_key(roster);
        if record.trial.trial_key != plan_key {
            return Err(RunnerError::ResumeMismatch {
                index: i,
                ledger_key: record.trial.trial_key.clone(),
                plan_key,
            });
        }
    }
    Ok(())
}

/// Renders each distinct (stage, cell) pair once; iterations share the text.
fn render_unique_prompts(
    todo: &[TrialPlan],
    ctx: &RunContext<'_>,
    context_cap: usize,
) -> Result<HashMap<(Stage, CellRef), PromptPayload>, RunnerError> {
    // reviewer stages share one context block per field, cut off at the
    // target manuscript's publication date
    let mut ctx_blocks: HashMap<usize, String> = HashMap::new();
    for plan in todo {
        let field_idx = plan.cell.field();
        if plan.stage.is_reviewer() && !ctx_blocks.contains_key(&field_idx) {
            let corpus = ctx.corpus.ok_or(RunnerError::MissingContextCorpus)?;
            let fs = &ctx.roster.fields[field_idx];
            let ms = ctx
                .manuscripts
                .get(&fs.manuscript_id)
                .expect("checked by check_roster");
            let block = crate::promptkit::assemble_context(
                corpus,
                &fs.field_name,
                ms.publication_date,
                context_cap,
            )?;
            ctx_blocks.insert(field_idx, block);
        }
    }

    let mut prompts: HashMap<(Stage, CellRef), PromptPayload> = HashMap::new();
    for plan in todo {
        let key = (plan.stage, plan.cell);
        if prompts.contains_key(&key) {
            continue;
        }
        let fs = &ctx.roster.fields[plan.cell.field()];
        let ms = ctx
            .manuscripts
            .get(&fs.manuscript_id)
            .expect("checked by check_roster");
        let identity = match plan.cell {
            CellRef::Identity(c) => Some(AuthorIdentity {
                name: &ctx.roster.names[c.name].display_name,
                institution: &ctx.roster.institutions[c.institution].name,
            }),
            CellRef::Blinded { .. } => None,
        };
        let context_block = plan
            .stage
            .is_reviewer()
            .then(|| ctx_blocks[&plan.cell.field()].as_str());
        let template = ctx.templates.get(plan.stage);
        let rendered = render(template, "", ms, &fs.field_name, identity, context_block)?;
        prompts.insert(
            key,
            PromptPayload {
                text: rendered.text,
                sha256: rendered.content_hash,
            },
        );
    }
    Ok(prompts)
}

fn run_one(
    descriptor: TrialDescriptor,
    prompt: &PromptPayload,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    throttle: &SharedThrottle,
    stamp: &ProviderStamp,
    deterministic: bool,
) -> RunLedgerRecord {
    let max = config.retry.max_attempts;
    let mut attempts = 0;
    let mut outcome: Option<ParsedOutcome> = None;
    for attempt in 1..=max {
        attempts = attempt;
        throttle.acquire();
        let req = ProviderRequest {
            key: &descriptor.trial_key,
            prompt: &prompt.text,
            attempt,
            trial: Some(&descriptor),
        };
        match provider.respond(&req) {
            Ok(raw) => {
                let parsed = ParsedOutcome::from_raw(descriptor.stage, &raw);
                let done = parsed.is_valid();
                outcome = Some(parsed);
                if done {
                    break;
                }
            }
            Err(e) => {
                if attempt == max {
                    outcome = Some(ParsedOutcome::provider_failure(
                        descriptor.stage,
                        &e.to_string(),
                    ));
                }
            }
        }
        if attempt < max {
            let backoff = config.retry.backoff_after(attempt);
            if !backoff.is_zero() {
                std::thread::sleep(backoff);
            }
        }
    }
    let requested_at = (!deterministic)
        .then(|| chrono::Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true));
    RunLedgerRecord {
        schema_version: LEDGER_SCHEMA_VERSION,
        trial: descriptor,
        prompt_sha256: prompt.sha256.clone(),
        requested_at,
        attempts,
        outcome: outcome.expect("at least one attempt always runs"),
        provider: stamp.clone(),
    }
}

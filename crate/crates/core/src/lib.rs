//! Audit harness for identity-linked bias in LLM-simulated peer review.
//!
//! The library is organized around the flow of an audit run:
//!
//! - [`design`] enumerates the factorial trial plan (names x institutions x
//!   fields x blinding) deterministically from a config document.
//! - [`promptkit`] renders the five staged editor/reviewer prompts bit-exactly
//!   and assembles the field-calibrated context block.
//! - [`runner`] executes the plan against a chat-completion provider (live or
//!   mock), with throttling, retries, and an append-only replayable ledger.
//! - [`econometrics`] estimates identity effects: fixed-effects OLS/LPM,
//!   logistic and Poisson GLMs, and two-way cluster-robust inference.
//! - [`cvprobe`] runs the synthetic-CV generation diagnostic that probes the
//!   model's prestige-linked career priors.
//! - [`report`] turns fitted models into regression tables, effect summaries,
//!   and plot-ready CSV files.

pub mod cvprobe;
pub mod design;
pub mod econometrics;
pub mod promptkit;
pub mod report;
pub mod runner;
pub mod terms;

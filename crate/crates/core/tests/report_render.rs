//! Report pipeline end to end: mock run, ledger ingest, per-stage fits,
//! table and plot rendering, effect statements. Rendering must be a pure
//! function of the ledger bytes.

mod support;

use revaudit::design::{build_cells, enumerate_trials, Stage, TrialPlan};
use revaudit::econometrics::{stratified_estimate, StratumFit};
use revaudit::report::{
    audit_columns, audit_frames, audit_layout, decision_effect, emit_ci_plot_data,
    emit_regression_table, emit_summary_table, emit_ttest_table, log_outcome_effect, plot_rows,
    relative_effect, sha256_hex, AuditFrames, Provenance, RegressionTable,
};
use revaudit::runner::{execute, read_ledger, MockOracle, MockOracleSpec, ProviderConfig, RunContext, RunOptions};
use revaudit::econometrics::{summary_stats, welch_ttest};
use revaudit::terms;
use support::fixtures::{full_race_world, TestWorld};

fn plans(world: &TestWorld) -> Vec<TrialPlan> {
    let roster = &world.config.roster;
    enumerate_trials(
        roster,
        &build_cells(roster),
        world.config.params.iterations,
        &Stage::ALL,
        world.config.params.blinded_iterations,
        world.config.params.master_seed,
        world.config.params.max_plan_size,
    )
    .unwrap()
}

/// Runs the mock audit into `name` under the world tempdir and returns the
/// ledger bytes with the parsed frames.
fn run_to_frames(world: &TestWorld, name: &str) -> (Vec<u8>, AuditFrames) {
    let ctx = RunContext {
        roster: &world.config.roster,
        manuscripts: &world.manuscripts,
        templates: &world.templates,
        corpus: Some(&world.corpus),
    };
    let provider = MockOracle::new(MockOracleSpec::demo()).unwrap();
    let mut config = ProviderConfig::default();
    config.retry.base_backoff_ms = 0;
    let path = world.tmp.path().join(name);
    let summary = execute(&plans(world), &ctx, &provider, &config, &path, &RunOptions::default())
        .unwrap();
    assert_eq!(summary.malformed, 0, "mock output must all parse");
    let bytes = std::fs::read(&path).unwrap();
    let frames = audit_frames(&read_ledger(&path).unwrap());
    (bytes, frames)
}

fn render(bytes: &[u8], frames: &AuditFrames) -> RegressionTable {
    let fits: Vec<(Stage, revaudit::econometrics::FitResult)> = frames
        .stages
        .iter()
        .map(|sf| (sf.stage, sf.fit().unwrap()))
        .collect();
    let columns = audit_columns(fits);
    emit_regression_table(
        &columns,
        &audit_layout(),
        &Provenance {
            ledger_sha256: sha256_hex(bytes),
        },
    )
    .unwrap()
}

#[test]
fn audit_table_renders_all_stages_and_is_a_pure_function_of_the_ledger() {
    let world = full_race_world();
    let (bytes_a, frames_a) = run_to_frames(&world, "a.jsonl");

    // per-stage accounting: 8 names x 2 inst x 2 fields x 12 iters + 2 x 40
    assert_eq!(frames_a.stages.len(), 5);
    for sf in &frames_a.stages {
        assert_eq!(sf.n_valid, 8 * 2 * 2 * 12 + 2 * 40);
        assert_eq!(sf.n_malformed, 0);
        assert!(sf.blinded_mean_raw.is_some());
    }
    assert!(frames_a.unusable.is_empty());

    let table_a = render(&bytes_a, &frames_a);
    for needle in [
        "Editor",
        "Reviewer",
        "Recommend Reject",
        "(5)",
        "Low Prestige",
        "High Prestige (R)",
        "White (R)",
        "Observations",
        "Adjusted R^2",
        "ledger sha256:",
        "fit 5:",
    ] {
        assert!(table_a.text.contains(needle), "missing {needle:?} in:\n{}", table_a.text);
    }
    // every stage shows the full identity battery in the delimited rendition
    let mut rdr = csv::Reader::from_reader(table_a.delimited.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5 * 6, "5 columns x 6 layout terms");
    assert!(rows.iter().all(|r| r[7].parse::<usize>().unwrap() == 464));

    // a fresh run of the same plan must reproduce the report bytes
    let (bytes_b, frames_b) = run_to_frames(&world, "b.jsonl");
    assert_eq!(bytes_a, bytes_b);
    let table_b = render(&bytes_b, &frames_b);
    assert_eq!(table_a.text, table_b.text);
    assert_eq!(table_a.delimited, table_b.delimited);
}

#[test]
fn decision_effects_carry_both_percentage_point_and_relative_forms() {
    let world = full_race_world();
    let (_bytes, frames) = run_to_frames(&world, "effects.jsonl");
    let sf = frames.stage(Stage::ReviewerReject).unwrap();
    let baseline = sf.blinded_mean_raw.unwrap();
    assert!(baseline > 0.0, "seeded blinded arm must contain rejections");

    let fit = sf.fit().unwrap();
    let effect = decision_effect(&fit, terms::NON_BLINDED, baseline).unwrap();
    assert_eq!(effect.baseline_rate, Some(baseline));
    let estimate = fit.coefficient(terms::NON_BLINDED).unwrap();
    assert!((effect.percentage_points.unwrap() - 100.0 * estimate).abs() < 1e-12);
    assert_eq!(
        effect.relative_percent.unwrap(),
        relative_effect(estimate, baseline).unwrap()
    );
    let statement = effect.statement();
    assert!(statement.contains("pp against a"), "{statement}");
    assert!(statement.contains("% relative"), "{statement}");
    assert!(statement.contains("95% CI"), "{statement}");

    // log-outcome form for the quality stage shows exp and linear percents
    let qf = frames.stage(Stage::EditorQuality).unwrap();
    let q_effect = log_outcome_effect(&qf.fit().unwrap(), terms::NON_BLINDED).unwrap();
    let b = q_effect.estimate;
    assert!((q_effect.percent_exp.unwrap() - 100.0 * (b.exp() - 1.0)).abs() < 1e-12);
    assert!((q_effect.percent_linear.unwrap() - 100.0 * b).abs() < 1e-12);
    assert!(q_effect.statement().contains("exp scale"));
}

#[test]
fn stratified_plot_rows_match_their_intervals_exactly() {
    let world = full_race_world();
    let (_bytes, frames) = run_to_frames(&world, "strata.jsonl");
    let sf = frames.stage(Stage::EditorQuality).unwrap();

    let field = sf.frame.fe.clone().unwrap();
    let strata = stratified_estimate(&sf.frame, &field, &sf.spec).unwrap();
    assert_eq!(strata.len(), 2);
    let rows = plot_rows(
        "Editor Quality Score",
        &strata,
        &[terms::LOW_PRESTIGE, terms::FEMALE],
    )
    .unwrap();
    assert_eq!(rows.len(), 4, "2 fields x 2 attributes");

    let csv_text = emit_ci_plot_data(&rows).unwrap();
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let parsed: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(parsed.len(), rows.len());

    // emitted bounds must equal estimate +/- 1.96 SE from the stratum fits
    for record in &parsed {
        let stratum = &record[2];
        let attribute = &record[1];
        let est: f64 = record[3].parse().unwrap();
        let lower: f64 = record[4].parse().unwrap();
        let higher: f64 = record[5].parse().unwrap();
        let fitted = strata
            .iter()
            .find_map(|s| match s {
                StratumFit::Fitted { stratum: name, cis, .. } if name == stratum => Some(cis),
                _ => None,
            })
            .expect("stratum exists");
        let ci = fitted
            .iter()
            .find(|c| revaudit::terms::display_label(&c.term) == attribute)
            .expect("term exists");
        assert!((lower - (ci.estimate - 1.96 * ci.se)).abs() < 1e-12);
        assert!((higher - (ci.estimate + 1.96 * ci.se)).abs() < 1e-12);
        assert!((est - ci.estimate).abs() < 1e-12);
        assert!(lower <= est && est <= higher);
    }
}

#[test]
fn summary_and_ttest_tables_render_the_ledger_vocabulary() {
    let world = full_race_world();
    let (_bytes, frames) = run_to_frames(&world, "summaries.jsonl");
    let sf = frames.stage(Stage::ReviewerQuality).unwrap();

    // blinded vs non-blinded raw outcome columns straight from the frame
    let nb = &sf.frame.regressors[0].1;
    let blinded: Vec<f64> = sf
        .frame
        .outcome
        .iter()
        .zip(nb)
        .filter(|(_, &flag)| flag == 0.0)
        .map(|(y, _)| *y)
        .collect();
    let exposed: Vec<f64> = sf
        .frame
        .outcome
        .iter()
        .zip(nb)
        .filter(|(_, &flag)| flag == 1.0)
        .map(|(y, _)| *y)
        .collect();

    let rows = summary_stats(&[
        ("blinded log score".to_string(), blinded.clone()),
        ("non-blinded log score".to_string(), exposed.clone()),
    ])
    .unwrap();
    let summary = emit_summary_table(&rows);
    assert!(summary.contains("blinded log score"));
    assert!(summary.lines().count() == 3);

    let welch = welch_ttest(&blinded, &exposed).unwrap();
    let ttable = emit_ttest_table(&[("blinded vs non-blinded".to_string(), welch)]);
    assert!(ttable.contains("blinded vs non-blinded"));
    assert!(ttable.contains("diff"));
}

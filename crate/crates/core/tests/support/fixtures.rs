//! Shared end-to-end fixtures: a two-field miniature world small enough to
//! run whole plans in milliseconds, loaded through the real config and
//! manifest parsers.

use std::path::Path;

use chrono::NaiveDate;
use revaudit::design::{
    build_cells, enumerate_trials, load_manuscripts, load_roster_str, DesignConfig, ManuscriptSet,
    Stage, TrialPlan,
};
use revaudit::promptkit::{ContextCorpus, ContextEntry, TemplateSet};
use tempfile::TempDir;

pub const TINY_ROSTER_TOML: &str = r#"
[audit]
iterations = 3
blinded_iterations = 2
master_seed = 7
allow_custom_grid = true

[[names]]
name = "Keisha Towns"
gender = "female"
race = "black"

[[names]]
name = "Brad Walsh"
gender = "male"
race = "white"

[[institutions]]
name = "Stanford University"
prestige = "high"

[[institutions]]
name = "San Jose State University"
prestige = "low"

[[fields]]
name = "economics"
domain = "social"
manuscript = "ms-econ"

[[fields]]
name = "computer science"
domain = "physical"
manuscript = "ms-cs"
"#;

pub fn write_manuscript_fixtures(dir: &Path) -> std::path::PathBuf {
    std::fs::write(
        dir.join("econ.txt"),
        "We estimate the pass-through of minimum wage changes to posted wages on a large online labor platform, using a border-discontinuity design across 1.2 million postings.",
    )
    .unwrap();
    std::fs::write(
        dir.join("cs.txt"),
        "We present a cache-oblivious index structure for approximate nearest neighbor search and prove query bounds that match the best known lower bounds up to logarithmic factors.",
    )
    .unwrap();
    let manifest = dir.join("manifest.toml");
    std::fs::write(
        &manifest,
        r#"
[[manuscripts]]
id = "ms-econ"
title = "Wage Pass-Through in Online Labor Markets"
field = "economics"
publication_date = "2023-05-01"
text_file = "econ.txt"

[[manuscripts]]
id = "ms-cs"
title = "Cache-Oblivious Indexes for Approximate Search"
field = "computer science"
publication_date = "2023-06-15"
text_file = "cs.txt"
"#,
    )
    .unwrap();
    manifest
}

pub fn tiny_corpus() -> ContextCorpus {
    let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
    ContextCorpus::new(
        vec![
            ContextEntry {
                abstract_text: "Monopsony power compresses wage dispersion in gig labor markets."
                    .into(),
                field: "economics".into(),
                date: d("2022-11-02"),
            },
            ContextEntry {
                abstract_text: "Firm-level shocks propagate through subcontracting networks."
                    .into(),
                field: "economics".into(),
                date: d("2023-01-20"),
            },
            ContextEntry {
                abstract_text: "Learned index structures outperform B-trees on skewed workloads."
                    .into(),
                field: "computer science".into(),
                date: d("2023-02-14"),
            },
            ContextEntry {
                abstract_text: "Graph-based ANN search degrades gracefully under deletion storms."
                    .into(),
                field: "computer science".into(),
                date: d("2022-09-30"),
            },
        ],
        600,
    )
    .unwrap()
}

pub struct TestWorld {
    pub config: DesignConfig,
    pub manuscripts: ManuscriptSet,
    pub corpus: ContextCorpus,
    pub templates: TemplateSet,
    // tempdir lives as long as the world; manuscripts were loaded from it
    pub tmp: TempDir,
}

pub fn tiny_world() -> TestWorld {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_manuscript_fixtures(tmp.path());
    TestWorld {
        config: load_roster_str(TINY_ROSTER_TOML).unwrap(),
        manuscripts: load_manuscripts(&manifest).unwrap(),
        corpus: tiny_corpus(),
        templates: TemplateSet::builtin(),
        tmp,
    }
}

/// Every analysis race appears in this roster, so no indicator column is
/// identically zero and the full audit battery is estimable.
const FULL_RACE_ROSTER: &str = r#"
[audit]
iterations = 12
blinded_iterations = 40
master_seed = 11
allow_custom_grid = true

[[names]]
name = "Keisha Towns"
gender = "female"
race = "black"

[[names]]
name = "Jamal Brooks"
gender = "male"
race = "black"

[[names]]
name = "Maria Santos"
gender = "female"
race = "hispanic"

[[names]]
name = "Diego Ramirez"
gender = "male"
race = "hispanic"

[[names]]
name = "Mei Lin"
gender = "female"
race = "chinese"

[[names]]
name = "Raj Patel"
gender = "male"
race = "indian"

[[names]]
name = "Emily Hart"
gender = "female"
race = "white"

[[names]]
name = "Brad Walsh"
gender = "male"
race = "white"

[[institutions]]
name = "Stanford University"
prestige = "high"

[[institutions]]
name = "San Jose State University"
prestige = "low"

[[fields]]
name = "economics"
domain = "social"
manuscript = "ms-econ"

[[fields]]
name = "computer science"
domain = "physical"
manuscript = "ms-cs"
"#;

pub fn full_race_world() -> TestWorld {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_manuscript_fixtures(tmp.path());
    TestWorld {
        config: load_roster_str(FULL_RACE_ROSTER).unwrap(),
        manuscripts: load_manuscripts(&manifest).unwrap(),
        corpus: tiny_corpus(),
        templates: TemplateSet::builtin(),
        tmp,
    }
}

/// Plans for the given stages over the tiny world's full grid.
pub fn tiny_plans(
    world: &TestWorld,
    iterations: u32,
    blinded_iterations: u32,
    stages: &[Stage],
) -> Vec<TrialPlan> {
    let roster = &world.config.roster;
    let cells = build_cells(roster);
    enumerate_trials(
        roster,
        &cells,
        iterations,
        stages,
        blinded_iterations,
        world.config.params.master_seed,
        world.config.params.max_plan_size,
    )
    .unwrap()
}

//! Property tests for the prompt renderer: blinding invariance, identity
//! substitution completeness, and context determinism over generated inputs.

use chrono::NaiveDate;
use proptest::prelude::*;
use revaudit::design::{Manuscript, Stage};
use revaudit::promptkit::{
    assemble_context, render, sha256_hex, AuthorIdentity, ContextCorpus, ContextEntry,
    PromptTemplate,
};

/// Lowercase-only content so the uppercase identity strings below can never
/// collide with manuscript or context text.
fn lowercase_text() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[a-z ]{1,80}").unwrap()
}

fn manuscript(title: String, body: String) -> Manuscript {
    Manuscript {
        id: "ms-prop".into(),
        title,
        field: "statistics".into(),
        publication_date: NaiveDate::from_ymd_opt(2025, 3, 1).unwrap(),
        body,
        augmentation_log: None,
    }
}

proptest! {
    #[test]
    fn blinded_and_nonblinded_differ_only_in_author_line_and_flag(
        title in lowercase_text(),
        body in lowercase_text(),
        abstract_text in lowercase_text(),
        name_id in 0u32..1000,
        inst_id in 0u32..1000,
        stage_idx in 0usize..5,
    ) {
        let stage = Stage::ALL[stage_idx];
        let template = PromptTemplate::builtin(stage);
        let ms = manuscript(title, body);
        let context = format!("Abstract: {abstract_text}");
        let context_arg = stage.is_reviewer().then_some(context.as_str());
        let name = format!("QN{name_id}");
        let institution = format!("QI{inst_id}");

        let full = render(&template, "k", &ms, &ms.field,
            Some(AuthorIdentity { name: &name, institution: &institution }), context_arg).unwrap();
        let blind = render(&template, "k", &ms, &ms.field, None, context_arg).unwrap();

        let full_lines: Vec<&str> = full.text.lines()
            .filter(|l| !(l.contains(&name) && l.contains(&institution)))
            .collect();
        let blind_lines: Vec<&str> = blind.text.lines().collect();
        prop_assert_eq!(full_lines.len(), blind_lines.len());
        let mut flag_swaps = 0;
        for (f, b) in full_lines.iter().zip(&blind_lines) {
            if f == b {
                continue;
            }
            prop_assert_eq!(
                &b.replace("[Blinded]: TRUE", "[Blinded]: FALSE"), f,
                "lines differ beyond the blinding flag"
            );
            flag_swaps += 1;
        }
        prop_assert_eq!(flag_swaps, 1);
    }

    #[test]
    fn nonblinded_render_contains_identity_exactly_once(
        title in lowercase_text(),
        body in lowercase_text(),
        abstract_text in lowercase_text(),
        name_id in 0u32..1000,
        inst_id in 0u32..1000,
        stage_idx in 0usize..5,
    ) {
        let stage = Stage::ALL[stage_idx];
        let template = PromptTemplate::builtin(stage);
        let ms = manuscript(title, body);
        let context = format!("Abstract: {abstract_text}");
        let context_arg = stage.is_reviewer().then_some(context.as_str());
        let name = format!("QN{name_id}X");
        let institution = format!("QI{inst_id}X");

        let r = render(&template, "k", &ms, &ms.field,
            Some(AuthorIdentity { name: &name, institution: &institution }), context_arg).unwrap();
        prop_assert_eq!(r.text.matches(&name).count(), 1);
        prop_assert_eq!(r.text.matches(&institution).count(), 1);

        let blind = render(&template, "k", &ms, &ms.field, None, context_arg).unwrap();
        prop_assert!(!blind.text.contains(&name));
        prop_assert!(!blind.text.contains(&institution));
    }

    #[test]
    fn context_assembly_is_deterministic(
        abstracts in proptest::collection::vec((lowercase_text(), 1u32..28), 1..12),
        cap in 1usize..12,
    ) {
        let entries: Vec<ContextEntry> = abstracts.iter().map(|(text, day)| ContextEntry {
            abstract_text: text.clone(),
            field: "statistics".into(),
            date: NaiveDate::from_ymd_opt(2025, 1, *day).unwrap(),
        }).collect();
        let corpus = ContextCorpus::new(entries, 100).unwrap();
        let cutoff = NaiveDate::from_ymd_opt(2025, 1, 28).unwrap();
        let a = assemble_context(&corpus, "statistics", cutoff, cap).unwrap();
        let b = assemble_context(&corpus, "statistics", cutoff, cap).unwrap();
        prop_assert_eq!(sha256_hex(&a), sha256_hex(&b));
        // newest-first ordering against a brute-force oracle
        let mut expected: Vec<&(String, u32)> = abstracts.iter().collect();
        expected.sort_by_key(|(_, day)| std::cmp::Reverse(*day));
        let first_line = a.lines().next().unwrap();
        prop_assert_eq!(first_line, format!("Abstract: {}", expected[0].0));
    }
}

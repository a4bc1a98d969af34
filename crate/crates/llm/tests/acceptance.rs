//! Offline acceptance checks for the LLM client: request plans for the
//! eight granularities, telemetry against hand-counted token totals, and
//! chapter skipping. Only the scripted mock transport is used.

use charspace::tagger::Component;
use charspace_llm::{
    run_chapter_counts, ChapterText, ClientConfig, Granularity, MockTransport, ScriptEntry, TemplateName,
};
use proptest::prelude::*;

/// Whitespace tokens of each counting prompt with an empty character list
/// and empty text, counted by hand from the template text.
const ALL_TAGS_BASE: usize = 190;
fn single_tag_base(tag: Component) -> usize {
    match tag {
        Component::N | Component::C => 116,
        Component::A => 118,
        Component::I => 115,
        Component::DC | Component::DN => 114,
    }
}

const ALL_REPLY: &str = r#"{"Elizabeth": {"N": 2, "A": 1}}"#;
const ALL_REPLY_TOKENS: usize = 5;
const ALL_REPLY_MS: u64 = 400;
const TAG_REPLY: &str = r#"{"Elizabeth": 1}"#;
const TAG_REPLY_TOKENS: usize = 2;
const TAG_REPLY_MS: u64 = 100;

fn script() -> MockTransport {
    MockTransport::new(vec![
        ScriptEntry {
            pattern: Some("tag only.".into()),
            content: TAG_REPLY.into(),
            elapsed_ms: TAG_REPLY_MS,
            fail: false,
        },
        ScriptEntry {
            pattern: None,
            content: ALL_REPLY.into(),
            elapsed_ms: ALL_REPLY_MS,
            fail: false,
        },
    ])
}

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{}", i % 97)).collect::<Vec<_>>().join(" ")
}

fn chapters() -> Vec<ChapterText> {
    [(1, 2500), (2, 700), (3, 1000)]
        .into_iter()
        .map(|(index, n)| ChapterText { index, text: words(n) })
        .collect()
}

fn characters() -> Vec<String> {
    ["Elizabeth", "Jane", "Darcy"].iter().map(|s| s.to_string()).collect()
}

fn label(g: Granularity) -> String {
    g.to_string()
}

#[test]
fn eight_granularities_issue_the_expected_request_counts() {
    // chunks per chapter: 3, 1, 1; three characters; six tags.
    let expected = [
        ("full", 3),
        ("per-tag", 18),
        ("per-character", 9),
        ("per-character+per-tag", 54),
        ("chunked", 5),
        ("chunked+per-tag", 30),
        ("chunked+per-character", 15),
        ("chunked+per-character+per-tag", 90),
    ];
    for (mode, want) in expected {
        let g = Granularity::parse(mode).unwrap();
        let mock = script();
        let run = run_chapter_counts(&chapters(), &characters(), g, &mock, &ClientConfig::default()).unwrap();
        assert_eq!(mock.calls(), want, "{mode}");
        assert_eq!(run.requests(), want, "{mode}");
        assert!(run.skipped.is_empty());
    }
    println!("PASS eight granularities produce 3/18/9/54/5/30/15/90 requests");
}

/// Hand model of one chapter: for every (chunk, character group, tag set)
/// the prompt carries the template, the group's names and the chunk text.
fn expected_chapter(tokens: usize, g: Granularity) -> (f64, f64, f64) {
    let chunks = if g.chunked { tokens.div_ceil(1000) } else { 1 };
    let groups: Vec<usize> = if g.per_character { vec![1, 1, 1] } else { vec![3] };
    let (mut input, mut output, mut ms) = (0usize, 0usize, 0u64);
    for names in groups {
        if g.per_tag {
            for t in Component::ALL {
                input += chunks * (single_tag_base(t) + names) + tokens;
                output += chunks * TAG_REPLY_TOKENS;
                ms += chunks as u64 * TAG_REPLY_MS;
            }
        } else {
            input += chunks * (ALL_TAGS_BASE + names) + tokens;
            output += chunks * ALL_REPLY_TOKENS;
            ms += chunks as u64 * ALL_REPLY_MS;
        }
    }
    let n = tokens as f64;
    (input as f64 / n, output as f64 / n, 100.0 * (ms as f64 / 1000.0) / n)
}

#[test]
fn telemetry_matches_hand_counted_ratios() {
    let mut worst: f64 = 0.0;
    for g in Granularity::all() {
        let mock = script();
        let run = run_chapter_counts(&chapters(), &characters(), g, &mock, &ClientConfig::default()).unwrap();
        for ch in chapters() {
            let tokens = ch.text.split_whitespace().count();
            let got = run.costs[&ch.index].telemetry().unwrap();
            let (i, o, e) = expected_chapter(tokens, g);
            for (a, b) in [(got.input_token_ratio, i), (got.output_token_ratio, o), (got.relative_elapsed, e)] {
                worst = worst.max((a - b).abs());
                assert!((a - b).abs() < 1e-9, "{} chapter {}: {a} vs {b}", label(g), ch.index);
            }
        }
    }
    println!("PASS telemetry within 1e-9 of hand counts (worst {worst:.1e})");
}

#[test]
fn counts_sum_over_chunks_and_tags() {
    let mock = script();
    let g = Granularity::parse("chunked+per-tag").unwrap();
    let run = run_chapter_counts(&chapters(), &characters(), g, &mock, &ClientConfig::default()).unwrap();
    // Three chunks in chapter 1, each single-tag reply gives Elizabeth 1.
    assert_eq!(run.counts[&(1, "Elizabeth".to_string())], [3; 6]);
    assert_eq!(run.counts[&(2, "Jane".to_string())], [0; 6]);
    let full = run_chapter_counts(&chapters(), &characters(), Granularity::default(), &script(), &ClientConfig::default()).unwrap();
    assert_eq!(full.counts[&(1, "Elizabeth".to_string())], [2, 1, 0, 0, 0, 0]);
    let table = full.score_table("pp");
    assert_eq!(table.rows.len(), 3);
    println!("PASS counts are summed across chunks and tags");
}

#[test]
fn failed_chapter_is_skipped_and_the_run_continues() {
    let mock = MockTransport::new(vec![
        ScriptEntry {
            pattern: Some("w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10".into()),
            content: String::new(),
            elapsed_ms: 0,
            fail: true,
        },
        ScriptEntry {
            pattern: None,
            content: ALL_REPLY.into(),
            elapsed_ms: 1,
            fail: false,
        },
    ]);
    let chapters = vec![
        ChapterText { index: 1, text: words(20) },
        ChapterText { index: 2, text: "Elizabeth walked out .".into() },
    ];
    let run = run_chapter_counts(&chapters, &characters(), Granularity::default(), &mock, &ClientConfig::default()).unwrap();
    assert_eq!(run.skipped.len(), 1);
    assert_eq!(run.skipped[0].chapter, 1);
    assert!(run.counts.keys().all(|k| k.0 == 2));
    println!("PASS failing chapter recorded as skipped");
}

#[test]
fn unparseable_answer_skips_its_chapter() {
    let mock = MockTransport::new(vec![ScriptEntry {
        pattern: None,
        content: "Sorry, no JSON today".into(),
        elapsed_ms: 0,
        fail: false,
    }]);
    let run = run_chapter_counts(&chapters(), &characters(), Granularity::default(), &mock, &ClientConfig::default()).unwrap();
    assert_eq!(run.skipped.len(), 3);
    assert!(run.skipped[0].reason.contains("not JSON"));
}

#[test]
fn mock_output_is_a_pure_function_of_its_inputs() {
    let g = Granularity::parse("chunked+per-character").unwrap();
    let cfg = ClientConfig {
        parallelism: 8,
        ..ClientConfig::default()
    };
    let a = run_chapter_counts(&chapters(), &characters(), g, &script(), &cfg).unwrap();
    let b = run_chapter_counts(&chapters(), &characters(), g, &script(), &ClientConfig::default()).unwrap();
    assert_eq!(a.counts, b.counts);
    assert_eq!(a.costs, b.costs);
}

#[test]
fn every_template_is_reachable_by_name() {
    let names: Vec<&str> = TemplateName::ALL.iter().map(|t| t.as_str()).collect();
    for n in ["all-tags-chunk", "single-tag-chunk", "characters-present", "is-character", "name-mapping"] {
        assert!(names.contains(&n));
    }
    assert_eq!(names.iter().filter(|n| n.starts_with("span-")).count(), 6);
}

proptest! {
    #[test]
    fn book_ratios_are_token_weighted_chapter_means(sizes in prop::collection::vec(1usize..3000, 1..5), mode in 0usize..8) {
        let g = Granularity::all()[mode];
        let chs: Vec<ChapterText> = sizes.iter().enumerate().map(|(i, &n)| ChapterText { index: i + 1, text: words(n) }).collect();
        let run = run_chapter_counts(&chs, &characters(), g, &script(), &ClientConfig::default()).unwrap();
        let book = run.book_telemetry().unwrap();
        let total: f64 = sizes.iter().sum::<usize>() as f64;
        let mut weighted = [0.0; 3];
        for ch in &chs {
            let t = run.costs[&ch.index].telemetry().unwrap();
            let w = ch.text.split_whitespace().count() as f64 / total;
            weighted[0] += w * t.input_token_ratio;
            weighted[1] += w * t.output_token_ratio;
            weighted[2] += w * t.relative_elapsed;
        }
        prop_assert!((book.input_token_ratio - weighted[0]).abs() < 1e-9);
        prop_assert!((book.output_token_ratio - weighted[1]).abs() < 1e-9);
        prop_assert!((book.relative_elapsed - weighted[2]).abs() < 1e-9);
        prop_assert!(book.input_token_ratio >= 0.0 && book.output_token_ratio >= 0.0);
    }
}

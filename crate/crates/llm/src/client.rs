//! Chapter-level counting at eight granularities, with cost telemetry.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use charspace::stats::ScoreTable;
use charspace::tagger::Component;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::response::parse_count_response;
use crate::template::{render_prompt, TemplateError, TemplateName, Vars};
use crate::transport::{ChatRequest, Transport};

/// Whitespace tokens per chunk. Token counts throughout use whitespace
/// splitting rather than a model tokenizer.
pub const CHUNK_TOKENS: usize = 1000;

pub fn whitespace_tokens(s: &str) -> usize {
    s.split_whitespace().count()
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("unknown granularity `{0}` (use `full` or a `+`-joined subset of chunked, per-character, per-tag)")]
    Mode(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("cannot build thread pool: {0}")]
    Pool(String),
}

/// Which of the three splits apply: chapter text into chunks, the
/// character list into single characters, the six tags into single tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Granularity {
    pub chunked: bool,
    pub per_character: bool,
    pub per_tag: bool,
}

impl Granularity {
    pub fn all() -> Vec<Granularity> {
        (0..8)
            .map(|b| Granularity {
                chunked: b & 4 != 0,
                per_character: b & 2 != 0,
                per_tag: b & 1 != 0,
            })
            .collect()
    }

    pub fn parse(s: &str) -> Result<Self, ClientError> {
        let mut g = Granularity::default();
        if s == "full" {
            return Ok(g);
        }
        for part in s.split('+') {
            match part.trim() {
                "chunked" => g.chunked = true,
                "per-character" => g.per_character = true,
                "per-tag" => g.per_tag = true,
                _ => return Err(ClientError::Mode(s.to_string())),
            }
        }
        Ok(g)
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.chunked, "chunked"),
            (self.per_character, "per-character"),
            (self.per_tag, "per-tag"),
        ]
        .iter()
        .filter(|p| p.0)
        .map(|p| p.1)
        .collect();
        if parts.is_empty() {
            f.write_str("full")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChapterText {
    pub index: usize,
    pub text: String,
}

/// Chunks of at most `CHUNK_TOKENS` whitespace tokens, re-joined with single
/// spaces. An empty chapter has no chunks.
pub fn chunk_text(text: &str) -> Vec<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    words.chunks(CHUNK_TOKENS).map(|c| c.join(" ")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRequest {
    pub chapter: usize,
    pub chunk: usize,
    pub characters: Vec<String>,
    pub tags: Vec<Component>,
    pub prompt: String,
}

/// Requests for one chapter: chunks × (characters or 1) × (6 or 1).
pub fn plan_chapter(chapter: &ChapterText, characters: &[String], g: Granularity) -> Result<Vec<PlannedRequest>, ClientError> {
    let texts = if g.chunked {
        chunk_text(&chapter.text)
    } else if whitespace_tokens(&chapter.text) == 0 {
        Vec::new()
    } else {
        vec![chapter.text.clone()]
    };
    let groups: Vec<Vec<String>> = if g.per_character {
        characters.iter().map(|c| vec![c.clone()]).collect()
    } else {
        vec![characters.to_vec()]
    };
    let tag_sets: Vec<Vec<Component>> = if g.per_tag {
        Component::ALL.iter().map(|&t| vec![t]).collect()
    } else {
        vec![Component::ALL.to_vec()]
    };
    let mut out = Vec::new();
    for (chunk, text) in texts.iter().enumerate() {
        for group in &groups {
            for tags in &tag_sets {
                let vars = Vars::new().characters(group).set("text", text.as_str());
                let prompt = match tags.as_slice() {
                    [t] => render_prompt(TemplateName::SingleTagChunk, &vars.tag(*t))?,
                    _ => render_prompt(TemplateName::AllTagsChunk, &vars)?,
                };
                out.push(PlannedRequest {
                    chapter: chapter.index,
                    chunk,
                    characters: group.clone(),
                    tags: tags.clone(),
                    prompt,
                });
            }
        }
    }
    Ok(out)
}

/// Raw token and time totals for one chapter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChapterCost {
    pub chapter_tokens: usize,
    pub input_tokens: usize,
    pub output_tokens: usize,
    pub elapsed_secs: f64,
    pub requests: usize,
}

/// Cost multipliers relative to chapter length; elapsed time is per token
/// and multiplied by 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTelemetry {
    pub input_token_ratio: f64,
    pub output_token_ratio: f64,
    pub relative_elapsed: f64,
}

impl ChapterCost {
    pub fn telemetry(&self) -> Option<CostTelemetry> {
        let n = self.chapter_tokens as f64;
        (n > 0.0).then(|| CostTelemetry {
            input_token_ratio: self.input_tokens as f64 / n,
            output_token_ratio: self.output_tokens as f64 / n,
            relative_elapsed: 100.0 * self.elapsed_secs / n,
        })
    }

    fn add(&mut self, other: &ChapterCost) {
        self.chapter_tokens += other.chapter_tokens;
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
        self.elapsed_secs += other.elapsed_secs;
        self.requests += other.requests;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterSkipped {
    pub chapter: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountRun {
    pub granularity: Granularity,
    /// Summed counts per (chapter, character) for completed chapters.
    pub counts: BTreeMap<(usize, String), [u64; 6]>,
    pub costs: BTreeMap<usize, ChapterCost>,
    pub skipped: Vec<ChapterSkipped>,
    /// Names the model returned that were not asked about, per chapter.
    pub unknown_names: BTreeMap<usize, Vec<String>>,
}

impl CountRun {
    /// Book-level telemetry: totals over chapters, which equals the
    /// chapter-length-weighted mean of the per-chapter ratios.
    pub fn book_telemetry(&self) -> Option<CostTelemetry> {
        let mut total = ChapterCost::default();
        for c in self.costs.values() {
            total.add(c);
        }
        total.telemetry()
    }

    pub fn requests(&self) -> usize {
        self.costs.values().map(|c| c.requests).sum()
    }

    /// Counts as a score table, rows for characters with a non-zero vector.
    pub fn score_table(&self, novel_id: &str) -> ScoreTable {
        let mut t = ScoreTable::default();
        for ((chapter, name), v) in &self.counts {
            if v.iter().any(|&c| c > 0) {
                t.insert(novel_id, *chapter, name, v.map(|c| c as f64)).expect("keys are unique");
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub model: String,
    pub temperature: f64,
    pub parallelism: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            parallelism: 4,
        }
    }
}

struct Outcome {
    content: Result<String, String>,
    elapsed: Duration,
}

/// Counts components for `characters` in every chapter. A chapter whose
/// requests fail, or whose answers cannot be parsed, is recorded as skipped
/// and the run continues.
pub fn run_chapter_counts(
    chapters: &[ChapterText],
    characters: &[String],
    g: Granularity,
    transport: &dyn Transport,
    cfg: &ClientConfig,
) -> Result<CountRun, ClientError> {
    let mut plans = Vec::new();
    for ch in chapters {
        plans.push(plan_chapter(ch, characters, g)?);
    }
    let flat: Vec<&PlannedRequest> = plans.iter().flatten().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| ClientError::Pool(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        flat.par_iter()
            .map(|p| {
                let req = ChatRequest::user(&cfg.model, cfg.temperature, p.prompt.clone());
                match transport.complete(&req) {
                    Ok(r) => Outcome {
                        content: Ok(r.content),
                        elapsed: r.elapsed,
                    },
                    Err(e) => Outcome {
                        content: Err(e.to_string()),
                        elapsed: Duration::ZERO,
                    },
                }
            })
            .collect()
    });

    let mut run = CountRun {
        granularity: g,
        counts: BTreeMap::new(),
        costs: BTreeMap::new(),
        skipped: Vec::new(),
        unknown_names: BTreeMap::new(),
    };
    let mut results = flat.iter().zip(&outcomes);
    for (ch, plan) in chapters.iter().zip(&plans) {
        let mut cost = ChapterCost {
            chapter_tokens: whitespace_tokens(&ch.text),
            ..Default::default()
        };
        let mut counts: BTreeMap<String, [u64; 6]> = characters.iter().map(|c| (c.clone(), [0; 6])).collect();
        let mut unknown = Vec::new();
        let mut failure = None;
        for _ in 0..plan.len() {
            let (p, o) = results.next().expect("one outcome per request");
            cost.requests += 1;
            cost.input_tokens += whitespace_tokens(&p.prompt);
            cost.elapsed_secs += o.elapsed.as_secs_f64();
            let content = match &o.content {
                Ok(c) => c,
                Err(e) => {
                    failure.get_or_insert_with(|| format!("chunk {}: {e}", p.chunk));
                    continue;
                }
            };
            cost.output_tokens += whitespace_tokens(content);
            match parse_count_response(content, &p.tags, &p.characters) {
                Ok(parsed) => {
                    for (name, v) in parsed.counts {
                        let slot = counts.get_mut(&name).expect("requested characters are known");
                        for (a, b) in slot.iter_mut().zip(v) {
                            *a += b;
                        }
                    }
                    unknown.extend(parsed.unknown);
                }
                Err(e) => {
                    failure.get_or_insert_with(|| format!("chunk {}: {e}", p.chunk));
                }
            }
        }
        run.costs.insert(ch.index, cost);
        if let Some(reason) = failure {
            log::warn!("chapter {} skipped: {reason}", ch.index);
            run.skipped.push(ChapterSkipped { chapter: ch.index, reason });
            continue;
        }
        if !unknown.is_empty() {
            unknown.sort();
            unknown.dedup();
            run.unknown_names.insert(ch.index, unknown);
        }
        for (name, v) in counts {
            run.counts.insert((ch.index, name), v);
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn granularity_round_trips_through_text() {
        let all = Granularity::all();
        assert_eq!(all.len(), 8);
        for g in all {
            assert_eq!(Granularity::parse(&g.to_string()).unwrap(), g);
        }
        assert!(Granularity::parse("chunky").is_err());
    }

    #[test]
    fn chunks_use_ceiling_division() {
        assert_eq!(chunk_text(&words(2500)).len(), 3);
        assert_eq!(chunk_text(&words(1000)).len(), 1);
        assert_eq!(chunk_text(&words(1001)).len(), 2);
        assert!(chunk_text("  \n").is_empty());
        let c = chunk_text(&words(2500));
        assert_eq!(whitespace_tokens(&c[2]), 500);
    }

    #[test]
    fn plan_size_is_the_product_of_the_splits() {
        let ch = ChapterText {
            index: 1,
            text: words(2500),
        };
        let names: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let g = Granularity {
            chunked: true,
            per_character: true,
            per_tag: true,
        };
        let plan = plan_chapter(&ch, &names, g).unwrap();
        assert_eq!(plan.len(), 3 * 2 * 6);
        assert!(plan.iter().all(|p| p.characters.len() == 1 && p.tags.len() == 1));
    }
}

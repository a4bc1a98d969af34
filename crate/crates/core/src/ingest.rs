//! Raw novel text loading, boilerplate stripping and segmentation into
//! chapters, paragraphs and sentences.
//!
//! All offsets are byte offsets into the stripped body. A [`Document`] keeps
//! enough separator text to rebuild that body exactly (see
//! [`Document::rejoin`]).

use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Optional (heading text, heading start) and the paragraph blocks under it.
type HeadingGroup = (Option<(String, usize)>, Vec<Block>);

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is empty")]
    EmptyText(String),
    #[error("boilerplate error: {0}")]
    Boilerplate(String),
    #[error("invalid chapter heading pattern: {0}")]
    Pattern(#[from] regex::Error),
}

/// Novel text with newlines normalized to `\n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawText {
    pub source_id: String,
    pub text: String,
}

impl RawText {
    pub fn new(source_id: impl Into<String>, text: &str) -> Result<Self, IngestError> {
        let source_id = source_id.into();
        let text = normalize_newlines(text);
        if text.trim().is_empty() {
            return Err(IngestError::EmptyText(source_id));
        }
        Ok(RawText { source_id, text })
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        RawText::new(id, &text)
    }
}

fn normalize_newlines(text: &str) -> String {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Result of [`strip_boilerplate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripped {
    pub body: String,
    /// Set when no start/end sentinel was found and the text passed through.
    pub sentinels_missing: bool,
}

fn sentinel_line(text: &str, marker: &str) -> Option<(usize, usize)> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if trimmed.starts_with("***") && trimmed.to_ascii_uppercase().contains(marker) {
            return Some((offset, offset + line.len()));
        }
        offset += line.len();
    }
    None
}

/// Keeps the text between the Project Gutenberg `*** START OF` and
/// `*** END OF` sentinel lines.
pub fn strip_boilerplate(raw: &RawText) -> Result<Stripped, IngestError> {
    let start = sentinel_line(&raw.text, "START OF");
    let end = sentinel_line(&raw.text, "END OF");
    let body = match (start, end) {
        (None, None) => {
            log::warn!("{}: no Gutenberg sentinels found, keeping full text", raw.source_id);
            return Ok(Stripped {
                body: raw.text.clone(),
                sentinels_missing: true,
            });
        }
        (Some((_, s_end)), Some((e_start, _))) => {
            if e_start < s_end {
                return Err(IngestError::Boilerplate(format!(
                    "{}: END sentinel precedes START sentinel",
                    raw.source_id
                )));
            }
            &raw.text[s_end..e_start]
        }
        (Some((_, s_end)), None) => &raw.text[s_end..],
        (None, Some((e_start, _))) => &raw.text[..e_start],
    };
    let body = body.trim();
    if body.is_empty() {
        return Err(IngestError::Boilerplate(format!(
            "{}: empty body after stripping",
            raw.source_id
        )));
    }
    Ok(Stripped {
        body: body.to_string(),
        sentinels_missing: false,
    })
}

pub const DEFAULT_HEADING_PATTERN: &str = r"(?i)^\s*chapter\s+([ivxlcdm]+|\d+)\b";

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "St", "Col", "Capt", "Gen", "Lt", "Rev", "Prof", "Sr", "Jr", "Messrs",
    "Mme", "Mlle", "Esq", "Hon", "No", "vol", "viz", "etc", "i.e", "e.g", "cf",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub heading_pattern: String,
    pub keep_preamble: bool,
    pub abbreviations: Vec<String>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            heading_pattern: DEFAULT_HEADING_PATTERN.to_string(),
            keep_preamble: false,
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    /// Document-global paragraph number.
    pub index: usize,
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
    /// Body text between this paragraph and the next one (blank lines,
    /// chapter headings, trailing whitespace).
    pub separator: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chapter {
    pub index: usize,
    pub heading: String,
    /// Byte offset where the chapter (its heading) begins.
    pub start_offset: usize,
    pub end_offset: usize,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    /// Body text before the first paragraph (dropped preamble, first heading).
    pub leading: String,
    pub chapters: Vec<Chapter>,
    /// No chapter heading matched; the whole body is chapter 1.
    pub single_chapter_fallback: bool,
}

impl Document {
    /// Reassembles the segmented body byte for byte.
    pub fn rejoin(&self) -> String {
        let mut out = self.leading.clone();
        for p in self.paragraphs() {
            out.push_str(&p.text);
            out.push_str(&p.separator);
        }
        out
    }

    pub fn paragraphs(&self) -> impl Iterator<Item = &Paragraph> {
        self.chapters.iter().flat_map(|c| c.paragraphs.iter())
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.paragraphs().flat_map(|p| p.sentences.iter())
    }

    /// Chapter containing byte `offset`, if any.
    pub fn chapter_at(&self, offset: usize) -> Option<usize> {
        self.chapters
            .iter()
            .find(|c| c.start_offset <= offset && offset < c.end_offset)
            .map(|c| c.index)
    }

    pub fn word_count(&self, chapter: usize) -> usize {
        self.chapters
            .iter()
            .filter(|c| c.index == chapter)
            .flat_map(|c| c.paragraphs.iter())
            .map(|p| p.text.split_whitespace().count())
            .sum()
    }
}

/// Paragraph block: maximal run of non-blank lines, trimmed.
struct Block {
    start: usize,
    end: usize,
}

fn blocks(body: &str) -> Vec<Block> {
    let mut out = Vec::new();
    let mut offset = 0;
    let mut current: Option<Block> = None;
    for line in body.split_inclusive('\n') {
        let content = line.trim_end_matches('\n');
        if content.trim().is_empty() {
            if let Some(b) = current.take() {
                out.push(b);
            }
        } else {
            let lead = content.len() - content.trim_start().len();
            let line_start = offset + lead;
            let line_end = offset + content.trim_end().len();
            match current.as_mut() {
                Some(b) => b.end = line_end,
                None => {
                    current = Some(Block {
                        start: line_start,
                        end: line_end,
                    })
                }
            }
        }
        offset += line.len();
    }
    if let Some(b) = current {
        out.push(b);
    }
    out
}

/// Splits chapters on headings, paragraphs on blank lines, and sentences on
/// terminal punctuation followed by whitespace and a capital letter.
pub fn segment_document(
    id: &str,
    title: &str,
    body: &str,
    config: &SegmentConfig,
) -> Result<Document, IngestError> {
    if body.trim().is_empty() {
        return Err(IngestError::EmptyText(id.to_string()));
    }
    let heading = Regex::new(&config.heading_pattern)?;
    let splitter = SentenceSplitter::new(&config.abbreviations);

    // (heading text, heading start, paragraph blocks)
    let mut groups: Vec<HeadingGroup> = vec![(None, Vec::new())];
    for block in blocks(body) {
        let text = &body[block.start..block.end];
        let first_line = text.lines().next().unwrap_or("");
        if heading.is_match(first_line) {
            groups.push((Some((text.to_string(), block.start)), Vec::new()));
        } else {
            groups.last_mut().unwrap().1.push(block);
        }
    }

    let fallback = groups.len() == 1;
    let mut kept: Vec<(usize, String, usize, Vec<Block>)> = Vec::new();
    let mut groups = groups.into_iter();
    let (_, preamble) = groups.next().unwrap();
    if fallback {
        log::warn!("{id}: no chapter headings found, treating body as a single chapter");
        kept.push((1, String::new(), 0, preamble));
    } else {
        if config.keep_preamble && !preamble.is_empty() {
            kept.push((0, String::new(), 0, preamble));
        }
        for (n, (head, paras)) in groups.enumerate() {
            let (text, start) = head.unwrap();
            kept.push((n + 1, text, start, paras));
        }
    }

    let mut chapters = Vec::with_capacity(kept.len());
    let mut para_index = 0;
    for (index, heading, start, paras) in kept {
        let paragraphs = paras
            .into_iter()
            .map(|b| {
                let sentences = splitter.split(body, b.start, b.end);
                let p = Paragraph {
                    index: para_index,
                    text: body[b.start..b.end].to_string(),
                    start_offset: b.start,
                    end_offset: b.end,
                    separator: String::new(),
                    sentences,
                };
                para_index += 1;
                p
            })
            .collect();
        chapters.push(Chapter {
            index,
            heading,
            start_offset: start,
            end_offset: 0,
            paragraphs,
        });
    }
    // Chapters without paragraphs (e.g. a heading directly followed by
    // another heading) carry no countable text.
    chapters.retain(|c| !c.paragraphs.is_empty());
    renumber(&mut chapters, config.keep_preamble && !fallback);

    // Separators and chapter extents.
    let starts: Vec<usize> = chapters
        .iter()
        .flat_map(|c| c.paragraphs.iter().map(|p| p.start_offset))
        .collect();
    let first_start = starts.first().copied().unwrap_or(body.len());
    let mut k = 0;
    for c in chapters.iter_mut() {
        for p in c.paragraphs.iter_mut() {
            let next = starts.get(k + 1).copied().unwrap_or(body.len());
            p.separator = body[p.end_offset..next].to_string();
            k += 1;
        }
    }
    let chapter_starts: Vec<usize> = chapters
        .iter()
        .map(|c| c.start_offset.min(c.paragraphs[0].start_offset))
        .collect();
    for (i, c) in chapters.iter_mut().enumerate() {
        c.start_offset = chapter_starts[i];
        c.end_offset = chapter_starts.get(i + 1).copied().unwrap_or(body.len());
    }

    Ok(Document {
        id: id.to_string(),
        title: title.to_string(),
        leading: body[..first_start].to_string(),
        chapters,
        single_chapter_fallback: fallback,
    })
}

// Real chapters are 1..n; a kept preamble is chapter 0.
fn renumber(chapters: &mut [Chapter], keep_preamble: bool) {
    let has_preamble = keep_preamble && chapters.first().map(|c| c.heading.is_empty()).unwrap_or(false);
    let mut next = 1;
    for (i, c) in chapters.iter_mut().enumerate() {
        if has_preamble && i == 0 {
            c.index = 0;
        } else {
            c.index = next;
            next += 1;
        }
    }
}

/// Deterministic rule-based sentence splitter.
pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl SentenceSplitter {
    pub fn new(abbreviations: &[String]) -> Self {
        SentenceSplitter {
            abbreviations: abbreviations.to_vec(),
        }
    }

    fn is_abbreviation(&self, before: &str) -> bool {
        let word = before
            .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"' || c == '\u{201c}')
            .next()
            .unwrap_or("");
        if word.chars().count() == 1 && word.chars().all(|c| c.is_uppercase()) {
            // initials such as "J. Smith"
            return true;
        }
        self.abbreviations.iter().any(|a| a == word)
    }

    /// Sentences of `body[start..end]` with absolute offsets.
    pub fn split(&self, body: &str, start: usize, end: usize) -> Vec<Sentence> {
        let text = &body[start..end];
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut bounds = Vec::new();
        let mut sent_start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if matches!(c, '.' | '!' | '?') {
                // absorb closing punctuation
                let mut j = i + 1;
                while j < chars.len()
                    && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')' | '\u{201d}' | '\u{2019}' | '_')
                {
                    j += 1;
                }
                let end_pos = chars.get(j).map(|x| x.0).unwrap_or(text.len());
                let mut k = j;
                let mut saw_space = false;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    saw_space = true;
                    k += 1;
                }
                while k < chars.len() && matches!(chars[k].1, '"' | '\'' | '(' | '\u{201c}' | '\u{2018}' | '_') {
                    k += 1;
                }
                let next_upper = chars.get(k).map(|x| x.1.is_uppercase()).unwrap_or(false);
                if saw_space && next_upper && !(c == '.' && self.is_abbreviation(&text[..pos])) {
                    bounds.push((sent_start, end_pos));
                    // next sentence starts at first non-space char
                    let mut s = j;
                    while s < chars.len() && chars[s].1.is_whitespace() {
                        s += 1;
                    }
                    sent_start = chars[s].0;
                    i = s;
                    continue;
                }
                i = j.max(i + 1);
                continue;
            }
            i += 1;
        }
        if sent_start < text.len() {
            bounds.push((sent_start, text.len()));
        }
        bounds
            .into_iter()
            .enumerate()
            .map(|(index, (s, e))| Sentence {
                index,
                text: text[s..e].to_string(),
                start_offset: start + s,
                end_offset: start + e,
            })
            .collect()
    }
}

//! Span-level tagging of the six narrative components per character and
//! chapter.
//!
//! Every count is derived from a list of [`TaggedSpan`]s, so summing spans by
//! (component, character, chapter) always reproduces [`ComponentScores`].
//! A sentence overlapping any quote feeds C and DC only; the remaining
//! narration sentences feed A, I and DN.

pub mod lexicon;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::annotation::{AnnotationBundle, CharId, MentionProp, Registry, TokenId};
use crate::ingest::Document;

type QuotedSegments = BTreeMap<(usize, CharRef), (TokenId, TokenId, Vec<(TokenId, TokenId)>)>;

pub use lexicon::{AppearanceLexicon, LexiconError, Lexicons, VerbClass, VerbLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    N,
    A,
    C,
    I,
    DC,
    DN,
}

impl Component {
    /// Column order used by `scores.csv` and gold tables.
    pub const ALL: [Component; 6] = [
        Component::N,
        Component::A,
        Component::C,
        Component::I,
        Component::DC,
        Component::DN,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Component::N => "N",
            Component::A => "A",
            Component::C => "C",
            Component::I => "I",
            Component::DC => "DC",
            Component::DN => "DN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A registry character or the pseudo-character collecting quotes whose
/// speaker is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharRef {
    Char(CharId),
    Unattributed,
}

pub const UNATTRIBUTED: &str = "UNATTRIBUTED";

impl CharRef {
    pub fn id(self) -> Option<CharId> {
        match self {
            CharRef::Char(id) => Some(id),
            CharRef::Unattributed => None,
        }
    }
}

impl Serialize for CharRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CharRef::Char(id) => s.serialize_u64(*id as u64),
            CharRef::Unattributed => s.serialize_str(UNATTRIBUTED),
        }
    }
}

impl<'de> Deserialize<'de> for CharRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Id(u64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Id(i) => Ok(CharRef::Char(i as CharId)),
            Raw::Name(s) if s == UNATTRIBUTED => Ok(CharRef::Unattributed),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("bad character reference `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSpan {
    pub component: Component,
    pub char_id: CharRef,
    pub chapter_index: usize,
    pub sentence_id: usize,
    pub start_token: TokenId,
    pub end_token: TokenId,
    /// Speaker of a DC span.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub speaker_char_id: Option<CharRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub char_id: CharId,
    pub chapter_index: usize,
    pub counts: [u64; 6],
}

impl ComponentScores {
    pub fn get(&self, c: Component) -> u64 {
        self.counts[c.index()]
    }

    pub fn total_score(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Maps bundle tokens to document chapters. Every token of a sentence shares
/// the chapter of the sentence's first token; `None` marks dropped text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChapterMap {
    token_chapter: Vec<Option<usize>>,
}

impl ChapterMap {
    /// Everything in one chapter (index 1).
    pub fn single(bundle: &AnnotationBundle) -> Self {
        ChapterMap {
            token_chapter: vec![Some(1); bundle.tokens.len()],
        }
    }

    pub fn from_token_chapters(bundle: &AnnotationBundle, chapters: Vec<Option<usize>>) -> Self {
        assert_eq!(chapters.len(), bundle.tokens.len());
        let mut m = ChapterMap { token_chapter: chapters };
        m.unify_sentences(bundle);
        m
    }

    /// Aligns token words against the document body left to right and
    /// reads the chapter off each matched offset. Tokens that cannot be found
    /// nearby inherit the previous token's chapter.
    pub fn align(doc: &Document, bundle: &AnnotationBundle) -> Self {
        const WINDOW: usize = 400;
        let body = doc.rejoin();
        let mut cursor = 0;
        let mut prev: Option<usize> = None;
        let mut out = Vec::with_capacity(bundle.tokens.len());
        for t in &bundle.tokens {
            let limit = floor_char_boundary(&body, (cursor + WINDOW + t.word.len()).min(body.len()));
            let hay = &body[cursor..limit];
            let found = candidates(&t.word)
                .iter()
                .filter_map(|w| hay.find(w.as_str()).map(|p| (p, w.len())))
                .min();
            match found {
                Some((p, len)) => {
                    let pos = cursor + p;
                    cursor = pos + len;
                    prev = doc.chapter_at(pos);
                    out.push(prev);
                }
                None => out.push(prev),
            }
        }
        Self::from_token_chapters(bundle, out)
    }

    fn unify_sentences(&mut self, bundle: &AnnotationBundle) {
        let mut current: Option<(usize, Option<usize>)> = None;
        for (i, t) in bundle.tokens.iter().enumerate() {
            match current {
                Some((s, ch)) if s == t.sentence_id => self.token_chapter[i] = ch,
                _ => current = Some((t.sentence_id, self.token_chapter[i])),
            }
        }
    }

    pub fn chapter(&self, token: TokenId) -> Option<usize> {
        self.token_chapter[token]
    }

    pub fn chapters(&self) -> Vec<usize> {
        self.token_chapter
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

fn floor_char_boundary(s: &str, mut i: usize) -> usize {
    while i > 0 && !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

fn candidates(word: &str) -> Vec<String> {
    match word {
        "``" | "''" | "\"" => ["\"", "\u{201c}", "\u{201d}", "``", "''"].iter().map(|s| s.to_string()).collect(),
        "`" | "'" => ["'", "\u{2018}", "\u{2019}", "`"].iter().map(|s| s.to_string()).collect(),
        "-LRB-" => vec!["(".into()],
        "-RRB-" => vec![")".into()],
        w => vec![w.to_string()],
    }
}

/// Per-book lookups shared by all chapter taggers.
pub struct TaggerContext<'a> {
    pub bundle: &'a AnnotationBundle,
    pub registry: &'a Registry,
    pub lexicons: &'a Lexicons,
    pub chapters: &'a ChapterMap,
    mention_char: Vec<Option<CharId>>,
    quote_speaker: Vec<CharRef>,
    /// sentence id -> (first token, last token)
    sentence_range: BTreeMap<usize, (TokenId, TokenId)>,
    quoted_sentences: BTreeSet<usize>,
    /// sentence id -> person mention indices ordered by start token
    sentence_mentions: BTreeMap<usize, Vec<usize>>,
}

impl<'a> TaggerContext<'a> {
    pub fn new(
        bundle: &'a AnnotationBundle,
        registry: &'a Registry,
        lexicons: &'a Lexicons,
        chapters: &'a ChapterMap,
    ) -> Self {
        let clusters = registry.cluster_map();
        let mention_char = bundle
            .mentions
            .iter()
            .map(|m| clusters.get(&m.cluster_id).copied())
            .collect();
        let quote_speaker = bundle
            .quotes
            .iter()
            .map(|q| match q.speaker_cluster.and_then(|k| clusters.get(&k)) {
                Some(&id) => CharRef::Char(id),
                None => CharRef::Unattributed,
            })
            .collect();
        let mut sentence_range = BTreeMap::new();
        for t in &bundle.tokens {
            sentence_range
                .entry(t.sentence_id)
                .and_modify(|r: &mut (TokenId, TokenId)| r.1 = t.token_id)
                .or_insert((t.token_id, t.token_id));
        }
        let quoted_sentences = bundle
            .quotes
            .iter()
            .flat_map(|q| q.sentence_ids.iter().copied())
            .collect();
        let mut sentence_mentions: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, m) in bundle.mentions.iter().enumerate() {
            if m.is_person() {
                sentence_mentions.entry(bundle.sentence_of(m.start_token)).or_default().push(i);
            }
        }
        for v in sentence_mentions.values_mut() {
            v.sort_by_key(|&i| (bundle.mentions[i].start_token, bundle.mentions[i].end_token));
        }
        TaggerContext {
            bundle,
            registry,
            lexicons,
            chapters,
            mention_char,
            quote_speaker,
            sentence_range,
            quoted_sentences,
            sentence_mentions,
        }
    }

    fn sentence_chapter(&self, sentence: usize) -> Option<usize> {
        self.sentence_range.get(&sentence).and_then(|&(s, _)| self.chapters.chapter(s))
    }

    fn narration_sentences(&self, chapter: usize) -> impl Iterator<Item = (usize, (TokenId, TokenId))> + '_ {
        self.sentence_range
            .iter()
            .filter(move |(s, _)| !self.quoted_sentences.contains(s) && self.sentence_chapter(**s) == Some(chapter))
            .map(|(s, r)| (*s, *r))
    }

    fn span(&self, component: Component, who: CharRef, chapter: usize, sentence: usize, range: (TokenId, TokenId)) -> TaggedSpan {
        TaggedSpan {
            component,
            char_id: who,
            chapter_index: chapter,
            sentence_id: sentence,
            start_token: range.0,
            end_token: range.1,
            speaker_char_id: None,
        }
    }

    /// Proper-name mentions of each character.
    pub fn count_names(&self, chapter: usize) -> Vec<TaggedSpan> {
        self.bundle
            .mentions
            .iter()
            .enumerate()
            .filter(|(i, m)| {
                m.prop == MentionProp::Proper
                    && self.mention_char[*i].is_some()
                    && self.chapters.chapter(m.start_token) == Some(chapter)
            })
            .map(|(i, m)| {
                let who = CharRef::Char(self.mention_char[i].unwrap());
                self.span(Component::N, who, chapter, self.bundle.sentence_of(m.start_token), (m.start_token, m.end_token))
            })
            .collect()
    }

    /// Quoted stretches of each sentence in `chapter`, merged per speaker:
    /// (sentence, speaker) -> (first token, last token, quote ranges).
    fn quoted_segments(&self, chapter: usize) -> QuotedSegments {
        let mut out: QuotedSegments = BTreeMap::new();
        for (qi, q) in self.bundle.quotes.iter().enumerate() {
            for &s in &q.sentence_ids {
                if self.sentence_chapter(s) != Some(chapter) {
                    continue;
                }
                let (a, b) = self.sentence_range[&s];
                let (lo, hi) = (a.max(q.start_token), b.min(q.end_token));
                let e = out.entry((s, self.quote_speaker[qi])).or_insert((lo, hi, Vec::new()));
                e.0 = e.0.min(lo);
                e.1 = e.1.max(hi);
                e.2.push((lo, hi));
            }
        }
        out
    }

    /// One span per quoted sentence and speaker; a sentence broken by a
    /// speech tag ("..." said he, "...") still counts once.
    pub fn tag_communication(&self, chapter: usize) -> Vec<TaggedSpan> {
        self.quoted_segments(chapter)
            .into_iter()
            .map(|((s, who), (lo, hi, _))| self.span(Component::C, who, chapter, s, (lo, hi)))
            .collect()
    }

    /// Verb supersense spans in narration, credited to the nearest preceding
    /// person mention in the same sentence (or an explicit agent link).
    pub fn tag_action_interiority(&self, chapter: usize) -> Vec<TaggedSpan> {
        let clusters = self.registry.cluster_map();
        let mut out = Vec::new();
        for ss in &self.bundle.supersenses {
            let sentence = self.bundle.sentence_of(ss.start_token);
            if self.quoted_sentences.contains(&sentence) || self.sentence_chapter(sentence) != Some(chapter) {
                continue;
            }
            let lemma = &self.bundle.tokens[ss.start_token].lemma;
            let component = match self.lexicons.verbs.classify(&ss.label, lemma) {
                Some(VerbClass::Action) => Component::A,
                Some(VerbClass::Interiority) => Component::I,
                _ => continue,
            };
            let subject = match ss.agent_cluster {
                Some(k) => clusters.get(&k).copied(),
                None => self.sentence_mentions.get(&sentence).and_then(|ms| {
                    ms.iter()
                        .rev()
                        .find(|&&i| self.bundle.mentions[i].end_token < ss.start_token)
                        .and_then(|&i| self.mention_char[i])
                }),
            };
            if let Some(id) = subject {
                out.push(self.span(component, CharRef::Char(id), chapter, sentence, (ss.start_token, ss.end_token)));
            }
        }
        out
    }

    /// For each quoted sentence, every distinct other character mentioned
    /// inside the speaker's quotes gets one DC span with that speaker.
    pub fn tag_discussion(&self, chapter: usize) -> Vec<TaggedSpan> {
        let mut out = Vec::new();
        for ((s, speaker), (lo, hi, ranges)) in self.quoted_segments(chapter) {
            let targets: BTreeSet<CharId> = self
                .sentence_mentions
                .get(&s)
                .into_iter()
                .flatten()
                .filter(|&&i| {
                    let start = self.bundle.mentions[i].start_token;
                    ranges.iter().any(|&(a, b)| start >= a && start <= b)
                })
                .filter_map(|&i| self.mention_char[i])
                .filter(|&v| speaker != CharRef::Char(v))
                .collect();
            for v in targets {
                let mut sp = self.span(Component::DC, CharRef::Char(v), chapter, s, (lo, hi));
                sp.speaker_char_id = Some(speaker);
                out.push(sp);
            }
        }
        out
    }

    /// Narration sentences describing a character: an appearance term
    /// anywhere in the sentence describes every character mentioned there; a
    /// copula shortly after a mention ("X was pale") describes that mention's
    /// character.
    pub fn tag_narrator_description(&self, chapter: usize) -> Vec<TaggedSpan> {
        let lex = &self.lexicons.appearance;
        let tokens = &self.bundle.tokens;
        let mut out = Vec::new();
        for (s, (a, b)) in self.narration_sentences(chapter) {
            let Some(ms) = self.sentence_mentions.get(&s) else {
                continue;
            };
            let has_term = tokens[a..=b].iter().any(|t| lex.is_term(&t.word));
            let mut described = BTreeSet::new();
            for (k, &mi) in ms.iter().enumerate() {
                let Some(id) = self.mention_char[mi] else {
                    continue;
                };
                if has_term {
                    described.insert(id);
                    continue;
                }
                let m = &self.bundle.mentions[mi];
                let next_mention = ms.get(k + 1).map(|&j| self.bundle.mentions[j].start_token).unwrap_or(usize::MAX);
                let window_end = (m.end_token + lex.copula_window).min(b);
                for c in (m.end_token + 1)..=window_end {
                    if c >= next_mention {
                        break;
                    }
                    if lex.copulas.contains(&tokens[c].lemma.to_lowercase()) {
                        let complement = tokens.get(c + 1).filter(|_| c < b);
                        if complement.is_some_and(|t| lex.complement_pos.iter().any(|p| t.pos.starts_with(p.as_str()))) {
                            described.insert(id);
                        }
                        break;
                    }
                }
            }
            for id in described {
                out.push(self.span(Component::DN, CharRef::Char(id), chapter, s, (a, b)));
            }
        }
        out
    }

    /// All five taggers for one chapter.
    pub fn score_chapter(&self, chapter: usize) -> ChapterScores {
        let mut spans = self.count_names(chapter);
        spans.extend(self.tag_communication(chapter));
        spans.extend(self.tag_action_interiority(chapter));
        spans.extend(self.tag_discussion(chapter));
        spans.extend(self.tag_narrator_description(chapter));
        spans.sort_by_key(|s| (s.sentence_id, s.start_token, s.component, s.char_id, s.speaker_char_id));
        ChapterScores::from_spans(chapter, spans)
    }

    /// Every chapter, scored in parallel and merged in chapter order.
    pub fn score_book(&self) -> BookScores {
        let chapters = self.chapters.chapters();
        let per: Vec<ChapterScores> = chapters.par_iter().map(|&c| self.score_chapter(c)).collect();
        BookScores { chapters: per }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChapterScores {
    pub chapter_index: usize,
    /// Characters with a non-zero vector, by char id.
    pub scores: Vec<ComponentScores>,
    /// C sentences with an unknown speaker.
    pub unattributed_c: u64,
    pub spans: Vec<TaggedSpan>,
}

impl ChapterScores {
    pub fn from_spans(chapter: usize, spans: Vec<TaggedSpan>) -> Self {
        let mut by_char: BTreeMap<CharId, [u64; 6]> = BTreeMap::new();
        let mut unattributed_c = 0;
        for s in &spans {
            match s.char_id {
                CharRef::Char(id) => by_char.entry(id).or_default()[s.component.index()] += 1,
                CharRef::Unattributed => unattributed_c += 1,
            }
        }
        ChapterScores {
            chapter_index: chapter,
            scores: by_char
                .into_iter()
                .filter(|(_, v)| v.iter().any(|&x| x > 0))
                .map(|(char_id, counts)| ComponentScores {
                    char_id,
                    chapter_index: chapter,
                    counts,
                })
                .collect(),
            unattributed_c,
            spans,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BookScores {
    pub chapters: Vec<ChapterScores>,
}

impl BookScores {
    pub fn scores(&self) -> impl Iterator<Item = &ComponentScores> {
        self.chapters.iter().flat_map(|c| c.scores.iter())
    }

    pub fn spans(&self) -> impl Iterator<Item = &TaggedSpan> {
        self.chapters.iter().flat_map(|c| c.spans.iter())
    }

    /// Book-level totals per character (sum over chapters).
    pub fn totals(&self) -> BTreeMap<CharId, [u64; 6]> {
        let mut out: BTreeMap<CharId, [u64; 6]> = BTreeMap::new();
        for s in self.scores() {
            let e = out.entry(s.char_id).or_default();
            for (a, b) in e.iter_mut().zip(s.counts) {
                *a += b;
            }
        }
        out
    }

    pub fn dc_spans(&self) -> Vec<TaggedSpan> {
        self.spans().filter(|s| s.component == Component::DC).cloned().collect()
    }

    pub fn unattributed_c(&self) -> u64 {
        self.chapters.iter().map(|c| c.unattributed_c).sum()
    }
}

#[derive(Debug, Error)]
pub enum ScoresIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

pub const SCORES_HEADER: [&str; 9] = ["novel_id", "chapter", "character", "N", "A", "C", "I", "DC", "DN"];

/// Writes `scores.csv` rows (characters by name).
pub fn write_scores_csv<W: Write>(
    out: W,
    novel_id: &str,
    registry: &Registry,
    book: &BookScores,
) -> Result<(), ScoresIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCORES_HEADER)?;
    for s in book.scores() {
        let mut rec = vec![
            novel_id.to_string(),
            s.chapter_index.to_string(),
            registry.name(s.char_id).to_string(),
        ];
        rec.extend(s.counts.iter().map(|c| c.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spans_jsonl<W: Write>(mut out: W, spans: &[TaggedSpan]) -> Result<(), ScoresIoError> {
    for s in spans {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_spans_jsonl<R: BufRead>(input: R) -> Result<Vec<TaggedSpan>, ScoresIoError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ScoresIoError::Format {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

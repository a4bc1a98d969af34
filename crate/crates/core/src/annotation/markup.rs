//! Compact annotation markup for hand-written fixtures.
//!
//! Tokens are whitespace separated. Blank lines separate paragraphs; a line
//! starting with `#` is a heading paragraph (`# CHAPTER I`). Sentences end
//! after `.`, `!` or `?` (a closing quote right after stays in the sentence).
//!
//! * `word~lemma#POS/verb.label@K` sets lemma, tag, supersense and the
//!   supersense agent cluster; all parts are optional.
//! * `[Miss de Bourgh]@3` is a mention of cluster 3; `]@3:NOM:FAC` overrides
//!   the inferred type (PROP, NOM or PRON) and category (default PER).
//! * `{ ... }@2` is a quote spoken by cluster 2; `}@?` has no speaker and
//!   `}@2:letter` marks a letter. The braces become `"` tokens outside the
//!   quote span.

use std::collections::BTreeSet;

use thiserror::Error;

use super::bundle::{AnnotationBundle, ClusterId, MentionProp, MentionSpan, QuoteKind, QuoteSpan, SupersenseSpan, Token};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("markup line {line}: {message}")]
pub struct MarkupError {
    pub line: usize,
    pub message: String,
}

const PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "he", "him", "his", "himself", "she", "her", "hers", "herself", "you", "your",
    "we", "us", "our", "they", "them", "their",
];

fn default_lemma(word: &str) -> String {
    let w = word.to_lowercase();
    match w.as_str() {
        "was" | "were" | "is" | "are" | "am" | "been" | "being" | "be" => "be".into(),
        "seemed" | "seems" | "seem" => "seem".into(),
        "became" | "becomes" | "become" => "become".into(),
        _ => w,
    }
}

struct Builder {
    tokens: Vec<Token>,
    mentions: Vec<MentionSpan>,
    quotes: Vec<QuoteSpan>,
    supersenses: Vec<SupersenseSpan>,
    sentence: usize,
    sentence_open: bool,
    paragraph: usize,
    paragraph_open: bool,
    open_mention: Option<usize>,
    open_quote: Option<usize>,
    text: String,
    glue_next: bool,
}

impl Builder {
    fn push_token(&mut self, word: &str, lemma: String, pos: String) -> usize {
        if !self.paragraph_open {
            if !self.tokens.is_empty() {
                self.paragraph += 1;
                self.text.push_str("\n\n");
            }
            self.paragraph_open = true;
        }
        if !self.sentence_open {
            if !self.tokens.is_empty() {
                self.sentence += 1;
            }
            self.sentence_open = true;
        }
        let id = self.tokens.len();
        self.tokens.push(Token {
            token_id: id,
            sentence_id: self.sentence,
            paragraph_id: self.paragraph,
            word: word.to_string(),
            lemma,
            pos,
        });
        id
    }

    fn write_text(&mut self, word: &str, glue_left: bool) {
        if !self.text.is_empty() && !self.text.ends_with('\n') && !glue_left && !self.glue_next {
            self.text.push(' ');
        }
        self.text.push_str(word);
        self.glue_next = false;
    }

    fn end_paragraph(&mut self) {
        self.sentence_open = false;
        self.paragraph_open = false;
    }
}

fn split_suffix(s: &str, sep: char) -> (&str, Option<&str>) {
    match s.rfind(sep) {
        Some(i) if i > 0 => (&s[..i], Some(&s[i + 1..])),
        _ => (s, None),
    }
}

/// Parses markup into a bundle and the plain text it was tokenized from.
pub fn parse_markup(novel_id: &str, markup: &str) -> Result<(AnnotationBundle, String), MarkupError> {
    let mut b = Builder {
        tokens: Vec::new(),
        mentions: Vec::new(),
        quotes: Vec::new(),
        supersenses: Vec::new(),
        sentence: 0,
        sentence_open: false,
        paragraph: 0,
        paragraph_open: false,
        open_mention: None,
        open_quote: None,
        text: String::new(),
        glue_next: false,
    };
    for (li, line) in markup.lines().enumerate() {
        let err = |message: String| MarkupError { line: li + 1, message };
        let line = line.trim();
        if line.is_empty() {
            if b.open_quote.is_some() {
                return Err(err("paragraph break inside a quote".into()));
            }
            b.end_paragraph();
            continue;
        }
        if let Some(heading) = line.strip_prefix('#') {
            b.end_paragraph();
            for w in heading.split_whitespace() {
                b.push_token(w, w.to_lowercase(), "NNP".into());
                b.write_text(w, false);
            }
            b.end_paragraph();
            continue;
        }
        for raw in line.split_whitespace() {
            if raw == "{" {
                if b.open_quote.is_some() {
                    return Err(err("nested quote".into()));
                }
                b.push_token("\"", "\"".into(), "``".into());
                b.write_text("\"", false);
                b.glue_next = true;
                b.open_quote = Some(b.tokens.len());
                continue;
            }
            if let Some(rest) = raw.strip_prefix("}@") {
                let start = b.open_quote.take().ok_or_else(|| err("unopened quote".into()))?;
                let end = b.tokens.len().checked_sub(1).filter(|&e| e >= start).ok_or_else(|| err("empty quote".into()))?;
                let (spk, kind) = match rest.split_once(':') {
                    Some((s, "letter")) => (s, QuoteKind::Letter),
                    Some((_, k)) => return Err(err(format!("unknown quote kind `{k}`"))),
                    None => (rest, QuoteKind::Speech),
                };
                let speaker = match spk {
                    "?" => None,
                    s => Some(s.parse::<ClusterId>().map_err(|_| err(format!("bad speaker `{s}`")))?),
                };
                let sentence_ids: BTreeSet<usize> = b.tokens[start..=end].iter().map(|t| t.sentence_id).collect();
                b.quotes.push(QuoteSpan {
                    quote_id: b.quotes.len() as i64,
                    start_token: start,
                    end_token: end,
                    speaker_cluster: speaker,
                    kind,
                    sentence_ids: sentence_ids.into_iter().collect(),
                });
                let was_open = b.sentence_open;
                b.push_token("\"", "\"".into(), "''".into());
                b.write_text("\"", true);
                // a closing mark after sentence-final punctuation stays with it
                if !was_open {
                    let last = b.tokens.len() - 1;
                    b.tokens[last].sentence_id -= 1;
                    b.sentence -= 1;
                    b.sentence_open = false;
                }
                continue;
            }
            let mut tok = raw;
            let starts_mention = tok.starts_with('[') && tok.len() > 1;
            if starts_mention {
                tok = &tok[1..];
            }
            let mut mention_close: Option<&str> = None;
            if let Some(i) = tok.find("]@") {
                mention_close = Some(&tok[i + 2..]);
                tok = &tok[..i];
            }
            let (rest, agent) = match tok.rfind("@") {
                Some(i) if tok[..i].contains('/') => (&tok[..i], Some(&tok[i + 1..])),
                _ => (tok, None),
            };
            let (rest, label) = match rest.rfind('/') {
                Some(i) if i > 0 && rest[i + 1..].contains('.') => (&rest[..i], Some(&rest[i + 1..])),
                _ => (rest, None),
            };
            let (rest, pos) = split_suffix(rest, '#');
            let (word, lemma) = split_suffix(rest, '~');
            let lemma = lemma.map(str::to_string).unwrap_or_else(|| default_lemma(word));
            let pos = pos.unwrap_or(if word.chars().all(|c| c.is_ascii_punctuation()) { "." } else { "X" });
            let id = b.push_token(word, lemma, pos.to_string());
            let glue = word.chars().all(|c| ".,;:!?".contains(c)) || word.starts_with('\'');
            b.write_text(word, glue);
            if starts_mention {
                if b.open_mention.is_some() {
                    return Err(err("nested mention".into()));
                }
                b.open_mention = Some(id);
            }
            if let Some(label) = label {
                let agent_cluster = match agent {
                    Some(a) => Some(a.parse::<ClusterId>().map_err(|_| err(format!("bad agent `{a}`")))?),
                    None => None,
                };
                b.supersenses.push(SupersenseSpan {
                    start_token: id,
                    end_token: id,
                    label: label.to_string(),
                    agent_cluster,
                });
            }
            if let Some(spec) = mention_close {
                let start = b.open_mention.take().ok_or_else(|| err("unopened mention".into()))?;
                let mut parts = spec.split(':');
                let cluster: ClusterId = parts
                    .next()
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| err(format!("bad cluster in `{raw}`")))?;
                let surface = b.tokens[start..=id].iter().map(|t| t.word.as_str()).collect::<Vec<_>>().join(" ");
                let prop = match parts.next() {
                    Some("PROP") => MentionProp::Proper,
                    Some("NOM") => MentionProp::Nominal,
                    Some("PRON") => MentionProp::Pronoun,
                    Some(p) => return Err(err(format!("unknown mention type `{p}`"))),
                    None if start == id && PRONOUNS.contains(&surface.to_lowercase().as_str()) => MentionProp::Pronoun,
                    None if surface.starts_with(|c: char| c.is_uppercase()) => MentionProp::Proper,
                    None => MentionProp::Nominal,
                };
                let category = parts.next().unwrap_or("PER").to_string();
                b.mentions.push(MentionSpan {
                    cluster_id: cluster,
                    start_token: start,
                    end_token: id,
                    prop,
                    category,
                    surface,
                });
            }
            if matches!(word, "." | "!" | "?") {
                b.sentence_open = false;
            }
        }
        if b.open_mention.is_some() {
            return Err(err("mention spans a line break".into()));
        }
    }
    if b.open_quote.is_some() {
        return Err(MarkupError {
            line: markup.lines().count(),
            message: "unclosed quote".into(),
        });
    }
    // sentences touched by a quote after its span was recorded
    for q in &mut b.quotes {
        q.sentence_ids = b.tokens[q.start_token..=q.end_token]
            .iter()
            .map(|t| t.sentence_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
    }
    b.text.push('\n');
    let bundle = AnnotationBundle {
        novel_id: novel_id.to_string(),
        tokens: b.tokens,
        mentions: b.mentions,
        quotes: b.quotes,
        supersenses: b.supersenses,
    };
    Ok((bundle, b.text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_mentions_quotes() {
        let (b, text) = parse_markup(
            "t",
            "[Charlotte]@1 appeared/verb.motion at the door .\n\n{ [I]@2 am tired . }@2 said [she]@1 .",
        )
        .unwrap();
        assert_eq!(b.tokens.len(), 15);
        assert_eq!(b.mentions[0].prop, MentionProp::Proper);
        assert_eq!(b.mentions[1].prop, MentionProp::Pronoun);
        assert_eq!(b.supersenses[0].label, "verb.motion");
        assert_eq!(b.tokens[1].lemma, "appeared");
        let q = &b.quotes[0];
        assert_eq!((q.start_token, q.end_token), (7, 10));
        assert_eq!(b.tokens[11].sentence_id, 1);
        assert_eq!(b.tokens[12].sentence_id, 2);
        assert_eq!(q.sentence_ids, vec![1]);
        assert_eq!(b.tokens[6].paragraph_id, 1);
        assert_eq!(text, "Charlotte appeared at the door.\n\n\"I am tired.\" said she.\n");
    }

    #[test]
    fn token_suffixes() {
        let (b, _) = parse_markup("t", "[Miss de Bourgh]@3 was#VBD pale#JJ and found~find/verb.cognition@3 it .").unwrap();
        assert_eq!(b.tokens[3].lemma, "be");
        assert_eq!(b.tokens[4].pos, "JJ");
        assert_eq!(b.tokens[6].lemma, "find");
        assert_eq!(b.supersenses[0].agent_cluster, Some(3));
        assert_eq!(b.mentions[0].surface, "Miss de Bourgh");
    }

    #[test]
    fn errors() {
        assert!(parse_markup("t", "{ a").is_err());
        assert!(parse_markup("t", "a }@1").is_err());
        assert!(parse_markup("t", "[a b").is_err());
    }
}

//! The canonical annotation bundle: four tab-separated files produced by a
//! literary NLP pipeline (tokens, entities, quotes, supersenses).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TokenId = usize;
pub type ClusterId = i64;

pub const TOKENS_FILE: &str = "tokens.tsv";
pub const ENTITIES_FILE: &str = "entities.tsv";
pub const QUOTES_FILE: &str = "quotes.tsv";
pub const SUPERSENSE_FILE: &str = "supersense.tsv";

const DEFAULT_INVENTORY: &str = include_str!("../../data/supersenses.txt");

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: dangling reference ({message}) in row `{row}`")]
    Integrity {
        file: String,
        line: usize,
        row: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub token_id: TokenId,
    pub sentence_id: usize,
    pub paragraph_id: usize,
    pub word: String,
    pub lemma: String,
    pub pos: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MentionProp {
    Proper,
    Nominal,
    Pronoun,
}

impl MentionProp {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "PROP" | "PROPER" => Some(MentionProp::Proper),
            "NOM" | "NOMINAL" => Some(MentionProp::Nominal),
            "PRON" | "PRONOUN" => Some(MentionProp::Pronoun),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionSpan {
    pub cluster_id: ClusterId,
    pub start_token: TokenId,
    pub end_token: TokenId,
    pub prop: MentionProp,
    pub category: String,
    pub surface: String,
}

impl MentionSpan {
    pub fn is_person(&self) -> bool {
        self.category == "PER"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuoteKind {
    Speech,
    Letter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteSpan {
    pub quote_id: i64,
    pub start_token: TokenId,
    pub end_token: TokenId,
    /// `None` when the pipeline could not attribute the quote.
    pub speaker_cluster: Option<ClusterId>,
    pub kind: QuoteKind,
    pub sentence_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupersenseSpan {
    pub start_token: TokenId,
    pub end_token: TokenId,
    pub label: String,
    /// Explicit agent link, when the producing pipeline supplies one.
    pub agent_cluster: Option<ClusterId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationBundle {
    pub novel_id: String,
    pub tokens: Vec<Token>,
    pub mentions: Vec<MentionSpan>,
    pub quotes: Vec<QuoteSpan>,
    pub supersenses: Vec<SupersenseSpan>,
}

impl AnnotationBundle {
    /// Mention indices grouped by coreference cluster.
    pub fn clusters(&self) -> BTreeMap<ClusterId, Vec<usize>> {
        let mut out: BTreeMap<ClusterId, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.mentions.iter().enumerate() {
            out.entry(m.cluster_id).or_default().push(i);
        }
        out
    }

    pub fn sentence_of(&self, token: TokenId) -> usize {
        self.tokens[token].sentence_id
    }

    pub fn paragraph_of(&self, token: TokenId) -> usize {
        self.tokens[token].paragraph_id
    }

    /// Number of distinct sentences.
    pub fn sentence_count(&self) -> usize {
        self.tokens
            .iter()
            .map(|t| t.sentence_id)
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn paragraph_count(&self) -> usize {
        self.tokens
            .iter()
            .map(|t| t.paragraph_id)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Surface text of a token range, words joined by single spaces.
    pub fn span_text(&self, start: TokenId, end: TokenId) -> String {
        self.tokens[start..=end]
            .iter()
            .map(|t| t.word.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Set of allowed supersense labels.
#[derive(Debug, Clone)]
pub struct SupersenseInventory {
    labels: BTreeSet<String>,
}

impl SupersenseInventory {
    pub fn parse(text: &str) -> Self {
        let labels = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        SupersenseInventory { labels }
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        Ok(Self::parse(&read(path)?))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }
}

impl Default for SupersenseInventory {
    fn default() -> Self {
        Self::parse(DEFAULT_INVENTORY)
    }
}

fn read(path: &Path) -> Result<String, BundleError> {
    std::fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One parsed TSV file: header-addressable rows with 1-based line numbers.
struct Table<'a> {
    file: &'a str,
    header: Vec<&'a str>,
    rows: Vec<(usize, &'a str, Vec<&'a str>)>,
}

impl<'a> Table<'a> {
    fn parse(file: &'a str, text: &'a str, required: &[&str]) -> Result<Self, BundleError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| BundleError::Parse {
            file: file.to_string(),
            line: 1,
            message: "missing header row".into(),
        })?;
        let header: Vec<&str> = head.split('\t').map(str::trim).collect();
        for r in required {
            if !header.contains(r) {
                return Err(BundleError::Parse {
                    file: file.to_string(),
                    line: 1,
                    message: format!("missing column `{r}`"),
                });
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != header.len() {
                return Err(BundleError::Parse {
                    file: file.to_string(),
                    line: i + 1,
                    message: format!("expected {} fields, found {}", header.len(), fields.len()),
                });
            }
            rows.push((i + 1, line, fields));
        }
        Ok(Table { file, header, rows })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    fn err(&self, line: usize, message: impl Into<String>) -> BundleError {
        BundleError::Parse {
            file: self.file.to_string(),
            line,
            message: message.into(),
        }
    }

    fn int<T: std::str::FromStr>(&self, line: usize, fields: &[&str], col: &str) -> Result<T, BundleError> {
        let idx = self.col(col).expect("required column");
        fields[idx]
            .trim()
            .parse()
            .map_err(|_| self.err(line, format!("column `{col}`: invalid integer `{}`", fields[idx])))
    }

    fn text(&self, fields: &[&'a str], col: &str) -> &'a str {
        fields[self.col(col).expect("required column")]
    }
}

fn check_range(
    file: &str,
    line: usize,
    row: &str,
    start: TokenId,
    end: TokenId,
    n_tokens: usize,
) -> Result<(), BundleError> {
    if end >= n_tokens || start >= n_tokens {
        return Err(BundleError::Integrity {
            file: file.to_string(),
            line,
            row: row.to_string(),
            message: format!("token range {start}..={end} outside 0..{n_tokens}"),
        });
    }
    if start > end {
        return Err(BundleError::Parse {
            file: file.to_string(),
            line,
            message: format!("start token {start} after end token {end}"),
        });
    }
    Ok(())
}

/// File contents of a bundle, so callers can parse from memory.
pub struct BundleSources<'a> {
    pub tokens: &'a str,
    pub entities: &'a str,
    pub quotes: &'a str,
    pub supersenses: &'a str,
}

/// Reads `tokens.tsv`, `entities.tsv`, `quotes.tsv` and `supersense.tsv`
/// from `dir` and validates every cross reference.
pub fn parse_bundle(dir: &Path, novel_id: &str, inventory: &SupersenseInventory) -> Result<AnnotationBundle, BundleError> {
    let tokens = read(&dir.join(TOKENS_FILE))?;
    let entities = read(&dir.join(ENTITIES_FILE))?;
    let quotes = read(&dir.join(QUOTES_FILE))?;
    let supersenses = read(&dir.join(SUPERSENSE_FILE))?;
    parse_bundle_str(
        novel_id,
        &BundleSources {
            tokens: &tokens,
            entities: &entities,
            quotes: &quotes,
            supersenses: &supersenses,
        },
        inventory,
    )
}

pub fn parse_bundle_str(
    novel_id: &str,
    src: &BundleSources<'_>,
    inventory: &SupersenseInventory,
) -> Result<AnnotationBundle, BundleError> {
    let t = Table::parse(
        TOKENS_FILE,
        src.tokens,
        &["paragraph_id", "sentence_id", "token_id", "word", "lemma", "pos"],
    )?;
    let mut tokens = Vec::with_capacity(t.rows.len());
    for (line, _, f) in &t.rows {
        let token_id: usize = t.int(*line, f, "token_id")?;
        if token_id != tokens.len() {
            return Err(t.err(*line, format!("token_id {token_id} out of sequence, expected {}", tokens.len())));
        }
        let sentence_id: usize = t.int(*line, f, "sentence_id")?;
        if let Some(prev) = tokens.last().map(|p: &Token| p.sentence_id) {
            if sentence_id < prev {
                return Err(t.err(*line, "sentence_id decreases"));
            }
        }
        tokens.push(Token {
            token_id,
            sentence_id,
            paragraph_id: t.int(*line, f, "paragraph_id")?,
            word: t.text(f, "word").to_string(),
            lemma: t.text(f, "lemma").to_string(),
            pos: t.text(f, "pos").to_string(),
        });
    }
    let n = tokens.len();

    let e = Table::parse(
        ENTITIES_FILE,
        src.entities,
        &["coref_id", "start_token", "end_token", "prop", "category", "text"],
    )?;
    let mut mentions = Vec::with_capacity(e.rows.len());
    for (line, row, f) in &e.rows {
        let start: usize = e.int(*line, f, "start_token")?;
        let end: usize = e.int(*line, f, "end_token")?;
        check_range(ENTITIES_FILE, *line, row, start, end, n)?;
        let prop_s = e.text(f, "prop");
        let prop = MentionProp::parse(prop_s).ok_or_else(|| e.err(*line, format!("unknown prop `{prop_s}`")))?;
        mentions.push(MentionSpan {
            cluster_id: e.int(*line, f, "coref_id")?,
            start_token: start,
            end_token: end,
            prop,
            category: e.text(f, "category").to_string(),
            surface: e.text(f, "text").to_string(),
        });
    }

    let q = Table::parse(QUOTES_FILE, src.quotes, &["quote_id", "start_token", "end_token", "speaker_coref_id"])?;
    let kind_col = q.col("kind");
    let mut quotes = Vec::with_capacity(q.rows.len());
    for (line, row, f) in &q.rows {
        let start: usize = q.int(*line, f, "start_token")?;
        let end: usize = q.int(*line, f, "end_token")?;
        check_range(QUOTES_FILE, *line, row, start, end, n)?;
        let speaker: i64 = q.int(*line, f, "speaker_coref_id")?;
        let kind = match kind_col.map(|c| f[c].trim()) {
            None | Some("") | Some("speech") => QuoteKind::Speech,
            Some("letter") => QuoteKind::Letter,
            Some(other) => return Err(q.err(*line, format!("unknown quote kind `{other}`"))),
        };
        let sentence_ids: BTreeSet<usize> = tokens[start..=end].iter().map(|t| t.sentence_id).collect();
        quotes.push(QuoteSpan {
            quote_id: q.int(*line, f, "quote_id")?,
            start_token: start,
            end_token: end,
            speaker_cluster: (speaker >= 0).then_some(speaker),
            kind,
            sentence_ids: sentence_ids.into_iter().collect(),
        });
    }
    let mut order: Vec<usize> = (0..quotes.len()).collect();
    order.sort_by_key(|&i| (quotes[i].start_token, quotes[i].end_token));
    for w in order.windows(2) {
        let (a, b) = (&quotes[w[0]], &quotes[w[1]]);
        if b.start_token <= a.end_token {
            let line = q.rows[w[1]].0;
            return Err(q.err(line, format!("quote {} overlaps quote {}", b.quote_id, a.quote_id)));
        }
    }
    quotes.sort_by_key(|qq| qq.start_token);

    let s = Table::parse(SUPERSENSE_FILE, src.supersenses, &["start_token", "end_token", "label"])?;
    let agent_col = s.col("agent_coref_id");
    let mut supersenses = Vec::with_capacity(s.rows.len());
    for (line, row, f) in &s.rows {
        let start: usize = s.int(*line, f, "start_token")?;
        let end: usize = s.int(*line, f, "end_token")?;
        check_range(SUPERSENSE_FILE, *line, row, start, end, n)?;
        let label = s.text(f, "label").trim();
        if !inventory.contains(label) {
            return Err(s.err(*line, format!("label `{label}` not in supersense inventory")));
        }
        let agent_cluster = match agent_col {
            Some(c) if !f[c].trim().is_empty() => {
                let v: i64 = f[c]
                    .trim()
                    .parse()
                    .map_err(|_| s.err(*line, format!("invalid agent_coref_id `{}`", f[c])))?;
                (v >= 0).then_some(v)
            }
            _ => None,
        };
        supersenses.push(SupersenseSpan {
            start_token: start,
            end_token: end,
            label: label.to_string(),
            agent_cluster,
        });
    }

    Ok(AnnotationBundle {
        novel_id: novel_id.to_string(),
        tokens,
        mentions,
        quotes,
        supersenses,
    })
}

/// Writes a bundle back out in the canonical TSV layout.
pub fn write_bundle(bundle: &AnnotationBundle, dir: &Path) -> std::io::Result<()> {
    use std::fmt::Write as _;
    std::fs::create_dir_all(dir)?;
    let mut s = String::from("paragraph_id\tsentence_id\ttoken_id\tword\tlemma\tpos\n");
    for t in &bundle.tokens {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", t.paragraph_id, t.sentence_id, t.token_id, t.word, t.lemma, t.pos);
    }
    std::fs::write(dir.join(TOKENS_FILE), s)?;
    let mut s = String::from("coref_id\tstart_token\tend_token\tprop\tcategory\ttext\n");
    for m in &bundle.mentions {
        let prop = match m.prop {
            MentionProp::Proper => "PROP",
            MentionProp::Nominal => "NOM",
            MentionProp::Pronoun => "PRON",
        };
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", m.cluster_id, m.start_token, m.end_token, prop, m.category, m.surface);
    }
    std::fs::write(dir.join(ENTITIES_FILE), s)?;
    let mut s = String::from("quote_id\tstart_token\tend_token\tspeaker_coref_id\tkind\n");
    for q in &bundle.quotes {
        let kind = match q.kind {
            QuoteKind::Speech => "speech",
            QuoteKind::Letter => "letter",
        };
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", q.quote_id, q.start_token, q.end_token, q.speaker_cluster.unwrap_or(-1), kind);
    }
    std::fs::write(dir.join(QUOTES_FILE), s)?;
    let mut s = String::from("start_token\tend_token\tlabel\tagent_coref_id\n");
    for ss in &bundle.supersenses {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", ss.start_token, ss.end_token, ss.label, ss.agent_cluster.unwrap_or(-1));
    }
    std::fs::write(dir.join(SUPERSENSE_FILE), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOKENS: &str = "paragraph_id\tsentence_id\ttoken_id\tword\tlemma\tpos
0\t0\t0\tElizabeth\tElizabeth\tNNP
0\t0\t1\tsmiled\tsmile\tVBD
0\t0\t2\t.\t.\t.
0\t1\t3\t\"\t\"\t``
0\t1\t4\tI\tI\tPRP
0\t1\t5\tlaugh\tlaugh\tVBP
0\t1\t6\t.\t.\t.
0\t1\t7\t\"\t\"\t''
0\t1\t8\tsaid\tsay\tVBD
0\t1\t9\tshe\tshe\tPRP
";
    const ENTITIES: &str = "coref_id\tstart_token\tend_token\tprop\tcategory\ttext
7\t0\t0\tPROP\tPER\tElizabeth
7\t4\t4\tPRON\tPER\tI
7\t9\t9\tPRON\tPER\tshe
";
    const QUOTES: &str = "quote_id\tstart_token\tend_token\tspeaker_coref_id
0\t3\t7\t7
";
    const SUPERSENSE: &str = "start_token\tend_token\tlabel
1\t1\tverb.body
5\t5\tverb.emotion
8\t8\tverb.communication
";

    fn parse(entities: &str, quotes: &str) -> Result<AnnotationBundle, BundleError> {
        parse_bundle_str(
            "fx",
            &BundleSources {
                tokens: TOKENS,
                entities,
                quotes,
                supersenses: SUPERSENSE,
            },
            &SupersenseInventory::default(),
        )
    }

    #[test]
    fn minimal_bundle() {
        let b = parse(ENTITIES, QUOTES).unwrap();
        assert_eq!(b.tokens.len(), 10);
        assert_eq!(b.clusters().len(), 1);
        assert_eq!(b.quotes.len(), 1);
        assert_eq!(b.quotes[0].sentence_ids, vec![1]);
        assert_eq!(b.quotes[0].speaker_cluster, Some(7));
        assert_eq!(b.sentence_count(), 2);
    }

    #[test]
    fn dangling_token_reference() {
        let ents = "coref_id\tstart_token\tend_token\tprop\tcategory\ttext\n7\t999\t999\tPROP\tPER\tX\n";
        match parse(ents, QUOTES) {
            Err(BundleError::Integrity { line, row, .. }) => {
                assert_eq!(line, 2);
                assert!(row.contains("999"));
            }
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_quotes_rejected() {
        let quotes = "quote_id\tstart_token\tend_token\tspeaker_coref_id\n0\t3\t7\t7\n1\t6\t9\t-1\n";
        assert!(matches!(parse(ENTITIES, quotes), Err(BundleError::Parse { .. })));
    }

    #[test]
    fn malformed_row_reports_line() {
        let ents = "coref_id\tstart_token\tend_token\tprop\tcategory\ttext\n7\t0\tPROP\tPER\n";
        match parse(ents, QUOTES) {
            Err(BundleError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_speaker_is_none() {
        let quotes = "quote_id\tstart_token\tend_token\tspeaker_coref_id\n0\t3\t7\t-1\n";
        let b = parse(ENTITIES, quotes).unwrap();
        assert_eq!(b.quotes[0].speaker_cluster, None);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let b = parse(ENTITIES, QUOTES).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&b, dir.path()).unwrap();
        let back = parse_bundle(dir.path(), "fx", &SupersenseInventory::default()).unwrap();
        assert_eq!(back, b);
    }
}

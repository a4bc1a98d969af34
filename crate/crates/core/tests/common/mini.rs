//! Hand-annotated mini novels and their hand-counted component tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use charspace::annotation::{parse_markup, AnnotationBundle, Registry};
use charspace::config::{NovelConfig, RunConfig};
use charspace::ingest::{segment_document, Document};
use charspace::network::CharGraph;
use charspace::pipeline::{analyse, Resources};
use charspace::tagger::BookScores;

pub const NOVELS: [&str; 3] = ["north", "marsh", "fenwick"];

pub struct Mini {
    pub text: String,
    pub bundle: AnnotationBundle,
    pub doc: Document,
    pub registry: Registry,
    pub book: BookScores,
    pub graphs: Vec<CharGraph>,
}

pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini")
}

pub fn load(id: &str) -> Mini {
    let markup = std::fs::read_to_string(dir().join(format!("{id}.markup"))).unwrap();
    from_markup(id, &markup)
}

pub fn from_markup(id: &str, markup: &str) -> Mini {
    let (bundle, text) = parse_markup(id, markup).unwrap();
    let doc = segment_document(id, id, &text, &Default::default()).unwrap();
    let novel = NovelConfig {
        id: id.into(),
        title: id.into(),
        text: PathBuf::new(),
        bundle: PathBuf::new(),
        first_person: false,
        merge_map: None,
        gold: None,
    };
    let res = Resources::from_config(&RunConfig::default()).unwrap();
    let (registry, book, graphs, _) = analyse(&novel, &doc, &bundle, &res).unwrap();
    Mini {
        text,
        bundle,
        doc,
        registry,
        book,
        graphs,
    }
}

/// `(chapter, character) -> N, A, C, I, DC, DN` from the golden CSV.
pub fn golden(id: &str) -> BTreeMap<(usize, String), [u64; 6]> {
    let text = std::fs::read_to_string(dir().join(format!("{id}.golden.csv"))).unwrap();
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let mut v = [0u64; 6];
        for (i, x) in f[3..9].iter().enumerate() {
            v[i] = x.trim().parse().unwrap();
        }
        out.insert((f[1].parse().unwrap(), f[2].to_string()), v);
    }
    out
}

pub fn predicted(m: &Mini) -> BTreeMap<(usize, String), [u64; 6]> {
    m.book
        .scores()
        .map(|s| ((s.chapter_index, m.registry.name(s.char_id).to_string()), s.counts))
        .collect()
}

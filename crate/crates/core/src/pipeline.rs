//! Per-novel pipeline: text and bundle in, scores, graphs, metrics and an
//! optional embedding out. Novels run in parallel; results keep config order.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::annotation::{
    apply_merge_map, build_registry, map_aliases, parse_bundle, parse_merge_map, AnnotationBundle, GoldCharacter,
    MatchMode, PronounInventory, Registry, RegistryConfig, SupersenseInventory, UnmappedName,
};
use crate::config::{ConfigError, NovelConfig, RunConfig};
use crate::embed::{render_disk_svg, train, write_loss_trace, EmbedConfig, TrainResult};
use crate::ingest::{segment_document, strip_boilerplate, Document, RawText, SegmentConfig};
use crate::metrics::{compute_metrics, GraphMetrics, MetricsConfig};
use crate::network::{
    build_cooccurrence, build_dialogue, build_discussion, nodes_from_registry, write_adjacency_csv, write_graphml,
    CharGraph, NetworkKind,
};
use crate::stats::{evaluate, ComponentEval, ScoreTable};
use crate::tagger::{
    write_scores_csv, write_spans_jsonl, AppearanceLexicon, BookScores, ChapterMap, Lexicons, TaggerContext,
    VerbLexicon,
};

pub const NETWORKS: [NetworkKind; 3] = [NetworkKind::Cooccurrence, NetworkKind::Dialogue, NetworkKind::Discussion];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("novel {novel}: {message}")]
    Novel { novel: String, message: String },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

fn novel_err(novel: &str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError + '_ {
    move |e| PipelineError::Novel {
        novel: novel.to_string(),
        message: e.to_string(),
    }
}

/// Lexicons and settings shared by every novel of a run.
#[derive(Debug, Clone)]
pub struct Resources {
    pub segment: SegmentConfig,
    pub registry: RegistryConfig,
    pub supersenses: SupersenseInventory,
    pub lexicons: Lexicons,
    pub metrics: MetricsConfig,
    pub dialogue_gap: usize,
    pub embed: Option<EmbedConfig>,
    pub embed_network: NetworkKind,
    pub embed_labels: usize,
}

impl Resources {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let mut segment = SegmentConfig {
            keep_preamble: cfg.keep_preamble,
            ..SegmentConfig::default()
        };
        if let Some(p) = &cfg.heading_pattern {
            segment.heading_pattern = p.clone();
        }
        let pronouns = match &cfg.pronouns {
            Some(p) => PronounInventory::load(p).map_err(|e| PipelineError::io(p, e))?,
            None => PronounInventory::default(),
        };
        let supersenses = match &cfg.supersenses {
            Some(p) => SupersenseInventory::load(p).map_err(|e| PipelineError::io(p, e))?,
            None => SupersenseInventory::default(),
        };
        let mut verbs = VerbLexicon::default();
        if let Some(p) = &cfg.verb_overrides {
            verbs = verbs.with_overrides_file(p).map_err(|e| PipelineError::io(p, e))?;
        }
        let appearance = match &cfg.appearance {
            Some(p) => AppearanceLexicon::load(p).map_err(|e| PipelineError::io(p, e))?,
            None => AppearanceLexicon::default(),
        };
        Ok(Resources {
            segment,
            registry: RegistryConfig {
                min_total: cfg.min_total,
                min_proper: cfg.min_proper,
                pronouns,
            },
            supersenses,
            lexicons: Lexicons { verbs, appearance },
            metrics: MetricsConfig {
                seed: cfg.seed,
                ..MetricsConfig::default()
            },
            dialogue_gap: cfg.dialogue_gap,
            embed: cfg.embed.then_some(EmbedConfig {
                epochs: cfg.embed_epochs,
                seed: cfg.seed,
                ..EmbedConfig::default()
            }),
            embed_network: cfg.embed_network,
            embed_labels: cfg.embed_labels,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentSummary {
    pub chapters: usize,
    pub paragraphs: usize,
    pub words: usize,
    pub single_chapter_fallback: bool,
    pub sentinels_missing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NovelEval {
    pub components: Vec<ComponentEval>,
    /// Predicted name -> gold name.
    pub mapped: BTreeMap<String, String>,
    pub unmapped: Vec<UnmappedName>,
}

#[derive(Debug, Clone)]
pub struct NovelRun {
    pub id: String,
    pub title: String,
    pub first_person: bool,
    pub document: DocumentSummary,
    pub registry: Registry,
    pub book: BookScores,
    /// One graph per [`NETWORKS`] entry, isolated characters removed.
    pub graphs: Vec<CharGraph>,
    pub metrics: Vec<GraphMetrics>,
    pub embedding: Option<TrainResult>,
    /// Network the embedding was trained on.
    pub embed_network: NetworkKind,
    pub notes: Vec<String>,
    pub eval: Option<NovelEval>,
}

impl NovelRun {
    pub fn graph(&self, kind: NetworkKind) -> &CharGraph {
        &self.graphs[NETWORKS.iter().position(|&k| k == kind).unwrap()]
    }

    pub fn metrics(&self, kind: NetworkKind) -> &GraphMetrics {
        &self.metrics[NETWORKS.iter().position(|&k| k == kind).unwrap()]
    }
}

/// Everything downstream of the parsed inputs; used directly by tests that
/// build bundles in memory.
pub fn analyse(
    novel: &NovelConfig,
    doc: &Document,
    bundle: &AnnotationBundle,
    res: &Resources,
) -> Result<(Registry, BookScores, Vec<CharGraph>, Vec<GraphMetrics>), PipelineError> {
    let err = novel_err(&novel.id);
    let mut registry = build_registry(bundle, &res.registry);
    if let Some(path) = &novel.merge_map {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let entries = parse_merge_map(&text).map_err(|e| err(&e))?;
        registry = apply_merge_map(&registry, &entries, bundle, &res.registry.pronouns).map_err(|e| err(&e))?;
    }
    let chapters = ChapterMap::align(doc, bundle);
    let book = TaggerContext::new(bundle, &registry, &res.lexicons, &chapters).score_book();
    let nodes = nodes_from_registry(&registry, Some(&book));
    let graphs: Vec<CharGraph> = vec![
        build_cooccurrence(bundle, &registry, &chapters, nodes.clone()),
        build_dialogue(bundle, &registry, &chapters, res.dialogue_gap, nodes.clone()),
        build_discussion(&book.dc_spans(), nodes),
    ]
    .into_iter()
    .map(|g| g.without_isolates())
    .collect();
    let metrics = graphs.iter().map(|g| compute_metrics(g, &res.metrics)).collect();
    Ok((registry, book, graphs, metrics))
}

/// Predicted scores keyed by gold names; unmapped characters are dropped.
fn predicted_table(novel_id: &str, registry: &Registry, book: &BookScores, mapped: &BTreeMap<String, String>) -> ScoreTable {
    let mut acc: BTreeMap<(usize, String), [f64; 6]> = BTreeMap::new();
    for s in book.scores() {
        let Some(gold) = mapped.get(registry.name(s.char_id)) else { continue };
        let cell = acc.entry((s.chapter_index, gold.clone())).or_default();
        for (a, c) in cell.iter_mut().zip(s.counts) {
            *a += c as f64;
        }
    }
    let mut t = ScoreTable::default();
    for ((chapter, name), counts) in acc {
        t.insert(novel_id, chapter, &name, counts).expect("keys are unique");
    }
    t
}

fn evaluate_gold(novel: &NovelConfig, path: &Path, registry: &Registry, book: &BookScores) -> Result<NovelEval, PipelineError> {
    let err = novel_err(&novel.id);
    let file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let gold = ScoreTable::read_csv(file).map_err(|e| err(&e))?;
    let gold_names: Vec<GoldCharacter> = gold
        .rows
        .keys()
        .filter(|(n, _, _)| n == &novel.id)
        .map(|(_, _, k)| k.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|k| GoldCharacter { name: k, aliases: vec![] })
        .collect();
    let predicted: Vec<String> = registry.characters.iter().map(|c| c.canonical_name.clone()).collect();
    let aliases = map_aliases(&predicted, &gold_names, MatchMode::Normalized).map_err(|e| err(&e))?;
    let pred = predicted_table(&novel.id, registry, book, &aliases.mapped);
    let components = evaluate(&gold, &pred).map_err(|e| err(&e))?;
    Ok(NovelEval {
        components,
        mapped: aliases.mapped,
        unmapped: aliases.unmapped,
    })
}

pub fn run_novel(novel: &NovelConfig, res: &Resources) -> Result<NovelRun, PipelineError> {
    let err = novel_err(&novel.id);
    let raw = RawText::load(&novel.text).map_err(|e| err(&e))?;
    let stripped = strip_boilerplate(&raw).map_err(|e| err(&e))?;
    let doc = segment_document(&novel.id, &novel.title, &stripped.body, &res.segment).map_err(|e| err(&e))?;
    let bundle = parse_bundle(&novel.bundle, &novel.id, &res.supersenses).map_err(|e| err(&e))?;
    let (registry, book, graphs, metrics) = analyse(novel, &doc, &bundle, res)?;

    let mut notes = Vec::new();
    if stripped.sentinels_missing {
        notes.push("no boilerplate sentinels found; text used as is".to_string());
    }
    if doc.single_chapter_fallback {
        notes.push("no chapter headings matched; treated as one chapter".to_string());
    }
    let embedding = match &res.embed {
        None => None,
        Some(cfg) => {
            let g = &graphs[NETWORKS.iter().position(|&k| k == res.embed_network).unwrap()];
            match train(g, cfg) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!("embedding skipped: {e}"));
                    None
                }
            }
        }
    };
    let eval = match &novel.gold {
        Some(path) => Some(evaluate_gold(novel, path, &registry, &book)?),
        None => None,
    };
    Ok(NovelRun {
        id: novel.id.clone(),
        title: novel.title.clone(),
        first_person: novel.first_person,
        document: DocumentSummary {
            chapters: doc.chapters.len(),
            paragraphs: doc.paragraphs().count(),
            words: doc.chapters.iter().map(|c| doc.word_count(c.index)).sum(),
            single_chapter_fallback: doc.single_chapter_fallback,
            sentinels_missing: stripped.sentinels_missing,
        },
        registry,
        book,
        graphs,
        metrics,
        embedding,
        embed_network: res.embed_network,
        notes,
        eval,
    })
}

/// Runs every configured novel; the first failure (in config order) wins.
pub fn run_corpus(cfg: &RunConfig) -> Result<Vec<NovelRun>, PipelineError> {
    let res = Resources::from_config(cfg)?;
    cfg.novels.par_iter().map(|n| run_novel(n, &res)).collect()
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<fs::File>, PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::io(path, e))?;
    text.push('\n');
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

#[derive(Serialize)]
struct NovelSummary<'a> {
    id: &'a str,
    title: &'a str,
    first_person: bool,
    document: &'a DocumentSummary,
    characters: usize,
    excluded_clusters: usize,
    unattributed_c: u64,
    notes: &'a [String],
}

/// Writes the per-novel artifacts under `dir` and returns their paths.
pub fn write_novel(run: &NovelRun, dir: &Path, embed_labels: usize) -> Result<Vec<PathBuf>, PipelineError> {
    let mut written = Vec::new();
    let mut push = |p: PathBuf| {
        written.push(p.clone());
        p
    };
    let p = push(dir.join("summary.json"));
    write_json(
        &p,
        &NovelSummary {
            id: &run.id,
            title: &run.title,
            first_person: run.first_person,
            document: &run.document,
            characters: run.registry.len(),
            excluded_clusters: run.registry.excluded.len(),
            unattributed_c: run.book.unattributed_c(),
            notes: &run.notes,
        },
    )?;
    let p = push(dir.join("registry.json"));
    write_json(&p, &run.registry)?;
    let p = push(dir.join("scores.csv"));
    write_scores_csv(create(&p)?, &run.id, &run.registry, &run.book).map_err(|e| PipelineError::io(&p, e))?;
    let p = push(dir.join("spans.jsonl"));
    let spans: Vec<_> = run.book.spans().cloned().collect();
    write_spans_jsonl(create(&p)?, &spans).map_err(|e| PipelineError::io(&p, e))?;
    for (g, m) in run.graphs.iter().zip(&run.metrics) {
        let name = g.kind.as_str();
        let p = push(dir.join(format!("{name}.graphml")));
        write_graphml(create(&p)?, g).map_err(|e| PipelineError::io(&p, e))?;
        let p = push(dir.join(format!("{name}_adjacency.csv")));
        write_adjacency_csv(create(&p)?, g).map_err(|e| PipelineError::io(&p, e))?;
        let p = push(dir.join(format!("{name}_metrics.json")));
        write_json(&p, m)?;
    }
    if let Some(emb) = &run.embedding {
        let p = push(dir.join("embedding.csv"));
        emb.embedding.write_csv(create(&p)?).map_err(|e| PipelineError::io(&p, e))?;
        let p = push(dir.join("loss_trace.csv"));
        write_loss_trace(create(&p)?, &emb.loss_trace).map_err(|e| PipelineError::io(&p, e))?;
        let p = push(dir.join("poincare.svg"));
        render_disk_svg(&emb.embedding, run.graph(run.embed_network), embed_labels, create(&p)?).map_err(|e| PipelineError::io(&p, e))?;
    }
    if let Some(eval) = &run.eval {
        let p = push(dir.join("eval.json"));
        write_json(&p, eval)?;
    }
    Ok(written)
}

//! Weighted character networks: co-occurrence, dialogue and discussion.

mod io;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationBundle, CharId, Gender, QuoteKind, Registry};
use crate::tagger::{BookScores, CharRef, ChapterMap, Component, TaggedSpan};

pub use io::{read_graphml, write_adjacency_csv, write_graphml, GraphIoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NetworkKind {
    Cooccurrence,
    Dialogue,
    Discussion,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 3] = [NetworkKind::Cooccurrence, NetworkKind::Dialogue, NetworkKind::Discussion];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Cooccurrence => "cooccurrence",
            NetworkKind::Dialogue => "dialogue",
            NetworkKind::Discussion => "discussion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn directed(self) -> bool {
        self == NetworkKind::Discussion
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub char_id: CharId,
    pub name: String,
    pub gender: Gender,
    /// Book-level component totals in N, A, C, I, DC, DN order.
    pub components: [u64; 6],
}

/// Nodes plus positive edge weights. Undirected edges are stored once with
/// `u < v`; self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharGraph {
    pub kind: NetworkKind,
    pub directed: bool,
    pub nodes: Vec<Node>,
    pub edges: BTreeMap<(CharId, CharId), f64>,
}

impl CharGraph {
    pub fn new(kind: NetworkKind, nodes: Vec<Node>) -> Self {
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.char_id);
        CharGraph {
            kind,
            directed: kind.directed(),
            nodes,
            edges: BTreeMap::new(),
        }
    }

    /// Bare graph with nodes `0..n`, used by metric tests.
    pub fn with_nodes(n: usize, directed: bool) -> Self {
        let nodes = (0..n)
            .map(|i| Node {
                char_id: i,
                name: format!("n{i}"),
                gender: Gender::Unknown,
                components: [0; 6],
            })
            .collect();
        let kind = if directed {
            NetworkKind::Discussion
        } else {
            NetworkKind::Cooccurrence
        };
        CharGraph {
            kind,
            directed,
            nodes,
            edges: BTreeMap::new(),
        }
    }

    fn key(&self, u: CharId, v: CharId) -> (CharId, CharId) {
        if self.directed || u < v {
            (u, v)
        } else {
            (v, u)
        }
    }

    pub fn add_weight(&mut self, u: CharId, v: CharId, w: f64) {
        if u == v || w == 0.0 {
            return;
        }
        *self.edges.entry(self.key(u, v)).or_insert(0.0) += w;
    }

    pub fn set_weight(&mut self, u: CharId, v: CharId, w: f64) {
        if u == v {
            return;
        }
        let k = self.key(u, v);
        if w > 0.0 {
            self.edges.insert(k, w);
        } else {
            self.edges.remove(&k);
        }
    }

    pub fn weight(&self, u: CharId, v: CharId) -> f64 {
        self.edges.get(&self.key(u, v)).copied().unwrap_or(0.0)
    }

    pub fn node_ids(&self) -> Vec<CharId> {
        self.nodes.iter().map(|n| n.char_id).collect()
    }

    pub fn node(&self, id: CharId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.char_id == id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Position of each char id in `nodes`.
    pub fn index(&self) -> BTreeMap<CharId, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.char_id, i)).collect()
    }

    /// Dense weight matrix in node order; symmetric when undirected.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let idx = self.index();
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (&(u, v), &w) in &self.edges {
            let (i, j) = (idx[&u], idx[&v]);
            m[i][j] += w;
            if !self.directed {
                m[j][i] += w;
            }
        }
        m
    }

    /// Undirected unweighted neighbour sets in node order.
    pub fn neighbor_sets(&self) -> Vec<BTreeSet<usize>> {
        let idx = self.index();
        let mut out = vec![BTreeSet::new(); self.len()];
        for &(u, v) in self.edges.keys() {
            let (i, j) = (idx[&u], idx[&v]);
            out[i].insert(j);
            out[j].insert(i);
        }
        out
    }

    /// Sum of incident edge weights (in plus out when directed).
    pub fn strength(&self, id: CharId) -> f64 {
        self.edges
            .iter()
            .filter(|((u, v), _)| *u == id || *v == id)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn in_strength(&self, id: CharId) -> f64 {
        self.edges.iter().filter(|((_, v), _)| *v == id).map(|(_, w)| w).sum()
    }

    pub fn out_strength(&self, id: CharId) -> f64 {
        self.edges.iter().filter(|((u, _), _)| *u == id).map(|(_, w)| w).sum()
    }

    /// Copy restricted to nodes that touch at least one edge.
    pub fn without_isolates(&self) -> CharGraph {
        let touched: BTreeSet<CharId> = self.edges.keys().flat_map(|&(u, v)| [u, v]).collect();
        CharGraph {
            kind: self.kind,
            directed: self.directed,
            nodes: self.nodes.iter().filter(|n| touched.contains(&n.char_id)).cloned().collect(),
            edges: self.edges.clone(),
        }
    }
}

pub fn nodes_from_registry(registry: &Registry, scores: Option<&BookScores>) -> Vec<Node> {
    let totals = scores.map(|s| s.totals()).unwrap_or_default();
    registry
        .characters
        .iter()
        .map(|c| Node {
            char_id: c.char_id,
            name: c.canonical_name.clone(),
            gender: c.gender,
            components: totals.get(&c.char_id).copied().unwrap_or_default(),
        })
        .collect()
}

/// One unit per paragraph in which both characters are mentioned. Tokens
/// outside any chapter are ignored.
pub fn build_cooccurrence(
    bundle: &AnnotationBundle,
    registry: &Registry,
    chapters: &ChapterMap,
    nodes: Vec<Node>,
) -> CharGraph {
    let clusters = registry.cluster_map();
    let mut by_paragraph: BTreeMap<usize, BTreeSet<CharId>> = BTreeMap::new();
    for m in bundle.mentions.iter().filter(|m| m.is_person()) {
        if chapters.chapter(m.start_token).is_none() {
            continue;
        }
        if let Some(&id) = clusters.get(&m.cluster_id) {
            by_paragraph.entry(bundle.paragraph_of(m.start_token)).or_default().insert(id);
        }
    }
    let mut g = CharGraph::new(NetworkKind::Cooccurrence, nodes);
    for present in by_paragraph.values() {
        let present: Vec<_> = present.iter().copied().collect();
        for (i, &u) in present.iter().enumerate() {
            for &v in &present[i + 1..] {
                g.add_weight(u, v, 1.0);
            }
        }
    }
    g
}

/// One unit per pair of consecutive spoken quotes by different known
/// speakers at most `max_paragraph_gap` paragraphs apart. A quote without a
/// known speaker, or a letter, breaks the exchange.
pub fn build_dialogue(
    bundle: &AnnotationBundle,
    registry: &Registry,
    chapters: &ChapterMap,
    max_paragraph_gap: usize,
    nodes: Vec<Node>,
) -> CharGraph {
    let clusters = registry.cluster_map();
    let mut g = CharGraph::new(NetworkKind::Dialogue, nodes);
    let mut prev: Option<(CharId, usize, Option<usize>)> = None;
    for q in &bundle.quotes {
        let chapter = chapters.chapter(q.start_token);
        let speaker = q.speaker_cluster.and_then(|k| clusters.get(&k).copied());
        let (Some(speaker), QuoteKind::Speech, Some(_)) = (speaker, q.kind, chapter) else {
            prev = None;
            continue;
        };
        let para = bundle.paragraph_of(q.start_token);
        if let Some((p_speaker, p_para, p_chapter)) = prev {
            if p_speaker != speaker && p_chapter == chapter && para - p_para <= max_paragraph_gap {
                g.add_weight(p_speaker, speaker, 1.0);
            }
        }
        prev = Some((speaker, para, chapter));
    }
    g
}

/// Directed speaker → subject weights from discussion spans; spans by an
/// unknown speaker are dropped.
pub fn build_discussion<'a>(dc_spans: impl IntoIterator<Item = &'a TaggedSpan>, nodes: Vec<Node>) -> CharGraph {
    let mut g = CharGraph::new(NetworkKind::Discussion, nodes);
    for s in dc_spans {
        if s.component != Component::DC {
            continue;
        }
        if let (Some(CharRef::Char(u)), CharRef::Char(v)) = (s.speaker_char_id, s.char_id) {
            g.add_weight(u, v, 1.0);
        }
    }
    g
}

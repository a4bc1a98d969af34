//! Corpus tables, figures and the artifact manifest.
//!
//! Every table cell records which per-novel artifacts it was computed from,
//! as `novels/<id>/<file>#<field>` keys.

mod figures;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use figures::{render_component_bars, render_network_svg};

use crate::annotation::{CharId, Gender};
use crate::config::RunConfig;
use crate::metrics::{GraphMetrics, NodeMetrics};
use crate::network::NetworkKind;
use crate::pipeline::{create, write_json, write_novel, NovelRun, PipelineError, NETWORKS};
use crate::stats::{
    concentration, edge_gender_shares, mean_sd, paired_t_test, protagonist, protagonist_agreement,
    representation_ratio, spearman, tag_centrality_table, NovelMeasures,
};
use crate::tagger::Component;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no novels to report on")]
    NoNovels,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub text: String,
    pub value: Option<f64>,
    pub sd: Option<f64>,
    /// Novels that contributed a defined value.
    pub n: usize,
    pub provenance: Vec<String>,
}

impl Cell {
    fn empty() -> Self {
        Cell {
            text: "---".into(),
            value: None,
            sd: None,
            n: 0,
            provenance: Vec::new(),
        }
    }

    fn single(value: Option<f64>, digits: usize, provenance: String) -> Self {
        match value {
            None => Cell::empty(),
            Some(v) => Cell {
                text: format!("{v:.digits$}"),
                value: Some(v),
                sd: None,
                n: 1,
                provenance: vec![provenance],
            },
        }
    }

    fn text(text: String, value: Option<f64>, n: usize, provenance: Vec<String>) -> Self {
        Cell {
            text,
            value,
            sd: None,
            n,
            provenance,
        }
    }
}

/// Mean ± sample SD over the defined values; one value is shown with SD
/// 0.00 and an `n=1` flag.
pub fn aggregate(items: &[(Option<f64>, String)], digits: usize, show_sd: bool) -> Cell {
    let (values, provenance): (Vec<f64>, Vec<String>) =
        items.iter().filter_map(|(v, p)| v.map(|v| (v, p.clone()))).unzip();
    let Some((m, sd)) = mean_sd(&values) else {
        return Cell::empty();
    };
    let text = match (show_sd, values.len()) {
        (false, _) => format!("{m:.digits$}"),
        (true, 1) => format!("{m:.digits$} ± {sd:.digits$} (n=1)"),
        (true, _) => format!("{m:.digits$} ± {sd:.digits$}"),
    };
    Cell {
        text,
        value: Some(m),
        sd: Some(sd),
        n: values.len(),
        provenance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub id: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
}

impl Table {
    fn new(id: &str, title: &str, columns: &[&str]) -> Self {
        Table {
            id: id.into(),
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn row(&mut self, label: &str, cells: Vec<Cell>) {
        self.rows.push(Row {
            label: label.into(),
            cells,
        });
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.iter().find(|r| r.label == row).map(|r| &r.cells[c])
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.cells.iter().map(|c| c.text.clone()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub included: Vec<String>,
    /// First-person novels, left out of the corpus tables.
    pub excluded: Vec<String>,
    pub tables: Vec<Table>,
    pub footer: Vec<String>,
}

impl Report {
    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }
}

fn metrics_key(id: &str, kind: NetworkKind, field: &str) -> String {
    format!("novels/{id}/{}_metrics.json#{field}", kind.as_str())
}

fn scores_key(id: &str, c: Component) -> String {
    format!("novels/{id}/scores.csv#{c}")
}

const CO: NetworkKind = NetworkKind::Cooccurrence;
const DI: NetworkKind = NetworkKind::Dialogue;
const DC: NetworkKind = NetworkKind::Discussion;

fn node_values(m: &GraphMetrics, f: impl Fn(&NodeMetrics) -> Option<f64>) -> Vec<(CharId, f64)> {
    m.nodes.iter().filter_map(|n| f(n).map(|v| (n.char_id, v))).collect()
}

fn pagerank(n: &NodeMetrics) -> Option<f64> {
    Some(n.pagerank)
}

fn eigen(n: &NodeMetrics) -> Option<f64> {
    n.eigenvector
}

/// Book totals of one component for every registry character, zero-filled.
fn tag_values(run: &NovelRun, c: Component) -> Vec<(CharId, f64)> {
    let totals = run.book.totals();
    run.registry
        .characters
        .iter()
        .map(|ch| (ch.char_id, totals.get(&ch.char_id).map_or(0.0, |t| t[c.index()] as f64)))
        .collect()
}

fn corpus_summary(runs: &[&NovelRun]) -> Table {
    let mut t = Table::new(
        "corpus_summary",
        "Corpus-averaged global network statistics (mean ± SD across novels)",
        &["Co-occurrence", "Dialogue", "Discussion (DC)"],
    );
    type Getter = fn(&GraphMetrics) -> Option<f64>;
    let rows: [(&str, &str, Getter, usize, bool, bool); 11] = [
        ("Nodes", "global.nodes", |m| Some(m.global.nodes as f64), 0, true, true),
        ("Edges", "global.edges", |m| Some(m.global.edges as f64), 0, true, true),
        ("Density", "global.density", |m| Some(m.global.density), 2, true, true),
        ("Degree Gini", "global.gini_degree", |m| Some(m.global.gini_degree), 2, true, false),
        ("Centralization", "global.degree_centralization", |m| Some(m.global.degree_centralization), 2, true, false),
        ("Clustering", "global.average_clustering", |m| Some(m.global.average_clustering), 2, true, false),
        ("Assortativity", "global.degree_assortativity", |m| m.global.degree_assortativity, 2, true, false),
        ("Avg Path Length", "global.average_path_length", |m| m.global.average_path_length.map(|p| p.value), 2, true, false),
        ("In-strength Gini", "global.gini_in_strength", |m| m.global.gini_in_strength, 2, false, true),
        ("Out-strength Gini", "global.gini_out_strength", |m| m.global.gini_out_strength, 2, false, true),
        ("Reciprocity", "global.reciprocity", |m| m.global.reciprocity, 2, false, true),
    ];
    for (label, field, get, digits, undirected, directed) in rows {
        let cells = NETWORKS
            .iter()
            .map(|&k| {
                if (k.directed() && !directed) || (!k.directed() && !undirected) {
                    return Cell::empty();
                }
                let items: Vec<_> = runs.iter().map(|r| (get(r.metrics(k)), metrics_key(&r.id, k, field))).collect();
                aggregate(&items, digits, true)
            })
            .collect();
        t.row(label, cells);
    }
    t
}

fn corpus_full(runs: &[&NovelRun]) -> Table {
    let mut t = Table::new(
        "corpus_full",
        "Network statistics for every novel",
        &["Co |V|", "Co Gini", "Co Cent.", "Di |V|", "Di Gini", "Di Cent.", "DC |V|", "DC Gini_in", "DC Recip."],
    );
    for r in runs {
        let mut cells = Vec::new();
        for k in [CO, DI] {
            let g = &r.metrics(k).global;
            cells.push(Cell::single(Some(g.nodes as f64), 0, metrics_key(&r.id, k, "global.nodes")));
            cells.push(Cell::single(Some(g.gini_degree), 2, metrics_key(&r.id, k, "global.gini_degree")));
            cells.push(Cell::single(Some(g.degree_centralization), 2, metrics_key(&r.id, k, "global.degree_centralization")));
        }
        let g = &r.metrics(DC).global;
        cells.push(Cell::single(Some(g.nodes as f64), 0, metrics_key(&r.id, DC, "global.nodes")));
        cells.push(Cell::single(g.gini_in_strength, 2, metrics_key(&r.id, DC, "global.gini_in_strength")));
        cells.push(Cell::single(g.reciprocity, 2, metrics_key(&r.id, DC, "global.reciprocity")));
        t.row(&r.title, cells);
    }
    t
}

struct Measure {
    label: &'static str,
    values: fn(&NovelRun) -> Vec<(CharId, f64)>,
    key: fn(&str) -> String,
}

fn protagonist_measures() -> Vec<Measure> {
    vec![
        Measure {
            label: "N",
            values: |r| tag_values(r, Component::N),
            key: |id| scores_key(id, Component::N),
        },
        Measure {
            label: "C",
            values: |r| tag_values(r, Component::C),
            key: |id| scores_key(id, Component::C),
        },
        Measure {
            label: "PR_co",
            values: |r| node_values(r.metrics(CO), pagerank),
            key: |id| metrics_key(id, CO, "per_node.pagerank"),
        },
        Measure {
            label: "EV_co",
            values: |r| node_values(r.metrics(CO), eigen),
            key: |id| metrics_key(id, CO, "per_node.eigenvector"),
        },
        Measure {
            label: "PR_di",
            values: |r| node_values(r.metrics(DI), pagerank),
            key: |id| metrics_key(id, DI, "per_node.pagerank"),
        },
        Measure {
            label: "EV_di",
            values: |r| node_values(r.metrics(DI), eigen),
            key: |id| metrics_key(id, DI, "per_node.eigenvector"),
        },
    ]
}

fn protagonist_table(runs: &[&NovelRun]) -> Table {
    let mut t = Table::new(
        "protagonist_agreement",
        "Protagonist agreement (% of novels selecting the same top character)",
        &["Match%"],
    );
    let measures = protagonist_measures();
    let by_label: BTreeMap<&str, &Measure> = measures.iter().map(|m| (m.label, m)).collect();
    for (a, b) in [("N", "PR_co"), ("N", "EV_co"), ("C", "PR_di"), ("C", "EV_di"), ("N", "C"), ("PR_co", "PR_di")] {
        let (ma, mb) = (by_label[a], by_label[b]);
        let pa: Vec<_> = runs.iter().map(|r| protagonist(&(ma.values)(r))).collect();
        let pb: Vec<_> = runs.iter().map(|r| protagonist(&(mb.values)(r))).collect();
        let v = protagonist_agreement(&pa, &pb);
        let provenance = runs.iter().flat_map(|r| [(ma.key)(&r.id), (mb.key)(&r.id)]).collect();
        let text = v.map_or("---".into(), |v| format!("{v:.1}"));
        t.row(&format!("{a} vs {b}"), vec![Cell::text(text, v, runs.len(), provenance)]);
    }
    t
}

/// Spearman between the two undirected networks over characters present in
/// both.
fn cross_network_table(runs: &[&NovelRun]) -> Table {
    let mut t = Table::new(
        "cross_network_correlation",
        "Spearman correlation between co-occurrence and dialogue centralities (mean ± SD across novels)",
        &["rho"],
    );
    type Get = fn(&NodeMetrics) -> Option<f64>;
    let measures: [(&str, &str, Get); 4] = [
        ("PageRank", "pagerank", pagerank),
        ("Eigenvector", "eigenvector", eigen),
        ("Degree", "degree", |n| Some(n.degree as f64)),
        ("Betweenness", "betweenness", |n| Some(n.betweenness)),
    ];
    for (label, field, get) in measures {
        let items: Vec<_> = runs
            .iter()
            .map(|r| {
                let co: BTreeMap<CharId, Option<f64>> = r.metrics(CO).nodes.iter().map(|n| (n.char_id, get(n))).collect();
                let (mut x, mut y) = (Vec::new(), Vec::new());
                let mut complete = true;
                for n in &r.metrics(DI).nodes {
                    if let Some(a) = co.get(&n.char_id) {
                        match (a, get(n)) {
                            (Some(a), Some(b)) => {
                                x.push(*a);
                                y.push(b);
                            }
                            _ => complete = false,
                        }
                    }
                }
                let rho = if complete { spearman(&x, &y) } else { None };
                let key = format!("{}+{}", metrics_key(&r.id, CO, &format!("per_node.{field}")), metrics_key(&r.id, DI, &format!("per_node.{field}")));
                (rho, key)
            })
            .collect();
        t.row(label, vec![aggregate(&items, 2, true)]);
    }
    t
}

fn measures_for(run: &NovelRun, kind: NetworkKind, suffix: &str) -> NovelMeasures {
    let m = run.metrics(kind);
    let totals = run.book.totals();
    let tags = Component::ALL
        .iter()
        .map(|&c| {
            let v = m.nodes.iter().map(|n| totals.get(&n.char_id).map_or(0.0, |t| t[c.index()] as f64)).collect();
            (c, v)
        })
        .collect();
    let mut centralities = BTreeMap::new();
    centralities.insert(format!("PR_{suffix}"), m.nodes.iter().map(|n| n.pagerank).collect());
    if m.nodes.iter().all(|n| n.eigenvector.is_some()) {
        centralities.insert(format!("EV_{suffix}"), m.nodes.iter().map(|n| n.eigenvector.unwrap()).collect());
    }
    NovelMeasures {
        novel_id: run.id.clone(),
        tags,
        centralities,
    }
}

fn tag_centrality(runs: &[&NovelRun]) -> Table {
    let columns = ["PR_co", "EV_co", "PR_di", "EV_di"];
    let mut t = Table::new(
        "tag_centrality",
        "Average Spearman correlation between character tags and network centralities",
        &columns,
    );
    let co = tag_centrality_table(&runs.iter().map(|r| measures_for(r, CO, "co")).collect::<Vec<_>>());
    let di = tag_centrality_table(&runs.iter().map(|r| measures_for(r, DI, "di")).collect::<Vec<_>>());
    for c in Component::ALL {
        let cells = columns
            .iter()
            .map(|&col| {
                let (table, kind) = if col.ends_with("co") { (&co, CO) } else { (&di, DI) };
                let field = if col.starts_with("PR") { "per_node.pagerank" } else { "per_node.eigenvector" };
                match table.get(c, col) {
                    Some(cell) => Cell::text(
                        cell.mean.map_or("---".into(), |m| format!("{m:.2}")),
                        cell.mean,
                        cell.novels,
                        runs.iter().map(|r| format!("{}+{}", scores_key(&r.id, c), metrics_key(&r.id, kind, field))).collect(),
                    ),
                    None => Cell::empty(),
                }
            })
            .collect();
        t.row(c.as_str(), cells);
    }
    t
}

fn concentration_table(runs: &[&NovelRun]) -> Table {
    let mut t = Table::new(
        "concentration",
        "Concentration of character importance (mean across novels)",
        &["Gini", "Top-1", "Top-1 vs. 2"],
    );
    let mut add = |label: &str, per: Vec<(Vec<f64>, String)>| {
        let stats: Vec<_> = per.iter().map(|(v, k)| (concentration(v), k.clone())).collect();
        let col = |f: fn(&crate::stats::Concentration) -> Option<f64>| {
            aggregate(&stats.iter().map(|(c, k)| (f(c), k.clone())).collect::<Vec<_>>(), 2, false)
        };
        t.row(label, vec![col(|c| Some(c.gini)), col(|c| c.top1_share), col(|c| c.top1_vs_2)]);
    };
    for c in Component::ALL {
        let per = runs
            .iter()
            .map(|r| (tag_values(r, c).into_iter().map(|x| x.1).collect(), scores_key(&r.id, c)))
            .collect();
        add(c.as_str(), per);
    }
    for (label, kind) in [("PR_co", CO), ("PR_di", DI)] {
        let per = runs
            .iter()
            .map(|r| {
                let v = r.metrics(kind).nodes.iter().map(|n| n.pagerank).collect();
                (v, metrics_key(&r.id, kind, "per_node.pagerank"))
            })
            .collect();
        add(label, per);
    }
    t
}

fn p_text(p: f64) -> String {
    let stars = if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    };
    if p < 0.001 {
        format!("<.001{stars}")
    } else {
        let s = format!("{p:.3}");
        format!("{}{stars}", s.trim_start_matches('0'))
    }
}

fn p_cell(a: &[f64], b: &[f64], provenance: Vec<String>) -> Cell {
    match paired_t_test(a, b) {
        Ok(t) => Cell::text(p_text(t.p_two_sided), Some(t.p_two_sided), a.len(), provenance),
        Err(_) => Cell::empty(),
    }
}

fn has_gender(run: &NovelRun) -> bool {
    run.registry.characters.iter().any(|c| c.gender != Gender::Unknown)
}

fn representation_table(runs: &[&NovelRun], top_k: usize) -> Table {
    let mut t = Table::new(
        "gender_representation",
        &format!("Top-{top_k} representation ratios in the discussion network (mean ± SD across novels)"),
        &["M", "F", "p (F vs M)"],
    );
    let gendered: Vec<&&NovelRun> = runs.iter().filter(|r| has_gender(r)).collect();
    if gendered.is_empty() {
        t.notes.push("skipped: no novel has gender labels".into());
        return t;
    }
    let skipped: Vec<&str> = runs.iter().filter(|r| !has_gender(r)).map(|r| r.id.as_str()).collect();
    if !skipped.is_empty() {
        t.notes.push(format!("novels without gender labels left out: {}", skipped.join(", ")));
    }
    type Get = fn(&NodeMetrics) -> f64;
    let rows: [(&str, &str, Get); 3] = [
        ("In (discussion)", "per_node.in_strength", |n| n.in_strength),
        ("Out (discussion)", "per_node.out_strength", |n| n.out_strength),
        ("PR", "per_node.pagerank", |n| n.pagerank),
    ];
    for (label, field, get) in rows {
        let mut m_items = Vec::new();
        let mut f_items = Vec::new();
        let (mut pm, mut pf, mut pk) = (Vec::new(), Vec::new(), Vec::new());
        for r in &gendered {
            let g = r.graph(DC);
            let m = r.metrics(DC);
            let chars: Vec<(CharId, Gender, f64)> = m
                .nodes
                .iter()
                .map(|n| (n.char_id, g.node(n.char_id).map_or(Gender::Unknown, |x| x.gender), get(n)))
                .collect();
            let ratio = representation_ratio(&chars, top_k);
            let key = metrics_key(&r.id, DC, field);
            m_items.push((ratio.m, key.clone()));
            f_items.push((ratio.f, key.clone()));
            if let (Some(a), Some(b)) = (ratio.f, ratio.m) {
                pf.push(a);
                pm.push(b);
                pk.push(key);
            }
        }
        t.row(label, vec![aggregate(&m_items, 2, true), aggregate(&f_items, 2, true), p_cell(&pf, &pm, pk)]);
    }
    t
}

fn edge_gender_table(runs: &[&NovelRun]) -> Table {
    let mut t = Table::new(
        "gender_edges",
        "Edge-level gender structure in discussion networks (share %, mean ± SD across novels)",
        &["Share (%)", "p (F→M vs M→F)"],
    );
    let shares: Vec<_> = runs
        .iter()
        .filter_map(|r| edge_gender_shares(r.graph(DC)).map(|s| (s, format!("novels/{}/discussion.graphml", r.id))))
        .collect();
    if shares.is_empty() {
        t.notes.push("skipped: no discussion edge joins two gendered characters".into());
        return t;
    }
    type Get = fn(&crate::stats::EdgeGenderShares) -> f64;
    let rows: [(&str, Get); 4] = [
        ("F→F (women discussing women)", |s| s.ff),
        ("F→M (women discussing men)", |s| s.fm),
        ("M→F (men discussing women)", |s| s.mf),
        ("M→M (men discussing men)", |s| s.mm),
    ];
    for (label, get) in rows {
        let items: Vec<_> = shares.iter().map(|(s, k)| (Some(100.0 * get(s)), k.clone())).collect();
        t.row(label, vec![aggregate(&items, 1, true), Cell::empty()]);
    }
    let ratio: Vec<_> = shares.iter().map(|(s, k)| (s.fm_mf_ratio, k.clone())).collect();
    let fm: Vec<f64> = shares.iter().map(|(s, _)| s.fm).collect();
    let mf: Vec<f64> = shares.iter().map(|(s, _)| s.mf).collect();
    let keys = shares.iter().map(|(_, k)| k.clone()).collect();
    t.row("F→M / M→F ratio", vec![aggregate(&ratio, 2, true), p_cell(&fm, &mf, keys)]);
    t
}

fn evaluation_table(runs: &[&NovelRun]) -> Option<Table> {
    let with_gold: Vec<_> = runs.iter().filter(|r| r.eval.is_some()).collect();
    if with_gold.is_empty() {
        return None;
    }
    let mut t = Table::new("evaluation", "Component scores against gold counts", &["MAE", "Bias", "Pearson"]);
    for r in with_gold {
        let key = format!("novels/{}/eval.json", r.id);
        for e in &r.eval.as_ref().unwrap().components {
            t.row(
                &format!("{} {}", r.id, e.component),
                vec![
                    Cell::single(Some(e.mae), 2, key.clone()),
                    Cell::single(e.bias, 2, key.clone()),
                    Cell::single(e.pearson, 2, key.clone()),
                ],
            );
        }
    }
    Some(t)
}

/// Builds every corpus table. First-person novels are kept out of the
/// aggregates.
pub fn build_report(runs: &[NovelRun], top_k: usize) -> Result<Report, ReportError> {
    if runs.is_empty() {
        return Err(ReportError::NoNovels);
    }
    let included: Vec<&NovelRun> = runs.iter().filter(|r| !r.first_person).collect();
    let excluded: Vec<String> = runs.iter().filter(|r| r.first_person).map(|r| r.id.clone()).collect();
    let mut tables = vec![
        corpus_summary(&included),
        corpus_full(&included),
        protagonist_table(&included),
        cross_network_table(&included),
        tag_centrality(&included),
        concentration_table(&included),
        representation_table(&included, top_k),
        edge_gender_table(&included),
    ];
    if let Some(t) = evaluation_table(&runs.iter().collect::<Vec<_>>()) {
        tables.push(t);
    }
    let mut footer = vec![
        "± cells show the mean and the sample standard deviation (n − 1) across novels; a single novel is shown with SD 0.00 and flagged n=1.".to_string(),
        "Networks exclude characters without edges.".to_string(),
    ];
    if !excluded.is_empty() {
        footer.push(format!("First-person novels excluded from corpus tables: {}", excluded.join(", ")));
    }
    Ok(Report {
        included: included.iter().map(|r| r.id.clone()).collect(),
        excluded,
        tables,
        footer,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes `paths` (sorted, relative to `root`) into `root/manifest.json`.
pub fn write_manifest(root: &Path, paths: &[PathBuf]) -> Result<Manifest, PipelineError> {
    let mut artifacts = Vec::new();
    for p in paths {
        let bytes = fs::read(p).map_err(|e| PipelineError::io(p, e))?;
        let rel = p.strip_prefix(root).unwrap_or(p);
        artifacts.push(ManifestEntry {
            path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    artifacts.dedup_by(|a, b| a.path == b.path);
    let manifest = Manifest { artifacts };
    write_json(&root.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Serialize)]
struct RunParameters<'a> {
    seed: u64,
    min_total: usize,
    min_proper: usize,
    keep_preamble: bool,
    heading_pattern: &'a Option<String>,
    dialogue_gap: usize,
    embed: bool,
    embed_network: &'a str,
    embed_epochs: usize,
    top_k: usize,
    novels: Vec<(&'a str, &'a str, bool)>,
}

/// Writes per-novel artifacts, corpus tables, figures and the manifest
/// under `out`.
pub fn emit_report(cfg: &RunConfig, runs: &[NovelRun], out: &Path) -> Result<(Report, Manifest), ReportError> {
    let report = build_report(runs, cfg.top_k)?;
    let mut written = Vec::new();
    for r in runs {
        written.extend(write_novel(r, &out.join("novels").join(&r.id), cfg.embed_labels)?);
    }
    let report_dir = out.join("report");
    for t in &report.tables {
        let p = report_dir.join(format!("{}.csv", t.id));
        t.write_csv(create(&p)?).map_err(|e| PipelineError::io(&p, e))?;
        written.push(p);
    }
    let p = report_dir.join("report.json");
    write_json(&p, &report)?;
    written.push(p);
    let figures = report_dir.join("figures");
    for r in runs {
        let p = figures.join(format!("components_{}.svg", r.id));
        render_component_bars(r, 10, create(&p)?).map_err(|e| PipelineError::io(&p, e))?;
        written.push(p);
        for g in &r.graphs {
            let p = figures.join(format!("network_{}_{}.svg", r.id, g.kind.as_str()));
            render_network_svg(g, 40, create(&p)?).map_err(|e| PipelineError::io(&p, e))?;
            written.push(p);
        }
    }
    let p = out.join("run.json");
    write_json(
        &p,
        &RunParameters {
            seed: cfg.seed,
            min_total: cfg.min_total,
            min_proper: cfg.min_proper,
            keep_preamble: cfg.keep_preamble,
            heading_pattern: &cfg.heading_pattern,
            dialogue_gap: cfg.dialogue_gap,
            embed: cfg.embed,
            embed_network: cfg.embed_network.as_str(),
            embed_epochs: cfg.embed_epochs,
            top_k: cfg.top_k,
            novels: cfg.novels.iter().map(|n| (n.id.as_str(), n.title.as_str(), n.first_person)).collect(),
        },
    )?;
    written.push(p);
    let manifest = write_manifest(out, &written)?;
    Ok((report, manifest))
}

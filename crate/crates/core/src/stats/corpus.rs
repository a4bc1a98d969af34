use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spearman;
use crate::annotation::{CharId, Gender};
use crate::metrics::{gini, rank_top};
use crate::network::CharGraph;
use crate::tagger::Component;

/// Rank-1 character, ties to the smaller id.
pub fn protagonist(values: &[(CharId, f64)]) -> Option<CharId> {
    rank_top(values, 1).first().map(|p| p.0)
}

/// Percentage of novels whose two rank-1 choices coincide. A novel with no
/// winner on either side counts as disagreement.
pub fn protagonist_agreement(a: &[Option<CharId>], b: &[Option<CharId>]) -> Option<f64> {
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let same = a.iter().zip(b).filter(|(x, y)| x.is_some() && x == y).count();
    Some(100.0 * same as f64 / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub gini: f64,
    pub top1_share: Option<f64>,
    pub top1_vs_2: Option<f64>,
}

pub fn concentration(values: &[f64]) -> Concentration {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = v.iter().sum();
    Concentration {
        gini: gini(values),
        top1_share: (total > 0.0).then(|| v[0] / total),
        top1_vs_2: (v.len() >= 2 && v[1] > 0.0).then(|| v[0] / v[1]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationRatio {
    pub m: Option<f64>,
    pub f: Option<f64>,
    /// Size of the ranked set actually used.
    pub top_k: usize,
    /// Fewer gendered characters than requested.
    pub short: bool,
}

/// Share of each gender among the top `k` gendered characters divided by its
/// share among all gendered characters. Unknown gender is left out of both.
pub fn representation_ratio(chars: &[(CharId, Gender, f64)], k: usize) -> RepresentationRatio {
    let gendered: Vec<_> = chars.iter().filter(|c| c.1 != Gender::Unknown).collect();
    let ranked = rank_top(&gendered.iter().map(|c| (c.0, c.2)).collect::<Vec<_>>(), k);
    let gender_of: BTreeMap<CharId, Gender> = gendered.iter().map(|c| (c.0, c.1)).collect();
    let ratio = |g: Gender| {
        let all = gendered.iter().filter(|c| c.1 == g).count() as f64;
        if all == 0.0 || ranked.is_empty() {
            return None;
        }
        let top = ranked.iter().filter(|r| gender_of[&r.0] == g).count() as f64;
        Some((top / ranked.len() as f64) / (all / gendered.len() as f64))
    };
    RepresentationRatio {
        m: ratio(Gender::M),
        f: ratio(Gender::F),
        top_k: ranked.len(),
        short: gendered.len() < k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeGenderShares {
    pub ff: f64,
    pub fm: f64,
    pub mf: f64,
    pub mm: f64,
    /// `fm / mf`; `None` when no mass flows from men to women.
    pub fm_mf_ratio: Option<f64>,
}

/// Weighted edge mass by (speaker gender, subject gender), over edges with
/// both endpoints gendered. `None` when there is no such mass.
pub fn edge_gender_shares(g: &CharGraph) -> Option<EdgeGenderShares> {
    let gender: BTreeMap<CharId, Gender> = g.nodes.iter().map(|n| (n.char_id, n.gender)).collect();
    let mut mass = [0.0; 4];
    let mut add = |a: Gender, b: Gender, w: f64| {
        let i = match (a, b) {
            (Gender::F, Gender::F) => 0,
            (Gender::F, Gender::M) => 1,
            (Gender::M, Gender::F) => 2,
            (Gender::M, Gender::M) => 3,
            _ => return,
        };
        mass[i] += w;
    };
    for (&(u, v), &w) in &g.edges {
        let (a, b) = (gender[&u], gender[&v]);
        add(a, b, w);
        if !g.directed {
            add(b, a, w);
        }
    }
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        return None;
    }
    Some(EdgeGenderShares {
        ff: mass[0] / total,
        fm: mass[1] / total,
        mf: mass[2] / total,
        mm: mass[3] / total,
        fm_mf_ratio: (mass[2] > 0.0).then(|| mass[1] / mass[2]),
    })
}

/// Per-character book totals and centralities of one novel, aligned by
/// position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelMeasures {
    pub novel_id: String,
    pub tags: BTreeMap<Component, Vec<f64>>,
    pub centralities: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagCentralityCell {
    pub component: Component,
    pub measure: String,
    pub mean: Option<f64>,
    /// Novels with a defined correlation.
    pub novels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagCentralityTable {
    pub cells: Vec<TagCentralityCell>,
}

impl TagCentralityTable {
    pub fn get(&self, component: Component, measure: &str) -> Option<&TagCentralityCell> {
        self.cells.iter().find(|c| c.component == component && c.measure == measure)
    }
}

/// Spearman between each tag and each centrality within a novel, averaged
/// over novels where it is defined.
pub fn tag_centrality_table(novels: &[NovelMeasures]) -> TagCentralityTable {
    let mut acc: BTreeMap<(Component, String), (f64, usize)> = BTreeMap::new();
    for novel in novels {
        for (&c, tag) in &novel.tags {
            for (m, cent) in &novel.centralities {
                let e = acc.entry((c, m.clone())).or_insert((0.0, 0));
                if let Some(r) = spearman(tag, cent) {
                    e.0 += r;
                    e.1 += 1;
                }
            }
        }
    }
    TagCentralityTable {
        cells: acc
            .into_iter()
            .map(|((component, measure), (sum, n))| TagCentralityCell {
                component,
                measure,
                mean: (n > 0).then(|| sum / n as f64),
                novels: n,
            })
            .collect(),
    }
}

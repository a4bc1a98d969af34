//! Node centralities and whole-graph measures.
//!
//! Shortest paths use edge length `1/w` (strong ties are short). Degree,
//! centralization, assortativity, clustering, path length and
//! hyperbolicity look at the underlying unweighted undirected graph.

mod centrality;
mod global;

use serde::{Deserialize, Serialize};

use crate::annotation::CharId;
use crate::network::CharGraph;

pub use centrality::{betweenness, closeness, degree, eigenvector, pagerank, strength, ConvergenceError, PATH_TIE_TOL};
pub use global::{
    average_clustering, average_path_length, degree_assortativity, degree_centralization, delta_hyperbolicity, density,
    gini, largest_component, local_clustering, reciprocity, Hyperbolicity, PathLength,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub delta_max_exact: usize,
    pub delta_samples: u64,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            damping: 0.85,
            tol: 1e-12,
            max_iter: 100_000,
            delta_max_exact: 80,
            delta_samples: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub char_id: CharId,
    pub name: String,
    pub degree: usize,
    pub strength: f64,
    pub in_strength: f64,
    pub out_strength: f64,
    pub betweenness: f64,
    pub closeness: f64,
    /// Absent when power iteration failed.
    pub eigenvector: Option<f64>,
    pub pagerank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: f64,
    pub density: f64,
    pub reciprocity: Option<f64>,
    pub degree_centralization: f64,
    pub degree_assortativity: Option<f64>,
    pub average_clustering: f64,
    pub average_path_length: Option<PathLength>,
    pub hyperbolicity: Hyperbolicity,
    pub gini_degree: f64,
    pub gini_strength: f64,
    /// Directed graphs only.
    pub gini_in_strength: Option<f64>,
    pub gini_out_strength: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub kind: String,
    pub directed: bool,
    #[serde(rename = "per_node")]
    pub nodes: Vec<NodeMetrics>,
    pub global: GlobalMetrics,
    #[serde(rename = "flags")]
    pub warnings: Vec<String>,
}

pub fn compute_metrics(g: &CharGraph, cfg: &MetricsConfig) -> GraphMetrics {
    let mut warnings = Vec::new();
    let deg = degree(g);
    let st = strength(g);
    let bt = betweenness(g);
    let cl = closeness(g);
    let ev = match eigenvector(g, cfg.tol, cfg.max_iter) {
        Ok(v) => v.into_iter().map(Some).collect(),
        Err(e) => {
            warnings.push(format!("eigenvector: {e}"));
            vec![None; g.len()]
        }
    };
    let pr = pagerank(g, cfg.damping, cfg.tol, cfg.max_iter).unwrap_or_else(|e| {
        warnings.push(format!("pagerank: {e}"));
        e.last_iterate
    });
    let nodes = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| NodeMetrics {
            char_id: n.char_id,
            name: n.name.clone(),
            degree: deg[i],
            strength: st[i],
            in_strength: g.in_strength(n.char_id),
            out_strength: g.out_strength(n.char_id),
            betweenness: bt[i],
            closeness: cl[i],
            eigenvector: ev[i],
            pagerank: pr[i],
        })
        .collect();
    let apl = average_path_length(g);
    if apl.is_some_and(|p| p.disconnected) {
        warnings.push("graph is disconnected; path length uses the largest component".into());
    }
    let hyp = delta_hyperbolicity(g, cfg.delta_max_exact, cfg.delta_samples, cfg.seed);
    if hyp.sampled {
        warnings.push(format!("hyperbolicity sampled from {} quadruples (lower bound)", hyp.quadruples));
    }
    let global = GlobalMetrics {
        nodes: g.len(),
        edges: g.edge_count(),
        total_weight: g.total_weight(),
        density: density(g),
        reciprocity: reciprocity(g),
        degree_centralization: degree_centralization(g),
        degree_assortativity: degree_assortativity(g),
        average_clustering: average_clustering(g),
        average_path_length: apl,
        hyperbolicity: hyp,
        gini_degree: gini(&deg.iter().map(|&d| d as f64).collect::<Vec<_>>()),
        gini_strength: gini(&st),
        gini_in_strength: g.directed.then(|| gini(&g.nodes.iter().map(|n| g.in_strength(n.char_id)).collect::<Vec<_>>())),
        gini_out_strength: g.directed.then(|| gini(&g.nodes.iter().map(|n| g.out_strength(n.char_id)).collect::<Vec<_>>())),
    };
    GraphMetrics {
        kind: g.kind.as_str().to_string(),
        directed: g.directed,
        nodes,
        global,
        warnings,
    }
}

/// Top `k` characters by value, ties broken by ascending char id.
pub fn rank_top(values: &[(CharId, f64)], k: usize) -> Vec<(CharId, f64)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> CharGraph {
        let mut g = CharGraph::with_nodes(leaves + 1, false);
        for i in 1..=leaves {
            g.add_weight(0, i, 1.0);
        }
        g
    }

    fn path(n: usize) -> CharGraph {
        let mut g = CharGraph::with_nodes(n, false);
        for i in 1..n {
            g.add_weight(i - 1, i, 1.0);
        }
        g
    }

    fn cycle(n: usize) -> CharGraph {
        let mut g = path(n);
        g.add_weight(n - 1, 0, 1.0);
        g
    }

    #[test]
    fn star_measures() {
        let g = star(5);
        assert_eq!(degree_centralization(&g), 1.0);
        assert_eq!(betweenness(&g)[0], 1.0);
        assert_eq!(betweenness(&g)[1], 0.0);
        assert_eq!(degree_assortativity(&g), Some(-1.0));
        assert_eq!(average_clustering(&g), 0.0);
    }

    #[test]
    fn path_betweenness_and_closeness() {
        let g = path(3);
        assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0]);
        let c = closeness(&g);
        assert!((c[1] - 1.0).abs() < 1e-15);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tree_is_zero_hyperbolic_and_cycle_is_not() {
        assert_eq!(delta_hyperbolicity(&path(6), 80, 0, 0).delta, 0.0);
        assert_eq!(delta_hyperbolicity(&star(6), 80, 0, 0).delta, 0.0);
        assert_eq!(delta_hyperbolicity(&cycle(6), 80, 0, 0).delta, 1.0);
        assert_eq!(delta_hyperbolicity(&cycle(4), 80, 0, 0).delta, 1.0);
    }

    #[test]
    fn sampled_hyperbolicity_is_flagged_and_seeded() {
        let g = cycle(12);
        let a = delta_hyperbolicity(&g, 5, 500, 7);
        let b = delta_hyperbolicity(&g, 5, 500, 7);
        assert!(a.sampled);
        assert_eq!(a, b);
        assert!(a.delta <= delta_hyperbolicity(&g, 80, 0, 0).delta);
    }

    #[test]
    fn reciprocity_cases() {
        let mut g = CharGraph::with_nodes(3, true);
        assert_eq!(reciprocity(&g), None);
        g.add_weight(0, 1, 1.0);
        g.add_weight(1, 0, 2.0);
        g.add_weight(1, 2, 1.0);
        assert_eq!(reciprocity(&g), Some(2.0 / 3.0));
    }

    #[test]
    fn pagerank_sums_to_one_with_dangling() {
        let mut g = CharGraph::with_nodes(4, true);
        g.add_weight(0, 1, 1.0);
        g.add_weight(1, 2, 3.0);
        let pr = pagerank(&g, 0.85, 1e-12, 10_000).unwrap();
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_on_bipartite_converges() {
        let v = eigenvector(&path(4), 1e-13, 100_000).unwrap();
        assert!((v[0] - v[3]).abs() < 1e-10);
        assert!(v[1] > v[0]);
    }

    #[test]
    fn eigenvector_errors_carry_last_iterate() {
        let g = CharGraph::with_nodes(3, false);
        let e = eigenvector(&g, 1e-12, 10).unwrap_err();
        assert_eq!(e.last_iterate.len(), 3);
        let e = eigenvector(&path(5), 1e-300, 3).unwrap_err();
        assert_eq!(e.iterations, 3);
    }

    #[test]
    fn gini_bounds() {
        assert_eq!(gini(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(gini(&[0.0, 0.0, 0.0, 4.0]), 0.75);
        assert_eq!(gini(&[]), 0.0);
    }

    #[test]
    fn path_length_on_largest_component() {
        let mut g = path(3);
        g.nodes.push(crate::network::Node {
            char_id: 3,
            ..g.nodes[0].clone()
        });
        let p = average_path_length(&g).unwrap();
        assert!((p.value - 8.0 / 6.0).abs() < 1e-15);
        assert!(p.disconnected);
    }

    #[test]
    fn rank_top_breaks_ties_by_id() {
        let r = rank_top(&[(3, 1.0), (1, 2.0), (2, 1.0), (0, 0.5)], 3);
        assert_eq!(r, vec![(1, 2.0), (2, 1.0), (3, 1.0)]);
    }
}

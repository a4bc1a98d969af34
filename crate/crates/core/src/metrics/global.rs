use std::collections::{BTreeSet, VecDeque};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::CharGraph;

/// `2m / n(n-1)` for undirected graphs, `m / n(n-1)` for directed ones.
pub fn density(g: &CharGraph) -> f64 {
    let n = g.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let m = g.edge_count() as f64;
    if g.directed {
        m / (n * (n - 1.0))
    } else {
        2.0 * m / (n * (n - 1.0))
    }
}

/// Share of directed edges whose reverse edge also exists. `None` for
/// undirected or edgeless graphs.
pub fn reciprocity(g: &CharGraph) -> Option<f64> {
    if !g.directed || g.edges.is_empty() {
        return None;
    }
    let mutual = g.edges.keys().filter(|(u, v)| g.edges.contains_key(&(*v, *u))).count();
    Some(mutual as f64 / g.edge_count() as f64)
}

/// Freeman degree centralization of the underlying simple graph.
pub fn degree_centralization(g: &CharGraph) -> f64 {
    let n = g.len();
    if n < 3 {
        return 0.0;
    }
    let deg = super::degree(g);
    let max = *deg.iter().max().unwrap();
    let sum: usize = deg.iter().map(|d| max - d).sum();
    sum as f64 / ((n - 1) * (n - 2)) as f64
}

/// Pearson correlation of endpoint degrees, each edge counted in both
/// orientations. `None` when the degrees along edges do not vary.
pub fn degree_assortativity(g: &CharGraph) -> Option<f64> {
    let deg = super::degree(g);
    let nb = g.neighbor_sets();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, s) in nb.iter().enumerate() {
        for &j in s {
            xs.push(deg[i] as f64);
            ys.push(deg[j] as f64);
        }
    }
    if xs.is_empty() {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}

/// Local clustering coefficients of the underlying simple graph; nodes with
/// fewer than two neighbours get 0.
pub fn local_clustering(g: &CharGraph) -> Vec<f64> {
    let nb = g.neighbor_sets();
    nb.iter()
        .map(|s| {
            let k = s.len();
            if k < 2 {
                return 0.0;
            }
            let v: Vec<usize> = s.iter().copied().collect();
            let mut links = 0;
            for (a, &x) in v.iter().enumerate() {
                for &y in &v[a + 1..] {
                    if nb[x].contains(&y) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

pub fn average_clustering(g: &CharGraph) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    let c = local_clustering(g);
    c.iter().sum::<f64>() / c.len() as f64
}

/// Hop distances from `s` in the underlying simple graph (`usize::MAX` when
/// unreachable).
pub(crate) fn bfs(nb: &[BTreeSet<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; nb.len()];
    dist[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in &nb[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}

/// Node indices of the largest connected component; ties go to the component
/// holding the smallest index.
pub fn largest_component(g: &CharGraph) -> Vec<usize> {
    let nb = g.neighbor_sets();
    let mut seen = vec![false; g.len()];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..g.len() {
        if seen[s] {
            continue;
        }
        let d = bfs(&nb, s);
        let comp: Vec<usize> = (0..g.len()).filter(|&i| d[i] != usize::MAX).collect();
        comp.iter().for_each(|&i| seen[i] = true);
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLength {
    pub value: f64,
    /// Computed on the largest component only.
    pub disconnected: bool,
}

/// Mean hop distance between distinct nodes of the largest component.
pub fn average_path_length(g: &CharGraph) -> Option<PathLength> {
    let comp = largest_component(g);
    if comp.len() < 2 {
        return None;
    }
    let nb = g.neighbor_sets();
    let mut total = 0usize;
    for &s in &comp {
        let d = bfs(&nb, s);
        total += comp.iter().map(|&t| d[t]).sum::<usize>();
    }
    let k = comp.len();
    Some(PathLength {
        value: total as f64 / (k * (k - 1)) as f64,
        disconnected: k < g.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperbolicity {
    pub delta: f64,
    /// Quadruples were sampled, so `delta` is a lower bound.
    pub sampled: bool,
    pub quadruples: u64,
}

/// Gromov four-point delta on hop distances of the largest component: for
/// each quadruple the three pair sums are sorted and half the gap between the
/// two largest is taken; the maximum over quadruples is reported. Exhaustive
/// up to `max_exact` nodes, otherwise `samples` random quadruples.
pub fn delta_hyperbolicity(g: &CharGraph, max_exact: usize, samples: u64, seed: u64) -> Hyperbolicity {
    let comp = largest_component(g);
    let k = comp.len();
    if k < 4 {
        return Hyperbolicity {
            delta: 0.0,
            sampled: false,
            quadruples: 0,
        };
    }
    let nb = g.neighbor_sets();
    let d: Vec<Vec<usize>> = comp.iter().map(|&s| {
        let all = bfs(&nb, s);
        comp.iter().map(|&t| all[t]).collect()
    }).collect();
    let four = |x: usize, y: usize, z: usize, w: usize| -> f64 {
        let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
        s.sort_unstable();
        (s[2] - s[1]) as f64 / 2.0
    };
    let mut delta: f64 = 0.0;
    let mut count = 0u64;
    if k <= max_exact {
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    for e in c + 1..k {
                        delta = delta.max(four(a, b, c, e));
                        count += 1;
                    }
                }
            }
        }
        return Hyperbolicity {
            delta,
            sampled: false,
            quadruples: count,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let q = sample(&mut rng, k, 4).into_vec();
        delta = delta.max(four(q[0], q[1], q[2], q[3]));
    }
    Hyperbolicity {
        delta,
        sampled: true,
        quadruples: samples,
    }
}

/// Gini coefficient of non-negative values; 0 when all are zero.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total == 0.0 {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let weighted: f64 = v
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x)
        .sum();
    weighted / (n as f64 * total)
}

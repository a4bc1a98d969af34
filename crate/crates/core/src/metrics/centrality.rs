use thiserror::Error;

use crate::network::CharGraph;

/// Relative tolerance for treating two path lengths as equal.
pub const PATH_TIE_TOL: f64 = 1e-12;

pub(crate) fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATH_TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("power iteration did not converge in {iterations} iterations (last change {last_change:e})")]
pub struct ConvergenceError {
    pub iterations: usize,
    pub last_change: f64,
    pub last_iterate: Vec<f64>,
}

/// Out-neighbours with path lengths `1/w`, in node-index order.
fn length_adjacency(g: &CharGraph) -> Vec<Vec<(usize, f64)>> {
    let idx = g.index();
    let mut adj = vec![Vec::new(); g.len()];
    for (&(u, v), &w) in &g.edges {
        let (i, j) = (idx[&u], idx[&v]);
        adj[i].push((j, 1.0 / w));
        if !g.directed {
            adj[j].push((i, 1.0 / w));
        }
    }
    adj
}

/// Number of distinct partners (in or out) per node.
pub fn degree(g: &CharGraph) -> Vec<usize> {
    g.neighbor_sets().iter().map(|s| s.len()).collect()
}

pub fn strength(g: &CharGraph) -> Vec<f64> {
    g.nodes.iter().map(|n| g.strength(n.char_id)).collect()
}

struct ShortestPaths {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
}

fn dijkstra(adj: &[Vec<(usize, f64)>], s: usize) -> ShortestPaths {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut preds = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    dist[s] = 0.0;
    sigma[s] = 1.0;
    loop {
        let next = (0..n)
            .filter(|&i| !done[i] && dist[i].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let Some(u) = next else { break };
        done[u] = true;
        order.push(u);
        for &(v, len) in &adj[u] {
            if done[v] {
                continue;
            }
            let alt = dist[u] + len;
            if dist[v].is_finite() && same_length(alt, dist[v]) {
                sigma[v] += sigma[u];
                preds[v].push(u);
            } else if alt < dist[v] {
                dist[v] = alt;
                sigma[v] = sigma[u];
                preds[v] = vec![u];
            }
        }
    }
    ShortestPaths {
        dist,
        sigma,
        preds,
        order,
    }
}

/// Brandes betweenness over ordered pairs with edge length `1/w`, divided
/// by `(n-1)(n-2)`.
pub fn betweenness(g: &CharGraph) -> Vec<f64> {
    let n = g.len();
    let mut cb = vec![0.0; n];
    if n < 3 {
        return cb;
    }
    let adj = length_adjacency(g);
    for s in 0..n {
        let sp = dijkstra(&adj, s);
        let mut delta = vec![0.0; n];
        for &w in sp.order.iter().rev() {
            for &v in &sp.preds[w] {
                delta[v] += sp.sigma[v] / sp.sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    cb.iter().map(|x| x / norm).collect()
}

/// Closeness from outward weighted distances: `(r-1)/sum(d)` scaled by
/// `(r-1)/(n-1)` where `r` counts reachable nodes including the source.
pub fn closeness(g: &CharGraph) -> Vec<f64> {
    let n = g.len();
    let adj = length_adjacency(g);
    (0..n)
        .map(|s| {
            let sp = dijkstra(&adj, s);
            let reach: Vec<f64> = sp.dist.iter().copied().filter(|d| d.is_finite()).collect();
            let r = reach.len();
            let total: f64 = reach.iter().sum();
            if r <= 1 || total == 0.0 {
                0.0
            } else {
                let k = (r - 1) as f64;
                k / total * k / (n - 1) as f64
            }
        })
        .collect()
}

/// Eigenvector centrality by power iteration on `A + I` (directed weights
/// are symmetrized), L2-normalized.
#[allow(clippy::needless_range_loop)]
pub fn eigenvector(g: &CharGraph, tol: f64, max_iter: usize) -> Result<Vec<f64>, ConvergenceError> {
    let n = g.len();
    let mut a = g.matrix();
    if g.directed {
        for i in 0..n {
            for j in 0..i {
                let s = (a[i][j] + a[j][i]) / 2.0;
                a[i][j] = s;
                a[j][i] = s;
            }
        }
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    if g.edges.is_empty() {
        return Err(ConvergenceError {
            iterations: 0,
            last_change: f64::NAN,
            last_iterate: x,
        });
    }
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        let mut y: Vec<f64> = (0..n).map(|i| x[i] + (0..n).map(|j| a[i][j] * x[j]).sum::<f64>()).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        change = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        x = y;
        if change < tol {
            return Ok(x);
        }
    }
    Err(ConvergenceError {
        iterations: max_iter,
        last_change: change,
        last_iterate: x,
    })
}

/// Weighted PageRank; dangling nodes spread their mass uniformly.
pub fn pagerank(g: &CharGraph, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>, ConvergenceError> {
    let n = g.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = g.matrix();
    let out: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&i| out[i] == 0.0).map(|i| x[i]).sum();
        let mut y = vec![(1.0 - damping) / nf + damping * dangling / nf; n];
        for i in 0..n {
            if out[i] > 0.0 {
                for j in 0..n {
                    if a[i][j] > 0.0 {
                        y[j] += damping * x[i] * a[i][j] / out[i];
                    }
                }
            }
        }
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= s);
        change = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum();
        x = y;
        if change < tol {
            return Ok(x);
        }
    }
    Err(ConvergenceError {
        iterations: max_iter,
        last_change: change,
        last_iterate: x,
    })
}

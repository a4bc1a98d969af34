//! Brute-force reference implementations of the graph measures, written
//! from the textbook definitions and sharing no code with the library.

use std::collections::BTreeMap;

use charspace::metrics::{self, MetricsConfig};
use charspace::network::CharGraph;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TIE: f64 = 1e-12;

fn tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE * a.abs().max(b.abs()).max(1.0)
}

/// Edge list with integer node indices `0..n`.
#[derive(Debug, Clone)]
pub struct Spec {
    pub name: String,
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Spec {
    pub fn graph(&self) -> CharGraph {
        let mut g = CharGraph::with_nodes(self.n, self.directed);
        for &(u, v, w) in &self.edges {
            g.add_weight(u, v, w);
        }
        g
    }

    /// Weight matrix, symmetric when undirected.
    pub fn w(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(u, v, w) in &self.edges {
            m[u][v] += w;
            if !self.directed {
                m[v][u] += w;
            }
        }
        m
    }

    /// Unweighted undirected adjacency.
    pub fn a(&self) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0; self.n]; self.n];
        for &(u, v, _) in &self.edges {
            m[u][v] = 1;
            m[v][u] = 1;
        }
        m
    }
}

pub fn path(n: usize) -> Spec {
    Spec {
        name: format!("path{n}"),
        n,
        directed: false,
        edges: (1..n).map(|i| (i - 1, i, 1.0)).collect(),
    }
}

pub fn cycle(n: usize) -> Spec {
    let mut s = path(n);
    s.name = format!("cycle{n}");
    s.edges.push((n - 1, 0, 1.0));
    s
}

pub fn star(n: usize) -> Spec {
    Spec {
        name: format!("star{n}"),
        n,
        directed: false,
        edges: (1..n).map(|i| (0, i, 1.0)).collect(),
    }
}

pub fn complete(n: usize) -> Spec {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, 1.0));
        }
    }
    Spec {
        name: format!("complete{n}"),
        n,
        directed: false,
        edges,
    }
}

/// Connected (a random spanning tree plus extra edges) weighted graph on
/// 4 to 7 nodes. Even seeds draw integer weights from 1..=3 to provoke ties.
pub fn random(seed: u64) -> Spec {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let n = rng.gen_range(4..=7);
    let directed = seed % 4 == 3;
    let weight = |rng: &mut ChaCha8Rng| {
        if seed.is_multiple_of(2) {
            rng.gen_range(1..=3) as f64
        } else {
            rng.gen_range(0.5..5.0)
        }
    };
    let mut present = BTreeMap::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let (a, b) = if directed && rng.gen_bool(0.5) { (v, u) } else { (u, v) };
        present.insert((a, b), weight(&mut rng));
    }
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && u > v) {
                continue;
            }
            if !present.contains_key(&(u, v)) && !(!directed && present.contains_key(&(v, u))) && rng.gen_bool(0.3) {
                present.insert((u, v), weight(&mut rng));
            }
        }
    }
    Spec {
        name: format!("random{seed}"),
        n,
        directed,
        edges: present.into_iter().map(|((u, v), w)| (u, v, w)).collect(),
    }
}

pub fn suite() -> Vec<Spec> {
    let mut out = Vec::new();
    for n in 2..=7 {
        out.push(path(n));
        out.push(star(n));
        out.push(complete(n));
    }
    for n in 3..=7 {
        out.push(cycle(n));
    }
    for seed in 0..20 {
        out.push(random(seed));
    }
    out
}

/// Every simple path from `s` to `t` with its length under `1/w`.
fn simple_paths(w: &[Vec<f64>], s: usize, t: usize) -> Vec<(Vec<usize>, f64)> {
    fn go(w: &[Vec<f64>], t: usize, stack: &mut Vec<usize>, len: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        let u = *stack.last().unwrap();
        if u == t {
            out.push((stack.clone(), len));
            return;
        }
        for v in 0..w.len() {
            if w[u][v] > 0.0 && !stack.contains(&v) {
                stack.push(v);
                go(w, t, stack, len + 1.0 / w[u][v], out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(w, t, &mut vec![s], 0.0, &mut out);
    out
}

pub fn betweenness(spec: &Spec) -> Vec<f64> {
    let n = spec.n;
    let w = spec.w();
    let mut b = vec![0.0; n];
    if n < 3 {
        return b;
    }
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let paths = simple_paths(&w, s, t);
            if paths.is_empty() {
                continue;
            }
            let best = paths.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let shortest: Vec<_> = paths.iter().filter(|p| tie(p.1, best)).collect();
            for (v, bv) in b.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.0.contains(&v)).count();
                *bv += through as f64 / shortest.len() as f64;
            }
        }
    }
    b.iter().map(|x| x / ((n - 1) * (n - 2)) as f64).collect()
}

/// Floyd-Warshall on lengths `1/w`.
pub fn distances(spec: &Spec) -> Vec<Vec<f64>> {
    let n = spec.n;
    let w = spec.w();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            if w[i][j] > 0.0 {
                d[i][j] = 1.0 / w[i][j];
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn closeness(spec: &Spec) -> Vec<f64> {
    let n = spec.n;
    let d = distances(spec);
    (0..n)
        .map(|i| {
            let reach: Vec<f64> = (0..n).filter(|&j| j != i && d[i][j].is_finite()).map(|j| d[i][j]).collect();
            if reach.is_empty() {
                return 0.0;
            }
            let r = reach.len() as f64;
            (r / reach.iter().sum::<f64>()) * (r / (n - 1) as f64)
        })
        .collect()
}

/// Principal eigenvector of the symmetrized weight matrix (connected
/// graphs only).
pub fn eigenvector(spec: &Spec) -> Vec<f64> {
    let n = spec.n;
    let w = spec.w();
    let m = DMatrix::from_fn(n, n, |i, j| (w[i][j] + w[j][i]) / 2.0);
    let eig = SymmetricEigen::new(m);
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let v = eig.eigenvectors.column(k);
    let norm = v.norm();
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|x| sign * x / norm).collect()
}

/// Exact stationary vector of the Google matrix by a dense linear solve.
pub fn pagerank(spec: &Spec, d: f64) -> Vec<f64> {
    let n = spec.n;
    let w = spec.w();
    let p = DMatrix::from_fn(n, n, |i, j| {
        let out: f64 = w[i].iter().sum();
        if out == 0.0 {
            1.0 / n as f64
        } else {
            w[i][j] / out
        }
    });
    let lhs = DMatrix::identity(n, n) - p.transpose() * d;
    let rhs = DVector::from_element(n, (1.0 - d) / n as f64);
    let x = lhs.lu().solve(&rhs).unwrap();
    let s = x.sum();
    x.iter().map(|v| v / s).collect()
}

pub fn degree(spec: &Spec) -> Vec<f64> {
    spec.a().iter().map(|r| r.iter().sum::<u64>() as f64).collect()
}

pub fn strength(spec: &Spec) -> Vec<f64> {
    (0..spec.n)
        .map(|i| spec.edges.iter().filter(|e| e.0 == i || e.1 == i).map(|e| e.2).sum())
        .collect()
}

pub fn density(spec: &Spec) -> f64 {
    let n = spec.n as f64;
    let pairs = if spec.directed { n * (n - 1.0) } else { n * (n - 1.0) / 2.0 };
    spec.edges.len() as f64 / pairs
}

pub fn reciprocity(spec: &Spec) -> Option<f64> {
    if !spec.directed || spec.edges.is_empty() {
        return None;
    }
    let both = spec
        .edges
        .iter()
        .filter(|(u, v, _)| spec.edges.iter().any(|(a, b, _)| a == v && b == u))
        .count();
    Some(both as f64 / spec.edges.len() as f64)
}

/// Freeman: sum of gaps to the maximum degree over the star's value.
pub fn centralization(spec: &Spec) -> f64 {
    let n = spec.n;
    if n < 3 {
        return 0.0;
    }
    let d = degree(spec);
    let max = d.iter().cloned().fold(0.0, f64::max);
    d.iter().map(|x| max - x).sum::<f64>() / ((n - 1) * (n - 2)) as f64
}

/// Newman's edge-sum form of degree assortativity.
pub fn assortativity(spec: &Spec) -> Option<f64> {
    let a = spec.a();
    let d = degree(spec);
    let mut m = 0.0;
    let (mut s_jk, mut s_half, mut s_sq) = (0.0, 0.0, 0.0);
    for i in 0..spec.n {
        for j in i + 1..spec.n {
            if a[i][j] == 1 {
                m += 1.0;
                s_jk += d[i] * d[j];
                s_half += (d[i] + d[j]) / 2.0;
                s_sq += (d[i] * d[i] + d[j] * d[j]) / 2.0;
            }
        }
    }
    if m == 0.0 {
        return None;
    }
    let mean = s_half / m;
    let den = s_sq / m - mean * mean;
    if den.abs() < 1e-12 {
        None
    } else {
        Some((s_jk / m - mean * mean) / den)
    }
}

/// Mean of `(A^3)_ii / k(k-1)`.
pub fn clustering(spec: &Spec) -> f64 {
    let a = spec.a();
    let n = spec.n;
    let mut total = 0.0;
    for i in 0..n {
        let k: u64 = a[i].iter().sum();
        if k < 2 {
            continue;
        }
        let mut closed = 0u64;
        for j in 0..n {
            for l in 0..n {
                closed += a[i][j] * a[j][l] * a[l][i];
            }
        }
        total += closed as f64 / (k * (k - 1)) as f64;
    }
    total / n as f64
}

fn hops(spec: &Spec) -> Vec<Vec<f64>> {
    let a = spec.a();
    let n = spec.n;
    let mut d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else if a[i][j] == 1 { 1.0 } else { f64::INFINITY }).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d
}

/// Mean finite hop distance over ordered pairs (connected graphs only).
#[allow(clippy::needless_range_loop)]
pub fn average_path(spec: &Spec) -> f64 {
    let d = hops(spec);
    let n = spec.n;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += d[i][j];
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Gromov-product form: max over all ordered quadruples of
/// `min((x|z)_w, (y|z)_w) - (x|y)_w`.
pub fn hyperbolicity(spec: &Spec) -> f64 {
    let d = hops(spec);
    let n = spec.n;
    let gp = |x: usize, y: usize, w: usize| (d[x][w] + d[y][w] - d[x][y]) / 2.0;
    let mut delta: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    delta = delta.max(gp(x, z, w).min(gp(y, z, w)) - gp(x, y, w));
                }
            }
        }
    }
    delta
}

/// Mean absolute difference over twice the mean.
pub fn gini(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Compares every library measure on `spec` with the oracles above and
/// returns one message per disagreement.
pub fn compare(spec: &Spec, tol: f64) -> Vec<String> {
    let g = spec.graph();
    let cfg = MetricsConfig {
        tol: 1e-14,
        ..MetricsConfig::default()
    };
    let got = metrics::compute_metrics(&g, &cfg);
    let mut bad = Vec::new();
    let mut vec_check = |what: &str, lib: Vec<f64>, oracle: Vec<f64>| {
        for (i, (a, b)) in lib.iter().zip(&oracle).enumerate() {
            if !close(*a, *b, tol) {
                bad.push(format!("{}: {what}[{i}] = {a} but oracle says {b}", spec.name));
            }
        }
    };
    vec_check("degree", got.nodes.iter().map(|n| n.degree as f64).collect(), degree(spec));
    vec_check("strength", got.nodes.iter().map(|n| n.strength).collect(), strength(spec));
    vec_check("betweenness", got.nodes.iter().map(|n| n.betweenness).collect(), betweenness(spec));
    vec_check("closeness", got.nodes.iter().map(|n| n.closeness).collect(), closeness(spec));
    vec_check("pagerank", got.nodes.iter().map(|n| n.pagerank).collect(), pagerank(spec, cfg.damping));
    if spec.n > 1 {
        vec_check(
            "eigenvector",
            got.nodes.iter().map(|n| n.eigenvector.unwrap_or(f64::NAN)).collect(),
            eigenvector(spec),
        );
    }
    let gl = &got.global;
    let mut scalar = |what: &str, lib: Option<f64>, oracle: Option<f64>| {
        let ok = match (lib, oracle) {
            (Some(a), Some(b)) => close(a, b, tol),
            (None, None) => true,
            _ => false,
        };
        if !ok {
            bad.push(format!("{}: {what} = {lib:?} but oracle says {oracle:?}", spec.name));
        }
    };
    scalar("density", Some(gl.density), Some(density(spec)));
    scalar("reciprocity", gl.reciprocity, reciprocity(spec));
    scalar("centralization", Some(gl.degree_centralization), Some(centralization(spec)));
    scalar("assortativity", gl.degree_assortativity, assortativity(spec));
    scalar("clustering", Some(gl.average_clustering), Some(clustering(spec)));
    scalar(
        "average_path_length",
        gl.average_path_length.map(|p| p.value),
        (spec.n > 1).then(|| average_path(spec)),
    );
    scalar("hyperbolicity", Some(gl.hyperbolicity.delta), Some(hyperbolicity(spec)));
    scalar("gini_degree", Some(gl.gini_degree), Some(gini(&degree(spec))));
    scalar("gini_strength", Some(gl.gini_strength), Some(gini(&strength(spec))));
    bad
}

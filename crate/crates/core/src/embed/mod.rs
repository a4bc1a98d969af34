//! Poincaré disk embeddings of character networks.
//!
//! Training minimizes, for each positive pair `(u, v)` and negatives `N`
//! drawn from the non-neighbours of `u`, the softmax loss
//! `-log(exp(-d(u,v)) / sum over {v} ∪ N of exp(-d(u,v')))` with Riemannian
//! SGD.

mod svg;

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::CharId;
use crate::network::CharGraph;

pub use svg::render_disk_svg;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("point with norm {0} is outside the open unit ball")]
    Domain(f64),
    #[error("non-finite gradient")]
    Step,
    #[error("cannot train: {0}")]
    Train(String),
    #[error("cannot render: {0}")]
    Render(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Epochs at `learning_rate / 10` run before the main epochs.
    pub burn_in_epochs: usize,
    pub seed: u64,
    pub init_radius: f64,
    /// Points are kept at norm at most `1 - eps`.
    pub eps: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 2,
            negatives: 10,
            epochs: 100,
            learning_rate: 0.01,
            burn_in_epochs: 10,
            seed: 0,
            init_radius: 1e-3,
            eps: 1e-5,
        }
    }
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum()
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn distance_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let gamma = 1.0 + 2.0 * sq_dist(u, v) / ((1.0 - sq_norm(u)) * (1.0 - sq_norm(v)));
    gamma.acosh()
}

/// `arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))`.
pub fn poincare_distance(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    for p in [u, v] {
        let n = sq_norm(p).sqrt();
        if n >= 1.0 || !n.is_finite() {
            return Err(EmbedError::Domain(n));
        }
    }
    Ok(distance_unchecked(u, v))
}

/// Euclidean gradient of `d(u, v)` with respect to `u`; zero at `u = v`.
pub fn distance_grad(u: &[f64], v: &[f64]) -> Vec<f64> {
    let uu = sq_norm(u);
    let vv = sq_norm(v);
    let alpha = 1.0 - uu;
    let beta = 1.0 - vv;
    let gamma = 1.0 + 2.0 * sq_dist(u, v) / (alpha * beta);
    let root = (gamma * gamma - 1.0).sqrt();
    if root < 1e-15 {
        return vec![0.0; u.len()];
    }
    let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let c = 4.0 / (beta * root);
    let a = (vv - 2.0 * uv + 1.0) / (alpha * alpha);
    u.iter().zip(v).map(|(ui, vi)| c * (a * ui - vi / alpha)).collect()
}

/// Rescales onto norm `1 - eps` when the point has left the ball.
pub fn project(p: &mut [f64], eps: f64) {
    let n = sq_norm(p).sqrt();
    if n >= 1.0 - eps {
        let s = (1.0 - eps) / n;
        p.iter_mut().for_each(|x| *x *= s);
    }
}

/// `proj(theta - lr * ((1 - |theta|^2)^2 / 4) * grad)`.
pub fn riemannian_step(point: &[f64], grad: &[f64], lr: f64, eps: f64) -> Result<Vec<f64>, EmbedError> {
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(EmbedError::Step);
    }
    let scale = (1.0 - sq_norm(point)).powi(2) / 4.0;
    let mut out: Vec<f64> = point.iter().zip(grad).map(|(p, g)| p - lr * scale * g).collect();
    project(&mut out, eps);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub char_ids: Vec<CharId>,
    pub points: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn norm(&self, i: usize) -> f64 {
        sq_norm(&self.points[i]).sqrt()
    }

    pub fn point(&self, id: CharId) -> Option<&[f64]> {
        self.char_ids.iter().position(|&c| c == id).map(|i| self.points[i].as_slice())
    }

    /// `char_id,x,y,...,norm` rows; coordinates use shortest round-trip
    /// formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EmbedError> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.points.first().map_or(2, Vec::len);
        let mut header = vec!["char_id".to_string()];
        header.extend(["x", "y", "z"].iter().take(dim.min(3)).map(|s| s.to_string()));
        header.extend((3..dim).map(|i| format!("x{i}")));
        header.push("norm".into());
        w.write_record(&header).map_err(std::io::Error::from)?;
        for (i, (id, p)) in self.char_ids.iter().zip(&self.points).enumerate() {
            let mut rec = vec![id.to_string()];
            rec.extend(p.iter().map(|x| format!("{x:?}")));
            rec.push(format!("{:?}", self.norm(i)));
            w.write_record(&rec).map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub burn_in: bool,
    pub mean_loss: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub embedding: Embedding,
    pub loss_trace: Vec<LossRecord>,
}

pub fn write_loss_trace<W: Write>(out: W, trace: &[LossRecord]) -> Result<(), EmbedError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "phase", "mean_loss", "samples"]).map_err(std::io::Error::from)?;
    for r in trace {
        w.write_record([
            r.epoch.to_string(),
            if r.burn_in { "burn_in" } else { "train" }.to_string(),
            format!("{:?}", r.mean_loss),
            r.samples.to_string(),
        ])
        .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Trains an embedding of `g` (edge direction ignored). Deterministic for
/// a fixed seed.
pub fn train(g: &CharGraph, cfg: &EmbedConfig) -> Result<TrainResult, EmbedError> {
    train_observed(g, cfg, |_| {})
}

/// [`train`], calling `observe` with all points after every update.
pub fn train_observed(
    g: &CharGraph,
    cfg: &EmbedConfig,
    mut observe: impl FnMut(&[Vec<f64>]),
) -> Result<TrainResult, EmbedError> {
    if cfg.dim == 0 || cfg.negatives == 0 || cfg.epochs == 0 || cfg.learning_rate <= 0.0 {
        return Err(EmbedError::Train("dim, negatives, epochs and learning rate must be positive".into()));
    }
    let n = g.len();
    if n < 2 || g.edges.is_empty() {
        return Err(EmbedError::Train("graph needs at least two nodes and one edge".into()));
    }
    let idx = g.index();
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for (&(u, v), &w) in &g.edges {
        let (i, j) = (idx[&u], idx[&v]);
        pairs.push((i, j));
        weights.push(w);
        pairs.push((j, i));
        weights.push(w);
    }
    let sampler = WeightedIndex::new(&weights).map_err(|e| EmbedError::Train(e.to_string()))?;
    let nb = g.neighbor_sets();
    let non_neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && !nb[i].contains(&j)).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..cfg.dim).map(|_| rng.gen_range(-cfg.init_radius..cfg.init_radius)).collect())
        .collect();
    for p in &mut points {
        let r = sq_norm(p).sqrt();
        if r > cfg.init_radius {
            p.iter_mut().for_each(|x| *x *= cfg.init_radius / r);
        }
    }

    let mut trace = Vec::new();
    let phases = (0..cfg.burn_in_epochs)
        .map(|_| (true, cfg.learning_rate / 10.0))
        .chain((0..cfg.epochs).map(|_| (false, cfg.learning_rate)));
    for (epoch, (burn_in, lr)) in phases.enumerate() {
        let mut loss_sum = 0.0;
        let mut samples = 0;
        for _ in 0..pairs.len() {
            let (u, v) = pairs[sampler.sample(&mut rng)];
            let pool = &non_neighbors[u];
            if pool.is_empty() {
                continue;
            }
            let mut targets = vec![v];
            targets.extend((0..cfg.negatives).map(|_| pool[rng.gen_range(0..pool.len())]));
            let dists: Vec<f64> = targets.iter().map(|&t| distance_unchecked(&points[u], &points[t])).collect();
            let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
            let exps: Vec<f64> = dists.iter().map(|d| (-(d - dmin)).exp()).collect();
            let z: f64 = exps.iter().sum();
            loss_sum += dists[0] - dmin + z.ln();
            samples += 1;

            let mut grads: Vec<(usize, Vec<f64>)> = Vec::with_capacity(targets.len() + 1);
            let mut gu = vec![0.0; cfg.dim];
            for (k, &t) in targets.iter().enumerate() {
                let p = exps[k] / z;
                let dl_dd = if k == 0 { 1.0 - p } else { -p };
                for (a, b) in gu.iter_mut().zip(distance_grad(&points[u], &points[t])) {
                    *a += dl_dd * b;
                }
                let gt: Vec<f64> = distance_grad(&points[t], &points[u]).iter().map(|b| dl_dd * b).collect();
                match grads.iter_mut().find(|(i, _)| *i == t) {
                    Some((_, acc)) => acc.iter_mut().zip(&gt).for_each(|(a, b)| *a += b),
                    None => grads.push((t, gt)),
                }
            }
            grads.push((u, gu));
            for (i, grad) in grads {
                points[i] = riemannian_step(&points[i], &grad, lr, cfg.eps)?;
            }
            observe(&points);
        }
        trace.push(LossRecord {
            epoch,
            burn_in,
            mean_loss: if samples > 0 { loss_sum / samples as f64 } else { 0.0 },
            samples,
        });
    }
    Ok(TrainResult {
        embedding: Embedding {
            char_ids: g.node_ids(),
            points,
        },
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(poincare_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        let d = poincare_distance(&[0.5, 0.0], &[-0.5, 0.0]).unwrap();
        assert!((d - (1.0f64 + 2.0 / 0.5625).acosh()).abs() < 1e-15);
        assert!((d - 2.1972).abs() < 1e-4);
        assert!(matches!(poincare_distance(&[1.0, 0.0], &[0.0, 0.0]), Err(EmbedError::Domain(_))));
    }

    #[test]
    fn step_examples() {
        let p = [0.3, -0.2];
        assert_eq!(riemannian_step(&p, &[0.0, 0.0], 0.1, 1e-5).unwrap(), p.to_vec());
        let q = riemannian_step(&[0.0, 0.0], &[2.0, -4.0], 0.1, 1e-5).unwrap();
        assert_eq!(q, vec![-0.05, 0.1]);
        let far = riemannian_step(&[0.9, 0.0], &[-1e6, 0.0], 1.0, 1e-5).unwrap();
        assert!((sq_norm(&far).sqrt() - (1.0 - 1e-5)).abs() < 1e-12);
        assert!(matches!(riemannian_step(&p, &[f64::NAN, 0.0], 0.1, 1e-5), Err(EmbedError::Step)));
    }

    #[test]
    fn edgeless_graph_rejected() {
        let g = CharGraph::with_nodes(3, false);
        assert!(matches!(train(&g, &EmbedConfig::default()), Err(EmbedError::Train(_))));
    }

    #[test]
    fn loss_trace_and_csv() {
        let mut g = CharGraph::with_nodes(6, false);
        for i in 1..6 {
            g.add_weight(i - 1, i, 1.0);
        }
        let cfg = EmbedConfig {
            epochs: 20,
            burn_in_epochs: 2,
            ..EmbedConfig::default()
        };
        let r = train(&g, &cfg).unwrap();
        assert_eq!(r.loss_trace.len(), 22);
        assert!(r.loss_trace[0].burn_in && !r.loss_trace[2].burn_in);
        let mut buf = Vec::new();
        r.embedding.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("char_id,x,y,norm\n0,"));
        assert_eq!(text.lines().count(), 7);
    }
}

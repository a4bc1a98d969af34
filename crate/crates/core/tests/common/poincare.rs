//! Checks on the Poincaré embedding, shared by the poincare and acceptance
//! targets.

use std::time::Instant;

use charspace::embed::{distance_grad, poincare_distance, train, train_observed, EmbedConfig};
use charspace::network::CharGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn star(leaves: usize) -> CharGraph {
    let mut g = CharGraph::with_nodes(leaves + 1, false);
    for i in 1..=leaves {
        g.add_weight(0, i, 1.0);
    }
    g
}

fn random_point(rng: &mut ChaCha8Rng, max_norm: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if n < max_norm {
            return p;
        }
    }
}

pub fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = random_point(&mut rng, 0.9);
        let v = random_point(&mut rng, 0.9);
        let g = distance_grad(&u, &v);
        for k in 0..2 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (poincare_distance(&up, &v).unwrap() - poincare_distance(&dn, &v).unwrap()) / (2.0 * h);
            worst = worst.max((g[k] - fd).abs() / fd.abs().max(g[k].abs()).max(1e-8));
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

pub fn metric_axioms_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let u = random_point(&mut rng, 0.99);
        let v = random_point(&mut rng, 0.99);
        let d = poincare_distance(&u, &v).unwrap();
        assert!(d > 0.0);
        assert_eq!(d, poincare_distance(&v, &u).unwrap());
        assert_eq!(poincare_distance(&u, &u).unwrap(), 0.0);
    }
}

pub fn points_stay_in_ball_during_training() {
    let cfg = EmbedConfig {
        learning_rate: 1.0,
        ..EmbedConfig::default()
    };
    let mut max_norm: f64 = 0.0;
    train_observed(&star(8), &cfg, |pts| {
        for p in pts {
            max_norm = max_norm.max((p[0] * p[0] + p[1] * p[1]).sqrt());
        }
    })
    .unwrap();
    assert!(max_norm <= 1.0 - 1e-5 + 1e-15);
}

pub fn star_center_sits_nearer_the_origin() {
    let (mut center, mut leaves) = (0.0, 0.0);
    for seed in 0..5 {
        let cfg = EmbedConfig {
            seed,
            ..EmbedConfig::default()
        };
        let e = train(&star(8), &cfg).unwrap().embedding;
        center += e.norm(0) / 5.0;
        leaves += (1..9).map(|i| e.norm(i)).sum::<f64>() / 40.0;
    }
    assert!(center < leaves, "center {center} leaves {leaves}");
}

pub fn fixed_seed_is_bit_identical() {
    let cfg = EmbedConfig {
        seed: 42,
        ..EmbedConfig::default()
    };
    let a = train(&star(8), &cfg).unwrap();
    let b = train(&star(8), &cfg).unwrap();
    let bits = |r: &charspace::embed::TrainResult| {
        r.embedding.points.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

pub fn loss_decreases_on_a_connected_graph() {
    let mut g = CharGraph::with_nodes(12, false);
    for i in 0..12 {
        g.add_weight(i, (i + 1) % 12, 1.0);
        g.add_weight(i, (i + 3) % 12, 0.5);
    }
    let r = train(&g, &EmbedConfig::default()).unwrap();
    let main: Vec<f64> = r.loss_trace.iter().filter(|l| !l.burn_in).map(|l| l.mean_loss).collect();
    assert!(main.last().unwrap() < main.first().unwrap(), "{main:?}");
}

pub fn two_hundred_nodes_train_quickly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut g = CharGraph::with_nodes(200, false);
    for v in 1..200 {
        g.add_weight(rng.gen_range(0..v), v, rng.gen_range(1..5) as f64);
    }
    for _ in 0..600 {
        let (a, b) = (rng.gen_range(0..200), rng.gen_range(0..200));
        g.add_weight(a, b, 1.0);
    }
    let t = Instant::now();
    train(&g, &EmbedConfig::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 60.0);
}

//! Hand-rolled evaluation formulas, written without touching the library's
//! score table or statistics code.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

pub const COMPONENTS: [&str; 6] = ["N", "A", "C", "I", "DC", "DN"];

pub type Rows = BTreeMap<(String, usize, String), Vec<f64>>;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/eval")
}

pub fn case_paths(case: usize) -> (PathBuf, PathBuf) {
    let d = fixture_dir();
    (d.join(format!("case{case:02}.gold.csv")), d.join(format!("case{case:02}.pred.csv")))
}

pub fn read_rows(path: &Path) -> Rows {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows = Rows::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let vals = f[3..9].iter().map(|v| v.parse().unwrap()).collect();
        rows.insert((f[0].to_string(), f[1].parse().unwrap(), f[2].to_string()), vals);
    }
    rows
}

fn chapters(rows: &Rows) -> BTreeSet<(String, usize)> {
    rows.keys().map(|(n, c, _)| (n.clone(), *c)).collect()
}

/// Aligned (gold, pred) values per shared chapter, union of characters,
/// absent cells read as zero.
pub fn aligned(gold: &Rows, pred: &Rows, comp: usize) -> Vec<(String, usize, f64, f64)> {
    let shared: Vec<_> = chapters(gold).intersection(&chapters(pred)).cloned().collect();
    let mut out = Vec::new();
    for (novel, ch) in shared {
        let mut names = BTreeSet::new();
        for (n, c, k) in gold.keys().chain(pred.keys()) {
            if *n == novel && *c == ch {
                names.insert(k.clone());
            }
        }
        for k in names {
            let key = (novel.clone(), ch, k);
            let g = gold.get(&key).map_or(0.0, |v| v[comp]);
            let p = pred.get(&key).map_or(0.0, |v| v[comp]);
            out.push((novel.clone(), ch, g, p));
        }
    }
    out
}

pub fn mae(gold: &Rows, pred: &Rows, comp: usize) -> f64 {
    let cells = aligned(gold, pred, comp);
    let mut per_chapter: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for (n, c, g, p) in &cells {
        *per_chapter.entry((n.clone(), *c)).or_default() += (g - p).abs();
    }
    let total: f64 = per_chapter
        .iter()
        .map(|((novel, _), err)| {
            let k: BTreeSet<&String> = gold.keys().filter(|(n, _, _)| n == novel).map(|(_, _, k)| k).collect();
            err / k.len() as f64
        })
        .sum();
    total / per_chapter.len() as f64
}

pub fn bias(gold: &Rows, pred: &Rows, comp: usize) -> Option<f64> {
    let cells = aligned(gold, pred, comp);
    let sg: f64 = cells.iter().map(|c| c.2).sum();
    let sp: f64 = cells.iter().map(|c| c.3).sum();
    (sg != 0.0).then(|| sp / sg - 1.0)
}

/// Raw-sum form of Pearson's r.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 3 {
        return None;
    }
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx.abs() < 1e-9 || vy.abs() < 1e-9 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

/// Mid-rank by counting smaller and equal values.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// `t` of the paired differences `a - b`, `None` for zero spread.
pub fn paired_t(a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let ss: f64 = d.iter().map(|x| x * x).sum::<f64>() - n * m * m;
    if ss.abs() < 1e-12 {
        return None;
    }
    Some(m * (n * (n - 1.0) / ss).sqrt())
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for i in 1..steps {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Two-sided tail of Student's t. With `x = sqrt(df) tan(u)` the density
/// turns into `cos(u)^(df-1)`, which Simpson's rule handles on a finite range.
pub fn t_two_sided_by_quadrature(t: f64, df: f64) -> f64 {
    let f = |u: f64| u.cos().powf(df - 1.0);
    let u0 = (t.abs() / df.sqrt()).atan();
    let steps = 200_000;
    simpson(f, u0, FRAC_PI_2, steps) / simpson(f, 0.0, FRAC_PI_2, steps)
}

/// Oracle values for one case and component: mae, bias, pearson, spearman,
/// t, p. Correlations and the test run on the aligned cells.
pub fn evaluate_case(case: usize, comp: usize) -> [Option<f64>; 6] {
    let (gp, pp) = case_paths(case);
    let (gold, pred) = (read_rows(&gp), read_rows(&pp));
    let cells = aligned(&gold, &pred, comp);
    let g: Vec<f64> = cells.iter().map(|c| c.2).collect();
    let p: Vec<f64> = cells.iter().map(|c| c.3).collect();
    let t = paired_t(&p, &g);
    let pval = match t {
        Some(t) => t_two_sided_by_quadrature(t, (g.len() - 1) as f64),
        None => {
            if p.iter().zip(&g).all(|(a, b)| a == b) {
                1.0
            } else {
                0.0
            }
        }
    };
    [
        Some(mae(&gold, &pred, comp)),
        bias(&gold, &pred, comp),
        pearson(&g, &p),
        spearman(&g, &p),
        t,
        Some(pval),
    ]
}

pub fn frozen_path() -> PathBuf {
    fixture_dir().join("expected.csv")
}

/// `case,component,mae,bias,pearson,spearman,t,p`, `NA` for undefined.
pub fn read_frozen() -> BTreeMap<(usize, String), [Option<f64>; 6]> {
    let text = std::fs::read_to_string(frozen_path()).unwrap();
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let mut vals = [None; 6];
        for (i, v) in f[2..8].iter().enumerate() {
            vals[i] = (*v != "NA").then(|| v.parse().unwrap());
        }
        out.insert((f[0].parse().unwrap(), f[1].to_string()), vals);
    }
    out
}

pub fn format_frozen() -> String {
    let mut s = String::from("case,component,mae,bias,pearson,spearman,t,p\n");
    for case in 1..=10 {
        for (ci, c) in COMPONENTS.iter().enumerate() {
            let vals = evaluate_case(case, ci);
            let cols: Vec<String> = vals.iter().map(|v| v.map_or("NA".into(), |x| format!("{x:.15e}"))).collect();
            s.push_str(&format!("{case},{c},{}\n", cols.join(",")));
        }
    }
    s
}

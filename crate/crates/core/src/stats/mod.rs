//! Evaluation against gold counts and the corpus-level statistics.

mod corpus;
pub mod special;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tagger::Component;

pub use corpus::{
    concentration, edge_gender_shares, protagonist, protagonist_agreement, representation_ratio,
    tag_centrality_table, Concentration, EdgeGenderShares, NovelMeasures, RepresentationRatio, TagCentralityCell,
    TagCentralityTable,
};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no chapters shared by gold and prediction")]
    EmptyChapters,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("score table line {line}: {message}")]
    Table { line: usize, message: String },
}

/// Key of one score row: novel, chapter, character name.
pub type CellKey = (String, usize, String);

/// Six counts per (novel, chapter, character), as in `scores.csv`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: BTreeMap<CellKey, [f64; 6]>,
}

impl ScoreTable {
    pub fn insert(&mut self, novel: &str, chapter: usize, character: &str, counts: [f64; 6]) -> Result<(), EvalError> {
        if counts.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(EvalError::Table {
                line: 0,
                message: format!("negative or non-finite count for {character}"),
            });
        }
        let key = (novel.to_string(), chapter, character.to_string());
        if self.rows.insert(key, counts).is_some() {
            return Err(EvalError::Table {
                line: 0,
                message: format!("duplicate row {novel}/{chapter}/{character}"),
            });
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, EvalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let table_err = |line: usize, message: String| EvalError::Table { line, message };
        let headers = rdr.headers().map_err(|e| table_err(1, e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| table_err(1, format!("missing column `{name}`")))
        };
        let (ni, ci, ki) = (col("novel_id")?, col("chapter")?, col("character")?);
        let comp_cols = Component::ALL.map(|c| col(c.as_str()));
        let mut comp_idx = [0usize; 6];
        for (i, c) in comp_cols.into_iter().enumerate() {
            comp_idx[i] = c?;
        }
        let mut table = ScoreTable::default();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| table_err(line, e.to_string()))?;
            let chapter = rec[ci]
                .parse::<usize>()
                .map_err(|_| table_err(line, format!("bad chapter `{}`", &rec[ci])))?;
            let mut counts = [0.0; 6];
            for (k, &j) in comp_idx.iter().enumerate() {
                counts[k] = rec[j]
                    .parse::<f64>()
                    .map_err(|_| table_err(line, format!("bad count `{}`", &rec[j])))?;
            }
            table
                .insert(&rec[ni], chapter, &rec[ki], counts)
                .map_err(|e| match e {
                    EvalError::Table { message, .. } => table_err(line, message),
                    other => other,
                })?;
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(crate::tagger::SCORES_HEADER)?;
        for ((novel, chapter, ch), counts) in &self.rows {
            let mut rec = vec![novel.clone(), chapter.to_string(), ch.clone()];
            rec.extend(counts.iter().map(|c| format!("{c}")));
            w.write_record(&rec)?;
        }
        w.flush()
    }

    fn chapters(&self) -> BTreeSet<(String, usize)> {
        self.rows.keys().map(|(n, c, _)| (n.clone(), *c)).collect()
    }

    fn characters_of(&self, novel: &str) -> BTreeSet<&str> {
        self.rows
            .keys()
            .filter(|(n, _, _)| n == novel)
            .map(|(_, _, k)| k.as_str())
            .collect()
    }

    fn in_chapter(&self, novel: &str, chapter: usize) -> BTreeMap<&str, &[f64; 6]> {
        self.rows
            .iter()
            .filter(|((n, c, _), _)| n == novel && *c == chapter)
            .map(|((_, _, k), v)| (k.as_str(), v))
            .collect()
    }

    fn get(&self, novel: &str, chapter: usize, character: &str) -> [f64; 6] {
        self.rows
            .get(&(novel.to_string(), chapter, character.to_string()))
            .copied()
            .unwrap_or_default()
    }
}

/// Chapters present in both tables.
fn shared_chapters(gold: &ScoreTable, pred: &ScoreTable) -> Vec<(String, usize)> {
    gold.chapters().intersection(&pred.chapters()).cloned().collect()
}

/// (gold, pred) values of every character cell in the shared chapters, with
/// absent entries read as 0.
fn aligned(gold: &ScoreTable, pred: &ScoreTable, component: Component) -> Vec<(String, usize, f64, f64)> {
    let i = component.index();
    let mut out = Vec::new();
    for (novel, chapter) in shared_chapters(gold, pred) {
        let g = gold.in_chapter(&novel, chapter);
        let p = pred.in_chapter(&novel, chapter);
        let chars: BTreeSet<&str> = g.keys().chain(p.keys()).copied().collect();
        for k in chars {
            out.push((
                novel.clone(),
                chapter,
                gold.get(&novel, chapter, k)[i],
                pred.get(&novel, chapter, k)[i],
            ));
        }
    }
    out
}

/// Mean over shared chapters of `sum_k |g - p| / |K|`, with `|K|` the number
/// of gold characters of the chapter's novel.
pub fn mae(gold: &ScoreTable, pred: &ScoreTable, component: Component) -> Result<f64, EvalError> {
    let chapters = shared_chapters(gold, pred);
    if chapters.is_empty() {
        return Err(EvalError::EmptyChapters);
    }
    let cells = aligned(gold, pred, component);
    let mut total = 0.0;
    for (novel, chapter) in &chapters {
        let k = gold.characters_of(novel).len() as f64;
        let err: f64 = cells
            .iter()
            .filter(|(n, c, _, _)| n == novel && c == chapter)
            .map(|(_, _, g, p)| (g - p).abs())
            .sum();
        total += err / k;
    }
    Ok(total / chapters.len() as f64)
}

/// `(sum p - sum g) / sum g` over the shared chapters; `None` when gold sums
/// to zero.
pub fn bias(gold: &ScoreTable, pred: &ScoreTable, component: Component) -> Result<Option<f64>, EvalError> {
    if shared_chapters(gold, pred).is_empty() {
        return Err(EvalError::EmptyChapters);
    }
    let cells = aligned(gold, pred, component);
    let sg: f64 = cells.iter().map(|c| c.2).sum();
    let sp: f64 = cells.iter().map(|c| c.3).sum();
    Ok((sg != 0.0).then(|| (sp - sg) / sg))
}

/// Pearson correlation over all aligned character cells.
pub fn table_pearson(gold: &ScoreTable, pred: &ScoreTable, component: Component) -> Result<Option<f64>, EvalError> {
    if shared_chapters(gold, pred).is_empty() {
        return Err(EvalError::EmptyChapters);
    }
    let cells = aligned(gold, pred, component);
    let g: Vec<f64> = cells.iter().map(|c| c.2).collect();
    let p: Vec<f64> = cells.iter().map(|c| c.3).collect();
    Ok(pearson(&g, &p))
}

/// Per-component MAE, bias and Pearson, as written to `eval.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEval {
    pub component: Component,
    pub mae: f64,
    pub bias: Option<f64>,
    pub pearson: Option<f64>,
    pub chapters: usize,
}

pub fn evaluate(gold: &ScoreTable, pred: &ScoreTable) -> Result<Vec<ComponentEval>, EvalError> {
    let chapters = shared_chapters(gold, pred).len();
    Component::ALL
        .iter()
        .map(|&c| {
            Ok(ComponentEval {
                component: c,
                mae: mae(gold, pred, c)?,
                bias: bias(gold, pred, c)?,
                pearson: table_pearson(gold, pred, c)?,
                chapters,
            })
        })
        .collect()
}

/// Pearson correlation; `None` for fewer than three points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// `None` when the differences have zero variance.
    pub t: Option<f64>,
    pub df: usize,
    pub p_two_sided: f64,
    pub mean_diff: f64,
}

/// Paired two-sided t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::TooFew { needed: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = n - 1;
    if var == 0.0 {
        return Ok(TTest {
            t: None,
            df,
            p_two_sided: if mean == 0.0 { 1.0 } else { 0.0 },
            mean_diff: mean,
        });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    Ok(TTest {
        t: Some(t),
        df,
        p_two_sided: special::student_t_two_sided(t, df as f64),
        mean_diff: mean,
    })
}

/// Sample mean and standard deviation (`n - 1`); SD is 0 for one value.
pub fn mean_sd(x: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() == 1 {
        return Some((m, 0.0));
    }
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    Some((m, v.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(rows: &[(&str, f64)]) -> ScoreTable {
        let mut t = ScoreTable::default();
        for (k, v) in rows {
            t.insert("x", 1, k, [*v, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        }
        t
    }

    #[test]
    fn mae_examples() {
        let g = one(&[("A", 2.0), ("B", 4.0)]);
        assert_eq!(mae(&g, &one(&[("A", 1.0), ("B", 6.0)]), Component::N), Ok(1.5));
        assert_eq!(mae(&g, &g, Component::N), Ok(0.0));
        assert_eq!(mae(&g, &one(&[("A", 2.0)]), Component::N), Ok(2.0));
    }

    #[test]
    fn mae_needs_shared_chapters() {
        let mut p = ScoreTable::default();
        p.insert("x", 2, "A", [0.0; 6]).unwrap();
        assert_eq!(mae(&one(&[("A", 1.0)]), &p, Component::N), Err(EvalError::EmptyChapters));
    }

    #[test]
    fn bias_examples() {
        let g = one(&[("A", 4.0), ("B", 6.0)]);
        assert_eq!(bias(&g, &g, Component::N), Ok(Some(0.0)));
        assert_eq!(bias(&g, &one(&[("A", 8.0), ("B", 12.0)]), Component::N), Ok(Some(1.0)));
        assert_eq!(bias(&g, &one(&[("A", 0.0)]), Component::N), Ok(Some(-1.0)));
        assert_eq!(bias(&g, &g, Component::A), Ok(None));
    }

    #[test]
    fn correlation_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]), Some(-0.5));
        assert_eq!(pearson(&x, &[1.0; 4]), None);
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn t_test_examples() {
        let a = [1.0, 2.0, 3.0];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p_two_sided), (None, 1.0));
        let r = paired_t_test(&[2.0; 4], &[1.0; 4]).unwrap();
        assert_eq!((r.t, r.p_two_sided), (None, 0.0));
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert!((r.t.unwrap() - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 4);
        assert!((r.p_two_sided - 0.0132).abs() < 1e-4);
        assert_eq!(paired_t_test(&[1.0], &[2.0]), Err(EvalError::TooFew { needed: 2, got: 1 }));
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let t = one(&[("A", 2.0), ("B", 4.5)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(ScoreTable::read_csv(&buf[..]).unwrap(), t);
        let dup = "novel_id,chapter,character,N,A,C,I,DC,DN\nx,1,A,1,0,0,0,0,0\nx,1,A,1,0,0,0,0,0\n";
        assert!(matches!(ScoreTable::read_csv(dup.as_bytes()), Err(EvalError::Table { line: 3, .. })));
        let neg = "novel_id,chapter,character,N,A,C,I,DC,DN\nx,1,A,-1,0,0,0,0,0\n";
        assert!(ScoreTable::read_csv(neg.as_bytes()).is_err());
    }

    #[test]
    fn mean_sd_single_value() {
        assert_eq!(mean_sd(&[0.7]), Some((0.7, 0.0)));
        assert_eq!(mean_sd(&[]), None);
    }
}

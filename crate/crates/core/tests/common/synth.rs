//! Seeded synthetic novel with twelve characters. The generator keeps its
//! own log of who is mentioned in each paragraph and who speaks each quote,
//! so the network oracles never look at the annotation bundle.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NAMES: [&str; 12] = [
    "Alder", "Birch", "Cedar", "Dunmore", "Elm", "Fallow", "Garnet", "Hawthorn", "Ives", "Juniper", "Kestrel", "Larch",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speaker {
    Known(usize),
    Unknown,
    Letter(usize),
}

#[derive(Debug, Default, Clone)]
pub struct ParagraphLog {
    pub chapter: usize,
    pub heading: bool,
    pub mentioned: BTreeSet<usize>,
    pub quotes: Vec<Speaker>,
}

pub struct Synth {
    pub markup: String,
    pub paragraphs: Vec<ParagraphLog>,
}

fn mention(k: usize) -> String {
    format!("[{}]@{}", NAMES[k], k + 1)
}

pub fn generate(seed: u64, chapters: usize, paragraphs_per_chapter: usize) -> Synth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut markup = String::new();
    let mut log = Vec::new();
    let everyone: Vec<usize> = (0..NAMES.len()).collect();
    for ch in 1..=chapters {
        markup.push_str(&format!("# CHAPTER {ch}\n\n"));
        log.push(ParagraphLog {
            chapter: ch,
            heading: true,
            ..Default::default()
        });
        for p in 0..paragraphs_per_chapter {
            let mut entry = ParagraphLog {
                chapter: ch,
                ..Default::default()
            };
            let mut line = Vec::new();
            if ch == 1 && p == 0 {
                // Every character gets a proper mention early on.
                for &k in &everyone {
                    line.push(format!("{} arrived .", mention(k)));
                    entry.mentioned.insert(k);
                }
            } else if rng.gen_bool(0.45) {
                let n = rng.gen_range(1..=4);
                for &k in everyone.choose_multiple(&mut rng, n) {
                    line.push(format!("{} walked/verb.motion by the river .", mention(k)));
                    entry.mentioned.insert(k);
                }
            } else {
                let quotes = rng.gen_range(1..=2);
                for _ in 0..quotes {
                    let k = rng.gen_range(0..NAMES.len());
                    let roll: f64 = rng.gen();
                    let about = rng.gen_bool(0.3).then(|| rng.gen_range(0..NAMES.len()));
                    let inner = match about {
                        Some(j) => {
                            entry.mentioned.insert(j);
                            format!("{} is late .", mention(j))
                        }
                        None => "it is late .".to_string(),
                    };
                    if roll < 0.1 {
                        line.push(format!("{{ {inner} }}@?"));
                        entry.quotes.push(Speaker::Unknown);
                    } else if roll < 0.17 {
                        line.push(format!("{{ {inner} }}@{}:letter", k + 1));
                        entry.quotes.push(Speaker::Letter(k));
                    } else {
                        line.push(format!("{{ {inner} }}@{} said {} .", k + 1, mention(k)));
                        entry.quotes.push(Speaker::Known(k));
                        entry.mentioned.insert(k);
                    }
                }
            }
            markup.push_str(&line.join(" "));
            markup.push_str("\n\n");
            log.push(entry);
        }
    }
    Synth { markup, paragraphs: log }
}

/// Consecutive spoken quotes by different known speakers at most `gap`
/// paragraphs apart, scanned over the generator log.
pub fn dialogue_pairs(s: &Synth, gap: usize) -> Vec<(usize, usize)> {
    let mut seq = Vec::new();
    for (i, p) in s.paragraphs.iter().enumerate() {
        for q in &p.quotes {
            seq.push((i, p.chapter, *q));
        }
    }
    let mut pairs = Vec::new();
    for w in seq.windows(2) {
        let ((pa, ca, a), (pb, cb, b)) = (w[0], w[1]);
        if let (Speaker::Known(a), Speaker::Known(b)) = (a, b) {
            if a != b && ca == cb && pb - pa <= gap {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Number of paragraphs mentioning both characters, per unordered pair.
pub fn cooccurrence_counts(s: &Synth) -> BTreeMap<(usize, usize), usize> {
    let mut out = BTreeMap::new();
    for p in &s.paragraphs {
        let m: Vec<usize> = p.mentioned.iter().copied().collect();
        for (i, &a) in m.iter().enumerate() {
            for &b in &m[i + 1..] {
                *out.entry((a, b)).or_default() += 1;
            }
        }
    }
    out
}

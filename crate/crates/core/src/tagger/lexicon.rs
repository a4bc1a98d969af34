use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_APPEARANCE: &str = include_str!("../../data/appearance.txt");
const DEFAULT_OVERRIDES: &str = include_str!("../../data/verbnet_overrides.tsv");

pub const COMMUNICATION_SUPERSENSE: &str = "verb.communication";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("verb override line {line}: {message}")]
    Override { line: usize, message: String },
    #[error("supersense `{0}` is in both the interiority and action sets")]
    Overlap(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerbClass {
    Action,
    Interiority,
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbLexicon {
    pub interiority: BTreeSet<String>,
    pub action: BTreeSet<String>,
    /// Lemma-level overrides; consulted before the supersense sets.
    pub overrides: BTreeMap<String, VerbClass>,
}

impl VerbLexicon {
    pub fn new(
        interiority: BTreeSet<String>,
        action: BTreeSet<String>,
        overrides: BTreeMap<String, VerbClass>,
    ) -> Result<Self, LexiconError> {
        if let Some(x) = interiority.intersection(&action).next() {
            return Err(LexiconError::Overlap(x.clone()));
        }
        Ok(VerbLexicon {
            interiority,
            action,
            overrides,
        })
    }

    /// `lemma<TAB>class` rows with class `A`, `I` or `EXCLUDE`; an optional
    /// header row is skipped.
    pub fn parse_overrides(text: &str) -> Result<BTreeMap<String, VerbClass>, LexiconError> {
        let mut out = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("lemma")) {
                continue;
            }
            let (lemma, class) = line.split_once('\t').ok_or_else(|| LexiconError::Override {
                line: i + 1,
                message: "expected two tab-separated columns".into(),
            })?;
            let class = match class.trim() {
                "A" => VerbClass::Action,
                "I" => VerbClass::Interiority,
                "EXCLUDE" => VerbClass::Exclude,
                other => {
                    return Err(LexiconError::Override {
                        line: i + 1,
                        message: format!("unknown class `{other}`"),
                    })
                }
            };
            out.insert(lemma.trim().to_lowercase(), class);
        }
        Ok(out)
    }

    pub fn with_overrides_file(mut self, path: &Path) -> Result<Self, LexiconError> {
        self.overrides = Self::parse_overrides(&read(path)?)?;
        Ok(self)
    }

    pub fn classify(&self, label: &str, lemma: &str) -> Option<VerbClass> {
        if !label.starts_with("verb.") {
            return None;
        }
        if let Some(&c) = self.overrides.get(&lemma.to_lowercase()) {
            return Some(c);
        }
        if self.interiority.contains(label) {
            Some(VerbClass::Interiority)
        } else if self.action.contains(label) {
            Some(VerbClass::Action)
        } else {
            None
        }
    }
}

impl Default for VerbLexicon {
    fn default() -> Self {
        let interiority: BTreeSet<String> = ["verb.cognition", "verb.emotion", "verb.perception"]
            .into_iter()
            .map(String::from)
            .collect();
        let action = [
            "verb.body",
            "verb.change",
            "verb.competition",
            "verb.consumption",
            "verb.contact",
            "verb.creation",
            "verb.motion",
            "verb.possession",
            "verb.social",
            "verb.stative",
            "verb.weather",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        let overrides = Self::parse_overrides(DEFAULT_OVERRIDES).expect("bundled overrides");
        VerbLexicon::new(interiority, action, overrides).expect("disjoint default sets")
    }
}

/// Cues for narrator description: appearance/manner/dress vocabulary plus
/// copular verbs that attach a description to the preceding mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppearanceLexicon {
    pub terms: BTreeSet<String>,
    pub copulas: BTreeSet<String>,
    /// POS prefixes allowed right after a copula ("was pale", "was a ...").
    pub complement_pos: Vec<String>,
    /// Max tokens between the end of a mention and its copula.
    pub copula_window: usize,
}

impl AppearanceLexicon {
    pub fn parse(text: &str) -> Self {
        AppearanceLexicon {
            terms: word_list(text),
            ..Self::empty()
        }
    }

    fn empty() -> Self {
        AppearanceLexicon {
            terms: BTreeSet::new(),
            copulas: ["be", "seem", "become"].into_iter().map(String::from).collect(),
            complement_pos: ["JJ", "DT", "RB", "NN", "PRP$"].into_iter().map(String::from).collect(),
            copula_window: 3,
        }
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Ok(Self::parse(&read(path)?))
    }

    pub fn is_term(&self, word: &str) -> bool {
        self.terms.contains(&word.to_lowercase())
    }
}

impl Default for AppearanceLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_APPEARANCE)
    }
}

fn word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn read(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub verbs: VerbLexicon,
    pub appearance: AppearanceLexicon,
}

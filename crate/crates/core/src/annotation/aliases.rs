//! Mapping predicted character names onto a gold character list.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const TITLES: &[&str] = &["mr", "mrs", "miss", "lady", "sir", "ms", "dr", "lord", "master", "madame"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AliasError {
    #[error("{0} name list is empty")]
    EmptyInput(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldCharacter {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl GoldCharacter {
    pub fn new(name: &str, aliases: &[&str]) -> Self {
        GoldCharacter {
            name: name.to_string(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn forms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Resolves a name that neither exact nor normalized matching could place,
/// e.g. by asking a language model.
pub trait NameResolver {
    fn resolve(&self, name: &str, gold_names: &[String]) -> Option<String>;
}

pub enum MatchMode<'a> {
    Exact,
    Normalized,
    External(&'a dyn NameResolver),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnmappedName {
    pub name: String,
    /// Gold names that matched equally well; empty when nothing matched.
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasMap {
    pub mapped: BTreeMap<String, String>,
    pub unmapped: Vec<UnmappedName>,
}

/// Case-folds, drops honorific titles and collapses punctuation/whitespace.
pub fn normalize_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    let kept: Vec<&str> = words
        .iter()
        .copied()
        .skip_while(|w| TITLES.contains(w))
        .collect();
    if kept.is_empty() {
        words.join(" ")
    } else {
        kept.join(" ")
    }
}

fn candidates<'g>(gold: &'g [GoldCharacter], pred: &str, norm: bool) -> BTreeSet<&'g str> {
    let key = if norm { normalize_name(pred) } else { pred.to_string() };
    gold.iter()
        .filter(|g| {
            g.forms().any(|f| {
                if norm {
                    normalize_name(f) == key
                } else {
                    f == key
                }
            })
        })
        .map(|g| g.name.as_str())
        .collect()
}

/// Maps each predicted name to at most one gold name. Ambiguous matches are
/// reported as unmapped, never guessed.
pub fn map_aliases(predicted: &[String], gold: &[GoldCharacter], mode: MatchMode<'_>) -> Result<AliasMap, AliasError> {
    if predicted.is_empty() {
        return Err(AliasError::EmptyInput("predicted"));
    }
    if gold.is_empty() {
        return Err(AliasError::EmptyInput("gold"));
    }
    let gold_names: Vec<String> = gold.iter().map(|g| g.name.clone()).collect();
    let mut out = AliasMap::default();
    for name in predicted {
        let mut cands = candidates(gold, name, false);
        if cands.is_empty() && matches!(mode, MatchMode::Normalized) {
            cands = candidates(gold, name, true);
        }
        if cands.is_empty() {
            if let MatchMode::External(resolver) = &mode {
                if let Some(answer) = resolver.resolve(name, &gold_names) {
                    let answer = answer.trim();
                    if let Some(g) = gold.iter().find(|g| g.name == answer) {
                        cands.insert(g.name.as_str());
                    }
                }
            }
        }
        if cands.len() == 1 {
            out.mapped.insert(name.clone(), cands.into_iter().next().unwrap().to_string());
        } else {
            out.unmapped.push(UnmappedName {
                name: name.clone(),
                candidates: cands.into_iter().map(str::to_string).collect(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold() -> Vec<GoldCharacter> {
        vec![
            GoldCharacter::new("Elizabeth", &["Lizzy", "Eliza", "Miss Bennet"]),
            GoldCharacter::new("Jane", &["Miss Bennet"]),
            GoldCharacter::new("Darcy", &[]),
        ]
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alias_table_lookup() {
        let m = map_aliases(&names(&["Lizzy"]), &gold(), MatchMode::Exact).unwrap();
        assert_eq!(m.mapped["Lizzy"], "Elizabeth");
    }

    #[test]
    fn title_stripped_in_normalized_mode() {
        let m = map_aliases(&names(&["Mr. Darcy"]), &gold(), MatchMode::Exact).unwrap();
        assert!(m.mapped.is_empty());
        let m = map_aliases(&names(&["Mr. Darcy"]), &gold(), MatchMode::Normalized).unwrap();
        assert_eq!(m.mapped["Mr. Darcy"], "Darcy");
    }

    #[test]
    fn ambiguity_is_preserved() {
        let m = map_aliases(&names(&["Miss Bennet"]), &gold(), MatchMode::Normalized).unwrap();
        assert!(m.mapped.is_empty());
        assert_eq!(m.unmapped[0].candidates, names(&["Elizabeth", "Jane"]));
    }

    struct Fixed(&'static str);
    impl NameResolver for Fixed {
        fn resolve(&self, _: &str, _: &[String]) -> Option<String> {
            Some(self.0.to_string())
        }
    }

    #[test]
    fn external_resolver_answer_must_be_gold() {
        let r = Fixed("Darcy\n");
        let m = map_aliases(&names(&["Fitzwilliam"]), &gold(), MatchMode::External(&r)).unwrap();
        assert_eq!(m.mapped["Fitzwilliam"], "Darcy");
        let r = Fixed("Wickham");
        let m = map_aliases(&names(&["Fitzwilliam"]), &gold(), MatchMode::External(&r)).unwrap();
        assert_eq!(m.unmapped.len(), 1);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(
            map_aliases(&[], &gold(), MatchMode::Exact),
            Err(AliasError::EmptyInput("predicted"))
        );
    }
}

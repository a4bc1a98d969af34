//! Run configuration in INI form.
//!
//! ```ini
//! [corpus]
//! out = results
//! seed = 7
//!
//! [novel:pride]
//! title = Pride and Prejudice
//! text = texts/pride.txt
//! bundle = bundles/pride
//! merge_map = merges/pride.tsv
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use ini::Ini;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::NetworkKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("[{section}] {key}: {message}")]
    Value {
        section: String,
        key: String,
        message: String,
    },
    #[error("[{section}] {key}: {path} does not exist")]
    MissingPath { section: String, key: String, path: String },
    #[error("config lists no novels")]
    NoNovels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelConfig {
    pub id: String,
    pub title: String,
    pub text: PathBuf,
    pub bundle: PathBuf,
    pub first_person: bool,
    pub merge_map: Option<PathBuf>,
    /// Gold `scores.csv` for evaluation.
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub min_total: usize,
    pub min_proper: usize,
    pub keep_preamble: bool,
    pub heading_pattern: Option<String>,
    pub dialogue_gap: usize,
    pub pronouns: Option<PathBuf>,
    pub supersenses: Option<PathBuf>,
    pub appearance: Option<PathBuf>,
    pub verb_overrides: Option<PathBuf>,
    pub embed: bool,
    pub embed_network: NetworkKind,
    pub embed_epochs: usize,
    pub embed_labels: usize,
    pub top_k: usize,
    pub novels: Vec<NovelConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out: PathBuf::from("out"),
            seed: 0,
            min_total: 1,
            min_proper: 1,
            keep_preamble: false,
            heading_pattern: None,
            dialogue_gap: 1,
            pronouns: None,
            supersenses: None,
            appearance: None,
            verb_overrides: None,
            embed: true,
            embed_network: NetworkKind::Cooccurrence,
            embed_epochs: 100,
            embed_labels: 10,
            top_k: 10,
            novels: Vec::new(),
        }
    }
}

struct Section<'a> {
    name: String,
    props: &'a ini::Properties,
    base: &'a Path,
}

impl Section<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            section: self.name.clone(),
            key: key.into(),
            message: message.into(),
        }
    }

    fn str(&self, key: &str) -> Option<String> {
        self.props.get(key).map(|s| s.trim().to_string())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| self.err(key, format!("cannot parse `{s}`"))),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.str(key).as_deref() {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(s) => Err(self.err(key, format!("expected true or false, got `{s}`"))),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.str(key).map(|s| self.base.join(s))
    }

    fn existing(&self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        match self.path(key) {
            Some(p) if !p.exists() => Err(ConfigError::MissingPath {
                section: self.name.clone(),
                key: key.into(),
                path: p.display().to_string(),
            }),
            other => Ok(other),
        }
    }

    fn required(&self, key: &str) -> Result<PathBuf, ConfigError> {
        self.existing(key)?.ok_or_else(|| self.err(key, "required"))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Read {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        let mut cfg = RunConfig::default();
        for (name, props) in ini.iter() {
            let Some(name) = name else { continue };
            let sec = Section {
                name: name.to_string(),
                props,
                base,
            };
            if name == "corpus" {
                let d = RunConfig::default();
                cfg.out = sec.path("out").unwrap_or_else(|| base.join(&d.out));
                cfg.seed = sec.parse("seed", d.seed)?;
                cfg.min_total = sec.parse("min_total", d.min_total)?;
                cfg.min_proper = sec.parse("min_proper", d.min_proper)?;
                cfg.keep_preamble = sec.bool("keep_preamble", d.keep_preamble)?;
                cfg.heading_pattern = sec.str("heading_pattern");
                cfg.dialogue_gap = sec.parse("dialogue_gap", d.dialogue_gap)?;
                cfg.pronouns = sec.existing("pronouns")?;
                cfg.supersenses = sec.existing("supersenses")?;
                cfg.appearance = sec.existing("appearance")?;
                cfg.verb_overrides = sec.existing("verb_overrides")?;
                cfg.embed = sec.bool("embed", d.embed)?;
                if let Some(k) = sec.str("embed_network") {
                    cfg.embed_network = NetworkKind::parse(&k).ok_or_else(|| sec.err("embed_network", format!("unknown network `{k}`")))?;
                }
                cfg.embed_epochs = sec.parse("embed_epochs", d.embed_epochs)?;
                cfg.embed_labels = sec.parse("embed_labels", d.embed_labels)?;
                cfg.top_k = sec.parse("top_k", d.top_k)?;
            } else if let Some(id) = name.strip_prefix("novel:") {
                let id = id.trim().to_string();
                if id.is_empty() || id.contains(['/', '\\']) {
                    return Err(sec.err("id", format!("invalid novel id `{id}`")));
                }
                cfg.novels.push(NovelConfig {
                    title: sec.str("title").unwrap_or_else(|| id.clone()),
                    text: sec.required("text")?,
                    bundle: sec.required("bundle")?,
                    first_person: sec.bool("first_person", false)?,
                    merge_map: sec.existing("merge_map")?,
                    gold: sec.existing("gold")?,
                    id,
                });
            } else {
                return Err(sec.err("", "unknown section"));
            }
        }
        if cfg.novels.is_empty() {
            return Err(ConfigError::NoNovels);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x").unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        let text = "[corpus]\nout = res\nseed = 9\nembed = no\n\n[novel:a]\ntext = a.txt\nbundle = a\nfirst_person = true\n";
        let cfg = RunConfig::parse(text, dir.path()).unwrap();
        assert_eq!(cfg.out, dir.path().join("res"));
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.embed);
        assert_eq!(cfg.novels[0].title, "a");
        assert!(cfg.novels[0].first_person);
    }

    #[test]
    fn missing_path_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let err = RunConfig::parse("[novel:a]\ntext = nope.txt\nbundle = b\n", dir.path()).unwrap_err();
        assert!(err.to_string().contains("nope.txt"), "{err}");
    }

    #[test]
    fn bad_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(RunConfig::parse("[corpus]\nseed = x\n", dir.path()), Err(ConfigError::Value { .. })));
        assert!(matches!(RunConfig::parse("[corpus]\n", dir.path()), Err(ConfigError::NoNovels)));
        assert!(RunConfig::parse("[other]\n", dir.path()).is_err());
    }
}

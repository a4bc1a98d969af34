//! Character registry built from person coreference clusters.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bundle::{AnnotationBundle, ClusterId, MentionProp};

pub type CharId = usize;

const DEFAULT_PRONOUNS: &str = include_str!("../../data/pronouns.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
            Gender::Unknown => "UNKNOWN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "M" => Some(Gender::M),
            "F" => Some(Gender::F),
            "UNKNOWN" | "" => Some(Gender::Unknown),
            _ => None,
        }
    }

    /// Strict majority of masculine vs feminine third-person pronouns.
    pub fn from_tally(masculine: usize, feminine: usize) -> Gender {
        use std::cmp::Ordering::*;
        match masculine.cmp(&feminine) {
            Greater => Gender::M,
            Less => Gender::F,
            Equal => Gender::Unknown,
        }
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pronoun inventory line {0}: expected `M|F<TAB>p1,p2,...`")]
    Pronouns(usize),
    #[error("merge error: {0}")]
    Merge(String),
}

/// Masculine and feminine pronoun sets, compared case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounInventory {
    pub masculine: BTreeSet<String>,
    pub feminine: BTreeSet<String>,
}

impl PronounInventory {
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let mut inv = PronounInventory {
            masculine: BTreeSet::new(),
            feminine: BTreeSet::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (g, list) = line
                .split_once(['\t', ' '])
                .ok_or(RegistryError::Pronouns(i + 1))?;
            let set = match g.trim() {
                "M" => &mut inv.masculine,
                "F" => &mut inv.feminine,
                _ => return Err(RegistryError::Pronouns(i + 1)),
            };
            set.extend(
                list.split(',')
                    .map(|p| p.trim().to_lowercase())
                    .filter(|p| !p.is_empty()),
            );
        }
        Ok(inv)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn classify(&self, surface: &str) -> Option<Gender> {
        let s = surface.trim().to_lowercase();
        if self.masculine.contains(&s) {
            Some(Gender::M)
        } else if self.feminine.contains(&s) {
            Some(Gender::F)
        } else {
            None
        }
    }
}

impl Default for PronounInventory {
    fn default() -> Self {
        Self::parse(DEFAULT_PRONOUNS).expect("bundled pronoun inventory")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub char_id: CharId,
    pub canonical_name: String,
    pub cluster_ids: BTreeSet<ClusterId>,
    pub aliases: BTreeSet<String>,
    pub gender: Gender,
    pub proper_mention_count: usize,
    pub total_mention_count: usize,
    pub masculine_pronouns: usize,
    pub feminine_pronouns: usize,
}

/// A person cluster left out of the registry, kept for the run report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedCluster {
    pub cluster_id: ClusterId,
    pub total_mentions: usize,
    pub proper_mentions: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub characters: Vec<Character>,
    pub excluded: Vec<ExcludedCluster>,
}

#[derive(Debug, Clone)]
pub struct RegistryConfig {
    pub min_total: usize,
    pub min_proper: usize,
    pub pronouns: PronounInventory,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        RegistryConfig {
            min_total: 1,
            min_proper: 1,
            pronouns: PronounInventory::default(),
        }
    }
}

/// Most frequent form; ties go to the longest, then the lexicographically
/// smallest.
fn pick_canonical(forms: &BTreeMap<String, usize>) -> Option<String> {
    forms
        .iter()
        .max_by(|(a, ca), (b, cb)| {
            ca.cmp(cb)
                .then(a.chars().count().cmp(&b.chars().count()))
                .then(b.cmp(a))
        })
        .map(|(s, _)| s.clone())
}

struct ClusterTally {
    total: usize,
    proper: usize,
    forms: BTreeMap<String, usize>,
    masculine: usize,
    feminine: usize,
    person: bool,
}

fn tally(bundle: &AnnotationBundle, cluster: ClusterId, pronouns: &PronounInventory) -> ClusterTally {
    let mut t = ClusterTally {
        total: 0,
        proper: 0,
        forms: BTreeMap::new(),
        masculine: 0,
        feminine: 0,
        person: false,
    };
    for m in bundle.mentions.iter().filter(|m| m.cluster_id == cluster) {
        t.total += 1;
        t.person |= m.is_person();
        match m.prop {
            MentionProp::Proper => {
                t.proper += 1;
                *t.forms.entry(m.surface.trim().to_string()).or_default() += 1;
            }
            MentionProp::Pronoun => match pronouns.classify(&m.surface) {
                Some(Gender::M) => t.masculine += 1,
                Some(Gender::F) => t.feminine += 1,
                _ => {}
            },
            MentionProp::Nominal => {}
        }
    }
    t
}

impl Registry {
    pub fn get(&self, id: CharId) -> Option<&Character> {
        self.characters.iter().find(|c| c.char_id == id)
    }

    pub fn ids(&self) -> Vec<CharId> {
        self.characters.iter().map(|c| c.char_id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn cluster_map(&self) -> BTreeMap<ClusterId, CharId> {
        self.characters
            .iter()
            .flat_map(|c| c.cluster_ids.iter().map(move |&k| (k, c.char_id)))
            .collect()
    }

    pub fn name(&self, id: CharId) -> &str {
        self.get(id).map(|c| c.canonical_name.as_str()).unwrap_or("?")
    }

    /// Resolves a name against canonical names first, then aliases. Returns
    /// `None` when absent or ambiguous.
    pub fn find_by_name(&self, name: &str) -> Option<CharId> {
        let canon: Vec<_> = self.characters.iter().filter(|c| c.canonical_name == name).collect();
        if canon.len() == 1 {
            return Some(canon[0].char_id);
        }
        let alias: Vec<_> = self.characters.iter().filter(|c| c.aliases.contains(name)).collect();
        (alias.len() == 1 && canon.is_empty()).then(|| alias[0].char_id)
    }

    /// Merges characters pairwise. Each pair is `(survivor, absorbed)`; the
    /// merged character keeps the smaller id and the survivor's name.
    pub fn merge(&self, pairs: &[(CharId, CharId)]) -> Result<Registry, RegistryError> {
        let mut chars: BTreeMap<CharId, Character> =
            self.characters.iter().map(|c| (c.char_id, c.clone())).collect();
        // absorbed ids forward to the id they were merged into
        let mut forward: BTreeMap<CharId, CharId> = BTreeMap::new();
        let resolve = |forward: &BTreeMap<CharId, CharId>, mut id: CharId| {
            while let Some(&n) = forward.get(&id) {
                id = n;
            }
            id
        };
        for &(a, b) in pairs {
            for id in [a, b] {
                if !chars.contains_key(&id) && !forward.contains_key(&id) {
                    return Err(RegistryError::Merge(format!("unknown character id {id}")));
                }
            }
            let (a, b) = (resolve(&forward, a), resolve(&forward, b));
            if a == b {
                continue;
            }
            let survivor = chars.remove(&a).unwrap();
            let absorbed = chars.remove(&b).unwrap();
            let keep = a.min(b);
            let mut merged = survivor;
            merged.char_id = keep;
            merged.cluster_ids.extend(absorbed.cluster_ids);
            merged.aliases.extend(absorbed.aliases);
            merged.proper_mention_count += absorbed.proper_mention_count;
            merged.total_mention_count += absorbed.total_mention_count;
            merged.masculine_pronouns += absorbed.masculine_pronouns;
            merged.feminine_pronouns += absorbed.feminine_pronouns;
            merged.gender = Gender::from_tally(merged.masculine_pronouns, merged.feminine_pronouns);
            forward.insert(a.max(b), keep);
            chars.insert(keep, merged);
        }
        Ok(Registry {
            characters: chars.into_values().collect(),
            excluded: self.excluded.clone(),
        })
    }

    /// Folds a raw cluster (typically an excluded pronoun-only narrator
    /// cluster) into an existing character.
    pub fn absorb_cluster(
        &self,
        into: CharId,
        cluster: ClusterId,
        bundle: &AnnotationBundle,
        pronouns: &PronounInventory,
    ) -> Result<Registry, RegistryError> {
        if self.get(into).is_none() {
            return Err(RegistryError::Merge(format!("unknown character id {into}")));
        }
        if let Some(&owner) = self.cluster_map().get(&cluster) {
            return self.merge(&[(into, owner)]);
        }
        let t = tally(bundle, cluster, pronouns);
        if t.total == 0 {
            return Err(RegistryError::Merge(format!("cluster {cluster} has no mentions")));
        }
        let mut out = self.clone();
        out.excluded.retain(|e| e.cluster_id != cluster);
        let c = out.characters.iter_mut().find(|c| c.char_id == into).unwrap();
        c.cluster_ids.insert(cluster);
        c.aliases.extend(t.forms.into_keys());
        c.proper_mention_count += t.proper;
        c.total_mention_count += t.total;
        c.masculine_pronouns += t.masculine;
        c.feminine_pronouns += t.feminine;
        c.gender = Gender::from_tally(c.masculine_pronouns, c.feminine_pronouns);
        Ok(out)
    }
}

/// One character per person cluster whose total and proper mention counts
/// reach the thresholds (`>=`). Clusters without any proper mention are
/// always excluded since they have no name.
pub fn build_registry(bundle: &AnnotationBundle, config: &RegistryConfig) -> Registry {
    let mut characters = Vec::new();
    let mut excluded = Vec::new();
    for &cluster in bundle.clusters().keys() {
        let t = tally(bundle, cluster, &config.pronouns);
        if !t.person {
            continue;
        }
        let reason = if t.proper == 0 {
            Some("no proper mention")
        } else if t.total < config.min_total {
            Some("below total-mention threshold")
        } else if t.proper < config.min_proper {
            Some("below proper-mention threshold")
        } else {
            None
        };
        if let Some(reason) = reason {
            if t.proper == 0 {
                log::info!(
                    "{}: cluster {cluster} excluded ({reason}, {} mentions)",
                    bundle.novel_id,
                    t.total
                );
            }
            excluded.push(ExcludedCluster {
                cluster_id: cluster,
                total_mentions: t.total,
                proper_mentions: t.proper,
                reason: reason.to_string(),
            });
            continue;
        }
        characters.push(Character {
            char_id: characters.len(),
            canonical_name: pick_canonical(&t.forms).unwrap(),
            cluster_ids: BTreeSet::from([cluster]),
            aliases: t.forms.keys().cloned().collect(),
            gender: Gender::from_tally(t.masculine, t.feminine),
            proper_mention_count: t.proper,
            total_mention_count: t.total,
            masculine_pronouns: t.masculine,
            feminine_pronouns: t.feminine,
        });
    }
    if characters.is_empty() {
        log::warn!("{}: empty character registry", bundle.novel_id);
    }
    Registry { characters, excluded }
}

/// Gender from the pronoun mentions of the character's clusters.
pub fn assign_gender(character: &Character, bundle: &AnnotationBundle, pronouns: &PronounInventory) -> Gender {
    let (mut m, mut f) = (0, 0);
    for mention in bundle
        .mentions
        .iter()
        .filter(|x| x.prop == MentionProp::Pronoun && character.cluster_ids.contains(&x.cluster_id))
    {
        match pronouns.classify(&mention.surface) {
            Some(Gender::M) => m += 1,
            Some(Gender::F) => f += 1,
            _ => {}
        }
    }
    Gender::from_tally(m, f)
}

/// Target of a merge-map line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeRef {
    Name(String),
    Cluster(ClusterId),
}

impl MergeRef {
    fn parse(s: &str) -> MergeRef {
        let s = s.trim();
        match s.strip_prefix('#').and_then(|n| n.parse().ok()) {
            Some(k) => MergeRef::Cluster(k),
            None => MergeRef::Name(s.to_string()),
        }
    }
}

/// Parses a merge map (`survivor_name,absorbed_name` per line). An absorbed
/// entry written `#<coref_id>` refers to a raw cluster.
pub fn parse_merge_map(text: &str) -> Result<Vec<(String, MergeRef)>, RegistryError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 && line.eq_ignore_ascii_case("survivor_name,absorbed_name") {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| RegistryError::Merge(format!("line {}: expected `survivor,absorbed`", i + 1)))?;
        out.push((a.trim().to_string(), MergeRef::parse(b)));
    }
    Ok(out)
}

/// Applies a parsed merge map to a registry.
pub fn apply_merge_map(
    registry: &Registry,
    entries: &[(String, MergeRef)],
    bundle: &AnnotationBundle,
    pronouns: &PronounInventory,
) -> Result<Registry, RegistryError> {
    let mut reg = registry.clone();
    for (survivor, absorbed) in entries {
        let s = reg
            .find_by_name(survivor)
            .ok_or_else(|| RegistryError::Merge(format!("unknown or ambiguous character `{survivor}`")))?;
        reg = match absorbed {
            MergeRef::Name(n) => {
                let a = reg
                    .find_by_name(n)
                    .ok_or_else(|| RegistryError::Merge(format!("unknown or ambiguous character `{n}`")))?;
                reg.merge(&[(s, a)])?
            }
            MergeRef::Cluster(k) => reg.absorb_cluster(s, *k, bundle, pronouns)?,
        };
    }
    Ok(reg)
}

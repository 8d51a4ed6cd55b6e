//! Experiment configuration: the simulation grid as a JSON document.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hierarchy::{
    build_canonical_hierarchy, Hierarchy, HierarchyFile, HierarchyKind, SubsetMode,
    MAX_ENUMERATION_SKILLS,
};
use crate::sim::ModelKind;

/// The clustering methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Hc,
    Kmeans,
    EmptyKRandom,
    EmptyKRescaled,
    EmptyKPseudoDina,
    EmptyKPseudoNida,
    SemisupDina,
    SemisupNida,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Hc,
        Method::Kmeans,
        Method::EmptyKRandom,
        Method::EmptyKRescaled,
        Method::EmptyKPseudoDina,
        Method::EmptyKPseudoNida,
        Method::SemisupDina,
        Method::SemisupNida,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Hc => "hc",
            Method::Kmeans => "kmeans",
            Method::EmptyKRandom => "emptyk_random",
            Method::EmptyKRescaled => "emptyk_rescaled",
            Method::EmptyKPseudoDina => "emptyk_pseudo_dina",
            Method::EmptyKPseudoNida => "emptyk_pseudo_nida",
            Method::SemisupDina => "semisup_dina",
            Method::SemisupNida => "semisup_nida",
        }
    }

    /// The model used for pseudodata, when the method has one.
    pub fn pseudo_model(&self) -> Option<ModelKind> {
        match self {
            Method::EmptyKPseudoDina | Method::SemisupDina => Some(ModelKind::Dina),
            Method::EmptyKPseudoNida | Method::SemisupNida => Some(ModelKind::Nida),
            _ => None,
        }
    }

    /// Whether this is empty k-means seeded with pseudocenters.
    pub fn is_pseudo_seeded(&self) -> bool {
        matches!(self, Method::EmptyKPseudoDina | Method::EmptyKPseudoNida)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method '{s}'; expected one of {}",
                    Method::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A hierarchy in the config: a canonical name or an explicit structure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HierarchySpec {
    Name(String),
    Explicit(HierarchyFile),
}

impl HierarchySpec {
    /// Resolve to (row identifier, hierarchy, subset mode).
    ///
    /// Named shapes use prefix subsets for linear/convergent/divergent and
    /// random subsets for unstructured/null; explicit hierarchies default
    /// to random subsets.
    pub fn resolve(&self, num_skills: usize) -> Result<ResolvedHierarchy> {
        match self {
            HierarchySpec::Name(name) => {
                let kind: HierarchyKind = name.parse()?;
                let hierarchy = build_canonical_hierarchy(kind, num_skills)?;
                let subset_mode = match kind {
                    HierarchyKind::Linear | HierarchyKind::Convergent | HierarchyKind::Divergent => {
                        SubsetMode::Prefix
                    }
                    HierarchyKind::Unstructured | HierarchyKind::Null => SubsetMode::Random,
                };
                Ok(ResolvedHierarchy {
                    id: kind.name().to_string(),
                    hierarchy,
                    subset_mode,
                })
            }
            HierarchySpec::Explicit(file) => {
                let hierarchy = file.to_hierarchy()?;
                if hierarchy.num_skills() != num_skills {
                    return Err(Error::InvalidConfig(format!(
                        "explicit hierarchy has {} skills but K = {num_skills}",
                        hierarchy.num_skills()
                    )));
                }
                let digest = Sha256::digest(hierarchy.fingerprint().as_bytes());
                Ok(ResolvedHierarchy {
                    id: format!("custom-{:02x}{:02x}{:02x}{:02x}", digest[0], digest[1], digest[2], digest[3]),
                    hierarchy,
                    subset_mode: SubsetMode::Random,
                })
            }
        }
    }
}

/// A hierarchy ready for the grid.
#[derive(Debug, Clone)]
pub struct ResolvedHierarchy {
    pub id: String,
    pub hierarchy: Hierarchy,
    pub subset_mode: SubsetMode,
}

/// Which subset sizes to run per hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubsetSizes {
    /// The token "all": every size from 3 to the hierarchy's profile count.
    Keyword(String),
    List(Vec<usize>),
}

impl Default for SubsetSizes {
    fn default() -> Self {
        SubsetSizes::Keyword("all".into())
    }
}

impl SubsetSizes {
    pub fn validate(&self) -> Result<()> {
        match self {
            SubsetSizes::Keyword(word) if word == "all" => Ok(()),
            SubsetSizes::Keyword(word) => Err(Error::InvalidConfig(format!(
                "subset_sizes keyword '{word}' not recognized; use \"all\" or a list"
            ))),
            SubsetSizes::List(sizes) => {
                if sizes.is_empty() {
                    return Err(Error::InvalidConfig("subset_sizes list is empty".into()));
                }
                if let Some(&bad) = sizes.iter().find(|&&s| s < 3) {
                    return Err(Error::InvalidConfig(format!(
                        "subset size {bad} below the minimum of 3"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Sizes to run for a hierarchy with `l_h` profiles, plus the sizes
    /// that had to be skipped as infeasible.
    pub fn for_profile_count(&self, l_h: usize) -> (Vec<usize>, Vec<usize>) {
        match self {
            SubsetSizes::Keyword(_) => ((3..=l_h).collect(), Vec::new()),
            SubsetSizes::List(sizes) => {
                let mut run: Vec<usize> = sizes.iter().copied().filter(|&s| s <= l_h).collect();
                run.sort_unstable();
                run.dedup();
                let mut skipped: Vec<usize> = sizes.iter().copied().filter(|&s| s > l_h).collect();
                skipped.sort_unstable();
                skipped.dedup();
                (run, skipped)
            }
        }
    }
}

fn default_k() -> usize {
    6
}
fn default_j() -> usize {
    30
}
fn default_n() -> usize {
    250
}
fn default_hierarchies() -> Vec<HierarchySpec> {
    HierarchyKind::ALL
        .iter()
        .map(|k| HierarchySpec::Name(k.name().to_string()))
        .collect()
}
fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Dina, ModelKind::Nida]
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_replications() -> usize {
    25
}
fn default_pseudo_m() -> usize {
    100
}
fn default_q_mix() -> Vec<(usize, usize)> {
    vec![(1, 9), (2, 18), (3, 3)]
}
fn default_slip_max() -> f64 {
    0.30
}
fn default_guess_max() -> f64 {
    0.15
}

/// Full description of a simulation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "K", default = "default_k")]
    pub num_skills: usize,
    #[serde(rename = "J", default = "default_j")]
    pub num_items: usize,
    #[serde(rename = "N", default = "default_n")]
    pub num_students: usize,
    #[serde(default = "default_hierarchies")]
    pub hierarchies: Vec<HierarchySpec>,
    #[serde(default = "default_models")]
    pub generating_models: Vec<ModelKind>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub subset_sizes: SubsetSizes,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(rename = "pseudo_M", default = "default_pseudo_m")]
    pub pseudo_m: usize,
    #[serde(default = "default_q_mix")]
    pub q_mix: Vec<(usize, usize)>,
    #[serde(default)]
    pub resample_q_per_replication: bool,
    pub seed: u64,
    #[serde(default = "default_slip_max")]
    pub slip_max: f64,
    #[serde(default = "default_guess_max")]
    pub guess_max: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            num_skills: default_k(),
            num_items: default_j(),
            num_students: default_n(),
            hierarchies: default_hierarchies(),
            generating_models: default_models(),
            methods: default_methods(),
            subset_sizes: SubsetSizes::default(),
            replications: default_replications(),
            pseudo_m: default_pseudo_m(),
            q_mix: default_q_mix(),
            resample_q_per_replication: false,
            seed,
            slip_max: default_slip_max(),
            guess_max: default_guess_max(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_skills == 0 || self.num_skills > MAX_ENUMERATION_SKILLS {
            return Err(Error::InvalidConfig(format!(
                "K must lie in 1..={MAX_ENUMERATION_SKILLS}"
            )));
        }
        if self.num_items == 0 {
            return Err(Error::InvalidConfig("J must be positive".into()));
        }
        if self.num_students == 0 {
            return Err(Error::InvalidConfig("N must be positive".into()));
        }
        if self.hierarchies.is_empty() {
            return Err(Error::InvalidConfig("hierarchies must be nonempty".into()));
        }
        if self.generating_models.is_empty() {
            return Err(Error::InvalidConfig("generating_models must be nonempty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must be nonempty".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be positive".into()));
        }
        if self.pseudo_m == 0 {
            return Err(Error::InvalidConfig("pseudo_M must be positive".into()));
        }
        self.subset_sizes.validate()?;
        let total: usize = self.q_mix.iter().map(|&(_, count)| count).sum();
        if total != self.num_items {
            return Err(Error::InvalidConfig(format!(
                "q_mix item counts sum to {total}, expected J = {}",
                self.num_items
            )));
        }
        if self
            .q_mix
            .iter()
            .any(|&(skills, _)| skills == 0 || skills > self.num_skills)
        {
            return Err(Error::InvalidConfig(
                "q_mix skills-per-item must lie in 1..=K".into(),
            ));
        }
        if self.slip_max < 0.0 || self.guess_max < 0.0 {
            return Err(Error::InvalidConfig("slip_max and guess_max must be nonnegative".into()));
        }
        if self.slip_max + self.guess_max >= 1.0 {
            return Err(Error::InvalidConfig(
                "slip_max + guess_max must stay below 1".into(),
            ));
        }
        for h in &self.hierarchies {
            h.resolve(self.num_skills)?;
        }
        Ok(())
    }
}

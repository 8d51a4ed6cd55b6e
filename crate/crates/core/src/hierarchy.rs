//! Prerequisite hierarchies over skills and the mastery profiles they admit.
//!
//! A hierarchy is a DAG of prerequisite clauses: each skill carries a list
//! of terms, and the skill is masterable only if, for every term, at least
//! one parent in that term is mastered (AND over terms, OR within a term).
//! Plain edges are singleton terms; the OR form is needed for shapes where
//! a skill is unlocked by any one of several parents.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of skills for brute-force profile enumeration.
pub const MAX_ENUMERATION_SKILLS: usize = 20;

/// A binary mastery vector over `K` skills.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    mastery: Vec<u8>,
}

impl Profile {
    pub fn new(mastery: Vec<u8>) -> Result<Self> {
        if mastery.is_empty() {
            return Err(Error::InvalidArgument(
                "profile must cover at least one skill".into(),
            ));
        }
        if mastery.iter().any(|&m| m > 1) {
            return Err(Error::InvalidArgument(
                "profile entries must be 0 or 1".into(),
            ));
        }
        Ok(Self { mastery })
    }

    /// Profile from the low `k` bits of `bits`; bit `i` is skill `i`.
    pub fn from_bits(bits: u32, k: usize) -> Self {
        Self {
            mastery: (0..k).map(|i| ((bits >> i) & 1) as u8).collect(),
        }
    }

    pub fn num_skills(&self) -> usize {
        self.mastery.len()
    }

    pub fn masters(&self, skill: usize) -> bool {
        self.mastery[skill] == 1
    }

    pub fn mastery(&self) -> &[u8] {
        &self.mastery
    }

    pub fn mastered_count(&self) -> usize {
        self.mastery.iter().map(|&m| m as usize).sum()
    }

    /// Bit string with skill 1 first, e.g. "110100".
    pub fn bitstring(&self) -> String {
        self.mastery.iter().map(|m| char::from(b'0' + m)).collect()
    }

    /// Parse a bit string such as "110100".
    pub fn parse_bits(s: &str) -> Result<Self> {
        let mastery: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!(
                    "invalid profile character '{other}'"
                ))),
            })
            .collect::<Result<_>>()?;
        Profile::new(mastery)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitstring())
    }
}

/// Canonical order: fewer mastered skills first; among equal counts, the
/// profile whose earliest differing skill is mastered comes first (so
/// `111000` precedes `110100`).
impl Ord for Profile {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.mastery.len(), other.mastery.len());
        self.mastered_count()
            .cmp(&other.mastered_count())
            .then_with(|| {
                for (a, b) in self.mastery.iter().zip(&other.mastery) {
                    if a != b {
                        return if *a == 1 { Ordering::Less } else { Ordering::Greater };
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Profile {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Ordering tag of a [`ProfileSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderTag {
    Canonical,
    Custom,
}

/// An ordered set of distinct profiles sharing one skill count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSet {
    profiles: Vec<Profile>,
    order: OrderTag,
}

impl ProfileSet {
    /// Sorts into canonical order; rejects duplicates and mixed lengths.
    pub fn canonical(mut profiles: Vec<Profile>) -> Result<Self> {
        Self::check(&profiles)?;
        profiles.sort();
        Ok(Self {
            profiles,
            order: OrderTag::Canonical,
        })
    }

    /// Keeps the given order.
    pub fn custom(profiles: Vec<Profile>) -> Result<Self> {
        Self::check(&profiles)?;
        Ok(Self {
            profiles,
            order: OrderTag::Custom,
        })
    }

    fn check(profiles: &[Profile]) -> Result<()> {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument("profile set must be nonempty".into()));
        }
        let k = profiles[0].num_skills();
        if profiles.iter().any(|p| p.num_skills() != k) {
            return Err(Error::DimensionMismatch(
                "profiles in a set must share one skill count".into(),
            ));
        }
        let mut sorted = profiles.to_vec();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "profile set must not contain duplicates".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn num_skills(&self) -> usize {
        self.profiles[0].num_skills()
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Profile> {
        self.profiles.iter()
    }

    pub fn get(&self, idx: usize) -> &Profile {
        &self.profiles[idx]
    }

    pub fn position(&self, p: &Profile) -> Option<usize> {
        self.profiles.iter().position(|q| q == p)
    }

    pub fn order(&self) -> OrderTag {
        self.order
    }
}

/// The canonical hierarchy shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Linear,
    Convergent,
    Divergent,
    Unstructured,
    Null,
}

impl HierarchyKind {
    pub const ALL: [HierarchyKind; 5] = [
        HierarchyKind::Linear,
        HierarchyKind::Convergent,
        HierarchyKind::Divergent,
        HierarchyKind::Unstructured,
        HierarchyKind::Null,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HierarchyKind::Linear => "linear",
            HierarchyKind::Convergent => "convergent",
            HierarchyKind::Divergent => "divergent",
            HierarchyKind::Unstructured => "unstructured",
            HierarchyKind::Null => "null",
        }
    }
}

impl fmt::Display for HierarchyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HierarchyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(HierarchyKind::Linear),
            "convergent" => Ok(HierarchyKind::Convergent),
            "divergent" => Ok(HierarchyKind::Divergent),
            "unstructured" => Ok(HierarchyKind::Unstructured),
            "null" => Ok(HierarchyKind::Null),
            other => Err(Error::UnsupportedHierarchy(format!(
                "unknown hierarchy '{other}'; expected linear, convergent, divergent, unstructured, or null"
            ))),
        }
    }
}

/// A prerequisite DAG over `num_skills` skills.
///
/// `requirements[k]` lists the prerequisite terms of skill `k` (0-based).
/// A profile masters skill `k` legally only if every term contains at
/// least one mastered parent. A skill with no terms has no prerequisites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    num_skills: usize,
    requirements: Vec<Vec<Vec<usize>>>,
}

impl Hierarchy {
    /// Build from 0-based terms, validating shape and acyclicity.
    pub fn new(num_skills: usize, mut requirements: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if num_skills == 0 {
            return Err(Error::InvalidHierarchy("need at least one skill".into()));
        }
        if requirements.len() != num_skills {
            return Err(Error::InvalidHierarchy(format!(
                "requirements cover {} skills but num_skills is {num_skills}",
                requirements.len()
            )));
        }
        for (skill, terms) in requirements.iter_mut().enumerate() {
            for term in terms.iter_mut() {
                if term.is_empty() {
                    return Err(Error::InvalidHierarchy(format!(
                        "skill {} has an empty prerequisite term",
                        skill + 1
                    )));
                }
                term.sort_unstable();
                term.dedup();
                for &parent in term.iter() {
                    if parent >= num_skills {
                        return Err(Error::InvalidHierarchy(format!(
                            "skill {} lists parent {} outside 1..={num_skills}",
                            skill + 1,
                            parent + 1
                        )));
                    }
                    if parent == skill {
                        return Err(Error::InvalidHierarchy(format!(
                            "skill {} lists itself as a parent",
                            skill + 1
                        )));
                    }
                }
            }
        }
        let h = Self {
            num_skills,
            requirements,
        };
        if h.has_cycle() {
            return Err(Error::InvalidHierarchy(
                "prerequisite graph contains a cycle".into(),
            ));
        }
        Ok(h)
    }

    fn has_cycle(&self) -> bool {
        // DFS coloring over parent -> child edges.
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut children = vec![Vec::new(); self.num_skills];
        for (skill, terms) in self.requirements.iter().enumerate() {
            for term in terms {
                for &parent in term {
                    children[parent].push(skill);
                }
            }
        }
        let mut color = vec![WHITE; self.num_skills];
        let mut stack = Vec::new();
        for start in 0..self.num_skills {
            if color[start] != WHITE {
                continue;
            }
            stack.push((start, 0usize));
            color[start] = GRAY;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next < children[node].len() {
                    let child = children[node][*next];
                    *next += 1;
                    match color[child] {
                        GRAY => return true,
                        WHITE => {
                            color[child] = GRAY;
                            stack.push((child, 0));
                        }
                        _ => {}
                    }
                } else {
                    color[node] = BLACK;
                    stack.pop();
                }
            }
        }
        false
    }

    pub fn num_skills(&self) -> usize {
        self.num_skills
    }

    /// Prerequisite terms of a skill, 0-based parents.
    pub fn terms(&self, skill: usize) -> &[Vec<usize>] {
        &self.requirements[skill]
    }

    pub fn requirements(&self) -> &[Vec<Vec<usize>>] {
        &self.requirements
    }

    /// A stable fingerprint of the structure, independent of how the
    /// hierarchy was spelled; used to key random streams.
    pub fn fingerprint(&self) -> String {
        let mut out = format!("k{}", self.num_skills);
        for (skill, terms) in self.requirements.iter().enumerate() {
            if terms.is_empty() {
                continue;
            }
            let mut sorted = terms.clone();
            sorted.sort();
            out.push_str(&format!(";{skill}:"));
            for term in sorted {
                out.push_str(&format!(
                    "({})",
                    term.iter()
                        .map(|p| p.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                ));
            }
        }
        out
    }
}

/// Build one of the five canonical hierarchy shapes.
///
/// Linear and null accept any `K >= 1`; the convergent, divergent, and
/// unstructured shapes are defined at six skills.
pub fn build_canonical_hierarchy(kind: HierarchyKind, k: usize) -> Result<Hierarchy> {
    if k == 0 {
        return Err(Error::UnsupportedHierarchy(
            "hierarchies need at least one skill".into(),
        ));
    }
    let fixed_six = |kind: HierarchyKind| -> Result<()> {
        if k != 6 {
            return Err(Error::UnsupportedHierarchy(format!(
                "{kind} is defined for K = 6 (got K = {k}); linear and null accept any K >= 1"
            )));
        }
        Ok(())
    };
    match kind {
        HierarchyKind::Linear => {
            let reqs = (0..k)
                .map(|s| if s == 0 { vec![] } else { vec![vec![s - 1]] })
                .collect();
            Hierarchy::new(k, reqs)
        }
        HierarchyKind::Null => Hierarchy::new(k, vec![Vec::new(); k]),
        HierarchyKind::Convergent => {
            fixed_six(kind)?;
            // 1->2, 2->3, 2->4, (3 or 4)->5, 5->6.
            Hierarchy::new(
                6,
                vec![
                    vec![],
                    vec![vec![0]],
                    vec![vec![1]],
                    vec![vec![1]],
                    vec![vec![2, 3]],
                    vec![vec![4]],
                ],
            )
        }
        HierarchyKind::Divergent => {
            fixed_six(kind)?;
            // 1->2, 2->3, 1->4, 4->5, 4->6.
            Hierarchy::new(
                6,
                vec![
                    vec![],
                    vec![vec![0]],
                    vec![vec![1]],
                    vec![vec![0]],
                    vec![vec![3]],
                    vec![vec![3]],
                ],
            )
        }
        HierarchyKind::Unstructured => {
            fixed_six(kind)?;
            // Skill 1 prerequisite to each of 2..6.
            let mut reqs = vec![Vec::new()];
            reqs.extend((1..6).map(|_| vec![vec![0]]));
            Hierarchy::new(6, reqs)
        }
    }
}

/// Whether a profile violates no prerequisite of the hierarchy.
pub fn is_consistent(p: &Profile, h: &Hierarchy) -> Result<bool> {
    if p.num_skills() != h.num_skills() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} skills, hierarchy has {}",
            p.num_skills(),
            h.num_skills()
        )));
    }
    for skill in 0..h.num_skills() {
        if !p.masters(skill) {
            continue;
        }
        for term in h.terms(skill) {
            if !term.iter().any(|&parent| p.masters(parent)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// All profiles consistent with the hierarchy, in canonical order.
///
/// Brute force over all `2^K` candidates; capped at K = 20.
pub fn enumerate_profiles(h: &Hierarchy) -> Result<ProfileSet> {
    let k = h.num_skills();
    if k > MAX_ENUMERATION_SKILLS {
        return Err(Error::CapacityExceeded(format!(
            "enumeration is capped at {MAX_ENUMERATION_SKILLS} skills (got {k})"
        )));
    }
    // Bitmask form of each skill's terms for the inner loop.
    let term_masks: Vec<Vec<u32>> = (0..k)
        .map(|skill| {
            h.terms(skill)
                .iter()
                .map(|term| term.iter().fold(0u32, |m, &p| m | (1 << p)))
                .collect()
        })
        .collect();
    let mut profiles = Vec::new();
    for bits in 0..(1u32 << k) {
        let mut ok = true;
        'skills: for skill in 0..k {
            if bits & (1 << skill) == 0 {
                continue;
            }
            for &tm in &term_masks[skill] {
                if bits & tm == 0 {
                    ok = false;
                    break 'skills;
                }
            }
        }
        if ok {
            profiles.push(Profile::from_bits(bits, k));
        }
    }
    ProfileSet::canonical(profiles)
}

/// How to pick a subset of profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetMode {
    /// First `size` profiles in canonical order.
    Prefix,
    /// Uniform sample without replacement, re-sorted into canonical order.
    Random,
}

/// Take a subset of `size` profiles from `ps`.
pub fn select_subset(
    ps: &ProfileSet,
    size: usize,
    mode: SubsetMode,
    rng: &mut impl Rng,
) -> Result<ProfileSet> {
    if size < 3 || size > ps.len() {
        return Err(Error::InvalidArgument(format!(
            "subset size {size} out of range 3..={}",
            ps.len()
        )));
    }
    match mode {
        SubsetMode::Prefix => {
            let mut profiles = ps.profiles().to_vec();
            if ps.order() == OrderTag::Custom {
                profiles.sort();
            }
            profiles.truncate(size);
            ProfileSet::canonical(profiles)
        }
        SubsetMode::Random => {
            let picked = rand::seq::index::sample(rng, ps.len(), size);
            let profiles = picked.iter().map(|i| ps.get(i).clone()).collect();
            ProfileSet::canonical(profiles)
        }
    }
}

/// JSON form of an explicit hierarchy: 1-based skill keys, each mapping to
/// a list of OR-terms of 1-based parents, e.g.
/// `{"skills": 6, "requirements": {"5": [[3, 4]]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyFile {
    pub skills: usize,
    #[serde(default)]
    pub requirements: BTreeMap<String, Vec<Vec<usize>>>,
}

impl HierarchyFile {
    pub fn to_hierarchy(&self) -> Result<Hierarchy> {
        if self.skills == 0 {
            return Err(Error::InvalidHierarchy("skills must be positive".into()));
        }
        let mut reqs = vec![Vec::new(); self.skills];
        for (key, terms) in &self.requirements {
            let skill: usize = key.parse().map_err(|_| {
                Error::InvalidHierarchy(format!("requirement key '{key}' is not a skill index"))
            })?;
            if skill == 0 || skill > self.skills {
                return Err(Error::InvalidHierarchy(format!(
                    "requirement key {skill} outside 1..={}",
                    self.skills
                )));
            }
            let converted: Vec<Vec<usize>> = terms
                .iter()
                .map(|term| {
                    term.iter()
                        .map(|&p| {
                            if p == 0 || p > self.skills {
                                Err(Error::InvalidHierarchy(format!(
                                    "parent {p} outside 1..={}",
                                    self.skills
                                )))
                            } else {
                                Ok(p - 1)
                            }
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            reqs[skill - 1] = converted;
        }
        Hierarchy::new(self.skills, reqs)
    }

    pub fn from_hierarchy(h: &Hierarchy) -> Self {
        let mut requirements = BTreeMap::new();
        for (skill, terms) in h.requirements().iter().enumerate() {
            if terms.is_empty() {
                continue;
            }
            requirements.insert(
                (skill + 1).to_string(),
                terms
                    .iter()
                    .map(|t| t.iter().map(|&p| p + 1).collect())
                    .collect(),
            );
        }
        Self {
            skills: h.num_skills(),
            requirements,
        }
    }
}

//! Q-matrix and item-parameter sampling, plus binary response generation
//! from the DINA and NIDA models.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Profile, ProfileSet};

/// Resampling budget for coverage-constrained draws.
const MAX_RESAMPLE: usize = 1000;

/// Binary item-by-skill requirement matrix (J items x K skills).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    entries: Vec<Vec<u8>>,
}

impl QMatrix {
    /// Validates 0/1 entries, equal row lengths, and at least one required
    /// skill per item. Full skill coverage is guaranteed by
    /// [`sample_q_matrix`] and checked again where scores divide by
    /// per-skill item counts.
    pub fn new(entries: Vec<Vec<u8>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("Q-matrix needs at least one item".into()));
        }
        let k = entries[0].len();
        if k == 0 {
            return Err(Error::InvalidArgument("Q-matrix needs at least one skill".into()));
        }
        for (j, row) in entries.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "item {} has {} skills, expected {k}",
                    j + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&q| q > 1) {
                return Err(Error::InvalidArgument("Q-matrix entries must be 0 or 1".into()));
            }
            if row.iter().all(|&q| q == 0) {
                return Err(Error::InvalidArgument(format!(
                    "item {} requires no skill",
                    j + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn num_items(&self) -> usize {
        self.entries.len()
    }

    pub fn num_skills(&self) -> usize {
        self.entries[0].len()
    }

    pub fn row(&self, item: usize) -> &[u8] {
        &self.entries[item]
    }

    pub fn requires(&self, item: usize, skill: usize) -> bool {
        self.entries[item][skill] == 1
    }

    /// Number of items requiring the skill (column sum).
    pub fn items_requiring(&self, skill: usize) -> usize {
        self.entries.iter().map(|row| row[skill] as usize).sum()
    }

    pub fn covers_all_skills(&self) -> bool {
        (0..self.num_skills()).all(|k| self.items_requiring(k) > 0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("item".to_string())
            .chain((1..=self.num_skills()).map(|k| format!("skill_{k}")))
            .collect();
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(&header)?;
        for (j, row) in self.entries.iter().enumerate() {
            let rec: Vec<String> = std::iter::once((j + 1).to_string())
                .chain(row.iter().map(|q| q.to_string()))
                .collect();
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("q-matrix csv", e))?;
        Ok(())
    }

    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write_csv(file)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row: Vec<u8> = record
                .iter()
                .skip(1)
                .map(|cell| match cell.trim() {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::InvalidArgument(format!(
                        "Q-matrix cell '{other}' is not 0/1"
                    ))),
                })
                .collect::<Result<_>>()?;
            entries.push(row);
        }
        QMatrix::new(entries)
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read_csv(file)
    }
}

fn validate_slip_guess(slip: &[f64], guess: &[f64], unit: &str) -> Result<()> {
    if slip.is_empty() || slip.len() != guess.len() {
        return Err(Error::DimensionMismatch(format!(
            "slip and guess must be nonempty vectors of equal length (got {} and {})",
            slip.len(),
            guess.len()
        )));
    }
    for (i, (&s, &g)) in slip.iter().zip(guess).enumerate() {
        if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&g) {
            return Err(Error::InvalidArgument(format!(
                "{unit} {}: slip and guess must lie in [0, 1)",
                i + 1
            )));
        }
        if s + g >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "{unit} {}: slip + guess must stay below 1 (got {s} + {g})",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Per-item slip/guess parameters for the DINA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinaParams {
    slip: Vec<f64>,
    guess: Vec<f64>,
}

impl DinaParams {
    pub fn new(slip: Vec<f64>, guess: Vec<f64>) -> Result<Self> {
        validate_slip_guess(&slip, &guess, "item")?;
        Ok(Self { slip, guess })
    }

    pub fn zero_noise(num_items: usize) -> Self {
        Self {
            slip: vec![0.0; num_items],
            guess: vec![0.0; num_items],
        }
    }

    pub fn num_items(&self) -> usize {
        self.slip.len()
    }

    pub fn slip(&self) -> &[f64] {
        &self.slip
    }

    pub fn guess(&self) -> &[f64] {
        &self.guess
    }
}

/// Per-skill slip/guess parameters for the NIDA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NidaParams {
    slip: Vec<f64>,
    guess: Vec<f64>,
}

impl NidaParams {
    pub fn new(slip: Vec<f64>, guess: Vec<f64>) -> Result<Self> {
        validate_slip_guess(&slip, &guess, "skill")?;
        Ok(Self { slip, guess })
    }

    pub fn zero_noise(num_skills: usize) -> Self {
        Self {
            slip: vec![0.0; num_skills],
            guess: vec![0.0; num_skills],
        }
    }

    pub fn num_skills(&self) -> usize {
        self.slip.len()
    }

    pub fn slip(&self) -> &[f64] {
        &self.slip
    }

    pub fn guess(&self) -> &[f64] {
        &self.guess
    }
}

/// The two conjunctive response models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Dina,
    Nida,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Dina => "dina",
            ModelKind::Nida => "nida",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dina" => Ok(ModelKind::Dina),
            "nida" => Ok(ModelKind::Nida),
            other => Err(Error::InvalidArgument(format!(
                "unknown model '{other}'; expected dina or nida"
            ))),
        }
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// A response model with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Cdm {
    Dina(DinaParams),
    Nida(NidaParams),
}

impl Cdm {
    pub fn kind(&self) -> ModelKind {
        match self {
            Cdm::Dina(_) => ModelKind::Dina,
            Cdm::Nida(_) => ModelKind::Nida,
        }
    }

    pub fn zero_noise(kind: ModelKind, q: &QMatrix) -> Self {
        match kind {
            ModelKind::Dina => Cdm::Dina(DinaParams::zero_noise(q.num_items())),
            ModelKind::Nida => Cdm::Nida(NidaParams::zero_noise(q.num_skills())),
        }
    }

    /// Probability of a correct response on `item` for a student with
    /// profile `p`.
    ///
    /// DINA: `(1 - s_j)^eta * g_j^(1 - eta)` with `eta` = 1 iff the student
    /// masters every skill the item requires. NIDA: the product over
    /// required skills of `1 - s_k` (mastered) or `g_k` (not mastered).
    pub fn response_prob(&self, p: &Profile, item: usize, q: &QMatrix) -> Result<f64> {
        if item >= q.num_items() {
            return Err(Error::InvalidArgument(format!(
                "item index {item} out of range for {} items",
                q.num_items()
            )));
        }
        if p.num_skills() != q.num_skills() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} skills, Q-matrix has {}",
                p.num_skills(),
                q.num_skills()
            )));
        }
        let prob = match self {
            Cdm::Dina(params) => {
                if params.num_items() != q.num_items() {
                    return Err(Error::DimensionMismatch(
                        "DINA parameters do not match the Q-matrix item count".into(),
                    ));
                }
                if eta(p, q.row(item))? == 1 {
                    1.0 - params.slip[item]
                } else {
                    params.guess[item]
                }
            }
            Cdm::Nida(params) => {
                if params.num_skills() != q.num_skills() {
                    return Err(Error::DimensionMismatch(
                        "NIDA parameters do not match the Q-matrix skill count".into(),
                    ));
                }
                let mut prob = 1.0;
                for skill in 0..q.num_skills() {
                    if !q.requires(item, skill) {
                        continue;
                    }
                    prob *= if p.masters(skill) {
                        1.0 - params.slip[skill]
                    } else {
                        params.guess[skill]
                    };
                }
                prob
            }
        };
        debug_assert!((0.0..=1.0).contains(&prob));
        Ok(prob)
    }
}

/// Whether the profile masters every skill required by the item row.
pub fn eta(p: &Profile, q_row: &[u8]) -> Result<u8> {
    if p.num_skills() != q_row.len() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} skills, item row has {}",
            p.num_skills(),
            q_row.len()
        )));
    }
    if q_row.iter().all(|&q| q == 0) {
        return Err(Error::InvalidArgument("item row requires no skill".into()));
    }
    for (skill, &req) in q_row.iter().enumerate() {
        if req == 1 && !p.masters(skill) {
            return Ok(0);
        }
    }
    Ok(1)
}

/// Binary response matrix (N students x J items).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    entries: Vec<Vec<u8>>,
}

impl ResponseMatrix {
    pub fn new(entries: Vec<Vec<u8>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("response matrix needs at least one student".into()));
        }
        let j = entries[0].len();
        for row in &entries {
            if row.len() != j {
                return Err(Error::DimensionMismatch("ragged response matrix".into()));
            }
            if row.iter().any(|&y| y > 1) {
                return Err(Error::InvalidArgument("responses must be 0 or 1".into()));
            }
        }
        Ok(Self { entries })
    }

    pub fn num_students(&self) -> usize {
        self.entries.len()
    }

    pub fn num_items(&self) -> usize {
        self.entries[0].len()
    }

    pub fn row(&self, student: usize) -> &[u8] {
        &self.entries[student]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("student".to_string())
            .chain((1..=self.num_items()).map(|j| format!("item_{j}")))
            .collect();
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(&header)?;
        for (i, row) in self.entries.iter().enumerate() {
            let rec: Vec<String> = std::iter::once((i + 1).to_string())
                .chain(row.iter().map(|y| y.to_string()))
                .collect();
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("response csv", e))?;
        Ok(())
    }

    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write_csv(file)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row: Vec<u8> = record
                .iter()
                .skip(1)
                .map(|cell| match cell.trim() {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::InvalidArgument(format!(
                        "response cell '{other}' is not 0/1"
                    ))),
                })
                .collect::<Result<_>>()?;
            entries.push(row);
        }
        ResponseMatrix::new(entries)
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read_csv(file)
    }
}

/// Sample a Q-matrix with the given mix of (skills-per-item, item-count)
/// groups. Item skill sets are uniform over subsets of the given size;
/// the whole matrix is redrawn (up to a bounded number of retries) until
/// every skill is required by at least one item.
pub fn sample_q_matrix(
    num_items: usize,
    num_skills: usize,
    mix: &[(usize, usize)],
    rng: &mut impl Rng,
) -> Result<QMatrix> {
    if num_items == 0 || num_skills == 0 {
        return Err(Error::InvalidArgument("need at least one item and one skill".into()));
    }
    let total: usize = mix.iter().map(|&(_, count)| count).sum();
    if total != num_items {
        return Err(Error::InvalidArgument(format!(
            "mix item counts sum to {total}, expected {num_items}"
        )));
    }
    let mut slots = 0usize;
    for &(skills_per_item, count) in mix {
        if skills_per_item == 0 || skills_per_item > num_skills {
            return Err(Error::InvalidArgument(format!(
                "skills-per-item {skills_per_item} out of range 1..={num_skills}"
            )));
        }
        slots += skills_per_item * count;
    }
    if slots < num_skills {
        return Err(Error::InvalidArgument(format!(
            "mix provides {slots} skill slots, cannot cover {num_skills} skills"
        )));
    }

    for _ in 0..MAX_RESAMPLE {
        let mut entries = Vec::with_capacity(num_items);
        for &(skills_per_item, count) in mix {
            for _ in 0..count {
                let mut row = vec![0u8; num_skills];
                for idx in rand::seq::index::sample(rng, num_skills, skills_per_item) {
                    row[idx] = 1;
                }
                entries.push(row);
            }
        }
        let covered = (0..num_skills).all(|k| entries.iter().any(|row| row[k] == 1));
        if covered {
            return QMatrix::new(entries);
        }
    }
    Err(Error::SamplingFailed(format!(
        "no skill-covering Q-matrix found in {MAX_RESAMPLE} draws"
    )))
}

fn sample_bounded(
    len: usize,
    slip_max: f64,
    guess_max: f64,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if len == 0 {
        return Err(Error::InvalidArgument("parameter vector must be nonempty".into()));
    }
    if slip_max <= 0.0 || guess_max <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "slip/guess bounds must be positive (got {slip_max}, {guess_max})"
        )));
    }
    if slip_max + guess_max >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "slip_max + guess_max must stay below 1 (got {slip_max} + {guess_max})"
        )));
    }
    let slip = (0..len).map(|_| rng.random_range(0.0..slip_max)).collect();
    let guess = (0..len).map(|_| rng.random_range(0.0..guess_max)).collect();
    Ok((slip, guess))
}

/// Per-item DINA parameters, slips uniform on (0, slip_max) and guesses
/// uniform on (0, guess_max).
pub fn sample_dina_params(
    num_items: usize,
    slip_max: f64,
    guess_max: f64,
    rng: &mut impl Rng,
) -> Result<DinaParams> {
    let (slip, guess) = sample_bounded(num_items, slip_max, guess_max, rng)?;
    DinaParams::new(slip, guess)
}

/// Per-skill NIDA parameters from the same uniform ranges.
pub fn sample_nida_params(
    num_skills: usize,
    slip_max: f64,
    guess_max: f64,
    rng: &mut impl Rng,
) -> Result<NidaParams> {
    let (slip, guess) = sample_bounded(num_skills, slip_max, guess_max, rng)?;
    NidaParams::new(slip, guess)
}

/// Sample parameters for either model, sized from the Q-matrix. Bounds of
/// exactly zero short-circuit to noise-free parameters.
pub fn sample_cdm(
    kind: ModelKind,
    q: &QMatrix,
    slip_max: f64,
    guess_max: f64,
    rng: &mut impl Rng,
) -> Result<Cdm> {
    if slip_max == 0.0 && guess_max == 0.0 {
        return Ok(Cdm::zero_noise(kind, q));
    }
    Ok(match kind {
        ModelKind::Dina => Cdm::Dina(sample_dina_params(q.num_items(), slip_max, guess_max, rng)?),
        ModelKind::Nida => Cdm::Nida(sample_nida_params(q.num_skills(), slip_max, guess_max, rng)?),
    })
}

/// Independent Bernoulli responses for each (student, item) pair.
pub fn simulate_responses(
    assignments: &[Profile],
    q: &QMatrix,
    model: &Cdm,
    rng: &mut impl Rng,
) -> Result<ResponseMatrix> {
    if assignments.is_empty() {
        return Err(Error::InvalidArgument("no students to simulate".into()));
    }
    let mut entries = Vec::with_capacity(assignments.len());
    for profile in assignments {
        let mut row = Vec::with_capacity(q.num_items());
        for item in 0..q.num_items() {
            let p = model.response_prob(profile, item, q)?;
            row.push(u8::from(rng.random::<f64>() < p));
        }
        entries.push(row);
    }
    ResponseMatrix::new(entries)
}

/// Assign each student a profile drawn uniformly from the subset, redrawn
/// until every profile appears at least once.
pub fn assign_students(
    num_students: usize,
    subset: &ProfileSet,
    rng: &mut impl Rng,
) -> Result<Vec<Profile>> {
    if num_students < subset.len() {
        return Err(Error::InvalidArgument(format!(
            "{num_students} students cannot cover {} profiles",
            subset.len()
        )));
    }
    for _ in 0..MAX_RESAMPLE {
        let picks: Vec<usize> = (0..num_students)
            .map(|_| rng.random_range(0..subset.len()))
            .collect();
        let mut seen = vec![false; subset.len()];
        for &p in &picks {
            seen[p] = true;
        }
        if seen.iter().all(|&s| s) {
            return Ok(picks.into_iter().map(|p| subset.get(p).clone()).collect());
        }
    }
    Err(Error::SamplingFailed(format!(
        "no covering assignment found in {MAX_RESAMPLE} draws"
    )))
}

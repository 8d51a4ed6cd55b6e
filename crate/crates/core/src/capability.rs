//! Per-skill sum scores and normalized capability scores.
//!
//! `W_ik` counts the items requiring skill `k` that student `i` answered
//! correctly; dividing by the number of items requiring the skill puts
//! every score in `[0, 1]`, so capability vectors live in the unit
//! hypercube whose vertices are the profiles themselves.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hierarchy::Profile;
use crate::sim::{QMatrix, ResponseMatrix};

/// N x K matrix of per-skill correct-answer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumScoreMatrix {
    entries: Vec<Vec<u32>>,
}

impl SumScoreMatrix {
    pub fn num_students(&self) -> usize {
        self.entries.len()
    }

    pub fn num_skills(&self) -> usize {
        self.entries[0].len()
    }

    pub fn row(&self, student: usize) -> &[u32] {
        &self.entries[student]
    }
}

/// N x K matrix of capability scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityMatrix {
    rows: Vec<Vec<f64>>,
}

impl CapabilityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "capability matrix needs at least one student".into(),
            ));
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "capability matrix needs at least one skill".into(),
            ));
        }
        for row in &rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch("ragged capability matrix".into()));
            }
            if row.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
                return Err(Error::InvalidArgument(
                    "capability scores must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(Self { rows })
    }

    pub fn num_students(&self) -> usize {
        self.rows.len()
    }

    pub fn num_skills(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, student: usize) -> &[f64] {
        &self.rows[student]
    }

    /// The rows as clustering input points.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(&mut w);
        let header: Vec<String> = (1..=self.num_skills()).map(|k| format!("skill_{k}")).collect();
        wtr.write_record(&header)?;
        for row in &self.rows {
            let rec: Vec<String> = row.iter().map(|b| b.to_string()).collect();
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("capability csv", e))?;
        Ok(())
    }

    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write_csv(file)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row: Vec<f64> = record
                .iter()
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("capability cell '{cell}' is not a number"))
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        CapabilityMatrix::new(rows)
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read_csv(file)
    }
}

/// `W_ik = sum_j Y_ij q_jk`.
pub fn sum_scores(y: &ResponseMatrix, q: &QMatrix) -> Result<SumScoreMatrix> {
    if y.num_items() != q.num_items() {
        return Err(Error::DimensionMismatch(format!(
            "responses cover {} items, Q-matrix has {}",
            y.num_items(),
            q.num_items()
        )));
    }
    let k = q.num_skills();
    let mut entries = Vec::with_capacity(y.num_students());
    for i in 0..y.num_students() {
        let mut row = vec![0u32; k];
        for j in 0..q.num_items() {
            if y.row(i)[j] == 1 {
                for (skill, cell) in row.iter_mut().enumerate() {
                    *cell += q.row(j)[skill] as u32;
                }
            }
        }
        entries.push(row);
    }
    Ok(SumScoreMatrix { entries })
}

/// `B_ik = W_ik / n_k`, where `n_k` is the number of items requiring
/// skill `k`. Rejected when some skill is required by no item, since the
/// score would be undefined.
pub fn capability_scores(w: &SumScoreMatrix, q: &QMatrix) -> Result<CapabilityMatrix> {
    if w.num_skills() != q.num_skills() {
        return Err(Error::DimensionMismatch(format!(
            "sum scores cover {} skills, Q-matrix has {}",
            w.num_skills(),
            q.num_skills()
        )));
    }
    let counts: Vec<usize> = (0..q.num_skills()).map(|k| q.items_requiring(k)).collect();
    if let Some(skill) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidArgument(format!(
            "skill {} is required by no item; capability score undefined",
            skill + 1
        )));
    }
    let rows = (0..w.num_students())
        .map(|i| {
            w.row(i)
                .iter()
                .zip(&counts)
                .map(|(&wik, &nk)| wik as f64 / nk as f64)
                .collect()
        })
        .collect();
    CapabilityMatrix::new(rows)
}

/// The profile embedded as a corner of the unit hypercube.
pub fn profile_vertex(p: &Profile) -> Vec<f64> {
    p.mastery().iter().map(|&m| m as f64).collect()
}

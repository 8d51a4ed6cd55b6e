//! Aggregation of result rows into per-cell mean ARIs and SVG figures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::rows::ResultRow;
use crate::experiment::svg::{line_chart, Series};

/// Mean ARI of one (model, hierarchy, method, subset size) cell across
/// replications; rows flagged as errors (no ARI) are excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMean {
    pub generating_model: String,
    pub hierarchy: String,
    pub method: String,
    pub subset_size: usize,
    pub l_h: usize,
    pub proportion: f64,
    pub mean_ari: f64,
    pub replications: usize,
}

/// Group rows by (model, hierarchy, method, subset size) and average the
/// ARIs, in deterministic key order.
pub fn mean_ari_by_cell(rows: &[ResultRow]) -> Vec<CellMean> {
    let mut acc: BTreeMap<(String, String, String, usize), (f64, usize, usize, f64)> =
        BTreeMap::new();
    for row in rows {
        let Some(ari) = row.ari else { continue };
        let key = (
            row.generating_model.clone(),
            row.hierarchy.clone(),
            row.method.clone(),
            row.subset_size,
        );
        let entry = acc.entry(key).or_insert((0.0, 0, row.l_h, row.proportion));
        entry.0 += ari;
        entry.1 += 1;
    }
    acc.into_iter()
        .filter(|(_, (_, n, _, _))| *n > 0)
        .map(
            |((model, hierarchy, method, subset_size), (total, n, l_h, proportion))| CellMean {
                generating_model: model,
                hierarchy,
                method,
                subset_size,
                l_h,
                proportion,
                mean_ari: total / n as f64,
                replications: n,
            },
        )
        .collect()
}

/// One SVG per (generating model, hierarchy): x is the proportion of
/// possible profiles present, y the mean ARI per method. Negative means
/// are drawn at zero and counted in a footnote.
pub fn render_figures(rows: &[ResultRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to plot".into()));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let means = mean_ari_by_cell(rows);

    let mut figures: BTreeMap<(String, String), BTreeMap<String, Vec<(f64, f64)>>> =
        BTreeMap::new();
    for cell in &means {
        figures
            .entry((cell.generating_model.clone(), cell.hierarchy.clone()))
            .or_default()
            .entry(cell.method.clone())
            .or_default()
            .push((cell.proportion, cell.mean_ari));
    }

    let mut paths = Vec::new();
    for ((model, hierarchy), by_method) in figures {
        let series: Vec<Series> = by_method
            .into_iter()
            .map(|(method, mut points)| {
                points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let clipped = points.iter().filter(|&&(_, y)| y < 0.0).count();
                Series {
                    name: method,
                    points: points.into_iter().map(|(x, y)| (x, y.max(0.0))).collect(),
                    clipped,
                }
            })
            .collect();
        let svg = line_chart(
            &format!("{model} / {hierarchy}"),
            "proportion of possible profiles present",
            "mean ARI",
            &series,
        );
        let path = out_dir.join(format!("ari_{model}_{hierarchy}.svg"));
        std::fs::write(&path, svg).map_err(|e| Error::io(path.display().to_string(), e))?;
        paths.push(path);
    }
    Ok(paths)
}

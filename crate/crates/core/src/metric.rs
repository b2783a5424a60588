//! Activation ingestion and the correlation metric space over network nodes.
//!
//! Each node is a random variable observed over `n` probe samples. Nodes are
//! compared by the Pearson correlation of their activation vectors, and the
//! correlation is turned into a distance with [`to_distance`].

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::parse_float;

/// Upper bound on the number of nodes in one activation matrix.
pub const NODE_CAP: usize = 10_000;

/// Above this node count the dense matrices get large enough that callers
/// should warn.
pub const LARGE_NODE_WARNING: usize = 4_000;

/// Relative standard-deviation threshold under which a node counts as constant.
const DEGENERATE_REL_SD: f64 = 1e-12;

/// `n_samples x n_nodes` activations, sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    n_samples: usize,
    n_nodes: usize,
    values: Vec<f64>,
    node_labels: Option<Vec<String>>,
}

impl ActivationMatrix {
    pub fn new(
        n_samples: usize,
        n_nodes: usize,
        values: Vec<f64>,
        node_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Invalid("activation matrix has no nodes".into()));
        }
        if n_nodes > NODE_CAP {
            return Err(Error::NodeCap {
                n_nodes,
                cap: NODE_CAP,
            });
        }
        if values.len() != n_samples * n_nodes {
            return Err(Error::Invalid(format!(
                "expected {} values for {n_samples}x{n_nodes}, got {}",
                n_samples * n_nodes,
                values.len()
            )));
        }
        if let Some(labels) = &node_labels {
            if labels.len() != n_nodes {
                return Err(Error::Invalid(format!(
                    "{} labels for {n_nodes} nodes",
                    labels.len()
                )));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                sample: pos / n_nodes,
                node: pos % n_nodes,
            });
        }
        if n_samples < 2 {
            return Err(Error::TooFewSamples(n_samples));
        }
        Ok(Self {
            n_samples,
            n_nodes,
            values,
            node_labels,
        })
    }

    /// Build from one row per sample.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_samples = rows.len();
        let n_nodes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_nodes) {
            return Err(Error::Invalid("ragged activation rows".into()));
        }
        Self::new(n_samples, n_nodes, rows.concat(), None)
    }

    /// Parse the activation CSV format: an optional header row of node labels,
    /// then one row of decimal values per sample.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();
        let first = match records.next() {
            Some(r) => r?,
            None => return Err(Error::malformed(1, "empty activation file")),
        };
        let n_nodes = first.len();
        if n_nodes > NODE_CAP {
            return Err(Error::NodeCap {
                n_nodes,
                cap: NODE_CAP,
            });
        }
        if n_nodes == 0 || (n_nodes == 1 && first[0].is_empty()) {
            return Err(Error::malformed(1, "activation row has no columns"));
        }

        let parse_row = |record: &csv::StringRecord, line: usize| -> Result<Vec<f64>> {
            record
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    parse_float(cell).ok_or_else(|| {
                        Error::malformed(line, format!("column {}: not a number: {cell:?}", j + 1))
                    })
                })
                .collect()
        };

        let mut values = Vec::new();
        let is_header = first.iter().any(|cell| parse_float(cell).is_none());
        let labels = if is_header {
            Some(first.iter().map(str::to_owned).collect())
        } else {
            values.extend(parse_row(&first, 1)?);
            None
        };
        for record in records {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            values.extend(parse_row(&record, line)?);
        }
        let n_samples = values.len() / n_nodes;
        Self::new(n_samples, n_nodes, values, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    pub fn get(&self, sample: usize, node: usize) -> f64 {
        self.values[sample * self.n_nodes + node]
    }

    pub fn column(&self, node: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(node).step_by(self.n_nodes).copied()
    }
}

/// Load and validate an activation CSV file.
pub fn load_activations(path: impl AsRef<Path>) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ActivationMatrix::from_csv_reader(file)
}

/// Sidecar metadata stored next to an activation file as `<stem>.manifest.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_train: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_test: Option<f64>,
}

impl ActivationManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::malformed(e.line(), e.to_string()))
    }

    /// `runs/epoch3.csv` maps to `runs/epoch3.manifest.json`.
    pub fn sidecar_path(activations: &Path) -> PathBuf {
        activations.with_extension("manifest.json")
    }

    /// Read the sidecar of `activations` if one exists.
    pub fn load_sidecar(activations: &Path) -> Result<Option<Self>> {
        let path = Self::sidecar_path(activations);
        match std::fs::read_to_string(&path) {
            Ok(text) => Self::from_json(&text).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

/// Symmetric matrix of Pearson correlations with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n_nodes: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.entries[p * self.n_nodes + q]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// What to do with nodes whose activations never vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    #[default]
    DropNode,
    Error,
}

/// Pearson correlation between every pair of nodes, population-normalized.
///
/// Returns the matrix over the kept nodes together with their indices in the
/// input. Constant nodes are dropped or rejected according to `policy`.
pub fn correlation_matrix(
    act: &ActivationMatrix,
    policy: DegeneratePolicy,
) -> Result<(CorrelationMatrix, Vec<usize>)> {
    let n = act.n_samples() as f64;
    let mut kept = Vec::with_capacity(act.n_nodes());
    let mut degenerate = Vec::new();
    let mut unit_columns: Vec<Vec<f64>> = Vec::with_capacity(act.n_nodes());

    for node in 0..act.n_nodes() {
        let mean = act.column(node).sum::<f64>() / n;
        let centered: Vec<f64> = act.column(node).map(|x| x - mean).collect();
        let ss: f64 = centered.iter().map(|d| d * d).sum();
        let scale = act.column(node).fold(0.0_f64, |m, x| m.max(x.abs()));
        if (ss / n).sqrt() <= DEGENERATE_REL_SD * scale || ss == 0.0 {
            degenerate.push(node);
            continue;
        }
        let norm = ss.sqrt();
        kept.push(node);
        unit_columns.push(centered.into_iter().map(|d| d / norm).collect());
    }

    if !degenerate.is_empty() {
        match policy {
            DegeneratePolicy::Error => return Err(Error::DegenerateNodes(degenerate)),
            DegeneratePolicy::DropNode => {
                log::warn!("dropping {} zero-variance nodes: {degenerate:?}", degenerate.len())
            }
        }
    }
    if kept.len() < 2 {
        return Err(Error::TooFewNodes(kept.len()));
    }

    let m = kept.len();
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|p| {
            ((p + 1)..m)
                .map(|q| {
                    let (a, b) = (&unit_columns[p], &unit_columns[q]);
                    if a == b {
                        return 1.0;
                    }
                    if a.iter().zip(b).all(|(x, y)| *x == -*y) {
                        return -1.0;
                    }
                    let r: f64 = unit_columns[p]
                        .iter()
                        .zip(&unit_columns[q])
                        .map(|(a, b)| a * b)
                        .sum();
                    r.clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();

    let mut entries = vec![0.0; m * m];
    for (p, row) in upper.iter().enumerate() {
        entries[p * m + p] = 1.0;
        for (offset, &r) in row.iter().enumerate() {
            let q = p + 1 + offset;
            entries[p * m + q] = r;
            entries[q * m + p] = r;
        }
    }
    Ok((CorrelationMatrix { n_nodes: m, entries }, kept))
}

/// Symmetric, zero-diagonal, nonnegative pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validate a square matrix of pairwise distances.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("empty distance matrix".into()));
        }
        if n > NODE_CAP {
            return Err(Error::NodeCap {
                n_nodes: n,
                cap: NODE_CAP,
            });
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("distance matrix is not square".into()));
        }
        let entries = rows.concat();
        for p in 0..n {
            if entries[p * n + p] != 0.0 {
                return Err(Error::Invalid(format!("nonzero diagonal at {p}")));
            }
            for q in 0..n {
                let d = entries[p * n + q];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Invalid(format!("bad distance {d} at ({p}, {q})")));
                }
                if d != entries[q * n + p] {
                    return Err(Error::Invalid(format!("asymmetric at ({p}, {q})")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Parse a headerless square CSV of distances.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if rows.len() >= NODE_CAP {
                return Err(Error::NodeCap {
                    n_nodes: rows.len() + 1,
                    cap: NODE_CAP,
                });
            }
            let row = record
                .iter()
                .map(|cell| {
                    parse_float(cell)
                        .ok_or_else(|| Error::malformed(line, format!("not a number: {cell:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.entries[p * self.n + q]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// `d = 1 - |r|`: strongly correlated and strongly anti-correlated nodes are
/// both close.
pub fn to_distance(corr: &CorrelationMatrix) -> DistanceMatrix {
    let n = corr.n_nodes();
    let mut entries: Vec<f64> = corr.entries().iter().map(|r| 1.0 - r.abs()).collect();
    for p in 0..n {
        entries[p * n + p] = 0.0;
    }
    DistanceMatrix { n, entries }
}

//! Persistent homology over Z/2 in dimensions 0 and 1.
//!
//! The boundary matrix of a [`FilteredComplex`] is reduced column by column in
//! canonical simplex order. Triangles are reduced before edges so that every
//! edge killed by a triangle can be cleared without being reduced.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::filtration::FilteredComplex;
use crate::format::{float, parse_float};
use crate::metric::DistanceMatrix;

/// One persistence interval `[birth, death)`. Essential classes have
/// `death == f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub birth: f64,
    pub death: f64,
}

impl Bar {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn essential(birth: f64) -> Self {
        Self {
            birth,
            death: f64::INFINITY,
        }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    /// Born and killed at the same scale.
    pub fn is_trivial(&self) -> bool {
        self.birth == self.death
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn alive_at(&self, eps: f64) -> bool {
        self.birth <= eps && eps < self.death
    }
}

/// Bars of a single homology dimension, sorted by (birth, death).
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub dimension: usize,
    pub bars: Vec<Bar>,
    pub eps_max: f64,
}

impl PersistenceDiagram {
    pub fn new(dimension: usize, mut bars: Vec<Bar>, eps_max: f64) -> Self {
        sort_bars(&mut bars);
        Self {
            dimension,
            bars,
            eps_max,
        }
    }

    pub fn essential_count(&self) -> usize {
        self.bars.iter().filter(|b| b.is_essential()).count()
    }

    /// Bars with positive persistence.
    pub fn nontrivial(&self) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(|b| !b.is_trivial())
    }
}

fn sort_bars(bars: &mut [Bar]) {
    bars.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
}

/// Dimension 0 and dimension 1 diagrams of `complex`.
pub fn persistent_homology(complex: &FilteredComplex) -> (PersistenceDiagram, PersistenceDiagram) {
    let simplices = complex.simplices();
    let n = simplices.len();

    let mut vertex_index = vec![usize::MAX; complex.n_vertices()];
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, s) in simplices.iter().enumerate() {
        match s.vertices() {
            [v] => vertex_index[*v] = i,
            [u, v] => {
                edge_index.insert((*u, *v), i);
            }
            _ => {}
        }
    }

    let boundary = |j: usize| -> Vec<usize> {
        let mut col = match simplices[j].vertices() {
            [_] => Vec::new(),
            [u, v] => vec![vertex_index[*u], vertex_index[*v]],
            [a, b, c] => vec![edge_index[&(*a, *b)], edge_index[&(*a, *c)], edge_index[&(*b, *c)]],
            _ => unreachable!("simplices have at most 3 vertices"),
        };
        col.sort_unstable();
        col
    };

    // pivot_of[row] = column whose reduced lowest entry is `row`
    let mut pivot_of: Vec<Option<usize>> = vec![None; n];
    let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cleared = vec![false; n];

    for dim in [2, 1] {
        for j in 0..n {
            if simplices[j].dim() != dim || cleared[j] {
                continue;
            }
            let mut col = boundary(j);
            while let Some(&low) = col.last() {
                match pivot_of[low] {
                    Some(k) => col = add_columns(&col, &reduced[k]),
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                pivot_of[low] = Some(j);
                cleared[low] = true;
                reduced[j] = col;
            }
        }
    }

    let eps_max = complex.eps_max();
    let mut bars: [Vec<Bar>; 2] = [Vec::new(), Vec::new()];
    for (i, s) in simplices.iter().enumerate() {
        let dim = s.dim();
        if dim > 1 || !reduced[i].is_empty() {
            continue;
        }
        let bar = match pivot_of[i] {
            Some(j) => Bar::new(s.value(), simplices[j].value()),
            None => Bar::essential(s.value()),
        };
        bars[dim].push(bar);
    }
    let [h0, h1] = bars;
    (
        PersistenceDiagram::new(0, h0, eps_max),
        PersistenceDiagram::new(1, h1, eps_max),
    )
}

/// Symmetric difference of two sorted index lists.
fn add_columns(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Betti numbers of one dimension sampled over a grid of scales.
#[derive(Debug, Clone, PartialEq)]
pub struct BettiCurve {
    pub dimension: usize,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

/// `counts[k]` is the number of bars with `birth <= scales[k] < death`.
pub fn betti_curve(diagram: &PersistenceDiagram, scales: &[f64]) -> BettiCurve {
    let counts = scales
        .iter()
        .map(|&eps| diagram.bars.iter().filter(|b| b.alive_at(eps)).count())
        .collect();
    BettiCurve {
        dimension: diagram.dimension,
        scales: scales.to_vec(),
        counts,
    }
}

/// Largest vertex count accepted by [`brute_force_betti`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// `(beta_0, beta_1)` of the Rips complex at the single scale `eps`, from
/// ranks of the boundary maps over Z/2.
pub fn brute_force_betti(dist: &DistanceMatrix, eps: f64) -> Result<(usize, usize)> {
    let n = dist.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::OracleTooLarge {
            limit: BRUTE_FORCE_LIMIT,
            got: n,
        });
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if dist.get(u, v) <= eps {
                edges.push((u, v));
            }
        }
    }
    let edge_id = |u: usize, v: usize| edges.iter().position(|&e| e == (u, v));

    let d1: Vec<u128> = edges.iter().map(|&(u, v)| (1u128 << u) | (1u128 << v)).collect();
    let mut d2 = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                if let (Some(x), Some(y), Some(z)) = (edge_id(a, b), edge_id(a, c), edge_id(b, c)) {
                    d2.push((1u128 << x) | (1u128 << y) | (1u128 << z));
                }
            }
        }
    }
    let r1 = gf2_rank(d1);
    let r2 = gf2_rank(d2);
    Ok((n - r1, edges.len() - r1 - r2))
}

fn gf2_rank(mut columns: Vec<u128>) -> usize {
    let mut rank = 0;
    for bit in 0..128 {
        let mask = 1u128 << bit;
        let Some(p) = columns[rank..].iter().position(|c| c & mask != 0) else {
            continue;
        };
        columns.swap(rank, rank + p);
        let pivot = columns[rank];
        for c in columns.iter_mut().skip(rank + 1) {
            if *c & mask != 0 {
                *c ^= pivot;
            }
        }
        rank += 1;
        if rank == columns.len() {
            break;
        }
    }
    rank
}

/// Diagrams of several dimensions sharing one filtration cap, as stored in a
/// diagram CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSet {
    pub eps_max: f64,
    pub diagrams: Vec<PersistenceDiagram>,
}

impl DiagramSet {
    pub fn dimension(&self, dim: usize) -> Option<&PersistenceDiagram> {
        self.diagrams.iter().find(|d| d.dimension == dim)
    }

    /// Write `dim,birth,death` rows sorted by (dim, birth, death). Each entry
    /// of `metadata` becomes a `# ` comment line before the header.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &[String]) -> std::io::Result<()> {
        writeln!(out, "# eps_max={}", float(self.eps_max))?;
        for line in metadata {
            writeln!(out, "# {}", line.replace('\n', " "))?;
        }
        writeln!(out, "dim,birth,death")?;
        let mut diagrams: Vec<&PersistenceDiagram> = self.diagrams.iter().collect();
        diagrams.sort_by_key(|d| d.dimension);
        for d in diagrams {
            let mut bars = d.bars.clone();
            sort_bars(&mut bars);
            for b in bars {
                writeln!(out, "{},{},{}", d.dimension, float(b.birth), float(b.death))?;
            }
        }
        Ok(())
    }

    /// Parse the diagram CSV format. Dimensions 0 and 1 are always present in
    /// the result, possibly empty.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut eps_max = None;
        let mut header_seen = false;
        let mut bars: [Vec<Bar>; 2] = [Vec::new(), Vec::new()];
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::malformed(lineno, e.to_string()))?;
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("eps_max=") {
                    let v = parse_float(v)
                        .filter(|v| v.is_finite() && *v > 0.0)
                        .ok_or_else(|| Error::malformed(lineno, "bad eps_max"))?;
                    eps_max = Some(v);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !header_seen {
                if line.replace(' ', "") != "dim,birth,death" {
                    return Err(Error::malformed(lineno, "expected header dim,birth,death"));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [dim, birth, death] = fields[..] else {
                return Err(Error::malformed(lineno, "expected 3 fields"));
            };
            let dim: usize = match dim.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::malformed(lineno, format!("bad dimension {other:?}"))),
            };
            let birth = parse_float(birth)
                .filter(|b| b.is_finite() && *b >= 0.0)
                .ok_or_else(|| Error::malformed(lineno, "birth must be finite and nonnegative"))?;
            let death = parse_float(death)
                .filter(|d| !d.is_nan() && *d >= birth)
                .ok_or_else(|| Error::malformed(lineno, "death must be >= birth"))?;
            bars[dim].push(Bar::new(birth, death));
        }
        if !header_seen {
            return Err(Error::malformed(0, "missing header dim,birth,death"));
        }
        let eps_max = match eps_max {
            Some(e) => e,
            None => bars
                .iter()
                .flatten()
                .flat_map(|b| [b.birth, b.death])
                .filter(|x| x.is_finite())
                .fold(0.0, f64::max),
        };
        if let Some(b) = bars
            .iter()
            .flatten()
            .find(|b| b.birth > eps_max || (b.death.is_finite() && b.death > eps_max))
        {
            return Err(Error::Invalid(format!(
                "bar [{}, {}) exceeds eps_max {eps_max}",
                b.birth, b.death
            )));
        }
        let [h0, h1] = bars;
        Ok(Self {
            eps_max,
            diagrams: vec![
                PersistenceDiagram::new(0, h0, eps_max),
                PersistenceDiagram::new(1, h1, eps_max),
            ],
        })
    }
}

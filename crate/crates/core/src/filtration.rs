//! Vietoris-Rips filtration up to dimension 2.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};
use crate::format::float;
use crate::metric::DistanceMatrix;

/// A vertex, edge or triangle, with the scale at which it enters the filtration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    vertices: [usize; 3],
    dim: usize,
    value: f64,
}

impl Simplex {
    pub fn vertex(v: usize) -> Self {
        Self {
            vertices: [v, 0, 0],
            dim: 0,
            value: 0.0,
        }
    }

    pub fn edge(u: usize, v: usize, value: f64) -> Self {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        Self {
            vertices: [u, v, 0],
            dim: 1,
            value,
        }
    }

    pub fn triangle(mut vs: [usize; 3], value: f64) -> Self {
        vs.sort_unstable();
        Self {
            vertices: vs,
            dim: 2,
            value,
        }
    }

    /// Sorted vertex indices.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices[..=self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Canonical filtration order: value, then dimension, then vertices.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.dim.cmp(&other.dim))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

/// Simplices of a Vietoris-Rips filtration in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    n_vertices: usize,
    simplices: Vec<Simplex>,
    eps_max: f64,
    max_dim: usize,
}

impl FilteredComplex {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// All simplices, sorted by [`Simplex::canonical_cmp`].
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Simplices present at scale `eps` (value <= eps).
    pub fn at_scale(&self, eps: f64) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter().take_while(move |s| s.value <= eps)
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim == dim).count()
    }

    /// Debug dump as CSV `dim,vertices,filtration_value`, vertices joined by `-`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dim,vertices,filtration_value")?;
        for s in &self.simplices {
            let vs: Vec<String> = s.vertices().iter().map(usize::to_string).collect();
            writeln!(out, "{},{},{}", s.dim, vs.join("-"), float(s.value))?;
        }
        Ok(())
    }
}

/// Every vertex at 0, every edge with `d <= eps_max` at `d`, and for
/// `max_dim == 2` every triangle whose edges are all present, at its largest
/// edge value.
pub fn vietoris_rips(dist: &DistanceMatrix, eps_max: f64, max_dim: usize) -> Result<FilteredComplex> {
    if !(eps_max > 0.0 && eps_max.is_finite()) {
        return Err(Error::Invalid(format!("eps_max must be positive and finite, got {eps_max}")));
    }
    if !(1..=2).contains(&max_dim) {
        return Err(Error::Invalid(format!("max_dim must be 1 or 2, got {max_dim}")));
    }
    let n = dist.n();
    let mut simplices: Vec<Simplex> = (0..n).map(Simplex::vertex).collect();

    // neighbours with a larger index, ascending
    let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = dist.get(u, v);
            if d <= eps_max {
                upper[u].push(v);
                simplices.push(Simplex::edge(u, v, d));
            }
        }
    }

    if max_dim == 2 {
        for u in 0..n {
            for (i, &v) in upper[u].iter().enumerate() {
                let duv = dist.get(u, v);
                // w > v adjacent to both u and v
                let mut a = upper[u][i + 1..].iter().peekable();
                let mut b = upper[v].iter().peekable();
                while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
                    match x.cmp(&y) {
                        Ordering::Less => {
                            a.next();
                        }
                        Ordering::Greater => {
                            b.next();
                        }
                        Ordering::Equal => {
                            let value = duv.max(dist.get(u, x)).max(dist.get(v, x));
                            simplices.push(Simplex::triangle([u, v, x], value));
                            a.next();
                            b.next();
                        }
                    }
                }
            }
        }
    }

    simplices.sort_unstable_by(Simplex::canonical_cmp);
    Ok(FilteredComplex {
        n_vertices: n,
        simplices,
        eps_max,
        max_dim,
    })
}

/// `n_steps` evenly spaced scales from 0 to `eps_max` inclusive.
pub fn uniform_grid(eps_max: f64, n_steps: usize) -> Vec<f64> {
    match n_steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = (n_steps - 1) as f64;
            (0..n_steps).map(|i| eps_max * i as f64 / last).collect()
        }
    }
}

/// Scales at which to sample Betti numbers: the distinct filtration values
/// when there are at most `n_steps` of them, otherwise a uniform grid.
pub fn filtration_grid(complex: &FilteredComplex, n_steps: usize) -> Vec<f64> {
    let n_steps = n_steps.max(1);
    let mut distinct: Vec<f64> = Vec::new();
    for s in &complex.simplices {
        if distinct.last() != Some(&s.value) {
            distinct.push(s.value);
            if distinct.len() > n_steps {
                return uniform_grid(complex.eps_max, n_steps);
            }
        }
    }
    if distinct.is_empty() {
        distinct.push(0.0);
    }
    distinct
}

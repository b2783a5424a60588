//! Life and midlife of a persistence diagram.
//!
//! Life is the mean bar length, midlife the mean bar midpoint, both averaged
//! over the cavities left after dropping zero-persistence bars and applying an
//! [`InfiniteBarPolicy`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homology::{Bar, PersistenceDiagram};

/// Treatment of bars that never die within the filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfiniteBarPolicy {
    #[default]
    Exclude,
    /// Replace an infinite death with the diagram's `eps_max`.
    ClampToEpsMax,
}

impl InfiniteBarPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            InfiniteBarPolicy::Exclude => "exclude",
            InfiniteBarPolicy::ClampToEpsMax => "clamp-to-eps-max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologicalSummary {
    pub life: f64,
    pub midlife: f64,
    pub n_cavities: usize,
    pub source_dimension: usize,
    pub policy: InfiniteBarPolicy,
}

/// Bars entering the averages, with infinite deaths resolved.
fn retained(diagram: &PersistenceDiagram, policy: InfiniteBarPolicy) -> Result<Vec<Bar>> {
    let bars: Vec<Bar> = diagram
        .nontrivial()
        .filter_map(|b| match (b.is_essential(), policy) {
            (false, _) => Some(*b),
            (true, InfiniteBarPolicy::Exclude) => None,
            (true, InfiniteBarPolicy::ClampToEpsMax) => Some(Bar::new(b.birth, diagram.eps_max)),
        })
        .filter(|b| !b.is_trivial())
        .collect();
    if bars.is_empty() {
        return Err(Error::NoCavities);
    }
    Ok(bars)
}

fn mean_of(bars: &[Bar], f: impl Fn(&Bar) -> f64) -> f64 {
    bars.iter().map(f).sum::<f64>() / bars.len() as f64
}

/// Mean persistence and the number of bars averaged.
pub fn life(diagram: &PersistenceDiagram, policy: InfiniteBarPolicy) -> Result<(f64, usize)> {
    let bars = retained(diagram, policy)?;
    Ok((mean_of(&bars, |b| b.death - b.birth), bars.len()))
}

/// Mean bar midpoint and the number of bars averaged.
pub fn midlife(diagram: &PersistenceDiagram, policy: InfiniteBarPolicy) -> Result<(f64, usize)> {
    let bars = retained(diagram, policy)?;
    Ok((mean_of(&bars, |b| (b.death + b.birth) / 2.0), bars.len()))
}

/// Life and midlife of a dimension-1 diagram.
pub fn summarize(diagram: &PersistenceDiagram, policy: InfiniteBarPolicy) -> Result<TopologicalSummary> {
    if diagram.dimension != 1 {
        return Err(Error::Invalid(format!(
            "summaries use the dimension-1 diagram, got dimension {}",
            diagram.dimension
        )));
    }
    let (life, n_cavities) = life(diagram, policy)?;
    let (midlife, _) = midlife(diagram, policy)?;
    Ok(TopologicalSummary {
        life,
        midlife,
        n_cavities,
        source_dimension: 1,
        policy,
    })
}

/// Serialized form of a summary: `{lambda, mu, n_cavities, policy, eps_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub lambda: f64,
    pub mu: f64,
    pub n_cavities: usize,
    pub policy: InfiniteBarPolicy,
    pub eps_max: f64,
}

impl SummaryRecord {
    pub fn new(summary: &TopologicalSummary, eps_max: f64) -> Self {
        Self {
            lambda: summary.life,
            mu: summary.midlife,
            n_cavities: summary.n_cavities,
            policy: summary.policy,
            eps_max,
        }
    }
}

//! Stopping rule on the Betti-curve peak.
//!
//! Every epoch the Betti curve is sampled on a fixed grid of scales and the
//! index of its maximum is recorded. Training stops as soon as that index
//! moves to a larger scale than in the previous epoch.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{float, parse_float};
use crate::homology::BettiCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakScale {
    /// Smallest grid index attaining the maximum count.
    pub index: usize,
    pub scale: f64,
    pub count: usize,
    /// The curve is zero everywhere; `index` is 0 by convention.
    pub no_cavities: bool,
}

pub fn peak_scale(curve: &BettiCurve) -> Result<PeakScale> {
    if curve.counts.is_empty() || curve.counts.len() != curve.scales.len() {
        return Err(Error::Invalid("Betti curve is empty or ragged".into()));
    }
    let mut index = 0;
    for (k, &c) in curve.counts.iter().enumerate() {
        if c > curve.counts[index] {
            index = k;
        }
    }
    let count = curve.counts[index];
    Ok(PeakScale {
        index,
        scale: curve.scales[index],
        count,
        no_cavities: count == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Continue,
    Stop,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Continue => "continue",
            Decision::Stop => "stop",
        }
    }
}

/// Peak indices observed so far, one per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakTrace {
    pub betti_dimension: usize,
    pub epochs: Vec<u64>,
    pub peak_scale_indices: Vec<usize>,
    /// Extra consecutive increases required before stopping; 0 is the plain rule.
    pub patience: usize,
}

impl PeakTrace {
    pub fn new(betti_dimension: usize) -> Self {
        Self {
            betti_dimension,
            epochs: Vec::new(),
            peak_scale_indices: Vec::new(),
            patience: 0,
        }
    }

    pub fn with_patience(mut self, patience: usize) -> Self {
        self.patience = patience;
        self
    }

    pub fn len(&self) -> usize {
        self.peak_scale_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_scale_indices.is_empty()
    }

    /// Decision for the trace as it currently stands.
    pub fn decision(&self) -> Decision {
        let k = &self.peak_scale_indices;
        let needed = self.patience + 1;
        if k.len() <= needed {
            return Decision::Continue;
        }
        let rising = k[k.len() - needed - 1..].windows(2).all(|w| w[1] > w[0]);
        if rising {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    pub fn update_and_check(&mut self, epoch: u64, peak_index: usize) -> Decision {
        self.epochs.push(epoch);
        self.peak_scale_indices.push(peak_index);
        self.decision()
    }
}

pub fn update_and_check(trace: &mut PeakTrace, epoch: u64, peak_index: usize) -> Decision {
    trace.update_and_check(epoch, peak_index)
}

/// One row of a trace CSV `epoch,peak_index,peak_scale,decision`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: u64,
    pub peak_index: usize,
    pub peak_scale: f64,
    pub decision: Decision,
}

pub const TRACE_HEADER: &str = "epoch,peak_index,peak_scale,decision";

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?;
    if headers.iter().collect::<Vec<_>>().join(",") != TRACE_HEADER {
        return Err(Error::malformed(1, format!("expected header {TRACE_HEADER}")));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::malformed(line, format!("bad {what}"));
        let epoch = record[0].parse().map_err(|_| bad("epoch"))?;
        let peak_index = record[1].parse().map_err(|_| bad("peak_index"))?;
        let peak_scale = parse_float(&record[2])
            .filter(|s| s.is_finite())
            .ok_or_else(|| bad("peak_scale"))?;
        let decision = match &record[3] {
            "continue" => Decision::Continue,
            "stop" => Decision::Stop,
            _ => return Err(bad("decision")),
        };
        if let Some(prev) = rows.last().map(|r: &TraceRow| r.epoch) {
            if epoch <= prev {
                return Err(Error::malformed(line, "epochs must increase"));
            }
        }
        rows.push(TraceRow {
            epoch,
            peak_index,
            peak_scale,
            decision,
        });
    }
    Ok(rows)
}

pub fn write_trace_row<W: Write>(mut out: W, row: &TraceRow, with_header: bool) -> std::io::Result<()> {
    if with_header {
        writeln!(out, "{TRACE_HEADER}")?;
    }
    writeln!(
        out,
        "{},{},{},{}",
        row.epoch,
        row.peak_index,
        float(row.peak_scale),
        row.decision.as_str()
    )
}

impl PeakTrace {
    pub fn from_rows(betti_dimension: usize, rows: &[TraceRow]) -> Self {
        Self {
            betti_dimension,
            epochs: rows.iter().map(|r| r.epoch).collect(),
            peak_scale_indices: rows.iter().map(|r| r.peak_index).collect(),
            patience: 0,
        }
    }
}

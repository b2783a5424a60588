//! Linear map from (life, midlife) to the train/test performance gap.
//!
//! `gap_hat = c1 * lambda + c2 * mu + c3`, fitted by ordinary least squares
//! over observed trainings. The estimated test performance is
//! `rho_train - gap_hat` and its error against a real test set is
//! `|rho_test - rho_test_hat|`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{float, parse_float};

/// Relative size of an R diagonal entry below which the design is singular.
const RANK_TOL: f64 = 1e-10;

/// Which summaries enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Lambda,
    Mu,
    Both,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Lambda, FeatureSet::Mu, FeatureSet::Both];

    /// Free coefficients including the intercept.
    pub fn n_coefficients(self) -> usize {
        match self {
            FeatureSet::Both => 3,
            _ => 2,
        }
    }

    fn features(self, lambda: f64, mu: f64) -> Vec<f64> {
        match self {
            FeatureSet::Lambda => vec![lambda, 1.0],
            FeatureSet::Mu => vec![mu, 1.0],
            FeatureSet::Both => vec![lambda, mu, 1.0],
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Lambda => "lambda",
            FeatureSet::Mu => "mu",
            FeatureSet::Both => "both",
        })
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(FeatureSet::Lambda),
            "mu" => Ok(FeatureSet::Mu),
            "both" => Ok(FeatureSet::Both),
            _ => Err(Error::Invalid(format!("unknown feature set {s:?}"))),
        }
    }
}

/// One trained network: its summaries and train (and maybe test) performance,
/// in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub lambda: f64,
    pub mu: f64,
    pub rho_train: f64,
    pub rho_test: Option<f64>,
    pub group: Option<String>,
    pub model: Option<String>,
}

impl GapRecord {
    pub fn new(lambda: f64, mu: f64, rho_train: f64, rho_test: Option<f64>) -> Self {
        Self {
            lambda,
            mu,
            rho_train,
            rho_test,
            group: None,
            model: None,
        }
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self
    }

    /// `rho_train - rho_test`, when the test performance is known.
    pub fn gap(&self) -> Option<f64> {
        self.rho_test.map(|t| self.rho_train - t)
    }
}

const RECORD_COLUMNS: [&str; 6] = ["lambda", "mu", "rho_train", "rho_test", "group", "model"];

/// Parse a records CSV with columns `lambda,mu,rho_train,rho_test,group,model`.
///
/// The header is required; `rho_test`, `group` and `model` columns may be
/// absent entirely or left empty per row.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<GapRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [None; 6];
    for (pos, name) in headers.iter().enumerate() {
        let Some(col) = RECORD_COLUMNS.iter().position(|c| *c == name) else {
            return Err(Error::malformed(1, format!("unknown column {name:?}")));
        };
        if index[col].replace(pos).is_some() {
            return Err(Error::malformed(1, format!("duplicate column {name:?}")));
        }
    }
    for required in 0..3 {
        if index[required].is_none() {
            return Err(Error::malformed(1, format!("missing column {:?}", RECORD_COLUMNS[required])));
        }
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let cell = |col: usize| index[col].and_then(|i| row.get(i)).filter(|s| !s.is_empty());
        let number = |col: usize| -> Result<Option<f64>> {
            cell(col)
                .map(|s| {
                    parse_float(s).filter(|x| x.is_finite()).ok_or_else(|| {
                        Error::malformed(line, format!("{}: not a finite number: {s:?}", RECORD_COLUMNS[col]))
                    })
                })
                .transpose()
        };
        let required = |col: usize| -> Result<f64> {
            number(col)?.ok_or_else(|| Error::malformed(line, format!("missing {}", RECORD_COLUMNS[col])))
        };
        let record = GapRecord {
            lambda: required(0)?,
            mu: required(1)?,
            rho_train: required(2)?,
            rho_test: number(3)?,
            group: cell(4).map(str::to_owned),
            model: cell(5).map(str::to_owned),
        };
        for rho in std::iter::once(record.rho_train).chain(record.rho_test) {
            if !(0.0..=100.0).contains(&rho) {
                return Err(Error::malformed(line, format!("performance {rho} outside [0, 100]")));
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_records<W: Write>(out: W, records: &[GapRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(RECORD_COLUMNS)?;
    for r in records {
        wtr.write_record([
            float(r.lambda),
            float(r.mu),
            float(r.rho_train),
            r.rho_test.map(float).unwrap_or_default(),
            r.group.clone().unwrap_or_default(),
            r.model.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<records>", e))?;
    Ok(())
}

/// Fitted coefficients of `gap = c1 * lambda + c2 * mu + c3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapModel {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub feature_set: FeatureSet,
    pub fit_residual_rms: f64,
}

impl GapModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let model: GapModel =
            serde_json::from_str(text).map_err(|e| Error::malformed(e.line(), e.to_string()))?;
        let finite = [model.c1, model.c2, model.c3, model.fit_residual_rms]
            .iter()
            .all(|x| x.is_finite());
        if !finite || model.fit_residual_rms < 0.0 {
            return Err(Error::Invalid("model coefficients must be finite".into()));
        }
        if (model.feature_set == FeatureSet::Lambda && model.c2 != 0.0)
            || (model.feature_set == FeatureSet::Mu && model.c1 != 0.0)
        {
            return Err(Error::Invalid(format!(
                "coefficient of an unused feature is nonzero for feature set {}",
                model.feature_set
            )));
        }
        Ok(model)
    }

    pub fn predict(&self, lambda: f64, mu: f64) -> f64 {
        predict_gap(self, lambda, mu)
    }
}

pub fn predict_gap(model: &GapModel, lambda: f64, mu: f64) -> f64 {
    model.c1 * lambda + model.c2 * mu + model.c3
}

pub fn estimate_test_performance(rho_train: f64, gap_hat: f64) -> f64 {
    rho_train - gap_hat
}

pub fn estimation_error(rho_test: f64, rho_test_hat: f64) -> f64 {
    (rho_test - rho_test_hat).abs()
}

/// Least-squares fit over the records with a known gap.
pub fn fit_gap_model(records: &[GapRecord], feature_set: FeatureSet) -> Result<GapModel> {
    let rows: Vec<(&GapRecord, f64)> = records
        .iter()
        .filter_map(|r| r.gap().map(|g| (r, g)))
        .collect();
    let p = feature_set.n_coefficients();
    if rows.len() < p {
        return Err(Error::InsufficientRecords {
            needed: p,
            got: rows.len(),
        });
    }
    let x = DMatrix::from_row_iterator(
        rows.len(),
        p,
        rows.iter().flat_map(|(r, _)| feature_set.features(r.lambda, r.mu)),
    );
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|(_, g)| *g));

    let col_norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let qr = x.clone().qr();
    let r = qr.r();
    for i in 0..p {
        if col_norms[i] == 0.0 || r[(i, i)].abs() <= RANK_TOL * col_norms[i] {
            return Err(Error::SingularFit);
        }
    }
    let qty = qr.q().transpose() * &y;
    let coef = r.solve_upper_triangular(&qty).ok_or(Error::SingularFit)?;
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularFit);
    }

    let residual = &y - &x * &coef;
    let rms = (residual.norm_squared() / rows.len() as f64).sqrt();
    let (c1, c2, c3) = match feature_set {
        FeatureSet::Lambda => (coef[0], 0.0, coef[1]),
        FeatureSet::Mu => (0.0, coef[0], coef[1]),
        FeatureSet::Both => (coef[0], coef[1], coef[2]),
    };
    Ok(GapModel {
        c1,
        c2,
        c3,
        feature_set,
        fit_residual_rms: rms,
    })
}

/// Estimation error of `record` under `model`, if its test performance is known.
pub fn record_error(model: &GapModel, record: &GapRecord) -> Option<f64> {
    let rho_test = record.rho_test?;
    let hat = estimate_test_performance(record.rho_train, model.predict(record.lambda, record.mu));
    Some(estimation_error(rho_test, hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldStatus {
    Ok,
    /// Training design rank deficient.
    Singular,
    /// Fewer training records than coefficients.
    Insufficient,
}

/// One held-out fold: a record (leave-one-sample-out) or a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub label: String,
    pub n_train: usize,
    pub status: FoldStatus,
    pub errors: Vec<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Cross-validated estimation errors for one feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub feature_set: FeatureSet,
    pub folds: Vec<Fold>,
    /// Mean and population standard deviation over every evaluated record.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n_skipped: usize,
}

impl CvResult {
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.folds.iter().flat_map(|f| f.errors.iter().copied())
    }
}

pub(crate) fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

fn run_fold(label: String, train: &[GapRecord], test: &[&GapRecord], feature_set: FeatureSet) -> Fold {
    let n_train = train.len();
    let (status, errors) = match fit_gap_model(train, feature_set) {
        Ok(model) => (
            FoldStatus::Ok,
            test.iter().filter_map(|r| record_error(&model, r)).collect(),
        ),
        Err(Error::InsufficientRecords { .. }) => (FoldStatus::Insufficient, Vec::new()),
        Err(_) => (FoldStatus::Singular, Vec::new()),
    };
    let (mean, std) = mean_std(&errors);
    Fold {
        label,
        n_train,
        status,
        errors,
        mean,
        std,
    }
}

fn aggregate(feature_set: FeatureSet, folds: Vec<Fold>) -> CvResult {
    let n_skipped = folds.iter().filter(|f| f.status != FoldStatus::Ok).count();
    if n_skipped > 0 {
        log::warn!("{n_skipped} cross-validation folds skipped ({feature_set})");
    }
    let all: Vec<f64> = folds.iter().flat_map(|f| f.errors.iter().copied()).collect();
    let (mean, std) = mean_std(&all);
    CvResult {
        feature_set,
        folds,
        mean,
        std,
        n_skipped,
    }
}

/// Refit without each record in turn and score the held-out record.
///
/// Only records with a known test performance take part; fold labels are
/// their indices in `records`.
pub fn leave_one_sample_out(records: &[GapRecord], feature_set: FeatureSet) -> Result<CvResult> {
    let known: Vec<usize> = (0..records.len()).filter(|&i| records[i].gap().is_some()).collect();
    let needed = feature_set.n_coefficients() + 1;
    if known.len() < needed {
        return Err(Error::InsufficientRecords {
            needed,
            got: known.len(),
        });
    }
    let folds = known
        .iter()
        .map(|&i| {
            let train: Vec<GapRecord> = known
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| records[j].clone())
                .collect();
            run_fold(i.to_string(), &train, &[&records[i]], feature_set)
        })
        .collect();
    Ok(aggregate(feature_set, folds))
}

/// Refit without each group (dataset) in turn and score the held-out group.
///
/// Every record with a known test performance must carry a group label.
/// Groups appear in order of first occurrence.
pub fn leave_one_group_out(records: &[GapRecord], feature_set: FeatureSet) -> Result<CvResult> {
    let known: Vec<&GapRecord> = records.iter().filter(|r| r.gap().is_some()).collect();
    let mut groups: Vec<&str> = Vec::new();
    for (i, r) in known.iter().enumerate() {
        let g = r
            .group
            .as_deref()
            .ok_or_else(|| Error::Invalid(format!("record {i} has no group label")))?;
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    if groups.len() < 2 {
        return Err(Error::TooFewGroups(groups.len()));
    }
    let folds = groups
        .iter()
        .map(|&g| {
            let (test, train): (Vec<&GapRecord>, Vec<&GapRecord>) =
                known.iter().partition(|r| r.group.as_deref() == Some(g));
            let train: Vec<GapRecord> = train.into_iter().cloned().collect();
            run_fold(g.to_owned(), &train, &test, feature_set)
        })
        .collect();
    Ok(aggregate(feature_set, folds))
}

/// A point of the predicted-versus-observed gap scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub predicted: f64,
    pub observed: f64,
    pub group: Option<String>,
    pub model: Option<String>,
}

/// `(g(lambda, mu), gap)` for every record with a known gap.
pub fn scatter_points(model: &GapModel, records: &[GapRecord]) -> Vec<ScatterPoint> {
    records
        .iter()
        .filter_map(|r| {
            r.gap().map(|observed| ScatterPoint {
                predicted: model.predict(r.lambda, r.mu),
                observed,
                group: r.group.clone(),
                model: r.model.clone(),
            })
        })
        .collect()
}

pub fn write_scatter<W: Write>(out: W, points: &[ScatterPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["predicted_gap", "gap", "group", "model"])?;
    for p in points {
        wtr.write_record([
            float(p.predicted),
            float(p.observed),
            p.group.clone().unwrap_or_default(),
            p.model.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<scatter>", e))?;
    Ok(())
}

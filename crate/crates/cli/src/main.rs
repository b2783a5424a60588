//! `topogap` command-line interface.
//!
//! One subcommand per pipeline stage; every artifact it writes embeds the
//! run manifest so outputs can be reproduced.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use topogap::earlystop::{self, PeakTrace, TraceRow};
use topogap::filtration::{filtration_grid, uniform_grid, vietoris_rips};
use topogap::gap::{self, FeatureSet, GapModel, GapRecord};
use topogap::homology::{betti_curve, persistent_homology, DiagramSet};
use topogap::metric::{self, ActivationManifest, DegeneratePolicy, DistanceMatrix, LARGE_NODE_WARNING};
use topogap::summaries::{summarize, InfiniteBarPolicy, SummaryRecord};
use topogap::ErrorKind;

#[derive(Parser)]
#[command(name = "topogap", version, about = "Estimate test performance from the functional topology of a network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Activations -> persistence diagram + life/midlife summary.
    Summarize(SummarizeArgs),
    /// Fit the linear gap model on a records file.
    Fit(FitArgs),
    /// Estimate test performance from a fitted model.
    Estimate(EstimateArgs),
    /// Cross-validate the gap model (leave-one-sample-out or leave-one-dataset-out).
    Eval(EvalArgs),
    /// Append one epoch to an early-stopping trace and report the decision.
    EarlystopStep(EarlystopArgs),
    /// Predicted vs observed gap, one CSV row per record.
    Scatter(ScatterArgs),
}

#[derive(Args)]
struct Common {
    /// Output directory; when absent the primary output goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded in the run manifest.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum InfiniteArg {
    Exclude,
    Clamp,
}

impl From<InfiniteArg> for InfiniteBarPolicy {
    fn from(a: InfiniteArg) -> Self {
        match a {
            InfiniteArg::Exclude => InfiniteBarPolicy::Exclude,
            InfiniteArg::Clamp => InfiniteBarPolicy::ClampToEpsMax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DegenerateArg {
    Drop,
    Error,
}

impl From<DegenerateArg> for DegeneratePolicy {
    fn from(a: DegenerateArg) -> Self {
        match a {
            DegenerateArg::Drop => DegeneratePolicy::DropNode,
            DegenerateArg::Error => DegeneratePolicy::Error,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeaturesArg {
    Lambda,
    Mu,
    Both,
    /// All three feature sets (eval only).
    All,
}

impl FeaturesArg {
    fn sets(self) -> Vec<FeatureSet> {
        match self {
            FeaturesArg::Lambda => vec![FeatureSet::Lambda],
            FeaturesArg::Mu => vec![FeatureSet::Mu],
            FeaturesArg::Both => vec![FeatureSet::Both],
            FeaturesArg::All => FeatureSet::ALL.to_vec(),
        }
    }

    fn single(self) -> Result<FeatureSet, CliError> {
        match self.sets()[..] {
            [fs] => Ok(fs),
            _ => Err(CliError::Usage("--features all is only valid for eval".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Loo,
    Lodo,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Activation CSV (or a distance-matrix CSV with --distances).
    input: PathBuf,
    /// Treat the input as a square matrix of pairwise distances.
    #[arg(long)]
    distances: bool,
    #[arg(long, default_value_t = 1.0)]
    eps_max: f64,
    #[arg(long, default_value_t = 100)]
    grid_steps: usize,
    #[arg(long, value_enum, default_value = "exclude")]
    policy_infinite: InfiniteArg,
    #[arg(long, value_enum, default_value = "drop")]
    degenerate: DegenerateArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FitArgs {
    records: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    features: FeaturesArg,
    /// Only use records whose model column equals this label.
    #[arg(long)]
    model_label: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EstimateArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long)]
    rho_train: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvalArgs {
    records: PathBuf,
    #[arg(long, value_enum)]
    protocol: Protocol,
    #[arg(long, value_enum, default_value = "both")]
    features: FeaturesArg,
    #[arg(long)]
    model_label: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EarlystopArgs {
    /// Diagram CSV written by `summarize`.
    #[arg(long)]
    diagram: PathBuf,
    /// Trace CSV; created when missing.
    #[arg(long)]
    trace: PathBuf,
    /// Epoch number; defaults to one past the last traced epoch.
    #[arg(long)]
    epoch: Option<u64>,
    #[arg(long, default_value_t = 1)]
    betti_dim: usize,
    /// Uniform grid size over [0, eps_max], shared by every epoch.
    #[arg(long, default_value_t = 100)]
    grid_steps: usize,
    #[arg(long, default_value_t = 0)]
    patience: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScatterArgs {
    records: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    model_label: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug)]
enum CliError {
    Core(topogap::Error),
    Io(PathBuf, io::Error),
    Usage(String),
}

impl From<topogap::Error> for CliError {
    fn from(e: topogap::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Numeric => 3,
                ErrorKind::Protocol => 4,
            },
            CliError::Io(..) | CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Everything that determines a command's output.
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degenerate_policy: Option<DegeneratePolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    infinite_bar_policy: Option<InfiniteBarPolicy>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    feature_sets: Vec<FeatureSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<String>,
    seed: u64,
}

impl<'a> RunManifest<'a> {
    fn new(command: &'a str, inputs: &[&Path], common: &Common) -> Self {
        Self {
            command,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            eps_max: None,
            grid_steps: None,
            degenerate_policy: None,
            infinite_bar_policy: None,
            feature_sets: Vec::new(),
            out_dir: common.out.as_ref().map(|p| p.display().to_string()),
            seed: common.seed,
        }
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(path.to_owned(), e))
}

fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON serialization of plain data");
    bytes.push(b'\n');
    bytes
}

/// Write `bytes` to `<out>/<name>`, or to stdout when there is no output directory.
fn emit(common: &Common, name: &str, bytes: &[u8]) -> CliResult<()> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
            write_file(&dir.join(name), bytes)
        }
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io("<stdout>".into(), e)),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn load_records(path: &Path, model_label: Option<&str>) -> CliResult<Vec<GapRecord>> {
    let records = gap::read_records(open(path)?)?;
    Ok(match model_label {
        Some(label) => records
            .into_iter()
            .filter(|r| r.model.as_deref() == Some(label))
            .collect(),
        None => records,
    })
}

fn load_model(path: &Path) -> CliResult<GapModel> {
    Ok(GapModel::from_json(&read_to_string(path)?)?)
}

fn cmd_summarize(args: &SummarizeArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("summarize", &[&args.input], &args.common);
    manifest.eps_max = Some(args.eps_max);
    manifest.grid_steps = Some(args.grid_steps);
    manifest.infinite_bar_policy = Some(args.policy_infinite.into());

    let (dist, n_input_nodes, kept) = if args.distances {
        let dist = DistanceMatrix::from_csv_reader(open(&args.input)?)?;
        let n = dist.n();
        (dist, n, (0..n).collect::<Vec<_>>())
    } else {
        manifest.degenerate_policy = Some(args.degenerate.into());
        let act = metric::load_activations(&args.input)?;
        if act.n_nodes() > LARGE_NODE_WARNING {
            log::warn!(
                "{} nodes: dense correlation and filtration will be slow and memory hungry",
                act.n_nodes()
            );
        }
        let (corr, kept) = metric::correlation_matrix(&act, args.degenerate.into())?;
        (metric::to_distance(&corr), act.n_nodes(), kept)
    };
    let sidecar = if args.distances {
        None
    } else {
        ActivationManifest::load_sidecar(&args.input)?
    };

    let complex = vietoris_rips(&dist, args.eps_max, 2)?;
    let (h0, h1) = persistent_homology(&complex);
    let grid = filtration_grid(&complex, args.grid_steps);
    let betti0 = betti_curve(&h0, &grid);
    let betti1 = betti_curve(&h1, &grid);

    let manifest_json = serde_json::to_string(&manifest).expect("manifest serializes");
    let set = DiagramSet {
        eps_max: args.eps_max,
        diagrams: vec![h0, h1],
    };
    let stem = stem(&args.input);
    if args.common.out.is_some() {
        let mut csv = Vec::new();
        set.write_csv(&mut csv, &[format!("manifest={manifest_json}")])
            .expect("writing to memory");
        emit(&args.common, &format!("{stem}.diagram.csv"), &csv)?;
    }

    let h1 = set.dimension(1).expect("dimension 1 present");
    let summary = summarize(h1, args.policy_infinite.into())?;
    let dropped: Vec<usize> = (0..n_input_nodes).filter(|i| !kept.contains(i)).collect();
    let record = SummaryRecord::new(&summary, args.eps_max);
    let out = json!({
        "lambda": record.lambda,
        "mu": record.mu,
        "n_cavities": record.n_cavities,
        "policy": record.policy,
        "eps_max": record.eps_max,
        "n_nodes": kept.len(),
        "dropped_nodes": dropped,
        "n_simplices": complex.simplices().len(),
        "betti_curves": {
            "scales": grid,
            "beta_0": betti0.counts,
            "beta_1": betti1.counts,
        },
        "activation_manifest": sidecar,
        "manifest": manifest,
    });
    emit(&args.common, &format!("{stem}.summary.json"), &json_bytes(&out))
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let feature_set = args.features.single()?;
    let mut manifest = RunManifest::new("fit", &[&args.records], &args.common);
    manifest.feature_sets = vec![feature_set];
    let records = load_records(&args.records, args.model_label.as_deref())?;
    let model = gap::fit_gap_model(&records, feature_set)?;
    let out = json!({
        "c1": model.c1,
        "c2": model.c2,
        "c3": model.c3,
        "feature_set": model.feature_set,
        "fit_residual_rms": model.fit_residual_rms,
        "manifest": manifest,
    });
    emit(&args.common, "model.json", &json_bytes(&out))
}

fn cmd_estimate(args: &EstimateArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    for (name, v) in [("lambda", args.lambda), ("mu", args.mu), ("rho_train", args.rho_train)] {
        if !v.is_finite() {
            return Err(CliError::Usage(format!("--{name} must be finite")));
        }
    }
    let manifest = RunManifest::new("estimate", &[&args.model], &args.common);
    let gap_hat = model.predict(args.lambda, args.mu);
    let rho_test_hat = gap::estimate_test_performance(args.rho_train, gap_hat);
    let out_of_range = !(0.0..=100.0).contains(&rho_test_hat);
    if out_of_range {
        log::warn!("estimated test performance {rho_test_hat} lies outside [0, 100]");
    }
    let out = json!({
        "lambda": args.lambda,
        "mu": args.mu,
        "rho_train": args.rho_train,
        "gap_hat": gap_hat,
        "rho_test_hat": rho_test_hat,
        "out_of_range": out_of_range,
        "manifest": manifest,
    });
    emit(&args.common, "estimate.json", &json_bytes(&out))
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let feature_sets = args.features.sets();
    let mut manifest = RunManifest::new("eval", &[&args.records], &args.common);
    manifest.feature_sets = feature_sets.clone();
    let records = load_records(&args.records, args.model_label.as_deref())?;
    let rows = feature_sets
        .iter()
        .map(|&fs| match args.protocol {
            Protocol::Loo => gap::leave_one_sample_out(&records, fs),
            Protocol::Lodo => gap::leave_one_group_out(&records, fs),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = json!({
        "protocol": match args.protocol { Protocol::Loo => "loo", Protocol::Lodo => "lodo" },
        "rows": rows,
        "manifest": manifest,
    });
    emit(&args.common, "eval.json", &json_bytes(&out))
}

fn cmd_earlystop_step(args: &EarlystopArgs) -> CliResult<()> {
    let set = DiagramSet::from_csv_reader(open(&args.diagram)?)?;
    let diagram = set
        .dimension(args.betti_dim)
        .ok_or_else(|| CliError::Usage(format!("--betti-dim must be 0 or 1, got {}", args.betti_dim)))?;
    let grid = uniform_grid(set.eps_max, args.grid_steps.max(1));
    let peak = earlystop::peak_scale(&betti_curve(diagram, &grid))?;

    let rows = match File::open(&args.trace) {
        Ok(f) => earlystop::read_trace(BufReader::new(f))?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(CliError::Io(args.trace.clone(), e)),
    };
    if let Some(last) = rows.last() {
        if grid.get(last.peak_index) != Some(&last.peak_scale) {
            return Err(CliError::Core(topogap::Error::Invalid(format!(
                "trace was recorded on a different grid (index {} at scale {})",
                last.peak_index, last.peak_scale
            ))));
        }
    }
    let epoch = match (args.epoch, rows.last()) {
        (Some(e), Some(last)) if e <= last.epoch => {
            return Err(CliError::Usage(format!("epoch {e} is not after traced epoch {}", last.epoch)))
        }
        (Some(e), _) => e,
        (None, Some(last)) => last.epoch + 1,
        (None, None) => 0,
    };
    let mut trace = PeakTrace::from_rows(args.betti_dim, &rows).with_patience(args.patience);
    let decision = trace.update_and_check(epoch, peak.index);
    if peak.no_cavities {
        log::warn!("Betti-{} curve is zero everywhere; peak index defaults to 0", args.betti_dim);
    }

    let row = TraceRow {
        epoch,
        peak_index: peak.index,
        peak_scale: peak.scale,
        decision,
    };
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.trace)
        .map_err(|e| CliError::Io(args.trace.clone(), e))?;
    let mut w = BufWriter::new(file);
    earlystop::write_trace_row(&mut w, &row, rows.is_empty())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(args.trace.clone(), e))?;

    let mut manifest = RunManifest::new("earlystop-step", &[&args.diagram, &args.trace], &args.common);
    manifest.grid_steps = Some(args.grid_steps);
    manifest.eps_max = Some(set.eps_max);
    let out = json!({
        "epoch": epoch,
        "peak_index": peak.index,
        "peak_scale": peak.scale,
        "peak_count": peak.count,
        "no_cavities": peak.no_cavities,
        "decision": decision,
        "manifest": manifest,
    });
    emit(&args.common, "earlystop.json", &json_bytes(&out))
}

fn cmd_scatter(args: &ScatterArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let records = load_records(&args.records, args.model_label.as_deref())?;
    let points = gap::scatter_points(&model, &records);
    let manifest = RunManifest::new("scatter", &[&args.records, &args.model], &args.common);
    let mut csv = format!(
        "# manifest={}\n",
        serde_json::to_string(&manifest).expect("manifest serializes")
    )
    .into_bytes();
    gap::write_scatter(&mut csv, &points)?;
    emit(&args.common, "scatter.csv", &csv)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Summarize(a) => cmd_summarize(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::EarlystopStep(a) => cmd_earlystop_step(a),
        Command::Scatter(a) => cmd_scatter(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

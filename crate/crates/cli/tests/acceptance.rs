//! One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

#![allow(clippy::needless_range_loop)]

mod common;

use std::f64::consts::PI;
use std::fs;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topogap::earlystop::{Decision, PeakTrace};
use topogap::filtration::{filtration_grid, uniform_grid, vietoris_rips, FilteredComplex};
use topogap::gap::{
    estimate_test_performance, estimation_error, fit_gap_model, leave_one_sample_out, FeatureSet, GapRecord,
};
use topogap::homology::{betti_curve, brute_force_betti, persistent_homology, Bar};
use topogap::metric::DistanceMatrix;
use topogap::summaries::{summarize, InfiniteBarPolicy};

const ORACLE_SETS: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const BAR_TOL: f64 = 1e-9;
const CIRCLE_RATIO: f64 = 3.0;
const FUZZ_CASES: usize = 500;
const LINEAR_TOL: f64 = 1e-9;
const PRESS_TOL: f64 = 1e-8;
const SCALING_TOL: f64 = 1e-9;
const EARLYSTOP_SEQS: usize = 5000;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn symmetric(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> DistanceMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = f(u, v);
            rows[u][v] = d;
            rows[v][u] = d;
        }
    }
    DistanceMatrix::from_rows(rows).unwrap()
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut scales = 0usize;
    for set in 0..ORACLE_SETS {
        let n = rng.gen_range(4..=10);
        let dist = symmetric(n, |_, _| rng.gen_range(0.0..=1.0));
        let complex = vietoris_rips(&dist, 1.0, 2).map_err(|e| e.to_string())?;
        let (h0, h1) = persistent_homology(&complex);
        let mut grid = filtration_grid(&complex, usize::MAX);
        grid.extend(uniform_grid(1.0, 101));
        let (b0, b1) = (betti_curve(&h0, &grid), betti_curve(&h1, &grid));
        for (k, &eps) in grid.iter().enumerate() {
            let want = brute_force_betti(&dist, eps).map_err(|e| e.to_string())?;
            ensure((b0.counts[k], b1.counts[k]) == want, || {
                format!("set {set} (n={n}) eps={eps:?}: got ({}, {}), oracle {want:?}", b0.counts[k], b1.counts[k])
            })?;
        }
        scales += grid.len();
    }
    let took = start.elapsed();
    ensure(took < ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{ORACLE_SETS} sets, {scales} scales, {took:.2?}"))
}

fn square_benchmark() -> Check {
    let s = 2f64.sqrt();
    let dist = {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        symmetric(4, |u, v| {
            let d: f64 = (pts[u].0 - pts[v].0) * (pts[u].0 - pts[v].0) + (pts[u].1 - pts[v].1) * (pts[u].1 - pts[v].1);
            d.sqrt()
        })
    };
    let complex = vietoris_rips(&dist, 1.5, 2).map_err(|e| e.to_string())?;
    let (_, h1) = persistent_homology(&complex);
    let bars: Vec<&Bar> = h1.nontrivial().collect();
    ensure(bars.len() == 1, || format!("{} nontrivial H1 bars", bars.len()))?;
    let bar = bars[0];
    ensure((bar.birth - 1.0).abs() < BAR_TOL && (bar.death - s).abs() < BAR_TOL, || {
        format!("bar [{:?}, {:?})", bar.birth, bar.death)
    })?;
    // the oracle sees a single cycle exactly on [1, sqrt 2)
    for (eps, want) in [(0.99, 0), (1.0, 1), (1.2, 1), (s, 0)] {
        let b1 = brute_force_betti(&dist, eps).map_err(|e| e.to_string())?.1;
        ensure(b1 == want, || format!("oracle beta_1({eps}) = {b1}"))?;
    }
    let sum = summarize(&h1, InfiniteBarPolicy::Exclude).map_err(|e| e.to_string())?;
    ensure((sum.life - (s - 1.0)).abs() < BAR_TOL, || format!("lambda {:?}", sum.life))?;
    ensure((sum.midlife - (1.0 + s) / 2.0).abs() < BAR_TOL, || format!("mu {:?}", sum.midlife))?;
    Ok(format!("bar [{:?}, {:?}), lambda {:?}, mu {:?}", bar.birth, bar.death, sum.life, sum.midlife))
}

fn circle_benchmark() -> Check {
    let n = 20;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    // diameter of the evenly spaced set is 2
    let dist = symmetric(n, |u, v| (pts[u].0 - pts[v].0).hypot(pts[u].1 - pts[v].1) / 2.0);
    let (_, h1) = persistent_homology(&vietoris_rips(&dist, 1.0, 2).map_err(|e| e.to_string())?);
    let bars: Vec<&Bar> = h1.nontrivial().collect();
    ensure(bars.len() == 1, || format!("{} nontrivial H1 bars", bars.len()))?;
    let top = bars[0].persistence();
    let others = h1.bars.iter().filter(|b| !std::ptr::eq(*b, bars[0])).map(|b| b.persistence());
    let second = others.fold(0.0, f64::max);
    ensure(top > CIRCLE_RATIO * second, || format!("persistence {top:?} vs {second:?}"))?;
    let (birth, death) = ((PI / 20.0).sin(), (7.0 * PI / 20.0).sin());
    ensure((bars[0].birth - birth).abs() < BAR_TOL && (bars[0].death - death).abs() < BAR_TOL, || {
        format!("bar [{:?}, {:?})", bars[0].birth, bars[0].death)
    })?;
    Ok(format!("bar [{:?}, {:?}), next persistence {second:?}", bars[0].birth, bars[0].death))
}

fn fuzzed_matrix(rng: &mut ChaCha8Rng) -> DistanceMatrix {
    let n = rng.gen_range(1..=24);
    match rng.gen_range(0..4) {
        // continuous
        0 => symmetric(n, |_, _| rng.gen_range(0.0..=1.0)),
        // heavy ties
        1 => {
            let levels = rng.gen_range(1..=4);
            symmetric(n, |_, _| rng.gen_range(0..=levels) as f64 / levels as f64)
        }
        // points in the plane with duplicates
        2 => {
            let base: Vec<(f64, f64)> = (0..n.div_ceil(2)).map(|_| (rng.gen(), rng.gen())).collect();
            let pts: Vec<(f64, f64)> = (0..n).map(|_| base[rng.gen_range(0..base.len())]).collect();
            symmetric(n, |u, v| (pts[u].0 - pts[v].0).hypot(pts[u].1 - pts[v].1) / 2f64.sqrt())
        }
        // zeros and ones only
        _ => symmetric(n, |_, _| if rng.gen_bool(0.5) { 0.0 } else { 1.0 }),
    }
}

fn nested(complex: &FilteredComplex) -> std::result::Result<(), String> {
    let simplices = complex.simplices();
    for w in simplices.windows(2) {
        ensure(w[0].value() <= w[1].value(), || "simplices out of filtration order".into())?;
    }
    let value_of = |vs: &[usize]| {
        simplices
            .iter()
            .find(|s| s.vertices() == vs)
            .map(|s| s.value())
    };
    for s in simplices {
        let vs = s.vertices();
        for skip in 0..vs.len() {
            if vs.len() == 1 {
                break;
            }
            let face: Vec<usize> = vs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
            let fv = value_of(&face).ok_or_else(|| format!("face {face:?} of {vs:?} missing"))?;
            ensure(fv <= s.value(), || format!("face {face:?} enters after {vs:?}"))?;
        }
    }
    Ok(())
}

fn diagram_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..FUZZ_CASES {
        let dist = fuzzed_matrix(&mut rng);
        let n = dist.n();
        let eps_max = [1.0, 0.5, 0.25][case % 3];
        let complex = vietoris_rips(&dist, eps_max, 2).map_err(|e| e.to_string())?;
        nested(&complex).map_err(|e| format!("case {case}: {e}"))?;
        let (h0, h1) = persistent_homology(&complex);
        for bar in h0.bars.iter().chain(&h1.bars) {
            ensure(bar.death >= bar.birth, || format!("case {case}: bar [{:?}, {:?})", bar.birth, bar.death))?;
        }
        ensure(h0.bars.len() == n, || format!("case {case}: {} H0 bars for {n} vertices", h0.bars.len()))?;
        let grid = filtration_grid(&complex, usize::MAX);
        let b0 = betti_curve(&h0, &grid);
        ensure(b0.counts.windows(2).all(|w| w[1] <= w[0]), || format!("case {case}: beta_0 {:?}", b0.counts))?;
        let mut counts = Vec::new();
        for &eps in &grid {
            counts.push(complex.at_scale(eps).count());
        }
        ensure(counts.windows(2).all(|w| w[0] <= w[1]), || format!("case {case}: complex shrinks"))?;
    }
    Ok(format!("{FUZZ_CASES} inputs"))
}

fn plane_records(points: &[(f64, f64)]) -> Vec<GapRecord> {
    points
        .iter()
        .map(|&(l, m)| GapRecord::new(l, m, 50.0 + 2.0 * l + 3.0 * m + 1.0, Some(50.0)))
        .collect()
}

fn solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Vec<f64> {
    let p = a.len();
    for (row, &bi) in a.iter_mut().zip(b) {
        row.push(bi);
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

/// |e_i| / (1 - h_ii) from the full-data normal equations.
fn press_errors(records: &[GapRecord]) -> Vec<f64> {
    let xs: Vec<[f64; 3]> = records.iter().map(|r| [r.lambda, r.mu, 1.0]).collect();
    let y: Vec<f64> = records.iter().map(|r| r.gap().unwrap()).collect();
    let mut xtx = vec![vec![0.0; 3]; 3];
    let mut xty = vec![0.0; 3];
    for (x, &yi) in xs.iter().zip(&y) {
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * yi;
        }
    }
    let beta = solve(xtx.clone(), &xty);
    let inv: Vec<Vec<f64>> = (0..3)
        .map(|k| solve(xtx.clone(), &[(k == 0) as u8 as f64, (k == 1) as u8 as f64, (k == 2) as u8 as f64]))
        .collect();
    xs.iter()
        .zip(&y)
        .map(|(x, &yi)| {
            let fit: f64 = (0..3).map(|i| x[i] * beta[i]).sum();
            let h: f64 = (0..3).map(|i| (0..3).map(|j| x[i] * inv[j][i] * x[j]).sum::<f64>()).sum();
            ((yi - fit) / (1.0 - h)).abs()
        })
        .collect()
}

fn noisy_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<GapRecord> {
    (0..n)
        .map(|_| {
            let l: f64 = rng.gen_range(0.05..0.6);
            let m: f64 = rng.gen_range(0.2..0.9);
            let g = -12.0 * l + 20.0 * m + 4.0 + rng.gen_range(-1.5..1.5);
            GapRecord::new(l, m, 92.0, Some(92.0 - g))
        })
        .collect()
}

fn regression_identities() -> Check {
    let exact = plane_records(&[(0.1, 0.2), (0.4, 0.1), (0.3, 0.7), (0.9, 0.5), (0.6, 0.6), (0.2, 0.9)]);
    let m = fit_gap_model(&exact, FeatureSet::Both).map_err(|e| e.to_string())?;
    ensure(
        (m.c1 - 2.0).abs() < LINEAR_TOL && (m.c2 - 3.0).abs() < LINEAR_TOL && (m.c3 - 1.0).abs() < LINEAR_TOL,
        || format!("exact fit c = ({:?}, {:?}, {:?})", m.c1, m.c2, m.c3),
    )?;
    ensure(m.fit_residual_rms < LINEAR_TOL, || format!("exact fit residual {:?}", m.fit_residual_rms))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_press = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(8..40);
        let records = noisy_records(&mut rng, n);
        let cv = leave_one_sample_out(&records, FeatureSet::Both).map_err(|e| e.to_string())?;
        let oracle = press_errors(&records);
        for (e, o) in cv.errors().zip(&oracle) {
            worst_press = worst_press.max((e - o).abs());
        }
        ensure(cv.errors().count() == n, || "LOO skipped folds".into())?;
    }
    ensure(worst_press < PRESS_TOL, || format!("LOO vs PRESS {worst_press:e}"))?;

    // values on a dyadic grid in [0, 100] subtract exactly
    for _ in 0..100_000 {
        let rho_train = rng.gen_range(0..=100u64 << 20) as f64 / (1u64 << 20) as f64;
        let rho_test = rng.gen_range(0..=100u64 << 20) as f64 / (1u64 << 20) as f64;
        let hat = estimate_test_performance(rho_train, rho_train - rho_test);
        let err = estimation_error(rho_test, hat);
        ensure(err == 0.0, || format!("identity chain {rho_train:?} {rho_test:?} -> {err:e}"))?;
    }

    let mut worst_scale = 0.0f64;
    for _ in 0..50 {
        let records = noisy_records(&mut rng, 15);
        let s: f64 = rng.gen_range(-10.0..10.0);
        let scaled: Vec<GapRecord> = records
            .iter()
            .map(|r| GapRecord::new(r.lambda, r.mu, 0.0, Some(-s * r.gap().unwrap())))
            .collect();
        let a = fit_gap_model(&records, FeatureSet::Both).map_err(|e| e.to_string())?;
        let b = fit_gap_model(&scaled, FeatureSet::Both).map_err(|e| e.to_string())?;
        for (x, y) in [(a.c1, b.c1), (a.c2, b.c2), (a.c3, b.c3)] {
            worst_scale = worst_scale.max((s * x - y).abs() / (1.0 + (s * x).abs()));
        }
    }
    ensure(worst_scale < SCALING_TOL, || format!("gap scaling {worst_scale:e}"))?;
    Ok(format!("PRESS max diff {worst_press:.1e}, scaling max rel diff {worst_scale:.1e}"))
}

fn reference_stop(seq: &[usize]) -> Option<usize> {
    (1..seq.len()).find(|&t| seq[t] > seq[t - 1])
}

fn early_stop_rule() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut stopped = 0;
    for case in 0..EARLYSTOP_SEQS {
        let len = rng.gen_range(0..30);
        let top = rng.gen_range(1..8);
        let seq: Vec<usize> = (0..len).map(|_| rng.gen_range(0..top)).collect();
        let mut trace = PeakTrace::new(1);
        let mut got = None;
        for (t, &k) in seq.iter().enumerate() {
            if trace.update_and_check(t as u64, k) == Decision::Stop {
                got = Some(t);
                break;
            }
        }
        let want = reference_stop(&seq);
        ensure(got == want, || format!("case {case} {seq:?}: stopped at {got:?}, reference {want:?}"))?;
        stopped += got.is_some() as usize;
    }
    Ok(format!("{EARLYSTOP_SEQS} sequences, {stopped} stopped"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..64).map(|_| (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    common::write_rows(&dir.path().join("act.csv"), None, &rows);
    let args = ["summarize", "act.csv", "--out", "out"];
    let snapshot = || -> std::result::Result<Vec<Vec<u8>>, String> {
        let out = common::run(&args, dir.path());
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        let mut files = vec![out.stdout];
        for name in ["act.summary.json", "act.diagram.csv"] {
            files.push(fs::read(dir.path().join("out").join(name)).map_err(|e| e.to_string())?);
        }
        Ok(files)
    };
    let first = snapshot()?;
    let second = snapshot()?;
    ensure(first == second, || "outputs differ between runs".into())?;
    let stdout = common::run(&["summarize", "act.csv"], dir.path());
    let again = common::run(&["summarize", "act.csv"], dir.path());
    ensure(stdout.stdout == again.stdout, || "stdout differs between runs".into())?;
    Ok(format!("{} + {} bytes identical", first[1].len(), first[2].len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("oracle-equivalence", oracle_equivalence),
        ("square-benchmark", square_benchmark),
        ("circle-benchmark", circle_benchmark),
        ("diagram-invariants", diagram_invariants),
        ("regression-identities", regression_identities),
        ("early-stop-rule", early_stop_rule),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

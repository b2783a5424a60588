#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topogap"))
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("spawn topogap")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

/// Activation rows whose correlation distances form a square of side `side`
/// (diagonal `side * sqrt(2)`): columns are the rows of `V sqrt(L)` for the
/// eigendecomposition of the circulant correlation matrix, stacked with their
/// negation so every column has zero mean.
pub fn square_activation_rows(side: f64) -> Vec<Vec<f64>> {
    let a = 1.0 - side;
    let b = 1.0 - side * 2f64.sqrt();
    let eig = [1.0 + 2.0 * a + b, 1.0 - b, 1.0 - b, 1.0 - 2.0 * a + b];
    let h = 0.5;
    let r = 1.0 / 2f64.sqrt();
    let vectors = [[h, h, h, h], [r, 0.0, -r, 0.0], [0.0, r, 0.0, -r], [h, -h, h, -h]];
    let mut rows = Vec::new();
    for sign in [1.0, -1.0] {
        for (k, v) in vectors.iter().enumerate() {
            rows.push((0..4).map(|node| sign * eig[k].sqrt() * v[node]).collect());
        }
    }
    rows
}

pub fn write_rows(path: &Path, header: Option<&str>, rows: &[Vec<f64>]) {
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(h);
        text.push('\n');
    }
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

pub fn square_distance_file(dir: &Path) -> PathBuf {
    let s = 2f64.sqrt();
    let path = dir.join("square.csv");
    write_rows(
        &path,
        None,
        &[
            vec![0.0, 1.0, s, 1.0],
            vec![1.0, 0.0, 1.0, s],
            vec![s, 1.0, 0.0, 1.0],
            vec![1.0, s, 1.0, 0.0],
        ],
    );
    path
}

/// Records lying exactly on `gap = 2 lambda + 3 mu + 1`.
pub fn exact_records(path: &Path, points: &[(f64, f64, &str)]) {
    let mut text = String::from("lambda,mu,rho_train,rho_test,group,model\n");
    for &(l, m, g) in points {
        let gap = 2.0 * l + 3.0 * m + 1.0;
        text.push_str(&format!("{l:?},{m:?},{:?},50.0,{g},net\n", 50.0 + gap));
    }
    std::fs::write(path, text).unwrap();
}

//! Shared text encoding for numeric fields in CSV artifacts.

/// Shortest decimal string that parses back to the identical `f64`.
///
/// Infinite values are written as `inf` / `-inf`.
pub fn float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// Parse a decimal float; accepts `inf`, `+inf` and `-inf`.
pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "Inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-Inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

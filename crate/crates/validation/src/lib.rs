//! Helpers shared by the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;

/// Write one line straight to the process stdout. The test harness only
/// captures the `print!` family, so these lines show for passing tests too.
pub fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(format!("{line}\n").as_bytes());
    let _ = out.flush();
}

/// Report one `[PASS]`/`[FAIL]` line for a criterion and return `ok`.
pub fn verdict(id: &str, ok: bool, detail: String) -> bool {
    report(&format!(
        "[{}] criterion {id}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    ));
    ok
}

/// `|a - b| / |b|`, zero when the two are identical.
pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// `n` points evenly spaced in `log10` from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo.log10() + (hi.log10() - lo.log10()) * i as f64 / (n - 1) as f64))
        .collect()
}

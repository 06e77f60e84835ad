//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; numeric arguments after
//! `--` pick a subset, e.g. `cargo test --test acceptance -- 1 8`.

mod epidemic;
mod spatial;
mod toy;

use std::panic;
use std::process::ExitCode;
use std::time::Instant;

/// Detail line on success, reason on failure.
pub type Check = Result<String, String>;

pub fn require(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

pub fn lib<T>(r: lfi_core::Result<T>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

/// Whether `truth` lies in the `level` Mahalanobis-depth region of the
/// bivariate sample: its distance from the sample mean, under the sample
/// covariance, is no larger than the `level` quantile of the draws' own
/// distances.
pub fn depth_region_covers(draws: &[Vec<f64>], truth: &[f64], level: f64) -> bool {
    let (m, c) = mean_cov2(draws);
    let det = c[0] * c[2] - c[1] * c[1];
    if !(det > 0.0) {
        return false;
    }
    let dist = |x: &[f64]| {
        let (a, b) = (x[0] - m[0], x[1] - m[1]);
        (c[2] * a * a - 2.0 * c[1] * a * b + c[0] * b * b) / det
    };
    let d: Vec<f64> = draws.iter().map(|x| dist(x)).collect();
    dist(truth) <= lfi_core::stats::quantile(&d, level)
}

/// Mean and covariance `[s11, s12, s22]` of two-dimensional draws.
pub fn mean_cov2(draws: &[Vec<f64>]) -> ([f64; 2], [f64; 3]) {
    let n = draws.len() as f64;
    let mut m = [0.0; 2];
    for x in draws {
        m[0] += x[0] / n;
        m[1] += x[1] / n;
    }
    let mut c = [0.0; 3];
    for x in draws {
        let (a, b) = (x[0] - m[0], x[1] - m[1]);
        c[0] += a * a / (n - 1.0);
        c[1] += a * b / (n - 1.0);
        c[2] += b * b / (n - 1.0);
    }
    (m, c)
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget_secs: f64,
    run: fn() -> Check,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "reverse sampler exact oracles", budget_secs: 60.0, run: toy::c1_rs_oracles },
    Criterion { id: 2, name: "reverse sampler summary ladder", budget_secs: 120.0, run: toy::c2_rs_ladder },
    Criterion { id: 3, name: "pseudo-marginal lazy ABC", budget_secs: 600.0, run: epidemic::c3_lazy },
    Criterion { id: 4, name: "classical indirect inference", budget_secs: 60.0, run: toy::c4_classical_ii },
    Criterion { id: 5, name: "pdBIL exactness ladder", budget_secs: 300.0, run: toy::c5_pdbil },
    Criterion { id: 6, name: "indirect discrepancies", budget_secs: f64::INFINITY, run: toy::c6_discrepancies },
    Criterion { id: 7, name: "epidemic coverage", budget_secs: 1800.0, run: epidemic::c7_coverage },
    Criterion { id: 8, name: "spatial toolkit oracles", budget_secs: 300.0, run: spatial::c8_toolkit },
    Criterion { id: 9, name: "spatial ABC-cp end to end", budget_secs: 1800.0, run: spatial::c9_abc_cp },
];

fn main() -> ExitCode {
    let picked: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| picked.is_empty() || picked.contains(&c.id)) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(c.run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(d) if secs > c.budget_secs => Err(format!("{d}; over the {:.0} s budget", c.budget_secs)),
            o => o,
        };
        match outcome {
            Ok(d) => println!("PASS criterion {}: {} ({d}) [{secs:.1} s]", c.id, c.name),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {}: {} ({e}) [{secs:.1} s]", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

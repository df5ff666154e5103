//! A few seconds of end-to-end runs covering each method and the
//! lower-bound probe.

use crate::config::{Config, SolveConfig};
use crate::lowerbound::{run_lowerbound, Algorithm, LowerBoundConfig};
use crate::solve::solve;

#[derive(Clone, Debug)]
pub struct SmokeResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const SOLVES: [(&str, &str); 4] = [
    ("accel p=2 q=1", "problem=quadratic\ndim=32\np=2\nq=1\nT=64"),
    ("adaptive p=2 q=2", "problem=logistic\nrows=64\ndim=4\np=2\nq=2\nT=32"),
    ("unaccel p=inf", "problem=quadratic\ndim=16\np=inf\nq=1\nT=64"),
    ("remap p=1", "problem=huber\ndim=16\np=1\nq=1\nT=32"),
];

pub fn run_smoke() -> Vec<SmokeResult> {
    let mut out = Vec::new();
    for (name, text) in SOLVES {
        let r = Config::parse(text).and_then(|c| SolveConfig::from_config(&c)).and_then(|c| solve(&c));
        out.push(match r {
            Ok(o) => SmokeResult {
                name,
                passed: o.summary.passed,
                detail: format!("{} iterations, gap {:?}, {}", o.summary.iterations, o.summary.final_gap, o.summary.status),
            },
            Err(e) => SmokeResult { name, passed: false, detail: e.to_string() },
        });
    }
    let lb = LowerBoundConfig { name: "smoke".into(), k: 4, p: 2.0, q: 1, algorithm: Algorithm::Subgradient, step: None };
    out.push(match run_lowerbound(&lb) {
        Ok(o) => SmokeResult {
            name: "lower bound k=4 p=2",
            passed: o.summary.passed && o.summary.replay_identical,
            detail: format!("gap {:.4} vs ε {:.4}", o.summary.gap_lower, o.summary.epsilon),
        },
        Err(e) => SmokeResult { name: "lower bound k=4 p=2", passed: false, detail: e.to_string() },
    });
    out
}

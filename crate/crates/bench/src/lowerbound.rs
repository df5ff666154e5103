//! Drive a deterministic algorithm against the resisting oracle and measure
//! the gap it is left with.

use std::path::Path;

use ppm_core::adaptive_ppm::{highorder_solve, HighOrderOptions, YMode};
use ppm_core::hard_instances::{gap_experiment, subgradient_method, GapReport, HardInstance, LocalAnswer, ResistingProblem};
use ppm_core::pnorm_core::Geometry;
use ppm_core::prox_oracle::HolderData;
use serde::Serialize;

use crate::config::format_p;
use crate::error::{usage, Result};
use crate::output::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Normalized subgradient steps from the origin, projected onto the unit ball.
    Subgradient,
    /// The accelerated method with a first-order Taylor oracle.
    Accel,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Subgradient => "subgradient",
            Algorithm::Accel => "accel",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "subgradient" => Ok(Algorithm::Subgradient),
            "accel" => Ok(Algorithm::Accel),
            other => Err(usage(format!("unknown algorithm {other:?}; expected subgradient or accel"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundConfig {
    pub name: String,
    pub k: usize,
    pub p: f64,
    pub q: usize,
    pub algorithm: Algorithm,
    /// Subgradient step; defaults to k^{−1/2}.
    pub step: Option<f64>,
}

/// Everything one run against the oracle produced.
#[derive(Clone, Debug)]
pub struct Probe {
    pub instance: HardInstance,
    pub points: Vec<Vec<f64>>,
    pub answers: Vec<LocalAnswer>,
}

/// Geometry the accelerated adapter runs in: the instance's own norm when
/// it is smooth, the Euclidean norm for p ∈ {1, ∞}.
pub fn adapter_exponent(p: f64) -> f64 {
    if p > 1.0 && p.is_finite() {
        p
    } else {
        2.0
    }
}

/// Run the algorithm until it has made at least k queries.
pub fn drive(cfg: &LowerBoundConfig) -> Result<Probe> {
    let inst = HardInstance::new(cfg.k, cfg.p, cfg.q)?;
    let (k, d, mu) = (inst.k, inst.d, inst.mu);
    let prob = ResistingProblem::new(inst);
    match cfg.algorithm {
        Algorithm::Subgradient => {
            let step = cfg.step.unwrap_or(1.0 / (k as f64).sqrt());
            subgradient_method(&prob, cfg.p, step, k);
        }
        Algorithm::Accel => {
            let geometry = Geometry::new(adapter_exponent(cfg.p))?;
            // 1/μ bounds the gradient Lipschitz constant of the softmax pieces.
            let holder = HolderData::analytic(1, 1.0 / mu, 1.0);
            let opts = HighOrderOptions { x0: vec![0.0; d], radius: Some(1.0), sigma: 0.25, alpha: 2.0, y_mode: YMode::Best };
            highorder_solve(&prob, geometry, holder, k, &opts)?;
        }
    }
    let points = prob.query_points();
    if points.len() < k {
        return Err(usage(format!("{} made only {} of the {k} queries", cfg.algorithm.name(), points.len())));
    }
    Ok(Probe { instance: prob.instance(), points, answers: prob.answers() })
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Bitwise equality of two probes: points, answers and reveals.
pub fn probes_identical(a: &Probe, b: &Probe) -> bool {
    a.instance.reveals() == b.instance.reveals()
        && a.points.len() == b.points.len()
        && a.points.iter().zip(&b.points).all(|(x, y)| same_bits(x, y))
        && a.answers.len() == b.answers.len()
        && a.answers.iter().zip(&b.answers).all(|(x, y)| {
            x.t == y.t && x.reveal == y.reveal && x.value.to_bits() == y.value.to_bits() && same_bits(&x.subgradient, &y.subgradient)
        })
}

/// Exponent of the query-count curve `(LR^{q+1}/ε)^e`.
pub fn curve_exponent(p: f64, q: usize) -> f64 {
    if p.is_infinite() {
        1.0 / q as f64
    } else {
        let m = p.max(2.0);
        m / (m * q as f64 + q as f64 + 1.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundSummary {
    pub name: String,
    pub algorithm: String,
    pub k: usize,
    pub p: String,
    pub q: usize,
    pub d: usize,
    pub gamma: f64,
    pub beta: f64,
    pub queries_made: usize,
    /// The gap is measured at this query point, after k − 1 answers.
    pub measured_at_query: usize,
    pub h_out: f64,
    pub h_star: f64,
    pub x_star_norm: f64,
    pub gap_lower: f64,
    pub epsilon: f64,
    pub passed: bool,
    pub replay_identical: bool,
    pub transcript_round_trip: bool,
    pub curve_exponent: f64,
    /// `(1/ε)^e` with L = R = 1.
    pub implied_queries: f64,
}

pub struct LowerBoundOutcome {
    pub probe: Probe,
    pub report: GapReport,
    pub summary: LowerBoundSummary,
}

impl LowerBoundOutcome {
    pub fn transcript(&self) -> String {
        self.probe.instance.transcript()
    }

    /// Query points as CSV: `t,x_0,…,x_{d−1}`.
    pub fn points_csv(&self) -> String {
        let d = self.probe.instance.d;
        let mut s = String::from("t");
        (0..d).for_each(|i| s.push_str(&format!(",x_{i}")));
        s.push('\n');
        for (t, x) in self.probe.points.iter().enumerate() {
            s.push_str(&t.to_string());
            x.iter().for_each(|v| s.push_str(&format!(",{v}")));
            s.push('\n');
        }
        s
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Write the transcript, the query-point sidecar and the summary.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let n = &self.summary.name;
        write_atomic(&dir.join(format!("{n}.transcript.txt")), self.transcript().as_bytes())?;
        write_atomic(&dir.join(format!("{n}.queries.csv")), self.points_csv().as_bytes())?;
        write_atomic(&dir.join(format!("{n}.summary.json")), self.summary_json().as_bytes())?;
        Ok(())
    }
}

pub fn run_lowerbound(cfg: &LowerBoundConfig) -> Result<LowerBoundOutcome> {
    let probe = drive(cfg)?;
    let k = cfg.k;
    let report = gap_experiment(&probe.instance, &probe.points[..k])?;
    let replay = drive(cfg)?;
    let transcript = probe.instance.transcript();
    let transcript_round_trip = HardInstance::parse_transcript(&transcript)? == probe.instance.reveals();
    let e = curve_exponent(cfg.p, cfg.q);
    let inst = &probe.instance;
    let summary = LowerBoundSummary {
        name: cfg.name.clone(),
        algorithm: cfg.algorithm.name().into(),
        k,
        p: format_p(cfg.p),
        q: cfg.q,
        d: inst.d,
        gamma: inst.gamma,
        beta: inst.beta,
        queries_made: probe.points.len(),
        measured_at_query: k,
        h_out: report.h_out,
        h_star: report.h_star,
        x_star_norm: report.x_star_norm,
        gap_lower: report.gap_lower,
        epsilon: report.epsilon,
        passed: report.passed,
        replay_identical: probes_identical(&probe, &replay),
        transcript_round_trip,
        curve_exponent: e,
        implied_queries: (1.0 / report.epsilon).powf(e),
    };
    Ok(LowerBoundOutcome { probe, report, summary })
}

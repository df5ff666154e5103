//! Flat `key=value` run configuration with command-line overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! win, so overrides are applied by calling [`Config::set`] after parsing.

use std::collections::BTreeMap;

use ppm_core::adaptive_ppm::YMode;
use ppm_core::problems::ProblemSpec;

use crate::error::{usage, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key=value, got {line:?}", n + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key.is_empty() {
            return Err(usage("empty config key"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| usage(format!("override {pair:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| usage(format!("{key}: cannot parse {v:?}"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_real(v).ok_or_else(|| usage(format!("{key}: cannot parse {v:?} as a number"))),
        }
    }
}

/// A real number, accepting `inf`.
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Some(f64::INFINITY),
        t => t.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

/// `p` as written in reports: `inf` or the shortest decimal form.
pub fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Auto,
    Accel,
    Adaptive,
    Unaccel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaccelChoice {
    Smooth,
    Power,
    Ball,
}

const SOLVE_KEYS: [&str; 25] = [
    "name", "problem", "dim", "rows", "decay", "coef_decay", "s", "scale", "flip", "mu", "delta", "seed", "p", "q", "nu",
    "method", "T", "sigma", "alpha", "y_mode", "radius", "mode", "ball_radius", "timing", "out",
];

/// Everything `solve` needs, validated.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub p: f64,
    pub q: usize,
    pub nu: f64,
    pub method: Method,
    pub t: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub y_mode: YMode,
    pub radius: Option<f64>,
    pub unaccel_mode: Option<UnaccelChoice>,
    pub ball_radius: Option<f64>,
    pub seed: u64,
    pub timing: bool,
}

impl SolveConfig {
    pub fn from_config(c: &Config) -> Result<Self> {
        if let Some(k) = c.keys().find(|k| !SOLVE_KEYS.contains(k)) {
            return Err(usage(format!("unknown config key {k:?}")));
        }
        let seed: u64 = c.parsed("seed", 0)?;
        let dim: usize = c.parsed("dim", 32)?;
        let problem = match c.get("problem").unwrap_or("quadratic") {
            "quadratic" => ProblemSpec::Quadratic { dim, decay: c.f64_or("decay", 4.0)?, coef_decay: c.f64_or("coef_decay", 1.0)?, seed },
            "pth-power" => ProblemSpec::PthPower { dim, s: c.f64_or("s", 4.0)?, scale: c.f64_or("scale", 1.0)?, seed },
            "logistic" => ProblemSpec::Logistic {
                rows: c.parsed("rows", 256)?,
                dim,
                scale: c.f64_or("scale", 1.0)?,
                flip: c.f64_or("flip", 0.1)?,
                seed,
            },
            "softmax" => ProblemSpec::SoftmaxRegression { rows: c.parsed("rows", 64)?, dim, mu: c.f64_or("mu", 0.1)?, seed },
            "huber" => ProblemSpec::Huber { dim, delta: c.f64_or("delta", 0.5)?, seed },
            other => return Err(usage(format!("unknown problem {other:?}; expected quadratic, pth-power, logistic, softmax or huber"))),
        };
        let p = c.f64_or("p", 2.0)?;
        if !(p >= 1.0) {
            return Err(usage(format!("p must be at least 1, got {p}")));
        }
        let q: usize = c.parsed("q", 1)?;
        if q == 0 {
            return Err(usage("q must be at least 1"));
        }
        let nu = c.f64_or("nu", 1.0)?;
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(usage(format!("nu must lie in (0, 1], got {nu}")));
        }
        let method = match c.get("method").unwrap_or("auto") {
            "auto" => Method::Auto,
            "accel" => Method::Accel,
            "adaptive" => Method::Adaptive,
            "unaccel" => Method::Unaccel,
            other => return Err(usage(format!("unknown method {other:?}; expected auto, accel, adaptive or unaccel"))),
        };
        let t: usize = c.parsed("T", 100)?;
        if t == 0 {
            return Err(usage("T must be positive"));
        }
        let sigma = c.f64_or("sigma", 0.25)?;
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(usage(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        let alpha = c.f64_or("alpha", 2.0)?;
        let y_mode = match c.get("y_mode").unwrap_or("best") {
            "best" => YMode::Best,
            "combination" => YMode::Combination,
            other => return Err(usage(format!("unknown y_mode {other:?}"))),
        };
        let radius = c.get("radius").map(|_| c.f64_or("radius", 0.0)).transpose()?;
        let unaccel_mode = match c.get("mode") {
            None => None,
            Some("smooth") => Some(UnaccelChoice::Smooth),
            Some("power") => Some(UnaccelChoice::Power),
            Some("ball") => Some(UnaccelChoice::Ball),
            Some(other) => return Err(usage(format!("unknown unaccelerated mode {other:?}"))),
        };
        let ball_radius = c.get("ball_radius").map(|_| c.f64_or("ball_radius", 0.0)).transpose()?;
        Ok(SolveConfig {
            name: c.get("name").unwrap_or("run").to_string(),
            problem,
            p,
            q,
            nu,
            method,
            t,
            sigma,
            alpha,
            y_mode,
            radius,
            unaccel_mode,
            ball_radius,
            seed,
            timing: c.parsed("timing", false)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = Config::parse("# comment\nproblem = logistic\np=inf\n\nT=50\n").unwrap();
        c.set_pair("T=70").unwrap();
        assert_eq!(c.get("T"), Some("70"));
        let s = SolveConfig::from_config(&c).unwrap();
        assert!(s.p.is_infinite());
        assert_eq!(s.t, 70);
        assert!(matches!(s.problem, ProblemSpec::Logistic { .. }));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SolveConfig::from_config(&Config::parse("colour=red").unwrap()).is_err());
        assert!(SolveConfig::from_config(&Config::parse("p=0.5").unwrap()).is_err());
        assert!(Config::parse("no equals sign").is_err());
    }
}

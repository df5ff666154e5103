//! Least-squares fits of log(gap) against log(T).

use ppm_core::trace::CsvTrace;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{usage, Result};

/// Gaps at or below `ROUNDOFF_FLOOR·max(1, |f*|)` are treated as roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub half_width: f64,
    pub points: usize,
}

/// Ordinary least squares of ln y on ln x.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(usage(format!("need at least 3 points for a slope fit, got {}", points.len())));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(usage(format!("log-log fit needs positive coordinates, got ({x}, {y})")));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(usage("log-log fit needs at least two distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0).expect("positive degrees of freedom").inverse_cdf(0.975);
    Ok(SlopeFit { slope, intercept, half_width: t * se, points: points.len() })
}

/// Points inside a window after dropping the roundoff tail.
#[derive(Clone, Debug, PartialEq)]
pub struct Windowed {
    pub points: Vec<(f64, f64)>,
    /// Set when the window was cut short at a non-positive or roundoff gap.
    pub warning: Option<String>,
}

/// Keep points with `lo ≤ x ≤ hi`, stopping at the first gap at or below
/// `floor`; later points are roundoff rather than progress.
pub fn window(points: &[(f64, f64)], lo: f64, hi: f64, floor: f64) -> Windowed {
    let mut out = Vec::new();
    let mut warning = None;
    for &(x, y) in points.iter().filter(|(x, _)| *x >= lo && *x <= hi) {
        if y <= floor {
            warning = Some(format!("gap {y:e} at T = {x} is at the roundoff floor {floor:e}; window shrunk to T < {x}"));
            break;
        }
        out.push((x, y));
    }
    Windowed { points: out, warning }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFitReport {
    pub fit: SlopeFit,
    pub window: [f64; 2],
    pub warnings: Vec<String>,
}

fn f_star(t: &CsvTrace) -> Result<f64> {
    t.meta("f_star")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| usage("trace carries no f_star; the rate fit needs the optimal value"))
}

/// Fit traces over `[lo, hi]`. One trace is fitted row by row; several
/// traces contribute their final rows, one point per budget T.
pub fn ratefit(traces: &[CsvTrace], lo: f64, hi: f64) -> Result<RateFitReport> {
    if traces.is_empty() {
        return Err(usage("no traces given"));
    }
    let mut points = Vec::new();
    let mut floor = 0.0f64;
    for t in traces {
        if t.rows.len() < 20 {
            return Err(usage(format!("a rate fit needs at least 20 trace rows, got {}", t.rows.len())));
        }
        let fs = f_star(t)?;
        floor = floor.max(ROUNDOFF_FLOOR * fs.abs().max(1.0));
        let gap = |r: &ppm_core::trace::CsvRow| r.f_y.map(|f| (r.k as f64, f - fs));
        if traces.len() == 1 {
            points.extend(t.rows.iter().filter_map(gap));
        } else {
            points.extend(t.rows.last().and_then(gap));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = window(&points, lo, hi, floor);
    let fit = fit_loglog(&w.points)?;
    Ok(RateFitReport { fit, window: [lo, hi], warnings: w.warning.into_iter().collect() })
}

//! Re-check a written trace from its CSV columns alone.

use ppm_core::accel_ppm::AUDIT_TOL;
use ppm_core::trace::CsvTrace;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvAudit {
    pub rows: usize,
    pub drop_rows: usize,
    pub worst_drop_excess: Option<f64>,
    pub violations: Vec<String>,
    pub passed: bool,
}

/// Row numbering, `A_k = A_{k−1} + a_k`, positive λ_k and the per-step
/// drop bound `drop ≤ E_k + tol` wherever both are recorded.
pub fn audit_csv(t: &CsvTrace) -> CsvAudit {
    let mut violations = Vec::new();
    let mut prev_a = 0.0;
    let mut worst: Option<f64> = None;
    let mut drop_rows = 0;
    for (i, r) in t.rows.iter().enumerate() {
        if r.k != i + 1 {
            violations.push(format!("row {} has k = {}", i + 1, r.k));
        }
        if (r.big_a - prev_a - r.a).abs() > 1e-12 * r.big_a.max(1.0) {
            violations.push(format!("k = {}: A_k − A_(k−1) = {} differs from a_k = {}", r.k, r.big_a - prev_a, r.a));
        }
        if !(r.lambda > 0.0) {
            violations.push(format!("k = {}: non-positive λ_k = {}", r.k, r.lambda));
        }
        if let (Some(d), Some(e)) = (r.drop, r.e_k) {
            drop_rows += 1;
            let excess = d - e;
            worst = Some(worst.map_or(excess, |w| w.max(excess)));
            if excess > AUDIT_TOL {
                violations.push(format!("k = {}: drop {d:e} exceeds E_k {e:e}", r.k));
            }
        }
        prev_a = r.big_a;
    }
    let passed = violations.is_empty();
    CsvAudit { rows: t.rows.len(), drop_rows, worst_drop_excess: worst, violations, passed }
}

use serde::{Deserialize, Serialize};

use super::sweep::ResultRecord;
use crate::optimizer::Scheme;

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub axis_value: f64,
    pub n: usize,
    pub objective_mean: f64,
    pub objective_std: f64,
    pub r_b_sec_mean: f64,
    pub r_b_sec_std: f64,
    pub r_c_mean: f64,
    pub r_c_std: f64,
}

/// One row per (scheme, axis value) over the successful records, in first-seen order.
pub fn emit_summary(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Scheme, f64)> = Vec::new();
    for r in records.iter().filter(|r| r.ok()) {
        if !keys.contains(&(r.scheme, r.axis_value)) {
            keys.push((r.scheme, r.axis_value));
        }
    }
    keys.into_iter()
        .map(|(scheme, axis_value)| {
            let group: Vec<&ResultRecord> =
                records.iter().filter(|r| r.ok() && r.scheme == scheme && r.axis_value == axis_value).collect();
            let col = |f: fn(&ResultRecord) -> f64| mean_std(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (objective_mean, objective_std) = col(|r| r.objective);
            let (r_b_sec_mean, r_b_sec_std) = col(|r| r.r_b_sec);
            let (r_c_mean, r_c_std) = col(|r| r.r_c);
            SummaryRow {
                scheme,
                axis_value,
                n: group.len(),
                objective_mean,
                objective_std,
                r_b_sec_mean,
                r_b_sec_std,
                r_c_mean,
                r_c_std,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(objective: f64) -> ResultRecord {
        ResultRecord {
            scheme: Scheme::Proposed,
            axis_value: 16.0,
            seed: 0,
            objective,
            r_b: 0.0,
            r_b_sec: objective,
            r_c: 0.0,
            outer_iterations: 1,
            converged: true,
            status: "ok".into(),
        }
    }

    #[test]
    fn single_and_identical_records() {
        let s = emit_summary(&[rec(1.5)]);
        assert_eq!((s[0].objective_mean, s[0].objective_std, s[0].n), (1.5, 0.0, 1));
        let s = emit_summary(&[rec(0.7), rec(0.7)]);
        assert_eq!(s[0].objective_std, 0.0);
    }

    #[test]
    fn known_triple() {
        let s = emit_summary(&[rec(1.0), rec(2.0), rec(3.0)]);
        assert_eq!(s[0].objective_mean, 2.0);
        assert!((s[0].objective_std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn failed_records_are_skipped() {
        let mut bad = rec(f64::NAN);
        bad.status = "error: boom".into();
        let s = emit_summary(&[rec(1.0), bad]);
        assert_eq!(s[0].n, 1);
    }
}

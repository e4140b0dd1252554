//! CSV and JSON artifacts.
//!
//! Every file starts with `#` comment lines carrying the config hash. The only
//! line that changes between identical runs is `# generated_unix=`, so
//! [`csv_body`] drops comments before comparing.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::summary::{emit_summary, SummaryRow};
use super::sweep::{PointOutcome, ResultRecord};
use crate::error::Result;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(file: &mut File, hash: &str, extra: &[(&str, String)]) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(file, "# config_sha256={hash}")?;
    for (k, v) in extra {
        writeln!(file, "# {k}={v}")?;
    }
    writeln!(file, "# generated_unix={now}")?;
    Ok(())
}

pub(crate) fn write_rows(
    path: &Path,
    hash: &str,
    extra: &[(&str, String)],
    head: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<()> {
    let mut file = File::create(path)?;
    header(&mut file, hash, extra)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    w.write_record(head)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// File contents without the `#` comment lines.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

pub fn write_results(path: &Path, hash: &str, axis: &str, records: &[ResultRecord]) -> Result<()> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.scheme.name().to_string(),
                fmt_f64(r.axis_value),
                r.seed.to_string(),
                fmt_f64(r.objective),
                fmt_f64(r.r_b),
                fmt_f64(r.r_b_sec),
                fmt_f64(r.r_c),
                r.outer_iterations.to_string(),
                r.converged.to_string(),
                r.status.clone(),
            ]
        })
        .collect();
    write_rows(
        path,
        hash,
        &[("axis", axis.to_string())],
        &[
            "scheme",
            "axis_value",
            "seed",
            "objective",
            "r_b",
            "r_b_sec",
            "r_c",
            "outer_iterations",
            "converged",
            "status",
        ],
        rows,
    )
}

/// Wall times live apart from the results so that `results.csv` is reproducible.
pub fn write_timings(path: &Path, hash: &str, outcomes: &[PointOutcome]) -> Result<()> {
    let rows = outcomes
        .iter()
        .map(|o| {
            vec![
                o.record.scheme.name().to_string(),
                fmt_f64(o.record.axis_value),
                o.record.seed.to_string(),
                format!("{:.3}", o.wall_time_ms),
            ]
        })
        .collect();
    write_rows(path, hash, &[], &["scheme", "axis_value", "seed", "wall_time_ms"], rows)
}

pub fn trajectory_file_name(axis: &str, r: &ResultRecord) -> String {
    format!("{}_{}_{}_seed{}.csv", r.scheme.name(), axis, r.axis_value, r.seed)
}

pub fn write_trajectory(out_dir: &Path, hash: &str, axis: &str, r: &ResultRecord, trajectory: &[f64]) -> Result<()> {
    let path = out_dir.join("trajectories").join(trajectory_file_name(axis, r));
    let rows = trajectory.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]).collect();
    let extra = [("scheme", r.scheme.name().to_string()), ("seed", r.seed.to_string())];
    write_rows(&path, hash, &extra, &["iteration", "objective"], rows)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    config_sha256: &'a str,
    axis: &'a str,
    rows: &'a [SummaryRow],
}

/// `summary.csv` and `summary.json`.
pub fn write_summary(out_dir: &Path, hash: &str, axis: &str, records: &[ResultRecord]) -> Result<Vec<SummaryRow>> {
    let summary = emit_summary(records);
    let rows = summary
        .iter()
        .map(|s| {
            vec![
                s.scheme.name().to_string(),
                fmt_f64(s.axis_value),
                s.n.to_string(),
                fmt_f64(s.objective_mean),
                fmt_f64(s.objective_std),
                fmt_f64(s.r_b_sec_mean),
                fmt_f64(s.r_b_sec_std),
                fmt_f64(s.r_c_mean),
                fmt_f64(s.r_c_std),
            ]
        })
        .collect();
    write_rows(
        &out_dir.join("summary.csv"),
        hash,
        &[("axis", axis.to_string())],
        &[
            "scheme",
            "axis_value",
            "n",
            "objective_mean",
            "objective_std",
            "r_b_sec_mean",
            "r_b_sec_std",
            "r_c_mean",
            "r_c_std",
        ],
        rows,
    )?;
    let doc = SummaryDoc { config_sha256: hash, axis, rows: &summary };
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&doc)?)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn body_drops_comments() {
        assert_eq!(csv_body("# a\n# generated_unix=1\nx,y\n1,2\n"), "x,y\n1,2\n");
    }
}

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{write_results, write_summary, write_timings, write_trajectory};
use super::{config_hash, run_single};
use crate::config::{dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};
use crate::optimizer::{OptResult, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    M,
    #[serde(rename = "N_t")]
    NT,
    #[serde(rename = "P_tmax_dBm")]
    PTmaxDbm,
    #[serde(rename = "lambda_bits")]
    LambdaBits,
    P1,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::M => "M",
            Axis::NT => "N_t",
            Axis::PTmaxDbm => "P_tmax_dBm",
            Axis::LambdaBits => "lambda_bits",
            Axis::P1 => "P1",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("{} needs a positive integer, got {v}", self.name())))
            }
        };
        let mut cfg = base.clone();
        match self {
            Axis::M => cfg.m = count(value)?,
            Axis::NT => cfg.n_t = count(value)?,
            Axis::PTmaxDbm => cfg.p_tmax = dbm_to_watts(value),
            Axis::LambdaBits => cfg.lambda_bits = count(value)? as u32,
            Axis::P1 => cfg.p1 = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn validate(&self, base: &SystemConfig) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep values must be nonempty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("sweep seeds must be nonempty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("sweep schemes must be nonempty".into()));
        }
        for &v in &self.values {
            self.axis.apply(base, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::ConfigParse(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
        })
    }

    /// Grid points ordered by (scheme, value, seed).
    pub fn points(&self) -> Vec<(Scheme, f64, u64)> {
        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();
        let mut pts = Vec::with_capacity(schemes.len() * self.values.len() * self.seeds.len());
        for &s in &schemes {
            for &v in &self.values {
                for &seed in &self.seeds {
                    pts.push((s, v, seed));
                }
            }
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub axis_value: f64,
    pub seed: u64,
    pub objective: f64,
    pub r_b: f64,
    /// Large-system secrecy rate clamped at zero.
    pub r_b_sec: f64,
    pub r_c: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    /// `ok` or `error: <message>`.
    pub status: String,
}

impl ResultRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug)]
pub struct PointOutcome {
    pub record: ResultRecord,
    pub trajectory: Vec<f64>,
    pub wall_time_ms: f64,
}

/// Record and trajectory for one solve; failures get a non-`ok` status and NaN metrics.
pub fn record_from(scheme: Scheme, axis_value: f64, seed: u64, res: &Result<OptResult>) -> (ResultRecord, Vec<f64>) {
    match res {
        Ok(r) => (
            ResultRecord {
                scheme,
                axis_value,
                seed,
                objective: r.rates.objective,
                r_b: r.rates.r_b,
                r_b_sec: r.rates.r_b_sec_clamped,
                r_c: r.rates.r_c,
                outer_iterations: r.outer_iterations,
                converged: r.converged,
                status: "ok".into(),
            },
            r.trajectory.clone(),
        ),
        Err(e) => (
            ResultRecord {
                scheme,
                axis_value,
                seed,
                objective: f64::NAN,
                r_b: f64::NAN,
                r_b_sec: f64::NAN,
                r_c: f64::NAN,
                outer_iterations: 0,
                converged: false,
                status: format!("error: {e}"),
            },
            Vec::new(),
        ),
    }
}

/// Runs one grid point. An invalid axis value fails only that point.
pub fn run_point(
    cfg: &Result<SystemConfig>,
    scheme: Scheme,
    axis_value: f64,
    seed: u64,
) -> (PointOutcome, Option<OptResult>) {
    let start = Instant::now();
    let res = match cfg {
        Ok(c) => run_single(c, seed, scheme),
        Err(e) => Err(Error::InvalidConfig(e.to_string())),
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let (record, trajectory) = record_from(scheme, axis_value, seed, &res);
    (PointOutcome { record, trajectory, wall_time_ms }, res.ok())
}

/// Every grid point in parallel, returned in (scheme, value, seed) order.
pub fn sweep_points(spec: &SweepSpec, base: &SystemConfig) -> Vec<PointOutcome> {
    spec.points()
        .into_par_iter()
        .map(|(scheme, value, seed)| run_point(&spec.axis.apply(base, value), scheme, value, seed).0)
        .collect()
}

/// Runs the sweep and writes `results.csv`, `timings.csv`, `summary.csv`,
/// `summary.json` and `trajectories/` under `out_dir`.
pub fn run_sweep(spec: &SweepSpec, base: &SystemConfig, out_dir: &Path) -> Result<Vec<ResultRecord>> {
    spec.validate(base)?;
    let outcomes = sweep_points(spec, base);
    let hash = config_hash(base);
    std::fs::create_dir_all(out_dir.join("trajectories"))?;
    for o in &outcomes {
        if o.record.ok() {
            write_trajectory(out_dir, &hash, spec.axis.name(), &o.record, &o.trajectory)?;
        }
    }
    let records: Vec<ResultRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    write_results(&out_dir.join("results.csv"), &hash, spec.axis.name(), &records)?;
    write_timings(&out_dir.join("timings.csv"), &hash, &outcomes)?;
    write_summary(out_dir, &hash, spec.axis.name(), &records)?;
    std::fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(base)?)?;
    Ok(records)
}

//! Config ingestion, sweeps and result files.

pub mod config_io;
pub mod output;
pub mod summary;
pub mod sweep;

use std::path::Path;

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::active::{update_auxiliaries_ctx, ActiveContext, StationaritySystem};
use crate::beam::{BeamformerPair, StarCoefficients, POWER_SLACK};
use crate::channel::generate_channels;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::optimizer::{optimize_scheme, OptResult, Scheme};
use crate::rng::{streams, RngStream};
use crate::validation::{
    asymptotic_error_curve, flatten_pair, lagrangian_gradient, norm, random_design, unflatten_pair,
    wiretap_suppression, Region,
};

pub use config_io::{load_config, parse_config};
pub use summary::{emit_summary, SummaryRow};
pub use sweep::{run_sweep, Axis, ResultRecord, SweepSpec};

/// Hex SHA-256 of the compact JSON form of `cfg`.
pub fn config_hash(cfg: &SystemConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Fresh channels for `seed`, then `scheme` on them. Every scheme sees the
/// same channels for a given seed.
pub fn run_single(cfg: &SystemConfig, seed: u64, scheme: Scheme) -> Result<OptResult> {
    let ch = generate_channels(cfg, &RngStream::new(seed, streams::CHANNEL))?;
    optimize_scheme(&ch, cfg, &RngStream::new(seed, streams::SOLVER), scheme)
}

#[derive(Serialize)]
struct Solution<'a> {
    scheme: Scheme,
    seed: u64,
    config_sha256: &'a str,
    bf: &'a BeamformerPair,
    coeffs: &'a StarCoefficients,
}

/// The `run` command: one seed, the given schemes. Writes `results.csv`,
/// `timings.csv`, `trajectories/`, `solutions.json` and `config.json`.
pub fn run_command(cfg: &SystemConfig, seed: u64, schemes: &[Scheme], out_dir: &Path) -> Result<Vec<ResultRecord>> {
    let cfg = SystemConfig { seed, ..cfg.clone() };
    let hash = config_hash(&cfg);
    std::fs::create_dir_all(out_dir.join("trajectories"))?;

    let mut outcomes = Vec::new();
    let mut solutions = Vec::new();
    for &scheme in schemes {
        let (outcome, res) = sweep::run_point(&Ok(cfg.clone()), scheme, 0.0, seed);
        if outcome.record.ok() {
            output::write_trajectory(out_dir, &hash, "none", &outcome.record, &outcome.trajectory)?;
        }
        if let Some(r) = res {
            solutions.push((scheme, r));
        }
        outcomes.push(outcome);
    }
    let records: Vec<ResultRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    output::write_results(&out_dir.join("results.csv"), &hash, "none", &records)?;
    output::write_timings(&out_dir.join("timings.csv"), &hash, &outcomes)?;
    let docs: Vec<Solution> = solutions
        .iter()
        .map(|(scheme, r)| Solution { scheme: *scheme, seed, config_sha256: &hash, bf: &r.bf, coeffs: &r.coeffs })
        .collect();
    std::fs::write(out_dir.join("solutions.json"), serde_json::to_string_pretty(&docs)?)?;
    std::fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value < threshold }
    }
}

/// Largest ratio, over `n` random instances, of the Lagrangian gradient norm at
/// the closed-form precoders to the norm at a 1% perturbation of them.
pub fn stationarity_check(cfg: &SystemConfig, n: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for seed in 0..n {
        let (ch, coeffs, bf0) = random_design(cfg, seed)?;
        let ctx = ActiveContext::new(&ch, &coeffs, cfg);
        let aux = update_auxiliaries_ctx(&ctx, &bf0);
        let sys = StationaritySystem::new(&ctx, &aux);
        let varrho = 0.5 * sys.varrho_upper(cfg.p_tmax);
        let bf = sys.solve(varrho)?;
        let at = norm(&lagrangian_gradient(&ctx, &aux, &bf, varrho));
        let x = flatten_pair(&bf);
        let scale = norm(&x);
        let mut rng = RngStream::new(seed, streams::INIT).substream(1).rng();
        let y: Vec<f64> = x.iter().map(|v| v + 0.01 * scale * rng.random_range(-1.0..1.0)).collect();
        let near = norm(&lagrangian_gradient(&ctx, &aux, &unflatten_pair(&y), varrho));
        worst = worst.max(at / near);
    }
    Ok(worst)
}

/// The `validate` command: a quick pass over the numerical oracles at the
/// dimensions of `cfg`. Writes `validation.csv` and returns the checks.
pub fn validate_command(cfg: &SystemConfig, out_dir: &Path) -> Result<Vec<Check>> {
    let mut checks = vec![Check::below("stationarity_gradient_ratio", stationarity_check(cfg, 10)?, 1e-6)];

    let mut worst_power = 0.0f64;
    let mut bad_coeffs = 0usize;
    for seed in 0..3 {
        let r = run_single(cfg, seed, Scheme::Proposed)?;
        worst_power = worst_power.max(r.bf.power() / cfg.p_tmax);
        bad_coeffs += r.coeffs.validate().is_err() as usize;
    }
    checks.push(Check::below("max_power_over_budget", worst_power, 1.0 + POWER_SLACK + f64::EPSILON));
    checks.push(Check::below("invalid_coefficient_sets", bad_coeffs as f64, 0.5));

    let curve = asymptotic_error_curve(cfg, &[cfg.m], 1000, &[0, 1, 2, 3, 4])?;
    checks.push(Check::below("asymptotic_median_rel_error", curve[0].median_rel_error, 0.05));

    let ch = generate_channels(cfg, &RngStream::new(cfg.seed, streams::CHANNEL))?;
    let rows = wiretap_suppression(&ch, cfg, 500, &RngStream::new(cfg.seed, streams::EAVESDROPPER))?;
    for region in [Region::Reflection, Region::Transmission] {
        let sel: Vec<_> = rows.iter().filter(|r| r.region == region).collect();
        let n = sel.len() as f64;
        let secure = sel.iter().map(|r| r.rate_with_security).sum::<f64>() / n;
        let reference = sel.iter().map(|r| r.rate_without_security).sum::<f64>() / n;
        let name = match region {
            Region::Reflection => "wiretap_rate_reflection",
            Region::Transmission => "wiretap_rate_transmission",
        };
        checks.push(Check::below(name, secure, reference));
    }

    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(cfg);
    let rows = checks
        .iter()
        .map(|c| vec![c.name.clone(), output::fmt_f64(c.value), output::fmt_f64(c.threshold), c.pass.to_string()])
        .collect();
    output::write_rows(
        &out_dir.join("validation.csv"),
        &hash,
        &[("seed", cfg.seed.to_string())],
        &["check", "value", "threshold", "pass"],
        rows,
    )?;
    Ok(checks)
}

//! JSON configuration files.
//!
//! Keys are the [`SystemConfig`] field names. Powers may instead be given in
//! dBm (`P_tmax_dBm`, `sigma2_dBm` for all three receivers, or
//! `sigma2_b_dBm` / `sigma2_c_dBm` / `sigma2_e_dBm`) and `rho` in dB
//! (`rho_dB`). A `preset` key selects `"desk"` (default) or `"full_scale"`
//! as the base for the element and antenna counts. The transmit budget has no
//! default.

use std::path::Path;

use serde::Deserialize;

use crate::config::{db_to_linear, dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    n_t: Option<usize>,
    m: Option<usize>,
    lambda_bits: Option<u32>,
    p_tmax: Option<f64>,
    #[serde(rename = "P_tmax_dBm")]
    p_tmax_dbm: Option<f64>,
    sigma2_b: Option<f64>,
    sigma2_c: Option<f64>,
    sigma2_e: Option<f64>,
    #[serde(rename = "sigma2_dBm")]
    sigma2_dbm: Option<f64>,
    #[serde(rename = "sigma2_b_dBm")]
    sigma2_b_dbm: Option<f64>,
    #[serde(rename = "sigma2_c_dBm")]
    sigma2_c_dbm: Option<f64>,
    #[serde(rename = "sigma2_e_dBm")]
    sigma2_e_dbm: Option<f64>,
    p1: Option<f64>,
    omega1: Option<f64>,
    omega2: Option<f64>,
    rho: Option<f64>,
    #[serde(rename = "rho_dB")]
    rho_db: Option<f64>,
    alpha: Option<f64>,
    d_br: Option<f64>,
    d_rb: Option<f64>,
    d_rc: Option<f64>,
    d_re: Option<f64>,
    ceo_omega: Option<f64>,
    ceo_eta: Option<f64>,
    ceo_chi: Option<f64>,
    subgrad_step: Option<f64>,
    tol_outer: Option<f64>,
    tol_dual: Option<f64>,
    tol_ceo: Option<f64>,
    max_outer: Option<usize>,
    max_dual: Option<usize>,
    max_ceo: Option<usize>,
    seed: Option<u64>,
    eve_aware: Option<bool>,
}

fn one_of(key: &str, linear: Option<f64>, log: Option<f64>, conv: fn(f64) -> f64) -> Result<Option<f64>> {
    match (linear, log) {
        (Some(_), Some(_)) => Err(Error::ConfigParse(format!("both `{key}` and its dB variant are set"))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(conv(v))),
        (None, None) => Ok(None),
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| Error::ConfigParse(format!("line {} column {}: {e}", e.line(), e.column())))?;

    let mut cfg = match raw.preset.as_deref() {
        None | Some("desk") => SystemConfig::desk(),
        Some("full_scale") => SystemConfig::full_scale(),
        Some(other) => return Err(Error::ConfigParse(format!("unknown preset {other:?}"))),
    };

    cfg.p_tmax = one_of("p_tmax", raw.p_tmax, raw.p_tmax_dbm, dbm_to_watts)?
        .ok_or_else(|| Error::InvalidConfig("P_tmax required (set `p_tmax` in W or `P_tmax_dBm`)".into()))?;

    let common = raw.sigma2_dbm.map(dbm_to_watts);
    for (key, slot, lin, log) in [
        ("sigma2_b", &mut cfg.sigma2_b, raw.sigma2_b, raw.sigma2_b_dbm),
        ("sigma2_c", &mut cfg.sigma2_c, raw.sigma2_c, raw.sigma2_c_dbm),
        ("sigma2_e", &mut cfg.sigma2_e, raw.sigma2_e, raw.sigma2_e_dbm),
    ] {
        if let Some(v) = one_of(key, lin, log, dbm_to_watts)?.or(common) {
            *slot = v;
        }
    }
    if let Some(v) = one_of("rho", raw.rho, raw.rho_db, db_to_linear)? {
        cfg.rho = v;
    }

    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = raw.$f { cfg.$f = v; } )* };
    }
    take!(n_t, m, lambda_bits, p1, omega1, omega2, alpha, d_br, d_rb, d_rc, d_re);
    take!(ceo_omega, ceo_eta, ceo_chi, subgrad_step, tol_outer, tol_dual, tol_ceo);
    take!(max_outer, max_dual, max_ceo, seed, eve_aware);

    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

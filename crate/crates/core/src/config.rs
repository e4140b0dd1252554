//! Scenario, protocol and solver parameters.
//!
//! Every power is held in linear watts and every gain as a linear ratio.
//! dB/dBm values only exist at the JSON boundary (see
//! [`crate::experiment::config_io`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `10^(dbm/10)` mW expressed in watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count.
    pub n_t: usize,
    /// STAR-RIS element count.
    pub m: usize,
    /// Phase quantization bits; the phase alphabet has `2^lambda_bits` levels.
    pub lambda_bits: u32,
    pub p_tmax: f64,
    pub sigma2_b: f64,
    pub sigma2_c: f64,
    pub sigma2_e: f64,
    /// Probability that the eavesdropper sits in the reflection region.
    pub p1: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Reference power gain at 1 m.
    pub rho: f64,
    pub alpha: f64,
    pub d_br: f64,
    pub d_rb: f64,
    pub d_rc: f64,
    /// Eve to STAR distance; 80 m keeps it on the order of the user distances.
    pub d_re: f64,
    pub ceo_omega: f64,
    pub ceo_eta: f64,
    pub ceo_chi: f64,
    pub subgrad_step: f64,
    pub tol_outer: f64,
    pub tol_dual: f64,
    pub tol_ceo: f64,
    pub max_outer: usize,
    pub max_dual: usize,
    pub max_ceo: usize,
    pub seed: u64,
    /// When false the eavesdropper penalty is dropped from the design
    /// objective, giving the secrecy-unaware reference design.
    #[serde(default = "default_true")]
    pub eve_aware: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SystemConfig {
    /// Desk-scale scenario: M = 16, N_t = 4, λ = 2, P_tmax = 30 dBm.
    pub fn desk() -> Self {
        let noise = dbm_to_watts(-110.0);
        Self {
            n_t: 4,
            m: 16,
            lambda_bits: 2,
            p_tmax: dbm_to_watts(30.0),
            sigma2_b: noise,
            sigma2_c: noise,
            sigma2_e: noise,
            p1: 0.5,
            omega1: 0.5,
            omega2: 0.5,
            rho: db_to_linear(-20.0),
            alpha: 2.6,
            d_br: 400.0,
            d_rb: 75.0,
            d_rc: 100.0,
            d_re: 80.0,
            ceo_omega: 4.0,
            ceo_eta: 0.1,
            ceo_chi: 0.55,
            subgrad_step: 1e-2,
            tol_outer: 1e-3,
            tol_dual: 1e-6,
            tol_ceo: 1e-4,
            max_outer: 30,
            max_dual: 200,
            max_ceo: 100,
            seed: 0,
            eve_aware: true,
        }
    }

    /// Full-scale scenario: M = 64, N_t = 9.
    pub fn full_scale() -> Self {
        Self { m: 64, n_t: 9, ..Self::desk() }
    }

    /// Number of phase levels Q.
    pub fn levels(&self) -> u32 {
        1u32 << self.lambda_bits
    }

    pub fn p0(&self) -> f64 {
        1.0 - self.p1
    }

    /// CEO population size K = ω · 3M.
    pub fn ceo_population(&self) -> usize {
        ((self.ceo_omega * 3.0 * self.m as f64).round() as usize).max(1)
    }

    /// Elite count max(1, round(η K)).
    pub fn ceo_elite(&self) -> usize {
        ((self.ceo_eta * self.ceo_population() as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_t == 0 {
            return fail("n_t must be a positive integer".into());
        }
        if self.m == 0 {
            return fail("m must be a positive integer".into());
        }
        if self.lambda_bits == 0 || self.lambda_bits > 16 {
            return fail(format!("lambda_bits must be in 1..=16, got {}", self.lambda_bits));
        }
        if !(0.0..=1.0).contains(&self.p1) {
            return fail(format!("p1 must lie in [0,1], got {}", self.p1));
        }
        for (name, w) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(w > 0.0 && w <= 1.0) {
                return fail(format!("{name} must lie in (0,1], got {w}"));
            }
        }
        let positives = [
            ("p_tmax", self.p_tmax),
            ("sigma2_b", self.sigma2_b),
            ("sigma2_c", self.sigma2_c),
            ("sigma2_e", self.sigma2_e),
            ("rho", self.rho),
            ("alpha", self.alpha),
            ("d_br", self.d_br),
            ("d_rb", self.d_rb),
            ("d_rc", self.d_rc),
            ("d_re", self.d_re),
            ("subgrad_step", self.subgrad_step),
            ("tol_outer", self.tol_outer),
            ("tol_dual", self.tol_dual),
            ("tol_ceo", self.tol_ceo),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be strictly positive and finite, got {v}"));
            }
        }
        if !(4.0..=10.0).contains(&self.ceo_omega) {
            return fail(format!("ceo_omega must lie in [4,10], got {}", self.ceo_omega));
        }
        if !(self.ceo_eta > 0.0 && self.ceo_eta < 1.0) {
            return fail(format!("ceo_eta must lie in (0,1), got {}", self.ceo_eta));
        }
        if !(self.ceo_chi > 0.0 && self.ceo_chi < 1.0) {
            return fail(format!("ceo_chi must lie in (0,1), got {}", self.ceo_chi));
        }
        if self.ceo_eta * self.ceo_omega * 3.0 * (self.m as f64) < 1.0 {
            return fail("ceo_eta * ceo_omega * 3M must be >= 1 (elite set would be empty)".into());
        }
        if self.max_outer == 0 || self.max_dual == 0 || self.max_ceo == 0 {
            return fail("iteration caps must be positive".into());
        }
        Ok(())
    }
}

//! Rayleigh channel realizations with distance-based path loss.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::C64;

/// Large-scale gain `rho / d^alpha`.
pub fn path_loss(rho: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(rho > 0.0 && d > 0.0 && alpha > 0.0) {
        return Err(Error::Domain(format!("path loss needs rho, d, alpha > 0 (got rho={rho}, d={d}, alpha={alpha})")));
    }
    Ok(rho / d.powf(alpha))
}

/// One realization of the BS→RIS→user links. Channels carry their path loss;
/// the eavesdropper only contributes its large-scale gain since the
/// transmitter never sees Eve's small-scale fading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    /// BS → RIS, M × N_t.
    pub h_br: DMatrix<C64>,
    /// RIS → Bob, length M.
    pub h_rb: DVector<C64>,
    /// RIS → Carol, length M.
    pub h_rc: DVector<C64>,
    pub l_re: f64,
}

impl ChannelSet {
    pub fn m(&self) -> usize {
        self.h_br.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h_br.ncols()
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        if self.m() != cfg.m || self.n_t() != cfg.n_t || self.h_rb.len() != cfg.m || self.h_rc.len() != cfg.m {
            return Err(Error::Dimension(format!(
                "channel set is {}x{} (h_rb {}, h_rc {}) but config wants M={} N_t={}",
                self.m(),
                self.n_t(),
                self.h_rb.len(),
                self.h_rc.len(),
                cfg.m,
                cfg.n_t
            )));
        }
        if !(self.l_re > 0.0) {
            return Err(Error::Domain(format!("l_re must be positive, got {}", self.l_re)));
        }
        Ok(())
    }
}

/// CN(0, 1): independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `H_BR`, `h_rb`, `h_rc` (row-major order for `H_BR`, then the two
/// user vectors) and attaches Eve's path gain.
pub fn generate_channels(cfg: &SystemConfig, stream: &RngStream) -> Result<ChannelSet> {
    cfg.validate()?;
    let l_br = path_loss(cfg.rho, cfg.d_br, cfg.alpha)?.sqrt();
    let l_rb = path_loss(cfg.rho, cfg.d_rb, cfg.alpha)?.sqrt();
    let l_rc = path_loss(cfg.rho, cfg.d_rc, cfg.alpha)?.sqrt();
    let l_re = path_loss(cfg.rho, cfg.d_re, cfg.alpha)?;

    let mut rng = stream.rng();
    let mut h_br = DMatrix::zeros(cfg.m, cfg.n_t);
    for r in 0..cfg.m {
        for c in 0..cfg.n_t {
            h_br[(r, c)] = complex_gaussian(&mut rng) * l_br;
        }
    }
    let h_rb = DVector::from_fn(cfg.m, |_, _| complex_gaussian(&mut rng) * l_rb);
    let h_rc = DVector::from_fn(cfg.m, |_, _| complex_gaussian(&mut rng) * l_rc);
    Ok(ChannelSet { h_br, h_rb, h_rc, l_re })
}

/// Small-scale part of Eve's channel; the caller applies `sqrt(l_re)`.
pub fn sample_eve_smallscale<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DVector<C64> {
    DVector::from_fn(m, |_, _| complex_gaussian(rng))
}

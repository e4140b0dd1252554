//! Active precoders and STAR-RIS coefficients.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Relative slack allowed on the power budget.
pub const POWER_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerPair {
    pub w_b: DVector<C64>,
    pub w_c: DVector<C64>,
}

impl BeamformerPair {
    pub fn zeros(n_t: usize) -> Self {
        Self { w_b: DVector::zeros(n_t), w_c: DVector::zeros(n_t) }
    }

    pub fn power(&self) -> f64 {
        self.w_b.norm_squared() + self.w_c.norm_squared()
    }

    pub fn is_feasible(&self, p_tmax: f64) -> bool {
        self.power() <= p_tmax * (1.0 + POWER_SLACK)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { w_b: &self.w_b * C64::from(factor), w_c: &self.w_c * C64::from(factor) }
    }
}

/// Angle of phase index `idx ∈ {1..Q}`: `idx · 2π/Q`, with `Q` mapped to 0.
pub fn phase_angle(idx: u32, levels: u32) -> f64 {
    TAU * f64::from(idx % levels) / f64::from(levels)
}

pub fn phase_factor(idx: u32, levels: u32) -> C64 {
    C64::from_polar(1.0, phase_angle(idx, levels))
}

/// Energy-splitting coefficients. Phase indices are 1-based over
/// `{1, …, levels}`; transmission amplitudes are `1 − beta_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarCoefficients {
    pub beta_r: Vec<f64>,
    pub phase_idx_r: Vec<u32>,
    pub phase_idx_t: Vec<u32>,
    pub levels: u32,
}

impl StarCoefficients {
    pub fn m(&self) -> usize {
        self.beta_r.len()
    }

    pub fn beta_t(&self, m: usize) -> f64 {
        1.0 - self.beta_r[m]
    }

    /// Uniform feasible draw: phases uniform over the alphabet, `beta_r` uniform on (0,1].
    pub fn random<R: Rng + ?Sized>(m: usize, levels: u32, rng: &mut R) -> Self {
        let beta_r = (0..m).map(|_| 1.0 - rng.random::<f64>()).collect();
        let phase_idx_r = (0..m).map(|_| rng.random_range(1..=levels)).collect();
        let phase_idx_t = (0..m).map(|_| rng.random_range(1..=levels)).collect();
        Self { beta_r, phase_idx_r, phase_idx_t, levels }
    }

    /// Checks amplitude range and phase alphabet membership.
    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.phase_idx_r.len() != m || self.phase_idx_t.len() != m {
            return Err(Error::Dimension(format!(
                "phase index vectors ({}, {}) do not match M = {m}",
                self.phase_idx_r.len(),
                self.phase_idx_t.len()
            )));
        }
        if let Some(b) = self.beta_r.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(Error::Domain(format!("reflection amplitude {b} outside (0,1]")));
        }
        let bad_phase = |i: &&u32| **i == 0 || **i > self.levels;
        if let Some(i) = self.phase_idx_r.iter().chain(&self.phase_idx_t).find(bad_phase) {
            return Err(Error::Domain(format!("phase index {i} outside 1..={}", self.levels)));
        }
        Ok(())
    }

    pub fn reflection_factor(&self, m: usize) -> C64 {
        phase_factor(self.phase_idx_r[m], self.levels) * self.beta_r[m].sqrt()
    }

    pub fn transmission_factor(&self, m: usize) -> C64 {
        phase_factor(self.phase_idx_t[m], self.levels) * self.beta_t(m).max(0.0).sqrt()
    }
}

/// Diagonal reflection and transmission matrices `(U_r, U_t)`.
pub fn build_surface_matrices(coeffs: &StarCoefficients) -> (DMatrix<C64>, DMatrix<C64>) {
    let m = coeffs.m();
    let u_r = DVector::from_fn(m, |i, _| coeffs.reflection_factor(i));
    let u_t = DVector::from_fn(m, |i, _| coeffs.transmission_factor(i));
    (DMatrix::from_diagonal(&u_r), DMatrix::from_diagonal(&u_t))
}

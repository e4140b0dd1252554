//! Cross-entropy search over discrete phases and reflection amplitudes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{BeamformerPair, StarCoefficients};
use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::optimizer::conventional_ris_project;
use crate::rates::ObjectiveEvaluator;
use crate::rng::RngStream;

/// Gaussian redraws before an out-of-range amplitude falls back to a uniform draw.
pub const AMPLITUDE_RETRIES: usize = 64;

const ROW_DRIFT: f64 = 1e-9;

/// Sampling distribution. Rows `0..M` of `p` drive the reflection phases,
/// rows `M..2M` the transmission phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltingParams {
    pub p: DMatrix<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl TiltingParams {
    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn levels(&self) -> u32 {
        self.p.ncols() as u32
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.p.row(r).iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub coeffs: StarCoefficients,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct CeoState {
    pub params: TiltingParams,
    pub best: Candidate,
    pub iteration: usize,
}

/// Which surface the search is allowed to produce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    #[default]
    Star,
    /// Two half-size single-function surfaces: first half reflect-only,
    /// second half transmit-only.
    Conventional,
}

pub fn init_tilting(m: usize, q: usize) -> TiltingParams {
    TiltingParams { p: DMatrix::from_element(2 * m, q, 1.0 / q as f64), mu: vec![0.5; m], sigma: vec![1.0; m] }
}

/// Inverse-CDF lookup: smallest 1-based `n` with `Σ_{q ≤ n} row[q] ≥ a`.
pub fn phase_from_uniform(row: &[f64], a: f64) -> u32 {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if acc >= a {
            return i as u32 + 1;
        }
    }
    // rounding left the cumulative sum short of `a`
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1) as u32 + 1
}

pub fn sample_phase<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> u32 {
    let a = 1.0 - rng.random::<f64>();
    phase_from_uniform(row, a)
}

pub fn sample_amplitude<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    let feasible = |x: f64| x > 0.0 && x <= 1.0;
    if sigma == 0.0 {
        if feasible(mu) {
            return mu;
        }
    } else if let Ok(normal) = Normal::new(mu, sigma) {
        for _ in 0..AMPLITUDE_RETRIES {
            let x = normal.sample(rng);
            if feasible(x) {
                return x;
            }
        }
    }
    1.0 - rng.random::<f64>()
}

/// Phase rows copied out of the column-major matrix once per iteration.
fn phase_rows(params: &TiltingParams) -> Vec<Vec<f64>> {
    (0..params.p.nrows()).map(|r| params.row(r)).collect()
}

fn draw_coeffs<R: Rng + ?Sized>(
    params: &TiltingParams,
    rows: &[Vec<f64>],
    arch: Architecture,
    rng: &mut R,
) -> Result<StarCoefficients> {
    let m = params.m();
    let phase_idx_r = (0..m).map(|i| sample_phase(&rows[i], rng)).collect();
    let phase_idx_t = (0..m).map(|i| sample_phase(&rows[m + i], rng)).collect();
    let beta_r = (0..m).map(|i| sample_amplitude(params.mu[i], params.sigma[i], rng)).collect();
    let coeffs = StarCoefficients { beta_r, phase_idx_r, phase_idx_t, levels: params.levels() };
    match arch {
        Architecture::Star => Ok(coeffs),
        Architecture::Conventional => conventional_ris_project(&coeffs),
    }
}

pub fn sample_candidate<R: Rng + ?Sized>(
    params: &TiltingParams,
    ch: &ChannelSet,
    bf: &BeamformerPair,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Candidate {
    let eval = ObjectiveEvaluator::new(ch, bf);
    let coeffs = draw_coeffs(params, &phase_rows(params), Architecture::Star, rng).expect("star sampling cannot fail");
    let objective = eval.objective(&coeffs, cfg);
    Candidate { coeffs, objective }
}

/// Maximum-likelihood refit on the elite set: phase frequencies, amplitude
/// mean, and population standard deviation around the new mean.
pub fn update_tilting(elites: &[Candidate], k_elite: usize) -> Result<TiltingParams> {
    let elites = &elites[..k_elite.min(elites.len())];
    let first = elites.first().ok_or(Error::EmptyElite)?;
    let m = first.coeffs.m();
    let q = first.coeffs.levels as usize;
    let n = elites.len() as f64;
    let mut p = DMatrix::zeros(2 * m, q);
    let mut mu = vec![0.0; m];
    for (k, e) in elites.iter().enumerate() {
        for i in 0..m {
            p[(i, e.coeffs.phase_idx_r[i] as usize - 1)] += 1.0;
            p[(m + i, e.coeffs.phase_idx_t[i] as usize - 1)] += 1.0;
            // running mean: exact when all elites agree
            mu[i] += (e.coeffs.beta_r[i] - mu[i]) / (k + 1) as f64;
        }
    }
    p /= n;
    let sigma =
        (0..m).map(|i| (elites.iter().map(|e| (e.coeffs.beta_r[i] - mu[i]).powi(2)).sum::<f64>() / n).sqrt()).collect();
    Ok(TiltingParams { p, mu, sigma })
}

/// `chi · new + (1 − chi) · old`, entrywise.
pub fn smooth(new: &TiltingParams, old: &TiltingParams, chi: f64) -> TiltingParams {
    let mix = |a: f64, b: f64| chi * a + (1.0 - chi) * b;
    let mut p = new.p.zip_map(&old.p, mix);
    for mut row in p.row_iter_mut() {
        let s: f64 = row.sum();
        if (s - 1.0).abs() > ROW_DRIFT {
            row /= s;
        }
    }
    TiltingParams {
        p,
        mu: new.mu.iter().zip(&old.mu).map(|(a, b)| mix(*a, *b)).collect(),
        sigma: new.sigma.iter().zip(&old.sigma).map(|(a, b)| mix(*a, *b)).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct PassiveOutcome {
    pub coeffs: StarCoefficients,
    pub objective: f64,
    /// Best-so-far objective after each iteration.
    pub trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn solve_passive(
    ch: &ChannelSet,
    bf: &BeamformerPair,
    coeffs_init: &StarCoefficients,
    cfg: &SystemConfig,
    stream: &RngStream,
) -> Result<PassiveOutcome> {
    solve_passive_with(ch, bf, coeffs_init, cfg, stream, Architecture::Star)
}

pub fn solve_passive_with(
    ch: &ChannelSet,
    bf: &BeamformerPair,
    coeffs_init: &StarCoefficients,
    cfg: &SystemConfig,
    stream: &RngStream,
    arch: Architecture,
) -> Result<PassiveOutcome> {
    cfg.validate()?;
    let eval = ObjectiveEvaluator::new(ch, bf);
    let init = match arch {
        Architecture::Star => coeffs_init.clone(),
        Architecture::Conventional => conventional_ris_project(coeffs_init)?,
    };
    init.validate()?;
    let k = cfg.ceo_population();
    let k_elite = cfg.ceo_elite();
    let mut state = CeoState {
        params: init_tilting(cfg.m, cfg.levels() as usize),
        best: Candidate { objective: eval.objective(&init, cfg), coeffs: init },
        iteration: 0,
    };

    let mut trajectory = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut converged = false;
    for iter in 0..cfg.max_ceo {
        state.iteration = iter + 1;
        let params = &state.params;
        let rows = phase_rows(params);
        let mut population: Vec<Candidate> = (0..k)
            .into_par_iter()
            .map(|idx| {
                if iter == 0 && idx == 0 {
                    return Ok(state.best.clone());
                }
                let mut rng = stream.substream2(iter as u64, idx as u64).rng();
                let coeffs = draw_coeffs(params, &rows, arch, &mut rng)?;
                Ok(Candidate { objective: eval.objective(&coeffs, cfg), coeffs })
            })
            .collect::<Result<_>>()?;
        population.sort_by(|a, b| b.objective.total_cmp(&a.objective));

        let refit = update_tilting(&population, k_elite)?;
        state.params = smooth(&refit, &state.params, cfg.ceo_chi);

        let top = population[0].objective;
        if top > state.best.objective {
            state.best = population.swap_remove(0);
        }
        trajectory.push(state.best.objective);

        // Both the incumbent and the per-iteration winner must settle; the
        // incumbent alone stalls when it is carried over from an earlier call.
        if let Some((prev_best, prev_top)) = prev {
            if (state.best.objective - prev_best).abs() < cfg.tol_ceo && (top - prev_top).abs() < cfg.tol_ceo {
                converged = true;
                break;
            }
        }
        prev = Some((state.best.objective, top));
    }

    Ok(PassiveOutcome {
        objective: state.best.objective,
        coeffs: state.best.coeffs,
        iterations: state.iteration,
        trajectory,
        converged,
    })
}

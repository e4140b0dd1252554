//! Alternating optimization of precoders and surface, plus the two baselines.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::active::{solve_active_ctx, ActiveContext};
use crate::beam::{BeamformerPair, StarCoefficients};
use crate::ceo::{solve_passive_with, Architecture};
use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rates::{weighted_objective, RateReport};
use crate::rng::{streams, RngStream};
use crate::C64;

/// Amplitude kept on the switched-off side of a single-function element.
pub const CONVENTIONAL_DELTA: f64 = 1e-6;

/// Relative eigenvalue floor of the 2×2 Gram matrix below which ZF is rejected.
const ZF_RANK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    Zf,
    ConventionalRis,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Zf, Scheme::ConventionalRis];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Zf => "zf",
            Scheme::ConventionalRis => "conventional_ris",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptResult {
    pub bf: BeamformerPair,
    pub coeffs: StarCoefficients,
    /// Objective at the initial point followed by one entry per outer iteration.
    pub trajectory: Vec<f64>,
    pub rates: RateReport,
    pub outer_iterations: usize,
    pub converged: bool,
}

/// Precoders along the matched directions `g_b`, `g_c` with half the budget each.
pub fn matched_init(ch: &ChannelSet, coeffs: &StarCoefficients, cfg: &SystemConfig) -> BeamformerPair {
    let ctx = ActiveContext::new(ch, coeffs, cfg);
    let along = |g: &DVector<C64>| {
        let n = g.norm();
        if n > 0.0 {
            g * C64::from((0.5 * cfg.p_tmax).sqrt() / n)
        } else {
            let mut e = DVector::zeros(g.len());
            e[0] = C64::from((0.5 * cfg.p_tmax).sqrt());
            e
        }
    };
    BeamformerPair { w_b: along(&ctx.g_b), w_c: along(&ctx.g_c) }
}

fn initial_coeffs(cfg: &SystemConfig, stream: &RngStream, arch: Architecture) -> Result<StarCoefficients> {
    let coeffs = StarCoefficients::random(cfg.m, cfg.levels(), &mut stream.substream(streams::INIT).rng());
    match arch {
        Architecture::Star => Ok(coeffs),
        Architecture::Conventional => conventional_ris_project(&coeffs),
    }
}

pub fn optimize(ch: &ChannelSet, cfg: &SystemConfig, stream: &RngStream) -> Result<OptResult> {
    optimize_scheme(ch, cfg, stream, Scheme::Proposed)
}

pub fn optimize_scheme(ch: &ChannelSet, cfg: &SystemConfig, stream: &RngStream, scheme: Scheme) -> Result<OptResult> {
    cfg.validate()?;
    ch.check_dims(cfg)?;
    match scheme {
        Scheme::Proposed => alternate(ch, cfg, stream, Architecture::Star),
        Scheme::ConventionalRis => alternate(ch, cfg, stream, Architecture::Conventional),
        Scheme::Zf => alternate_zf(ch, cfg, stream),
    }
}

fn alternate(ch: &ChannelSet, cfg: &SystemConfig, stream: &RngStream, arch: Architecture) -> Result<OptResult> {
    let mut coeffs = initial_coeffs(cfg, stream, arch)?;
    let mut bf = matched_init(ch, &coeffs, cfg);
    let mut trajectory = vec![weighted_objective(ch, &coeffs, &bf, cfg)];
    let mut converged = false;
    let mut inner_ok = true;
    let mut outer = 0;
    while outer < cfg.max_outer {
        outer += 1;
        let active = solve_active_ctx(&ActiveContext::new(ch, &coeffs, cfg), &bf)?;
        inner_ok &= active.converged;
        bf = active.bf;
        let passive =
            solve_passive_with(ch, &bf, &coeffs, cfg, &stream.substream2(streams::SOLVER, outer as u64), arch)?;
        coeffs = passive.coeffs;
        let prev = *trajectory.last().unwrap();
        trajectory.push(passive.objective);
        if (passive.objective - prev).abs() < cfg.tol_outer {
            converged = true;
            break;
        }
    }
    Ok(OptResult {
        rates: RateReport::compute(ch, &coeffs, &bf, cfg),
        bf,
        coeffs,
        trajectory,
        outer_iterations: outer,
        converged: converged && inner_ok,
    })
}

/// ZF precoding with a searched power split, alternated with the surface
/// search. The best point seen is returned.
fn alternate_zf(ch: &ChannelSet, cfg: &SystemConfig, stream: &RngStream) -> Result<OptResult> {
    let mut coeffs = initial_coeffs(cfg, stream, Architecture::Star)?;
    let zf_at = |coeffs: &StarCoefficients| -> Result<BeamformerPair> {
        let (p_b, p_c) = zf_power_split(ch, coeffs, cfg)?;
        zf_beamformers(ch, coeffs, p_b, p_c)
    };
    let mut bf = zf_at(&coeffs)?;
    let first = weighted_objective(ch, &coeffs, &bf, cfg);
    let mut trajectory = vec![first];
    let mut best = (first, bf.clone(), coeffs.clone());
    let mut converged = false;
    let mut outer = 0;
    while outer < cfg.max_outer {
        outer += 1;
        let passive = solve_passive_with(
            ch,
            &bf,
            &coeffs,
            cfg,
            &stream.substream2(streams::SOLVER, outer as u64),
            Architecture::Star,
        )?;
        coeffs = passive.coeffs;
        bf = zf_at(&coeffs)?;
        let obj = weighted_objective(ch, &coeffs, &bf, cfg);
        if obj > best.0 {
            best = (obj, bf.clone(), coeffs.clone());
        }
        let prev = *trajectory.last().unwrap();
        trajectory.push(best.0);
        if (best.0 - prev).abs() < cfg.tol_outer {
            converged = true;
            break;
        }
    }
    let (_, bf, coeffs) = best;
    Ok(OptResult {
        rates: RateReport::compute(ch, &coeffs, &bf, cfg),
        bf,
        coeffs,
        trajectory,
        outer_iterations: outer,
        converged,
    })
}

/// Pseudoinverse precoders for the stacked effective channel, normalized to
/// the requested per-user powers.
pub fn zf_beamformers(ch: &ChannelSet, coeffs: &StarCoefficients, p_b: f64, p_c: f64) -> Result<BeamformerPair> {
    let cfg = SystemConfig { m: ch.m(), n_t: ch.n_t(), ..SystemConfig::default() };
    let ctx = ActiveContext::new(ch, coeffs, &cfg);
    let n = ctx.n_t();
    let h = DMatrix::from_fn(2, n, |r, c| if r == 0 { ctx.g_b[c].conj() } else { ctx.g_c[c].conj() });
    let gram = &h * h.adjoint();
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if n < 2 || !(hi > 0.0) || lo <= ZF_RANK_TOL * hi {
        return Err(Error::ZfInfeasible);
    }
    let inv = gram.try_inverse().ok_or(Error::ZfInfeasible)?;
    let w = h.adjoint() * inv;
    let col = |k: usize, p: f64| {
        let v = w.column(k).into_owned();
        let nv = v.norm();
        v * C64::from(p.sqrt() / nv)
    };
    Ok(BeamformerPair { w_b: col(0, p_b), w_c: col(1, p_c) })
}

/// Grid search of `p_b ∈ {0.01, …, 0.99} · P_tmax`; first maximizer wins.
pub fn zf_power_split(ch: &ChannelSet, coeffs: &StarCoefficients, cfg: &SystemConfig) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 1..=99 {
        let p_b = cfg.p_tmax * k as f64 / 100.0;
        let p_c = cfg.p_tmax - p_b;
        let bf = zf_beamformers(ch, coeffs, p_b, p_c)?;
        let obj = weighted_objective(ch, coeffs, &bf, cfg);
        if best.is_none_or(|b| obj > b.0) {
            best = Some((obj, p_b, p_c));
        }
    }
    let (_, p_b, p_c) = best.expect("grid is nonempty");
    Ok((p_b, p_c))
}

/// Forces the first half of the elements to reflect only and the second half
/// to transmit only. Phases are kept.
pub fn conventional_ris_project(coeffs: &StarCoefficients) -> Result<StarCoefficients> {
    let m = coeffs.m();
    if !m.is_multiple_of(2) {
        return Err(Error::OddElementCount(m));
    }
    let mut out = coeffs.clone();
    for (i, b) in out.beta_r.iter_mut().enumerate() {
        *b = if i < m / 2 { 1.0 - CONVENTIONAL_DELTA } else { CONVENTIONAL_DELTA };
    }
    Ok(out)
}

/// Nearest point of the phase alphabet on the circle; ties go to the smaller
/// index. Phases are expected in `(0, 2π]`.
pub fn discretize_phases(phases: &[f64], levels: u32) -> Vec<u32> {
    let q = f64::from(levels);
    phases
        .iter()
        .map(|phi| {
            let x = phi / TAU * q;
            let mut best = (f64::INFINITY, levels);
            for idx in 1..=levels {
                let d = (x - f64::from(idx)).rem_euclid(q);
                let d = d.min(q - d);
                if d < best.0 - 1e-12 {
                    best = (d, idx);
                }
            }
            best.1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channels;

    fn setup(m: usize, n_t: usize, seed: u64) -> (SystemConfig, ChannelSet, StarCoefficients) {
        let cfg = SystemConfig { m, n_t, seed, ..SystemConfig::desk() };
        let ch = generate_channels(&cfg, &RngStream::new(seed, streams::CHANNEL)).unwrap();
        let coeffs = StarCoefficients::random(m, cfg.levels(), &mut RngStream::new(seed, 5).rng());
        (cfg, ch, coeffs)
    }

    #[test]
    fn optimize_is_monotone_and_feasible() {
        let (cfg, ch, _) = setup(16, 4, 42);
        let out = optimize(&ch, &cfg, &RngStream::new(42, streams::SOLVER)).unwrap();
        for w in out.trajectory.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "{:?}", out.trajectory);
        }
        assert!(out.bf.is_feasible(cfg.p_tmax));
        out.coeffs.validate().unwrap();
        assert_eq!(out.trajectory.len(), out.outer_iterations + 1);
        assert_eq!(*out.trajectory.last().unwrap(), out.rates.objective);
    }

    #[test]
    fn zf_nulls_cross_terms() {
        let (cfg, ch, coeffs) = setup(8, 4, 1);
        let bf = zf_beamformers(&ch, &coeffs, 0.3, 0.7).unwrap();
        let ctx = ActiveContext::new(&ch, &coeffs, &cfg);
        let direct = ctx.g_b.dotc(&bf.w_b).norm();
        assert!(ctx.g_b.dotc(&bf.w_c).norm() < 1e-10 * direct);
        assert!(ctx.g_c.dotc(&bf.w_b).norm() < 1e-10 * ctx.g_c.dotc(&bf.w_c).norm());
        assert!((bf.w_b.norm_squared() - 0.3).abs() < 1e-14);
        assert!((bf.w_c.norm_squared() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn zf_on_orthonormal_rows() {
        // two elements, both reflect-only with unit gains: g_b = e1, g_c = e2 after scaling
        let ch = ChannelSet {
            h_br: DMatrix::identity(2, 2),
            h_rb: DVector::from_vec(vec![C64::new(1.0, 0.0), C64::default()]),
            h_rc: DVector::from_vec(vec![C64::default(), C64::new(0.0, 1.0)]),
            l_re: 1.0,
        };
        let coeffs =
            StarCoefficients { beta_r: vec![0.5, 0.5], phase_idx_r: vec![4, 4], phase_idx_t: vec![4, 4], levels: 4 };
        let bf = zf_beamformers(&ch, &coeffs, 1.0, 1.0).unwrap();
        assert!((bf.w_b[0].norm() - 1.0).abs() < 1e-14 && bf.w_b[1].norm() < 1e-14);
        assert!((bf.w_c[1].norm() - 1.0).abs() < 1e-14 && bf.w_c[0].norm() < 1e-14);
    }

    #[test]
    fn zf_rejects_rank_deficient_channel() {
        let (_, mut ch, coeffs) = setup(8, 4, 2);
        ch.h_rc = ch.h_rb.clone();
        let same = StarCoefficients { beta_r: vec![0.5; 8], phase_idx_t: coeffs.phase_idx_r.clone(), ..coeffs };
        assert!(matches!(zf_beamformers(&ch, &same, 0.5, 0.5), Err(Error::ZfInfeasible)));
    }

    #[test]
    fn zf_split_is_argmax() {
        let (cfg, ch, coeffs) = setup(8, 4, 3);
        let (p_b, p_c) = zf_power_split(&ch, &coeffs, &cfg).unwrap();
        assert_eq!(p_b + p_c, cfg.p_tmax);
        let at = |pb: f64| {
            weighted_objective(&ch, &coeffs, &zf_beamformers(&ch, &coeffs, pb, cfg.p_tmax - pb).unwrap(), &cfg)
        };
        let chosen = at(p_b);
        for k in 1..=99 {
            assert!(chosen >= at(cfg.p_tmax * k as f64 / 100.0));
        }
    }

    #[test]
    fn zf_split_favours_bob_when_carol_is_ignored() {
        let (mut cfg, ch, coeffs) = setup(8, 4, 4);
        cfg.omega2 = 1e-6;
        let (p_b, _) = zf_power_split(&ch, &coeffs, &cfg).unwrap();
        let at = |pb: f64| {
            weighted_objective(&ch, &coeffs, &zf_beamformers(&ch, &coeffs, pb, cfg.p_tmax - pb).unwrap(), &cfg)
        };
        assert!(at(p_b) >= at(0.5 * cfg.p_tmax));
    }

    #[test]
    fn conventional_projection() {
        let (_, _, coeffs) = setup(8, 4, 5);
        let p = conventional_ris_project(&coeffs).unwrap();
        assert_eq!(p.beta_r[0], 1.0 - 1e-6);
        assert_eq!(p.beta_r[7], 1e-6);
        assert_eq!(conventional_ris_project(&p).unwrap(), p);
        assert_eq!(p.phase_idx_r, coeffs.phase_idx_r);
        for i in 0..8 {
            assert!((p.beta_r[i] + p.beta_t(i) - 1.0).abs() < 1e-15);
        }
        let odd =
            StarCoefficients { beta_r: vec![0.5; 3], phase_idx_r: vec![1; 3], phase_idx_t: vec![1; 3], levels: 4 };
        assert!(matches!(conventional_ris_project(&odd), Err(Error::OddElementCount(3))));
    }

    #[test]
    fn phase_discretization() {
        let q = 4;
        let step = TAU / 4.0;
        assert_eq!(discretize_phases(&[step], q), vec![1]);
        assert_eq!(discretize_phases(&[1.5 * step], q), vec![1]);
        assert_eq!(discretize_phases(&[0.9 * TAU], q), vec![4]);
        assert_eq!(discretize_phases(&[TAU, 0.01], q), vec![4, 4]);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("sdr".parse::<Scheme>().is_err());
    }
}

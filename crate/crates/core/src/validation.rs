//! Monte-Carlo and finite-difference oracles.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{lagrangian, ActiveContext, AuxVars};
use crate::beam::{BeamformerPair, StarCoefficients};
use crate::channel::{generate_channels, sample_eve_smallscale, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::optimizer::{matched_init, optimize, OptResult};
use crate::rates::{eaves_rate_from_projections, LinkGains};
use crate::rng::{streams, RngStream};
use crate::C64;

pub const MIN_MC_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// Sample mean and `std / √n` with the unbiased sample variance.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { mean, std_error: (var / n as f64).sqrt(), n_samples: n }
    }
}

/// Draw `i` uses substream `i`, so the estimate does not depend on scheduling.
pub fn monte_carlo<F>(n: usize, stream: &RngStream, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let xs: Vec<f64> = (0..n).into_par_iter().map(|i| f(&mut stream.substream(i as u64).rng())).collect();
    McEstimate::from_samples(&xs)
}

/// Expected wiretap rate over the region indicator and Eve's small-scale fading.
pub fn empirical_avg_eaves_rate(
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    bf: &BeamformerPair,
    cfg: &SystemConfig,
    n: usize,
    stream: &RngStream,
) -> Result<McEstimate> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::InvalidConfig(format!("need at least {MIN_MC_SAMPLES} Monte-Carlo samples, got {n}")));
    }
    let x_b = &ch.h_br * &bf.w_b;
    let x_c = &ch.h_br * &bf.w_c;
    let m = ch.m();
    Ok(monte_carlo(n, stream, |rng| {
        let reflect = rng.random::<f64>() < cfg.p1;
        let h = sample_eve_smallscale(m, rng);
        eaves_rate_from_projections(&h, ch.l_re, reflect, coeffs, &x_b, &x_c, cfg.sigma2_e)
    }))
}

/// Large-system value of the same expectation.
pub fn asymptotic_eaves_rate(
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    bf: &BeamformerPair,
    cfg: &SystemConfig,
) -> f64 {
    LinkGains::compute(ch, coeffs, bf).eve_penalty(cfg, ch.l_re)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub m: usize,
    pub median_rel_error: f64,
}

/// For each `M`: fresh channels, a random surface and matched precoders per
/// seed; returns the median over seeds of `|MC − asymptotic| / asymptotic`.
pub fn asymptotic_error_curve(
    cfg_template: &SystemConfig,
    m_list: &[usize],
    n: usize,
    seeds: &[u64],
) -> Result<Vec<ErrorPoint>> {
    m_list
        .iter()
        .map(|&m| {
            let cfg = SystemConfig { m, ..cfg_template.clone() };
            let mut errs = seeds
                .iter()
                .map(|&seed| {
                    let (ch, coeffs, bf) = random_design(&cfg, seed)?;
                    let mc = empirical_avg_eaves_rate(
                        &ch,
                        &coeffs,
                        &bf,
                        &cfg,
                        n,
                        &RngStream::new(seed, streams::EAVESDROPPER),
                    )?;
                    let asym = asymptotic_eaves_rate(&ch, &coeffs, &bf, &cfg);
                    Ok((mc.mean - asym).abs() / asym)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ErrorPoint { m, median_rel_error: median(&mut errs) })
        })
        .collect()
}

/// Channels, a uniformly random surface and matched precoders for `seed`.
pub fn random_design(cfg: &SystemConfig, seed: u64) -> Result<(ChannelSet, StarCoefficients, BeamformerPair)> {
    let ch = generate_channels(cfg, &RngStream::new(seed, streams::CHANNEL))?;
    let coeffs = StarCoefficients::random(cfg.m, cfg.levels(), &mut RngStream::new(seed, streams::INIT).rng());
    let bf = matched_init(&ch, &coeffs, cfg);
    Ok((ch, coeffs, bf))
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Reflection,
    Transmission,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuppressionRow {
    pub region: Region,
    pub rate_without_security: f64,
    pub rate_with_security: f64,
}

/// Reference design that ignores the eavesdropper: same optimizer and
/// weights, wiretap penalty removed from the objective.
pub fn no_security_config(cfg: &SystemConfig) -> SystemConfig {
    SystemConfig { eve_aware: false, ..cfg.clone() }
}

/// Instantaneous wiretap rates of two designs against the same Eve draws.
/// Draw `i` of each region uses the same small-scale vector for both designs.
pub fn wiretap_rates(
    ch: &ChannelSet,
    secure: &OptResult,
    reference: &OptResult,
    cfg: &SystemConfig,
    n_channels: usize,
    stream: &RngStream,
) -> Vec<SuppressionRow> {
    let proj = |r: &OptResult| (&ch.h_br * &r.bf.w_b, &ch.h_br * &r.bf.w_c);
    let (sb, sc) = proj(secure);
    let (rb, rc) = proj(reference);
    let m = ch.m();
    [Region::Reflection, Region::Transmission]
        .into_iter()
        .flat_map(|region| {
            let reflect = region == Region::Reflection;
            let key = if reflect { 1 } else { 0 };
            let (sb, sc, rb, rc) = (&sb, &sc, &rb, &rc);
            (0..n_channels).map(move |i| {
                let h: DVector<C64> = sample_eve_smallscale(m, &mut stream.substream2(key, i as u64).rng());
                SuppressionRow {
                    region,
                    rate_without_security: eaves_rate_from_projections(
                        &h,
                        ch.l_re,
                        reflect,
                        &reference.coeffs,
                        rb,
                        rc,
                        cfg.sigma2_e,
                    ),
                    rate_with_security: eaves_rate_from_projections(
                        &h,
                        ch.l_re,
                        reflect,
                        &secure.coeffs,
                        sb,
                        sc,
                        cfg.sigma2_e,
                    ),
                }
            })
        })
        .collect()
}

/// Optimizes the secure and the reference design on `ch`, then tabulates
/// `n_channels` Eve draws per region.
pub fn wiretap_suppression(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    n_channels: usize,
    stream: &RngStream,
) -> Result<Vec<SuppressionRow>> {
    let solver = stream.substream(streams::SOLVER);
    let secure = optimize(ch, cfg, &solver)?;
    let reference_cfg = no_security_config(cfg);
    let reference = optimize(ch, &reference_cfg, &solver)?;
    Ok(wiretap_rates(ch, &secure, &reference, cfg, n_channels, &stream.substream(streams::EAVESDROPPER)))
}

/// Central differences, one coordinate at a time.
pub fn finite_diff_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `[Re w_b, Im w_b, Re w_c, Im w_c]`.
pub fn flatten_pair(bf: &BeamformerPair) -> Vec<f64> {
    let mut out = Vec::with_capacity(4 * bf.w_b.len());
    for w in [&bf.w_b, &bf.w_c] {
        out.extend(w.iter().map(|z| z.re));
        out.extend(w.iter().map(|z| z.im));
    }
    out
}

pub fn unflatten_pair(x: &[f64]) -> BeamformerPair {
    let n = x.len() / 4;
    let vec = |off: usize| DVector::from_fn(n, |i, _| C64::new(x[off + i], x[off + n + i]));
    BeamformerPair { w_b: vec(0), w_c: vec(2 * n) }
}

pub fn lagrangian_gradient(ctx: &ActiveContext, aux: &AuxVars, bf: &BeamformerPair, varrho: f64) -> Vec<f64> {
    let x = flatten_pair(bf);
    let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    finite_diff_gradient(|y| lagrangian(ctx, aux, &unflatten_pair(y), varrho), &x, 1e-6 * scale)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;

    #[test]
    fn fd_of_quadratic_and_affine() {
        let g = finite_diff_gradient(|x| x[0] * x[0] + x[1] * x[1], &[1.0, 2.0], 1e-6);
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
        let g = finite_diff_gradient(|x| 3.0 * x[0] - 0.5 * x[1] + 7.0, &[0.3, -1.1], 1e-3);
        assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn flatten_round_trip() {
        let mut rng = RngStream::new(0, 0).rng();
        let bf = BeamformerPair {
            w_b: DVector::from_fn(3, |_, _| complex_gaussian(&mut rng)),
            w_c: DVector::from_fn(3, |_, _| complex_gaussian(&mut rng)),
        };
        assert_eq!(unflatten_pair(&flatten_pair(&bf)), bf);
    }

    #[test]
    fn mc_matches_known_expectation() {
        let mut hits = 0;
        for seed in 0..40 {
            let est = monte_carlo(2000, &RngStream::new(seed, 0), |rng| complex_gaussian(rng).norm_sqr());
            if (est.mean - 1.0).abs() <= 3.0 * est.std_error {
                hits += 1;
            }
        }
        assert!(hits >= 38, "{hits}/40");
    }

    #[test]
    fn mc_standard_error_definition() {
        let est = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(est.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((est.std_error - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn silent_bob_precoder_leaks_nothing() {
        let cfg = SystemConfig { m: 8, ..SystemConfig::desk() };
        let (ch, coeffs, mut bf) = random_design(&cfg, 1).unwrap();
        bf.w_b.fill(C64::default());
        let est = empirical_avg_eaves_rate(&ch, &coeffs, &bf, &cfg, 200, &RngStream::new(1, 3)).unwrap();
        assert_eq!((est.mean, est.std_error), (0.0, 0.0));
    }

    #[test]
    fn certain_reflection_matches_conditional_estimate() {
        let cfg = SystemConfig { m: 8, p1: 1.0, ..SystemConfig::desk() };
        let (ch, coeffs, bf) = random_design(&cfg, 2).unwrap();
        let stream = RngStream::new(2, 3);
        let est = empirical_avg_eaves_rate(&ch, &coeffs, &bf, &cfg, 500, &stream).unwrap();
        let x_b = &ch.h_br * &bf.w_b;
        let x_c = &ch.h_br * &bf.w_c;
        let cond = monte_carlo(500, &stream, |rng| {
            let _ = rng.random::<f64>();
            let h = sample_eve_smallscale(8, rng);
            eaves_rate_from_projections(&h, ch.l_re, true, &coeffs, &x_b, &x_c, cfg.sigma2_e)
        });
        assert_eq!(est, cond);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let cfg = SystemConfig { m: 4, ..SystemConfig::desk() };
        let (ch, coeffs, bf) = random_design(&cfg, 0).unwrap();
        assert!(empirical_avg_eaves_rate(&ch, &coeffs, &bf, &cfg, 99, &RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn error_curve_shape() {
        let cfg = SystemConfig::desk();
        let rows = asymptotic_error_curve(&cfg, &[4, 8], 200, &[0, 1, 2]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.median_rel_error.is_finite() && r.median_rel_error >= 0.0));
    }

    #[test]
    fn suppression_table_shape() {
        let cfg = SystemConfig { m: 8, max_outer: 3, ..SystemConfig::desk() };
        let (ch, _, _) = random_design(&cfg, 3).unwrap();
        let rows = wiretap_suppression(&ch, &cfg, 50, &RngStream::new(3, 0)).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().all(|r| r.rate_with_security >= 0.0 && r.rate_without_security >= 0.0));
        assert_eq!(rows.iter().filter(|r| r.region == Region::Reflection).count(), 50);
    }
}

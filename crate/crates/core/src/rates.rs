//! Achievable, wiretap and secrecy rates plus the weighted design objective.
//!
//! Everything funnels through [`LinkGains`], the eight scalar powers the rates
//! depend on. [`ObjectiveEvaluator`] produces the same gains in O(M) for a fixed
//! precoder pair, which is what the passive optimizer hammers on.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::beam::{BeamformerPair, StarCoefficients};
use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::C64;

/// Received powers for one surface configuration and precoder pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LinkGains {
    /// |h_rbᴴ U_r H w_b|²
    pub bob_signal: f64,
    /// |h_rbᴴ U_r H w_c|²
    pub bob_interference: f64,
    /// |h_rcᴴ U_t H w_c|²
    pub carol_signal: f64,
    /// |h_rcᴴ U_t H w_b|²
    pub carol_interference: f64,
    /// ‖U_r H w_b‖², ‖U_r H w_c‖², ‖U_t H w_b‖², ‖U_t H w_c‖²
    pub refl_b: f64,
    pub refl_c: f64,
    pub trans_b: f64,
    pub trans_c: f64,
}

impl LinkGains {
    pub fn compute(ch: &ChannelSet, coeffs: &StarCoefficients, bf: &BeamformerPair) -> Self {
        ObjectiveEvaluator::new(ch, bf).gains(coeffs)
    }

    pub fn rate_bob(&self, sigma2_b: f64) -> f64 {
        (self.bob_signal / (self.bob_interference + sigma2_b)).ln_1p() / std::f64::consts::LN_2
    }

    pub fn rate_carol(&self, sigma2_c: f64) -> f64 {
        (self.carol_signal / (self.carol_interference + sigma2_c)).ln_1p() / std::f64::consts::LN_2
    }

    /// Large-system wiretap rate when Eve sits in the reflection region.
    pub fn eve_rate_reflection(&self, l_re: f64, sigma2_e: f64) -> f64 {
        log2_1p(l_re * self.refl_b / (l_re * self.refl_c + sigma2_e))
    }

    pub fn eve_rate_transmission(&self, l_re: f64, sigma2_e: f64) -> f64 {
        log2_1p(l_re * self.trans_b / (l_re * self.trans_c + sigma2_e))
    }

    /// `P₁ · R_eb|R + P₀ · R_eb|T` in the large-system limit.
    pub fn eve_penalty(&self, cfg: &SystemConfig, l_re: f64) -> f64 {
        cfg.p1 * self.eve_rate_reflection(l_re, cfg.sigma2_e)
            + cfg.p0() * self.eve_rate_transmission(l_re, cfg.sigma2_e)
    }

    pub fn secrecy_asymptotic(&self, cfg: &SystemConfig, l_re: f64) -> f64 {
        self.rate_bob(cfg.sigma2_b) - self.eve_penalty(cfg, l_re)
    }

    /// Design objective. With `eve_aware == false` the eavesdropper penalty is
    /// dropped and the objective reduces to the legitimate weighted sum rate.
    pub fn objective(&self, cfg: &SystemConfig, l_re: f64) -> f64 {
        let bob = if cfg.eve_aware { self.secrecy_asymptotic(cfg, l_re) } else { self.rate_bob(cfg.sigma2_b) };
        cfg.omega1 * bob + cfg.omega2 * self.rate_carol(cfg.sigma2_c)
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Fast objective evaluation over surface configurations for fixed channels
/// and precoders. `H w_b` and `H w_c` are formed once; each configuration then
/// costs O(M).
#[derive(Clone, Debug)]
pub struct ObjectiveEvaluator {
    /// conj(h_rb[m]) (H w_b)[m] and the w_c counterpart, likewise for Carol.
    bob_b: Vec<C64>,
    bob_c: Vec<C64>,
    carol_b: Vec<C64>,
    carol_c: Vec<C64>,
    /// |(H w_b)[m]|², |(H w_c)[m]|²
    pow_b: Vec<f64>,
    pow_c: Vec<f64>,
    l_re: f64,
}

impl ObjectiveEvaluator {
    pub fn new(ch: &ChannelSet, bf: &BeamformerPair) -> Self {
        let x_b = &ch.h_br * &bf.w_b;
        let x_c = &ch.h_br * &bf.w_c;
        let m = ch.m();
        Self {
            bob_b: (0..m).map(|i| ch.h_rb[i].conj() * x_b[i]).collect(),
            bob_c: (0..m).map(|i| ch.h_rb[i].conj() * x_c[i]).collect(),
            carol_b: (0..m).map(|i| ch.h_rc[i].conj() * x_b[i]).collect(),
            carol_c: (0..m).map(|i| ch.h_rc[i].conj() * x_c[i]).collect(),
            pow_b: x_b.iter().map(|z| z.norm_sqr()).collect(),
            pow_c: x_c.iter().map(|z| z.norm_sqr()).collect(),
            l_re: ch.l_re,
        }
    }

    pub fn gains(&self, coeffs: &StarCoefficients) -> LinkGains {
        let mut g = LinkGains::default();
        let (mut sbb, mut sbc, mut scb, mut scc) = (C64::default(), C64::default(), C64::default(), C64::default());
        for i in 0..coeffs.m() {
            let ur = coeffs.reflection_factor(i);
            let ut = coeffs.transmission_factor(i);
            sbb += ur * self.bob_b[i];
            sbc += ur * self.bob_c[i];
            scb += ut * self.carol_b[i];
            scc += ut * self.carol_c[i];
            let br = coeffs.beta_r[i];
            let bt = coeffs.beta_t(i).max(0.0);
            g.refl_b += br * self.pow_b[i];
            g.refl_c += br * self.pow_c[i];
            g.trans_b += bt * self.pow_b[i];
            g.trans_c += bt * self.pow_c[i];
        }
        g.bob_signal = sbb.norm_sqr();
        g.bob_interference = sbc.norm_sqr();
        g.carol_signal = scc.norm_sqr();
        g.carol_interference = scb.norm_sqr();
        g
    }

    pub fn objective(&self, coeffs: &StarCoefficients, cfg: &SystemConfig) -> f64 {
        self.gains(coeffs).objective(cfg, self.l_re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r_b: f64,
    pub r_c: f64,
    /// Large-system average secrecy rate, unclamped.
    pub r_b_sec_asymptotic: f64,
    /// Same, clamped at zero.
    pub r_b_sec_clamped: f64,
    pub objective: f64,
}

impl RateReport {
    pub fn compute(ch: &ChannelSet, coeffs: &StarCoefficients, bf: &BeamformerPair, cfg: &SystemConfig) -> Self {
        let g = LinkGains::compute(ch, coeffs, bf);
        let sec = g.secrecy_asymptotic(cfg, ch.l_re);
        Self {
            r_b: g.rate_bob(cfg.sigma2_b),
            r_c: g.rate_carol(cfg.sigma2_c),
            r_b_sec_asymptotic: sec,
            r_b_sec_clamped: sec.max(0.0),
            objective: g.objective(cfg, ch.l_re),
        }
    }
}

pub fn rate_bob(ch: &ChannelSet, coeffs: &StarCoefficients, bf: &BeamformerPair, sigma2_b: f64) -> f64 {
    LinkGains::compute(ch, coeffs, bf).rate_bob(sigma2_b)
}

pub fn rate_carol(ch: &ChannelSet, coeffs: &StarCoefficients, bf: &BeamformerPair, sigma2_c: f64) -> f64 {
    LinkGains::compute(ch, coeffs, bf).rate_carol(sigma2_c)
}

/// Instantaneous wiretap rate for one Eve draw. `region_reflect` is the
/// Bernoulli selector `b`: true picks `U_r`, false picks `U_t`.
pub fn eaves_rate_instant(
    h_re_smallscale: &DVector<C64>,
    l_re: f64,
    region_reflect: bool,
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    bf: &BeamformerPair,
    sigma2_e: f64,
) -> f64 {
    let x_b = &ch.h_br * &bf.w_b;
    let x_c = &ch.h_br * &bf.w_c;
    eaves_rate_from_projections(h_re_smallscale, l_re, region_reflect, coeffs, &x_b, &x_c, sigma2_e)
}

/// Same as [`eaves_rate_instant`] with `H w_b` and `H w_c` precomputed.
pub(crate) fn eaves_rate_from_projections(
    h_re_smallscale: &DVector<C64>,
    l_re: f64,
    region_reflect: bool,
    coeffs: &StarCoefficients,
    x_b: &DVector<C64>,
    x_c: &DVector<C64>,
    sigma2_e: f64,
) -> f64 {
    let scale = l_re.sqrt();
    let (mut sb, mut sc) = (C64::default(), C64::default());
    for i in 0..coeffs.m() {
        let u = if region_reflect { coeffs.reflection_factor(i) } else { coeffs.transmission_factor(i) };
        let h = (h_re_smallscale[i] * scale).conj() * u;
        sb += h * x_b[i];
        sc += h * x_c[i];
    }
    log2_1p(sb.norm_sqr() / (sc.norm_sqr() + sigma2_e))
}

/// `[r_b − r_eb]⁺`
pub fn security_rate_instant(r_b: f64, r_eb: f64) -> f64 {
    (r_b - r_eb).max(0.0)
}

pub fn avg_security_rate_asymptotic(
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    bf: &BeamformerPair,
    cfg: &SystemConfig,
) -> f64 {
    LinkGains::compute(ch, coeffs, bf).secrecy_asymptotic(cfg, ch.l_re)
}

pub fn weighted_objective(ch: &ChannelSet, coeffs: &StarCoefficients, bf: &BeamformerPair, cfg: &SystemConfig) -> f64 {
    LinkGains::compute(ch, coeffs, bf).objective(cfg, ch.l_re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::build_surface_matrices;
    use crate::channel::{generate_channels, sample_eve_smallscale};
    use crate::rng::RngStream;
    use nalgebra::DMatrix;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn scalar_channel() -> ChannelSet {
        ChannelSet {
            h_br: DMatrix::from_element(1, 1, c(1.0)),
            h_rb: DVector::from_element(1, c(1.0)),
            h_rc: DVector::from_element(1, c(1.0)),
            l_re: 1.0,
        }
    }

    fn unit_surface(beta_r: f64) -> StarCoefficients {
        StarCoefficients { beta_r: vec![beta_r], phase_idx_r: vec![4], phase_idx_t: vec![4], levels: 4 }
    }

    fn pair(b: f64, cc: f64) -> BeamformerPair {
        BeamformerPair { w_b: DVector::from_element(1, c(b)), w_c: DVector::from_element(1, c(cc)) }
    }

    /// Matrix-form oracle for the eight link powers.
    fn gains_by_matrices(ch: &ChannelSet, coeffs: &StarCoefficients, bf: &BeamformerPair) -> LinkGains {
        let (u_r, u_t) = build_surface_matrices(coeffs);
        let vr = &u_r * &ch.h_br;
        let vt = &u_t * &ch.h_br;
        let gb = ch.h_rb.adjoint() * &vr;
        let gc = ch.h_rc.adjoint() * &vt;
        LinkGains {
            bob_signal: (&gb * &bf.w_b)[0].norm_sqr(),
            bob_interference: (&gb * &bf.w_c)[0].norm_sqr(),
            carol_signal: (&gc * &bf.w_c)[0].norm_sqr(),
            carol_interference: (&gc * &bf.w_b)[0].norm_sqr(),
            refl_b: (&vr * &bf.w_b).norm_squared(),
            refl_c: (&vr * &bf.w_c).norm_squared(),
            trans_b: (&vt * &bf.w_b).norm_squared(),
            trans_c: (&vt * &bf.w_c).norm_squared(),
        }
    }

    fn random_instance(
        m: usize,
        n_t: usize,
        seed: u64,
    ) -> (SystemConfig, ChannelSet, StarCoefficients, BeamformerPair) {
        let cfg = SystemConfig { m, n_t, ..SystemConfig::desk() };
        let ch = generate_channels(&cfg, &RngStream::new(seed, 0)).unwrap();
        let mut rng = RngStream::new(seed, 1).rng();
        let coeffs = StarCoefficients::random(m, cfg.levels(), &mut rng);
        let w = |rng: &mut rand_chacha::ChaCha8Rng| DVector::from_fn(n_t, |_, _| crate::channel::complex_gaussian(rng));
        let bf = BeamformerPair { w_b: w(&mut rng), w_c: w(&mut rng) };
        let bf = bf.scaled((cfg.p_tmax / bf.power()).sqrt());
        (cfg, ch, coeffs, bf)
    }

    #[test]
    fn fast_gains_match_matrix_oracle() {
        for seed in 0..10 {
            let (_, ch, coeffs, bf) = random_instance(12, 3, seed);
            let fast = LinkGains::compute(&ch, &coeffs, &bf);
            let slow = gains_by_matrices(&ch, &coeffs, &bf);
            let pairs = [
                (fast.bob_signal, slow.bob_signal),
                (fast.bob_interference, slow.bob_interference),
                (fast.carol_signal, slow.carol_signal),
                (fast.carol_interference, slow.carol_interference),
                (fast.refl_b, slow.refl_b),
                (fast.refl_c, slow.refl_c),
                (fast.trans_b, slow.trans_b),
                (fast.trans_c, slow.trans_c),
            ];
            for (a, b) in pairs {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bob_rate_examples() {
        let ch = scalar_channel();
        assert_eq!(rate_bob(&ch, &unit_surface(1.0), &pair(0.0, 1.0), 1.0), 0.0);
        let r = rate_bob(&ch, &unit_surface(1.0), &pair(2.0, 0.0), 1.0);
        assert!((r - 5f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn bob_rate_decreases_with_interference() {
        let (cfg, ch, coeffs, bf) = random_instance(8, 2, 3);
        let mut prev = f64::INFINITY;
        for k in 1..30 {
            let gamma = 0.1 * k as f64;
            let scaled = BeamformerPair { w_b: bf.w_b.clone(), w_c: &bf.w_c * C64::from(gamma) };
            let r = rate_bob(&ch, &coeffs, &scaled, cfg.sigma2_b);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn carol_rate_examples_and_symmetry() {
        let ch = scalar_channel();
        let coeffs = StarCoefficients { beta_r: vec![0.0 + f64::MIN_POSITIVE], ..unit_surface(1.0) };
        assert_eq!(rate_carol(&ch, &coeffs, &pair(1.0, 0.0), 1.0), 0.0);
        let r = rate_carol(&ch, &coeffs, &pair(0.0, 2.0), 1.0);
        assert!((r - 5f64.log2()).abs() < 1e-12);

        // swapping the roles of the two users maps one rate onto the other
        let (_, ch, coeffs, bf) = random_instance(6, 2, 8);
        let swapped_ch = ChannelSet { h_rb: ch.h_rc.clone(), h_rc: ch.h_rb.clone(), ..ch.clone() };
        let swapped_coeffs = StarCoefficients {
            beta_r: coeffs.beta_r.iter().map(|b| 1.0 - b).collect(),
            phase_idx_r: coeffs.phase_idx_t.clone(),
            phase_idx_t: coeffs.phase_idx_r.clone(),
            levels: coeffs.levels,
        };
        let swapped_bf = BeamformerPair { w_b: bf.w_c.clone(), w_c: bf.w_b.clone() };
        let a = rate_bob(&ch, &coeffs, &bf, 1e-14);
        let b = rate_carol(&swapped_ch, &swapped_coeffs, &swapped_bf, 1e-14);
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn eaves_rate_examples() {
        let ch = scalar_channel();
        let h = DVector::from_element(1, c(1.0));
        let coeffs = unit_surface(1.0);
        assert_eq!(eaves_rate_instant(&h, 1.0, true, &ch, &coeffs, &pair(0.0, 1.0), 1.0), 0.0);
        let r = eaves_rate_instant(&h, 1.0, true, &ch, &coeffs, &pair(1.0, 1.0), 1.0);
        assert!((r - 1.5f64.log2()).abs() < 1e-14);

        // b selects the surface
        let (cfg, ch, coeffs, bf) = random_instance(8, 2, 4);
        let h = sample_eve_smallscale(8, &mut RngStream::new(1, 2).rng());
        let refl_only = StarCoefficients {
            phase_idx_t: coeffs.phase_idx_r.clone(),
            beta_r: coeffs.beta_r.clone(),
            ..coeffs.clone()
        };
        let r1 = eaves_rate_instant(&h, ch.l_re, true, &ch, &coeffs, &bf, cfg.sigma2_e);
        let r1b = eaves_rate_instant(&h, ch.l_re, true, &ch, &refl_only, &bf, cfg.sigma2_e);
        assert_eq!(r1, r1b);
        let (_, u_t) = build_surface_matrices(&coeffs);
        let hre = &h * C64::from(ch.l_re.sqrt());
        let g = hre.adjoint() * &u_t * &ch.h_br;
        let sb = (&g * &bf.w_b)[0].norm_sqr();
        let sc = (&g * &bf.w_c)[0].norm_sqr();
        let r0 = eaves_rate_instant(&h, ch.l_re, false, &ch, &coeffs, &bf, cfg.sigma2_e);
        assert!((r0 - (1.0 + sb / (sc + cfg.sigma2_e)).log2()).abs() < 1e-12);
    }

    #[test]
    fn security_rate_clamps() {
        assert_eq!(security_rate_instant(2.0, 3.0), 0.0);
        assert_eq!(security_rate_instant(3.0, 1.0), 2.0);
        assert_eq!(security_rate_instant(1.25, 1.25), 0.0);
    }

    #[test]
    fn asymptotic_secrecy_degenerate_cases() {
        let (cfg, ch, coeffs, bf) = random_instance(8, 2, 5);
        let g = LinkGains::compute(&ch, &coeffs, &bf);
        let refl_only = SystemConfig { p1: 1.0, ..cfg.clone() };
        let expected = g.rate_bob(cfg.sigma2_b) - g.eve_rate_reflection(ch.l_re, cfg.sigma2_e);
        assert_eq!(avg_security_rate_asymptotic(&ch, &coeffs, &bf, &refl_only), expected);

        let silent = BeamformerPair { w_b: DVector::zeros(2), w_c: bf.w_c.clone() };
        assert_eq!(avg_security_rate_asymptotic(&ch, &coeffs, &silent, &cfg), 0.0);
    }

    #[test]
    fn penalty_is_affine_in_p1() {
        let (cfg, ch, coeffs, bf) = random_instance(8, 2, 6);
        let at = |p1: f64| avg_security_rate_asymptotic(&ch, &coeffs, &bf, &SystemConfig { p1, ..cfg.clone() });
        let (v0, v1) = (at(0.0), at(1.0));
        for p in [0.1, 0.37, 0.5, 0.9] {
            assert!((at(p) - (p * v1 + (1.0 - p) * v0)).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_objective_examples() {
        let (cfg, ch, coeffs, bf) = random_instance(8, 2, 7);
        let carol_only = SystemConfig { omega1: 0.0, ..cfg.clone() };
        let rc = rate_carol(&ch, &coeffs, &bf, cfg.sigma2_c);
        assert_eq!(weighted_objective(&ch, &coeffs, &bf, &carol_only), cfg.omega2 * rc);

        // scalar case: bob = log2(5) with interference-free, eve term hand-evaluated
        let ch = scalar_channel();
        let coeffs = StarCoefficients { beta_r: vec![0.5], phase_idx_r: vec![4], phase_idx_t: vec![4], levels: 4 };
        let bf = pair(2.0, 0.0);
        let cfg = SystemConfig {
            sigma2_b: 0.5,
            sigma2_c: 1.0,
            sigma2_e: 1.0,
            p1: 0.5,
            omega1: 0.5,
            omega2: 0.5,
            ..SystemConfig::desk()
        };
        // bob: |√.5·2|² / σ_b² = 2/0.5 → log2(5); eve per region: 0.5·4/1 → log2(3); carol signal 0
        let sec = 5f64.log2() - 3f64.log2();
        let rc = 0.0;
        let obj = weighted_objective(&ch, &coeffs, &bf, &cfg);
        assert!((obj - 0.5 * (sec + rc)).abs() < 1e-14);
    }

    #[test]
    fn objective_is_continuous_in_amplitude() {
        let (cfg, ch, mut coeffs, bf) = random_instance(4, 2, 9);
        let n = 4000;
        let mut prev: Option<f64> = None;
        let mut max_jump: f64 = 0.0;
        for k in 1..n {
            let b = k as f64 / n as f64;
            coeffs.beta_r[0] = b;
            let v = weighted_objective(&ch, &coeffs, &bf, &cfg);
            assert!(v.is_finite());
            if let Some(p) = prev {
                max_jump = max_jump.max((v - p).abs());
            }
            prev = Some(v);
        }
        assert!(max_jump < 0.05, "largest step {max_jump}");
    }

    /// (1/M) hᴴ A h → (1/M) Tr(A) for full-rank A = Vᴴ V.
    #[test]
    fn large_system_trace_limit() {
        let mut medians = Vec::new();
        for &m in &[16usize, 64, 256, 1024] {
            let mut rng = RngStream::new(42, m as u64).rng();
            let v = DMatrix::from_fn(m, m, |_, _| crate::channel::complex_gaussian(&mut rng) / (m as f64).sqrt());
            let a = v.adjoint() * &v;
            let tr = a.trace().re / m as f64;
            let mut errs: Vec<f64> = (0..100)
                .map(|_| {
                    let h = sample_eve_smallscale(m, &mut rng);
                    let q = (h.adjoint() * &a * &h)[0].re / m as f64;
                    (q - tr).abs() / tr
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            medians.push(errs[50]);
        }
        for w in medians.windows(2) {
            assert!(w[1] < w[0], "{medians:?}");
        }
        assert!(*medians.last().unwrap() < 0.1);
    }
}

//! Precoder design for a fixed surface configuration.
//!
//! The log terms of the objective are replaced by their weighted-MSE
//! minorants, which makes the problem a convex quadratic in `(w_b, w_c)` with a
//! single power constraint. The inner problem is solved in closed form for a
//! given multiplier `varrho`; the multiplier is found by projected subgradient
//! steps on the dual followed by a bisection polish.

use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::beam::{build_surface_matrices, BeamformerPair, StarCoefficients};
use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::C64;

/// Surface-dependent quantities shared by every step of the active solver.
#[derive(Clone, Debug)]
pub struct ActiveContext {
    /// `U_r H_BR`, `U_t H_BR` (M × N_t).
    pub v_r: DMatrix<C64>,
    pub v_t: DMatrix<C64>,
    /// Effective channels: Bob receives `g_bᴴ w`, Carol `g_cᴴ w`.
    pub g_b: DVector<C64>,
    pub g_c: DVector<C64>,
    /// `V_rᴴ V_r`, `V_tᴴ V_t`.
    pub c_r: DMatrix<C64>,
    pub c_t: DMatrix<C64>,
    pub l_re: f64,
    pub cfg: SystemConfig,
}

impl ActiveContext {
    pub fn new(ch: &ChannelSet, coeffs: &StarCoefficients, cfg: &SystemConfig) -> Self {
        let (u_r, u_t) = build_surface_matrices(coeffs);
        let v_r = &u_r * &ch.h_br;
        let v_t = &u_t * &ch.h_br;
        let g_b = v_r.adjoint() * &ch.h_rb;
        let g_c = v_t.adjoint() * &ch.h_rc;
        let c_r = v_r.adjoint() * &v_r;
        let c_t = v_t.adjoint() * &v_t;
        Self { v_r, v_t, g_b, g_c, c_r, c_t, l_re: ch.l_re, cfg: cfg.clone() }
    }

    pub fn n_t(&self) -> usize {
        self.g_b.len()
    }

    /// Weights on the eavesdropper terms, zero when the design ignores Eve.
    fn eve_weights(&self) -> (f64, f64) {
        if self.cfg.eve_aware {
            (self.cfg.p1, self.cfg.p0())
        } else {
            (0.0, 0.0)
        }
    }
}

fn dot(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

/// MMSE receivers and weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxVars {
    pub u1: C64,
    pub u2: DVector<C64>,
    pub u3: DVector<C64>,
    pub u_c: C64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    pub w_c_aux: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub varrho: f64,
    pub step: f64,
}

/// The six log terms in nats:
/// `ln 2 · R_b^sa = f1 + P₁ f2 + P₀ f3 + P₁ f4 + P₀ f5` and `ln 2 · R_c = fc`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LogTerms {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub fc: f64,
}

impl LogTerms {
    pub fn as_array(&self) -> [f64; 6] {
        [self.f1, self.f2, self.f3, self.f4, self.f5, self.fc]
    }

    /// Weighted objective in bits.
    pub fn objective(&self, cfg: &SystemConfig, eve_aware: bool) -> f64 {
        let (p1, p0) = if eve_aware { (cfg.p1, cfg.p0()) } else { (0.0, 0.0) };
        let bob = self.f1 + p1 * (self.f2 + self.f4) + p0 * (self.f3 + self.f5);
        (cfg.omega1 * bob + cfg.omega2 * self.fc) / LN_2
    }
}

/// Mean-square errors `E1 … E5`, `E_c` for given receivers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MseTerms {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub ec: f64,
}

struct Powers {
    s_b: C64,
    i_b: f64,
    s_c: C64,
    i_c: f64,
    vr_b: DVector<C64>,
    vr_c: DVector<C64>,
    vt_b: DVector<C64>,
    vt_c: DVector<C64>,
}

fn powers(ctx: &ActiveContext, bf: &BeamformerPair) -> Powers {
    Powers {
        s_b: dot(&ctx.g_b, &bf.w_b),
        i_b: dot(&ctx.g_b, &bf.w_c).norm_sqr(),
        s_c: dot(&ctx.g_c, &bf.w_c),
        i_c: dot(&ctx.g_c, &bf.w_b).norm_sqr(),
        vr_b: &ctx.v_r * &bf.w_b,
        vr_c: &ctx.v_r * &bf.w_c,
        vt_b: &ctx.v_t * &bf.w_b,
        vt_c: &ctx.v_t * &bf.w_c,
    }
}

pub fn log_terms(ctx: &ActiveContext, bf: &BeamformerPair) -> LogTerms {
    let p = powers(ctx, bf);
    let (l, se) = (ctx.l_re, ctx.cfg.sigma2_e);
    let (rb, rc) = (p.vr_b.norm_squared(), p.vr_c.norm_squared());
    let (tb, tc) = (p.vt_b.norm_squared(), p.vt_c.norm_squared());
    LogTerms {
        f1: (p.s_b.norm_sqr() / (p.i_b + ctx.cfg.sigma2_b)).ln_1p(),
        f2: (l * rc / se).ln_1p(),
        f3: (l * tc / se).ln_1p(),
        f4: -(l * (rc + rb) / se).ln_1p(),
        f5: -(l * (tc + tb) / se).ln_1p(),
        fc: (p.s_c.norm_sqr() / (p.i_c + ctx.cfg.sigma2_c)).ln_1p(),
    }
}

pub fn mse_terms(ctx: &ActiveContext, aux: &AuxVars, bf: &BeamformerPair) -> MseTerms {
    let p = powers(ctx, bf);
    let (l, se) = (ctx.l_re, ctx.cfg.sigma2_e);
    let sl = l.sqrt();
    let e_eve = |u: &DVector<C64>, v: &DVector<C64>| (dot(u, v) * sl - 1.0).norm_sqr() + se * u.norm_squared();
    MseTerms {
        e1: (aux.u1.conj() * p.s_b - 1.0).norm_sqr() + aux.u1.norm_sqr() * (p.i_b + ctx.cfg.sigma2_b),
        e2: e_eve(&aux.u2, &p.vr_c),
        e3: e_eve(&aux.u3, &p.vt_c),
        e4: 1.0 + l * (p.vr_c.norm_squared() + p.vr_b.norm_squared()) / se,
        e5: 1.0 + l * (p.vt_c.norm_squared() + p.vt_b.norm_squared()) / se,
        ec: (aux.u_c.conj() * p.s_c - 1.0).norm_sqr() + aux.u_c.norm_sqr() * (p.i_c + ctx.cfg.sigma2_c),
    }
}

/// `ln W − W E + 1` for each term; a lower bound on the matching log term,
/// tight when the auxiliaries are the optimal ones for `bf`.
pub fn minorant_terms(ctx: &ActiveContext, aux: &AuxVars, bf: &BeamformerPair) -> LogTerms {
    let e = mse_terms(ctx, aux, bf);
    let h = |w: f64, e: f64| w.ln() - w * e + 1.0;
    LogTerms {
        f1: h(aux.w1, e.e1),
        f2: h(aux.w2, e.e2),
        f3: h(aux.w3, e.e3),
        f4: h(aux.w4, e.e4),
        f5: h(aux.w5, e.e5),
        fc: h(aux.w_c_aux, e.ec),
    }
}

/// Surrogate objective in bits.
pub fn surrogate(ctx: &ActiveContext, aux: &AuxVars, bf: &BeamformerPair) -> f64 {
    minorant_terms(ctx, aux, bf).objective(&ctx.cfg, ctx.cfg.eve_aware)
}

/// `−surrogate(bf) + varrho (‖w_b‖² + ‖w_c‖² − P_tmax)`.
pub fn lagrangian(ctx: &ActiveContext, aux: &AuxVars, bf: &BeamformerPair, varrho: f64) -> f64 {
    -surrogate(ctx, aux, bf) + varrho * (bf.power() - ctx.cfg.p_tmax)
}

/// Linear-MMSE receiver for `y = √l v x + n`, `n ~ CN(0, σ² I)`, using the
/// rank-one inverse `(l v vᴴ + σ² I)⁻¹ √l v = √l v / (σ² + l ‖v‖²)`.
fn eve_receiver(v: &DVector<C64>, l: f64, sigma2: f64) -> DVector<C64> {
    v * C64::from(l.sqrt() / (sigma2 + l * v.norm_squared()))
}

pub fn update_auxiliaries_ctx(ctx: &ActiveContext, bf: &BeamformerPair) -> AuxVars {
    let p = powers(ctx, bf);
    let (l, se) = (ctx.l_re, ctx.cfg.sigma2_e);
    let tot_b = p.s_b.norm_sqr() + p.i_b + ctx.cfg.sigma2_b;
    let tot_c = p.s_c.norm_sqr() + p.i_c + ctx.cfg.sigma2_c;
    let u1 = p.s_b / tot_b;
    let u_c = p.s_c / tot_c;
    let u2 = eve_receiver(&p.vr_c, l, se);
    let u3 = eve_receiver(&p.vt_c, l, se);
    let rc = p.vr_c.norm_squared();
    let tc = p.vt_c.norm_squared();
    AuxVars {
        u1,
        u2,
        u3,
        u_c,
        w1: tot_b / (p.i_b + ctx.cfg.sigma2_b),
        w2: (se + l * rc) / se,
        w3: (se + l * tc) / se,
        w4: 1.0 / (1.0 + l * (rc + p.vr_b.norm_squared()) / se),
        w5: 1.0 / (1.0 + l * (tc + p.vt_b.norm_squared()) / se),
        w_c_aux: tot_c / (p.i_c + ctx.cfg.sigma2_c),
    }
}

pub fn update_auxiliaries(
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    bf: &BeamformerPair,
    cfg: &SystemConfig,
) -> AuxVars {
    update_auxiliaries_ctx(&ActiveContext::new(ch, coeffs, cfg), bf)
}

/// `G₁ − varrho I`, `G₂`, `Ĝ₁ − varrho I`, `Ĝ₂` of the stationarity conditions.
#[derive(Clone, Debug)]
pub struct StationaritySystem {
    pub q_b: DMatrix<C64>,
    pub r_b: DVector<C64>,
    pub q_c: DMatrix<C64>,
    pub r_c: DVector<C64>,
}

impl StationaritySystem {
    pub fn new(ctx: &ActiveContext, aux: &AuxVars) -> Self {
        let k = 1.0 / LN_2;
        let cfg = &ctx.cfg;
        let (p1, p0) = ctx.eve_weights();
        let (l, se) = (ctx.l_re, cfg.sigma2_e);
        let (o1, o2) = (cfg.omega1, cfg.omega2);

        let a = &ctx.g_c * ctx.g_c.adjoint();
        let b = &ctx.g_b * ctx.g_b.adjoint();
        let mut common = a * C64::from(o2 * aux.w_c_aux * aux.u_c.norm_sqr() * k)
            + b * C64::from(o1 * aux.w1 * aux.u1.norm_sqr() * k);
        if p1 > 0.0 {
            common += &ctx.c_r * C64::from(o1 * l * p1 * aux.w4 / se * k);
        }
        if p0 > 0.0 {
            common += &ctx.c_t * C64::from(o1 * l * p0 * aux.w5 / se * k);
        }
        let r_b = &ctx.g_b * (aux.u1 * (o1 * aux.w1 * k));

        let mut q_c = common.clone();
        let mut r_c = &ctx.g_c * (aux.u_c * (o2 * aux.w_c_aux * k));
        if p1 > 0.0 {
            let d = ctx.v_r.adjoint() * &aux.u2;
            q_c += &d * d.adjoint() * C64::from(o1 * p1 * aux.w2 * l * k);
            r_c += d * C64::from(o1 * p1 * aux.w2 * l.sqrt() * k);
        }
        if p0 > 0.0 {
            let d = ctx.v_t.adjoint() * &aux.u3;
            q_c += &d * d.adjoint() * C64::from(o1 * p0 * aux.w3 * l * k);
            r_c += d * C64::from(o1 * p0 * aux.w3 * l.sqrt() * k);
        }
        Self { q_b: common, r_b, q_c, r_c }
    }

    fn factor(q: &DMatrix<C64>, varrho: f64) -> Option<Cholesky<C64, Dyn>> {
        let n = q.nrows();
        let g = (q + q.adjoint()) * C64::from(0.5) + DMatrix::identity(n, n) * C64::from(varrho);
        Cholesky::new(g)
    }

    /// `w_b = G₁⁻¹ G₂`, `w_c = Ĝ₁⁻¹ Ĝ₂`.
    pub fn solve(&self, varrho: f64) -> Result<BeamformerPair> {
        let cb = Self::factor(&self.q_b, varrho).ok_or(Error::DualTooSmall(varrho))?;
        let cc = Self::factor(&self.q_c, varrho).ok_or(Error::DualTooSmall(varrho))?;
        let w_b = cb.solve(&self.r_b);
        let w_c = cc.solve(&self.r_c);
        if w_b.iter().chain(w_c.iter()).any(|z| !z.is_finite()) {
            return Err(Error::DualTooSmall(varrho));
        }
        Ok(BeamformerPair { w_b, w_c })
    }

    /// Multiplier at which the closed-form solution is guaranteed to meet the
    /// budget: `G ⪰ varrho I` gives `‖w‖² ≤ (‖G₂‖² + ‖Ĝ₂‖²) / varrho²`.
    pub fn varrho_upper(&self, p_tmax: f64) -> f64 {
        ((self.r_b.norm_squared() + self.r_c.norm_squared()) / p_tmax).sqrt()
    }
}

pub fn optimal_beamformers(
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    aux: &AuxVars,
    varrho: f64,
    cfg: &SystemConfig,
) -> Result<BeamformerPair> {
    if !(varrho >= 0.0) {
        return Err(Error::Domain(format!("varrho must be nonnegative, got {varrho}")));
    }
    StationaritySystem::new(&ActiveContext::new(ch, coeffs, cfg), aux).solve(varrho)
}

#[derive(Clone, Debug)]
pub struct ActiveOutcome {
    pub bf: BeamformerPair,
    pub dual: DualState,
    pub iterations: usize,
    /// False when the dual loop hit `max_dual` before its stopping rule fired.
    pub converged: bool,
}

/// Relative band below the budget accepted by the bisection polish.
const POLISH_BAND: f64 = 1e-10;

/// Consecutive same-sign subgradients after which the walk is considered stalled.
const STALL_STEPS: usize = 10;

pub fn solve_active(
    ch: &ChannelSet,
    coeffs: &StarCoefficients,
    bf_init: &BeamformerPair,
    cfg: &SystemConfig,
) -> Result<ActiveOutcome> {
    solve_active_ctx(&ActiveContext::new(ch, coeffs, cfg), bf_init)
}

pub fn solve_active_ctx(ctx: &ActiveContext, bf_init: &BeamformerPair) -> Result<ActiveOutcome> {
    let cfg = &ctx.cfg;
    let p = cfg.p_tmax;
    let aux = update_auxiliaries_ctx(ctx, bf_init);
    let sys = StationaritySystem::new(ctx, &aux);

    // unconstrained optimum already inside the budget
    if let Ok(bf) = sys.solve(0.0) {
        if bf.power() <= p {
            return Ok(ActiveOutcome {
                bf,
                dual: DualState { varrho: 0.0, step: 0.0 },
                iterations: 0,
                converged: true,
            });
        }
    }

    let ub = sys.varrho_upper(p);
    if !(ub > 0.0 && ub.is_finite()) {
        return Err(Error::DualTooSmall(ub));
    }
    // diminishing step ϖ/√l, with ϖ in multiplier units per watt of violation
    let step0 = cfg.subgrad_step / p;
    // bracket: power(lo) > P (or singular), power(hi) <= P
    let (mut lo, mut hi) = (0.0f64, ub);
    let mut hi_bf = sys.solve(ub)?;

    let dual_value = |bf: &BeamformerPair, varrho: f64| lagrangian(ctx, &aux, bf, varrho);

    let mut varrho = 0.5 * ub;
    let mut prev_dual: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut step = step0;
    let mut bisecting = false;
    let mut last_sign = 0.0;
    let mut same_sign = 0;
    for it in 1..=cfg.max_dual {
        iterations = it;
        let bf = match sys.solve(varrho) {
            Ok(bf) => bf,
            Err(_) => {
                lo = lo.max(varrho);
                bisecting = true;
                varrho = 0.5 * (lo + hi);
                continue;
            }
        };
        let power = bf.power();
        if power > p {
            lo = lo.max(varrho);
        } else if varrho < hi {
            hi = varrho;
            hi_bf = bf.clone();
        }
        let d = dual_value(&bf, varrho);
        let residual = (power - p).abs() / p;
        if let Some(prev) = prev_dual {
            let change = (d - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if change <= cfg.tol_dual && residual <= cfg.tol_dual {
                converged = true;
                break;
            }
        }
        prev_dual = Some(d);

        let sign = (power - p).signum();
        same_sign = if sign == last_sign { same_sign + 1 } else { 0 };
        // oscillation (sign flip) or a stalled walk hands over to bisection
        if (last_sign != 0.0 && sign != last_sign) || same_sign >= STALL_STEPS {
            bisecting = true;
        }
        last_sign = sign;

        varrho = if bisecting {
            0.5 * (lo + hi)
        } else {
            step = step0 / (it as f64).sqrt();
            let next = (varrho + step * (power - p)).max(0.0);
            if next > lo && next < hi {
                next
            } else {
                bisecting = true;
                0.5 * (lo + hi)
            }
        };
    }

    // polish: bisection on the monotone power curve, keeping the feasible side
    for _ in 0..200 {
        if hi_bf.power() >= p * (1.0 - POLISH_BAND) || hi - lo <= hi * f64::EPSILON {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match sys.solve(mid) {
            Ok(bf) if bf.power() <= p => {
                hi = mid;
                hi_bf = bf;
            }
            _ => lo = mid,
        }
    }

    Ok(ActiveOutcome { bf: hi_bf, dual: DualState { varrho: hi, step }, iterations, converged })
}

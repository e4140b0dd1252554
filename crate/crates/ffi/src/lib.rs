//! C ABI over `star-pls`.
//!
//! Handles are opaque heap objects owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`StarStatus`];
//! on failure [`star_last_error`] gives a message for the calling thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use star_pls::channel::generate_channels;
use star_pls::experiment::parse_config;
use star_pls::optimizer::{optimize_scheme, OptResult, Scheme};
use star_pls::rng::{streams, RngStream};
use star_pls::{ChannelSet, Error, SystemConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidArgument = 3,
    SolverError = 4,
    IoError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarScheme {
    Proposed = 0,
    Zf = 1,
    ConventionalRis = 2,
}

impl From<StarScheme> for Scheme {
    fn from(s: StarScheme) -> Self {
        match s {
            StarScheme::Proposed => Scheme::Proposed,
            StarScheme::Zf => Scheme::Zf,
            StarScheme::ConventionalRis => Scheme::ConventionalRis,
        }
    }
}

/// Rates of a solution in bits/s/Hz.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StarRates {
    pub r_b: f64,
    pub r_c: f64,
    /// Large-system average secrecy rate of the reflection user, clamped at zero.
    pub r_b_sec: f64,
    pub objective: f64,
}

pub struct StarConfig(SystemConfig);
pub struct StarChannels(ChannelSet);
pub struct StarResult(OptResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> StarStatus {
    match e {
        Error::InvalidConfig(_) | Error::ConfigParse(_) => StarStatus::InvalidConfig,
        Error::Dimension(_) | Error::Domain(_) | Error::OddElementCount(_) => StarStatus::InvalidArgument,
        Error::Io(_) => StarStatus::IoError,
        _ => StarStatus::SolverError,
    }
}

/// Runs `f`, records any error or panic and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), (StarStatus, String)>) -> StarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StarStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StarStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (StarStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (StarStatus, String) {
    (StarStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (StarStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (StarStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread. Empty if nothing failed.
#[no_mangle]
pub extern "C" fn star_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Desk-scale defaults with a 30 dBm budget.
#[no_mangle]
pub extern "C" fn star_config_desk() -> *mut StarConfig {
    Box::into_raw(Box::new(StarConfig(SystemConfig::desk())))
}

#[no_mangle]
pub extern "C" fn star_config_full_scale() -> *mut StarConfig {
    Box::into_raw(Box::new(StarConfig(SystemConfig::full_scale())))
}

/// Parses a JSON config document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_config_from_json(json: *const c_char, out: *mut *mut StarConfig) -> StarStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(json, "json")?;
        let cfg = parse_config(text).map_err(lib_err)?;
        put(out, StarConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn star_config_free(cfg: *mut StarConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn edit_config(cfg: *mut StarConfig, f: impl FnOnce(&mut SystemConfig)) -> StarStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.0.clone();
        f(&mut next);
        next.validate().map_err(lib_err)?;
        cfg.0 = next;
        Ok(())
    })
}

/// Sets the element count. The config is left unchanged on error.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn star_config_set_m(cfg: *mut StarConfig, m: usize) -> StarStatus {
    edit_config(cfg, |c| c.m = m)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn star_config_set_n_t(cfg: *mut StarConfig, n_t: usize) -> StarStatus {
    edit_config(cfg, |c| c.n_t = n_t)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn star_config_set_lambda_bits(cfg: *mut StarConfig, bits: u32) -> StarStatus {
    edit_config(cfg, |c| c.lambda_bits = bits)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn star_config_set_p_tmax_dbm(cfg: *mut StarConfig, dbm: f64) -> StarStatus {
    edit_config(cfg, |c| c.p_tmax = star_pls::config::dbm_to_watts(dbm))
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn star_config_set_p1(cfg: *mut StarConfig, p1: f64) -> StarStatus {
    edit_config(cfg, |c| c.p1 = p1)
}

/// Channel realization for `seed`, the same one the CLI uses.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_channels_generate(
    cfg: *const StarConfig,
    seed: u64,
    out: *mut *mut StarChannels,
) -> StarStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ch = generate_channels(&cfg.0, &RngStream::new(seed, streams::CHANNEL)).map_err(lib_err)?;
        put(out, StarChannels(ch));
        Ok(())
    })
}

/// # Safety
/// `ch` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn star_channels_free(ch: *mut StarChannels) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Runs `scheme` on `ch` with solver randomness drawn from `seed`.
///
/// # Safety
/// `cfg` and `ch` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_optimize(
    cfg: *const StarConfig,
    ch: *const StarChannels,
    seed: u64,
    scheme: StarScheme,
    out: *mut *mut StarResult,
) -> StarStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let ch = ch.as_ref().ok_or_else(|| null("ch"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let res =
            optimize_scheme(&ch.0, &cfg.0, &RngStream::new(seed, streams::SOLVER), scheme.into()).map_err(lib_err)?;
        put(out, StarResult(res));
        Ok(())
    })
}

/// # Safety
/// `res` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn star_result_free(res: *mut StarResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `res` must be a live result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_result_rates(res: *const StarResult, out: *mut StarRates) -> StarStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = &res.0.rates;
        *out = StarRates { r_b: r.r_b, r_c: r.r_c, r_b_sec: r.r_b_sec_clamped, objective: r.objective };
        Ok(())
    })
}

/// Objective value, NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn star_result_objective(res: *const StarResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.rates.objective)
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn star_result_outer_iterations(res: *const StarResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.outer_iterations)
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn star_result_converged(res: *const StarResult) -> bool {
    res.as_ref().is_some_and(|r| r.0.converged)
}

/// Number of trajectory entries (initial point plus one per outer iteration).
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn star_result_trajectory_len(res: *const StarResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.trajectory.len())
}

/// Copies the trajectory into `buf`, which holds `len` doubles.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn star_result_trajectory(res: *const StarResult, buf: *mut f64, len: usize) -> StarStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        let t = &res.0.trajectory;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < t.len() {
            return Err((StarStatus::InvalidArgument, format!("buffer holds {len}, need {}", t.len())));
        }
        ptr::copy_nonoverlapping(t.as_ptr(), buf, t.len());
        Ok(())
    })
}

/// BS antenna count of the solution.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn star_result_n_t(res: *const StarResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.bf.w_b.len())
}

/// Writes both precoders as interleaved (re, im) pairs. Each buffer must hold
/// `2 * n_t` doubles.
///
/// # Safety
/// `w_b` and `w_c` must be writable for `2 * n_t` doubles.
#[no_mangle]
pub unsafe extern "C" fn star_result_beamformers(
    res: *const StarResult,
    w_b: *mut f64,
    w_c: *mut f64,
    n_t: usize,
) -> StarStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        if w_b.is_null() || w_c.is_null() {
            return Err(null("beamformer buffer"));
        }
        let bf = &res.0.bf;
        if n_t != bf.w_b.len() {
            return Err((StarStatus::InvalidArgument, format!("n_t is {}, got {n_t}", bf.w_b.len())));
        }
        for (dst, w) in [(w_b, &bf.w_b), (w_c, &bf.w_c)] {
            for (i, z) in w.iter().enumerate() {
                *dst.add(2 * i) = z.re;
                *dst.add(2 * i + 1) = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn star_result_m(res: *const StarResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.coeffs.m())
}

/// Writes the reflection amplitudes and both phase index vectors, `m` entries each.
///
/// # Safety
/// Each buffer must be writable for `m` elements.
#[no_mangle]
pub unsafe extern "C" fn star_result_coefficients(
    res: *const StarResult,
    beta_r: *mut f64,
    phase_idx_r: *mut u32,
    phase_idx_t: *mut u32,
    m: usize,
) -> StarStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        if beta_r.is_null() || phase_idx_r.is_null() || phase_idx_t.is_null() {
            return Err(null("coefficient buffer"));
        }
        let c = &res.0.coeffs;
        if m != c.m() {
            return Err((StarStatus::InvalidArgument, format!("m is {}, got {m}", c.m())));
        }
        ptr::copy_nonoverlapping(c.beta_r.as_ptr(), beta_r, m);
        ptr::copy_nonoverlapping(c.phase_idx_r.as_ptr(), phase_idx_r, m);
        ptr::copy_nonoverlapping(c.phase_idx_t.as_ptr(), phase_idx_t, m);
        Ok(())
    })
}

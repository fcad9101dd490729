//! C ABI over `srf-core`.
//!
//! Every function returns an [`SrfStatus`]. On failure a description of the
//! error is available from [`srf_last_error_message`] on the same thread.
//! Engines are opaque handles created by `srf_engine_new*` and released with
//! [`srf_engine_free`].

use std::cell::RefCell;
use std::collections::VecDeque;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use srf_core::config::RunConfig;
use srf_core::eval::pearson;
use srf_core::eval::EvalError;
use srf_core::fusion::{FusionEngine, FusionError};
use srf_core::population::InternalisationFn;
use srf_core::reward::RewardSample;
use srf_core::stream::{ChannelRegistry, FrameParser};
use srf_core::{normalize_unit, EmotionVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parse = 4,
    LateFrame = 5,
    Empty = 6,
    ZeroVariance = 7,
    LengthMismatch = 8,
    InvalidArgument = 9,
    Panic = 10,
}

/// One emitted reward tick.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SrfRewardSample {
    pub tick_time_ms: u64,
    pub r_total: f64,
    pub r_fer: f64,
    pub r_ser: f64,
    pub r_presence: f64,
    pub presence_fraction: f64,
    pub has_fer: bool,
    pub has_ser: bool,
}

impl From<&RewardSample> for SrfRewardSample {
    fn from(s: &RewardSample) -> Self {
        Self {
            tick_time_ms: s.tick_time,
            r_total: s.r_total,
            r_fer: s.r_fer,
            r_ser: s.r_ser,
            r_presence: s.r_presence,
            presence_fraction: s.presence,
            has_fer: s.x_fer.is_some(),
            has_ser: s.x_ser.is_some(),
        }
    }
}

/// Opaque fusion engine with a wire-format parser and a queue of emitted
/// samples.
pub struct SrfEngine {
    engine: FusionEngine,
    parser: FrameParser<ChannelRegistry>,
    pending: VecDeque<RewardSample>,
    last_t: Option<u64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: SrfStatus, msg: impl Into<String>) -> SrfStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SrfStatus) -> SrfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SrfStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SrfStatus> {
    if s.is_null() {
        return Err(fail(SrfStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(SrfStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], SrfStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SrfStatus::NullPointer, "null array argument"));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn fusion_status(e: &FusionError) -> SrfStatus {
    match e {
        FusionError::LateFrame { .. } => SrfStatus::LateFrame,
        FusionError::Config(_) => SrfStatus::Config,
        _ => SrfStatus::Parse,
    }
}

fn make_engine(cfg: RunConfig, epoch: Option<u64>, out: *mut *mut SrfEngine) -> SrfStatus {
    let parser = FrameParser::new(cfg.registry.clone());
    match FusionEngine::new(cfg.fusion, cfg.registry, epoch) {
        Ok(engine) => {
            let handle = Box::new(SrfEngine {
                engine,
                parser,
                pending: VecDeque::new(),
                last_t: None,
            });
            unsafe { *out = Box::into_raw(handle) };
            SrfStatus::Ok
        }
        Err(e) => fail(fusion_status(&e), e.to_string()),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn srf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates an engine from TOML configuration text. `epoch_ms` is used as the
/// first tick time when `has_epoch` is true; otherwise the first frame sets it.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_new(
    config_toml: *const c_char,
    has_epoch: bool,
    epoch_ms: u64,
    out: *mut *mut SrfEngine,
) -> SrfStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrfStatus::NullPointer, "null output handle");
        }
        let text = match read_str(config_toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match RunConfig::parse(text) {
            Ok(c) => c,
            Err(e) => return fail(SrfStatus::Config, e.to_string()),
        };
        make_engine(cfg, has_epoch.then_some(epoch_ms), out)
    })
}

/// Releases an engine. NULL is ignored.
///
/// # Safety
/// `engine` must come from `srf_engine_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_free(engine: *mut SrfEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Parses one wire-format line and feeds it to the engine. Ticks it closes
/// are queued for `srf_engine_pop_sample`. A rejected line leaves the engine
/// unchanged.
///
/// # Safety
/// `engine` must be a live handle and `line` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_push_line(
    engine: *mut SrfEngine,
    line: *const c_char,
) -> SrfStatus {
    guard(|| {
        let Some(h) = engine.as_mut() else {
            return fail(SrfStatus::NullPointer, "null engine");
        };
        if line.is_null() {
            return fail(SrfStatus::NullPointer, "null line");
        }
        let bytes = CStr::from_ptr(line).to_bytes();
        let frame = match h.parser.parse_line(bytes) {
            Ok(f) => f,
            Err(e) => return fail(SrfStatus::Parse, e.to_string()),
        };
        let t = frame.t;
        match h.engine.push(frame) {
            Ok(samples) => {
                h.pending.extend(samples);
                h.last_t = Some(h.last_t.map_or(t, |l| l.max(t)));
                SrfStatus::Ok
            }
            Err(e) => fail(fusion_status(&e), e.to_string()),
        }
    })
}

/// Emits every tick at or before `now_ms`.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_tick(engine: *mut SrfEngine, now_ms: u64) -> SrfStatus {
    guard(|| {
        let Some(h) = engine.as_mut() else {
            return fail(SrfStatus::NullPointer, "null engine");
        };
        let samples = h.engine.tick(now_ms);
        h.pending.extend(samples);
        SrfStatus::Ok
    })
}

/// Ends the stream: emits ticks up to the last frame, or every tick before
/// `until_ms` when `has_until` is true.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_finish(
    engine: *mut SrfEngine,
    has_until: bool,
    until_ms: u64,
) -> SrfStatus {
    guard(|| {
        let Some(h) = engine.as_mut() else {
            return fail(SrfStatus::NullPointer, "null engine");
        };
        let mut samples = Vec::new();
        srf_core::fusion::finish(
            &mut h.engine,
            h.last_t,
            has_until.then_some(until_ms),
            &mut samples,
        );
        h.pending.extend(samples);
        SrfStatus::Ok
    })
}

/// Number of queued samples.
///
/// # Safety
/// `engine` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_pending(engine: *const SrfEngine) -> usize {
    engine.as_ref().map_or(0, |h| h.pending.len())
}

/// Moves the oldest queued sample into `out`. Returns `Empty` when none.
///
/// # Safety
/// `engine` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srf_engine_pop_sample(
    engine: *mut SrfEngine,
    out: *mut SrfRewardSample,
) -> SrfStatus {
    guard(|| {
        let Some(h) = engine.as_mut() else {
            return fail(SrfStatus::NullPointer, "null engine");
        };
        if out.is_null() {
            return fail(SrfStatus::NullPointer, "null output sample");
        }
        match h.pending.pop_front() {
            Some(s) => {
                *out = SrfRewardSample::from(&s);
                SrfStatus::Ok
            }
            None => SrfStatus::Empty,
        }
    })
}

/// L2-normalizes a non-negative score vector of length `len` into `out`.
///
/// # Safety
/// `values` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn srf_normalize_unit(
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> SrfStatus {
    guard(|| {
        let v = match read_slice(values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if out.is_null() && len > 0 {
            return fail(SrfStatus::NullPointer, "null output array");
        }
        match normalize_unit(&EmotionVector::new(v.to_vec())) {
            Ok(u) => {
                slice::from_raw_parts_mut(out, len).copy_from_slice(u.values());
                SrfStatus::Ok
            }
            Err(e) => fail(SrfStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Pearson correlation of two arrays of length `len`.
///
/// # Safety
/// `x` and `y` must point to `len` doubles, `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn srf_pearson(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> SrfStatus {
    guard(|| {
        let (x, y) = match (read_slice(x, len), read_slice(y, len)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if out.is_null() {
            return fail(SrfStatus::NullPointer, "null output");
        }
        match pearson(x, y) {
            Ok(r) => {
                *out = r;
                SrfStatus::Ok
            }
            Err(e) => {
                let status = match e {
                    EvalError::ZeroVariance => SrfStatus::ZeroVariance,
                    EvalError::LengthMismatch { .. } => SrfStatus::LengthMismatch,
                    _ => SrfStatus::InvalidArgument,
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// Applies an internalisation function given as `identity` or
/// `soft_equity:<scale>` to `r`.
///
/// # Safety
/// `function` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srf_internalise(
    function: *const c_char,
    r: f64,
    out: *mut f64,
) -> SrfStatus {
    guard(|| {
        let spec = match read_str(function) {
            Ok(s) => s,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(SrfStatus::NullPointer, "null output");
        }
        match spec.parse::<InternalisationFn>() {
            Ok(f) => {
                *out = f.apply(r);
                SrfStatus::Ok
            }
            Err(e) => fail(SrfStatus::InvalidArgument, e.to_string()),
        }
    })
}

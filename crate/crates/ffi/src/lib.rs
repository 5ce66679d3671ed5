//! C ABI over the `semnbv` planner.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_load` functions and released by the matching `*_free`. Every fallible
//! call returns a [`SemnbvStatus`]; on failure the message is available from
//! [`semnbv_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semnbv::geometry::{Pose, Vec3};
use semnbv::harness::{self, HarnessError, RunConfig, RunOutcome, StopReason};
use semnbv::metrics::{directivity, summarize};
use semnbv::scene::{load_scene, Scene};

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemnbvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    Io = 5,
    RunFailed = 6,
    Panic = 7,
}

/// Why a mission ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemnbvStopReason {
    Finished = 0,
    MaxSimTime = 1,
    NoProgress = 2,
}

impl From<StopReason> for SemnbvStopReason {
    fn from(r: StopReason) -> Self {
        match r {
            StopReason::Finished => SemnbvStopReason::Finished,
            StopReason::MaxSimTime => SemnbvStopReason::MaxSimTime,
            StopReason::NoProgress => SemnbvStopReason::NoProgress,
        }
    }
}

/// Parsed scene.
pub struct SemnbvScene(Scene);

/// Run configuration.
pub struct SemnbvConfig(RunConfig);

/// Finished mission with its logs.
pub struct SemnbvRun(RunOutcome);

/// Headline numbers of a finished mission.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemnbvRunSummary {
    pub finished: bool,
    pub stop_reason: SemnbvStopReason,
    pub sim_time_s: f64,
    pub rounds: usize,
    pub acquisitions: usize,
    pub samples: usize,
    /// NaN when there are no samples.
    pub mean_directivity: f64,
    pub final_roi_ratio: f64,
    pub final_roi_progress: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: SemnbvStatus, message: impl Into<String>) -> SemnbvStatus {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
    status
}

fn guard(f: impl FnOnce() -> SemnbvStatus) -> SemnbvStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(SemnbvStatus::Panic, "internal panic"))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, SemnbvStatus> {
    if s.is_null() {
        return Err(fail(SemnbvStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(SemnbvStatus::InvalidUtf8, "string is not valid UTF-8"))
}

fn harness_status(e: &HarnessError) -> SemnbvStatus {
    match e {
        HarnessError::Config(_) | HarnessError::MissingStartPose => SemnbvStatus::InvalidArgument,
        HarnessError::Io(_) => SemnbvStatus::Io,
        _ => SemnbvStatus::RunFailed,
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            return fail(SemnbvStatus::NullPointer, "null pointer argument");
        }
    };
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn semnbv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses scene text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_scene_load(text_in: *const c_char, out: *mut *mut SemnbvScene) -> SemnbvStatus {
    guard(|| {
        non_null!(out);
        let s = match text(text_in) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match load_scene(s) {
            Ok(scene) => {
                *out = Box::into_raw(Box::new(SemnbvScene(scene)));
                SemnbvStatus::Ok
            }
            Err(e) => fail(SemnbvStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `scene` must come from [`semnbv_scene_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn semnbv_scene_free(scene: *mut SemnbvScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Number of targets in the scene's search order.
///
/// # Safety
/// `scene` must be a live scene handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_scene_target_count(scene: *const SemnbvScene, out: *mut usize) -> SemnbvStatus {
    non_null!(scene, out);
    *out = (*scene).0.targets().len();
    SemnbvStatus::Ok
}

/// Creates a configuration holding the defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_config_new(out: *mut *mut SemnbvConfig) -> SemnbvStatus {
    non_null!(out);
    *out = Box::into_raw(Box::new(SemnbvConfig(RunConfig::default())));
    SemnbvStatus::Ok
}

/// Parses `key = value` configuration text on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_config_parse(text_in: *const c_char, out: *mut *mut SemnbvConfig) -> SemnbvStatus {
    guard(|| {
        non_null!(out);
        let s = match text(text_in) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match RunConfig::parse(s) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(SemnbvConfig(c)));
                SemnbvStatus::Ok
            }
            Err(e) => fail(SemnbvStatus::ParseError, e.to_string()),
        }
    })
}

/// Sets one key, using the same syntax as configuration files.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn semnbv_config_set(
    config: *mut SemnbvConfig,
    key: *const c_char,
    value: *const c_char,
) -> SemnbvStatus {
    guard(|| {
        non_null!(config);
        let (k, v) = match (text(key), text(value)) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(st), _) | (_, Err(st)) => return st,
        };
        match (*config).0.set(k, v) {
            Ok(()) => SemnbvStatus::Ok,
            Err(e) => fail(SemnbvStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `config` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn semnbv_config_free(config: *mut SemnbvConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Simulates one mission in memory.
///
/// # Safety
/// `config` and `scene` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_run(
    config: *const SemnbvConfig,
    scene: *const SemnbvScene,
    out: *mut *mut SemnbvRun,
) -> SemnbvStatus {
    guard(|| {
        non_null!(config, scene, out);
        match harness::run(&(*config).0, &(*scene).0) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(SemnbvRun(o)));
                SemnbvStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// Fills `out` with the mission's headline numbers.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_run_summary(run: *const SemnbvRun, out: *mut SemnbvRunSummary) -> SemnbvStatus {
    non_null!(run, out);
    let o = &(*run).0;
    let s = summarize(&o.samples).ok();
    *out = SemnbvRunSummary {
        finished: o.finished,
        stop_reason: o.stop_reason.into(),
        sim_time_s: o.sim_time,
        rounds: o.rounds.len(),
        acquisitions: o.acquisitions(),
        samples: o.samples.len(),
        mean_directivity: s.as_ref().map_or(f64::NAN, |s| s.mean_directivity),
        final_roi_ratio: s.as_ref().map_or(0.0, |s| s.final_roi_ratio),
        final_roi_progress: s.as_ref().map_or(0.0, |s| s.final_roi_progress),
    };
    SemnbvStatus::Ok
}

/// Writes the run's header and CSV logs into directory `dir`.
///
/// # Safety
/// `run` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn semnbv_run_write(run: *const SemnbvRun, dir: *const c_char) -> SemnbvStatus {
    guard(|| {
        non_null!(run);
        let d = match text(dir) {
            Ok(d) => d,
            Err(st) => return st,
        };
        match (*run).0.logs.write(Path::new(d)) {
            Ok(()) => SemnbvStatus::Ok,
            Err(e) => fail(SemnbvStatus::Io, format!("{d}: {e}")),
        }
    })
}

/// # Safety
/// `run` must come from [`semnbv_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn semnbv_run_free(run: *mut SemnbvRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Cosine between the optical axis of a camera at `(x, y, z, yaw)` and the
/// line to the target.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semnbv_directivity(
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    tx: f64,
    ty: f64,
    tz: f64,
    out: *mut f64,
) -> SemnbvStatus {
    non_null!(out);
    match directivity(&Pose::new(Vec3::new(x, y, z), yaw), &Vec3::new(tx, ty, tz)) {
        Ok(d) => {
            *out = d;
            SemnbvStatus::Ok
        }
        Err(e) => fail(SemnbvStatus::InvalidArgument, e.to_string()),
    }
}

/// Refinement factor of a target voxel seen by `n_rays` rays whose
/// occupancy weight is `weight`.
#[no_mangle]
pub extern "C" fn semnbv_refine_factor(n_rays: f64, weight: f64, n_exp: f64) -> f64 {
    semnbv::gain::refine_factor(n_rays, weight, n_exp)
}

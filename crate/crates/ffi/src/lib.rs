//! C ABI over the rotdev toolkit.
//!
//! Objects are opaque handles created by `rd_*_new`/`rd_*_estimate`-style
//! constructors and released with the matching `rd_*_free`. Every fallible
//! call returns an [`RdStatus`]; the message of the most recent failure on
//! the calling thread is available through [`rd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rotdev::cli::{self, CliError, RunConfig, Subcommand};
use rotdev::deviations::{deviation_profile, DeviationProfile, Verdict};
use rotdev::rotation_set::{estimate_rotation_set, Classification, RotationSetEstimate, RotationSetOptions};
use rotdev::{LiftedTorusMap, Vec2};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Dependency = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdClassification {
    Point = 0,
    Segment = 1,
    Interior = 2,
    Inconclusive = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdVerdict {
    Bounded = 0,
    Growing = 1,
    Inconclusive = 2,
}

/// Lift of a torus homeomorphism.
pub struct RdMap(LiftedTorusMap);

/// Finite-horizon rotation set estimate.
pub struct RdRotationSet(RotationSetEstimate);

/// Deviation profile `D(n)`, `|n| ≤ N`.
pub struct RdProfile(DeviationProfile);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

fn fail(status: RdStatus, msg: impl std::fmt::Display) -> RdStatus {
    set_error(&msg.to_string());
    status
}

fn from_cli(e: CliError) -> RdStatus {
    let status = match &e {
        CliError::Config(_) | CliError::UnknownArtifact(_) => RdStatus::Config,
        CliError::Io { .. } => RdStatus::Io,
        CliError::Numerical(_) => RdStatus::Numerical,
        CliError::Dependency(_) => RdStatus::Dependency,
    };
    fail(status, e)
}

fn guard(f: impl FnOnce() -> RdStatus) -> RdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(RdStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, RdStatus> {
    if s.is_null() {
        return Err(fail(RdStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(RdStatus::InvalidArgument, "string is not UTF-8"))
}

fn boxed<T>(out: *mut *mut T, value: T) -> RdStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    RdStatus::Ok
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rd_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn rd_status_str(status: RdStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        RdStatus::Ok => b"ok\0",
        RdStatus::NullPointer => b"null pointer\0",
        RdStatus::InvalidArgument => b"invalid argument\0",
        RdStatus::Config => b"configuration error\0",
        RdStatus::Numerical => b"numerical precondition failed\0",
        RdStatus::Dependency => b"stage dependency unmet\0",
        RdStatus::Io => b"i/o error\0",
        RdStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Translation `z ↦ z + (ax, ay)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_map_translation(ax: f64, ay: f64, out: *mut *mut RdMap) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return fail(RdStatus::NullPointer, "out is null");
        }
        if !(ax.is_finite() && ay.is_finite()) {
            return fail(RdStatus::InvalidArgument, "non-finite translation");
        }
        boxed(out, RdMap(LiftedTorusMap::translation(Vec2::new(ax, ay))))
    })
}

/// Map described by the `[map]` section of a run configuration.
///
/// # Safety
/// `ini` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_map_from_ini(ini: *const c_char, out: *mut *mut RdMap) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return fail(RdStatus::NullPointer, "out is null");
        }
        let ini = match text(ini) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let map = RunConfig::parse(ini).and_then(|cfg| cfg.map.build().map_err(CliError::from));
        match map {
            Ok(m) => boxed(out, RdMap(m)),
            Err(e) => from_cli(e),
        }
    })
}

/// # Safety
/// `map` must be null or a handle from an `rd_map_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn rd_map_free(map: *mut RdMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// `f̃(x, y)`.
///
/// # Safety
/// `map` must be a live handle; `ox`, `oy` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_map_apply(map: *const RdMap, x: f64, y: f64, ox: *mut f64, oy: *mut f64) -> RdStatus {
    guard(|| {
        if map.is_null() || ox.is_null() || oy.is_null() {
            return fail(RdStatus::NullPointer, "null argument");
        }
        let w = (*map).0.apply(Vec2::new(x, y));
        *ox = w.x;
        *oy = w.y;
        RdStatus::Ok
    })
}

/// Cocycle `Δ^{(n)}(x, y) = f̃ⁿ(z) − z`; negative `n` iterates the inverse.
///
/// # Safety
/// `map` must be a live handle; `ox`, `oy` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_map_displacement(map: *const RdMap, x: f64, y: f64, n: i64, ox: *mut f64, oy: *mut f64) -> RdStatus {
    guard(|| {
        if map.is_null() || ox.is_null() || oy.is_null() {
            return fail(RdStatus::NullPointer, "null argument");
        }
        match (*map).0.iterate_displacement(Vec2::new(x, y), n) {
            Ok(d) => {
                *ox = d.x;
                *oy = d.y;
                RdStatus::Ok
            }
            Err(e) => fail(RdStatus::Numerical, e),
        }
    })
}

/// Convex hull of the averages `Δ^{(n)}/n` over a `grid_res²` lattice, with
/// default tolerances.
///
/// # Safety
/// `map` must be a live handle, `horizons` must point to `n_horizons`
/// values and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_rotation_set_estimate(
    map: *const RdMap,
    grid_res: usize,
    horizons: *const u64,
    n_horizons: usize,
    out: *mut *mut RdRotationSet,
) -> RdStatus {
    guard(|| {
        if map.is_null() || horizons.is_null() || out.is_null() {
            return fail(RdStatus::NullPointer, "null argument");
        }
        let hs = std::slice::from_raw_parts(horizons, n_horizons);
        match estimate_rotation_set(&(*map).0, grid_res, hs, &RotationSetOptions::default()) {
            Ok(est) => boxed(out, RdRotationSet(est)),
            Err(e) => fail(RdStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `set` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn rd_rotation_set_free(set: *mut RdRotationSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_rotation_set_classification(set: *const RdRotationSet) -> RdClassification {
    match (*set).0.classification {
        Classification::Point => RdClassification::Point,
        Classification::Segment => RdClassification::Segment,
        Classification::Interior => RdClassification::Interior,
        Classification::Inconclusive => RdClassification::Inconclusive,
    }
}

/// Number of hull vertices.
///
/// # Safety
/// `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_rotation_set_hull_len(set: *const RdRotationSet) -> usize {
    (*set).0.hull.len()
}

/// Hull vertex `k` (counter-clockwise order).
///
/// # Safety
/// `set` must be a live handle; `x`, `y` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_rotation_set_hull_vertex(set: *const RdRotationSet, k: usize, x: *mut f64, y: *mut f64) -> RdStatus {
    if set.is_null() || x.is_null() || y.is_null() {
        return fail(RdStatus::NullPointer, "null argument");
    }
    let est = &(*set).0;
    match est.hull.get(k) {
        Some(p) => {
            *x = p.x;
            *y = p.y;
            RdStatus::Ok
        }
        None => fail(RdStatus::InvalidArgument, format!("vertex {k} out of range")),
    }
}

/// Carrier line `⟨z, v⟩ = α`; `Dependency` when the estimate has none.
///
/// # Safety
/// `set` must be a live handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_rotation_set_carrier(set: *const RdRotationSet, vx: *mut f64, vy: *mut f64, alpha: *mut f64) -> RdStatus {
    if set.is_null() || vx.is_null() || vy.is_null() || alpha.is_null() {
        return fail(RdStatus::NullPointer, "null argument");
    }
    match (*set).0.carrier {
        Some(c) => {
            *vx = c.v.x;
            *vy = c.v.y;
            *alpha = c.alpha;
            RdStatus::Ok
        }
        None => fail(RdStatus::Dependency, "rotation set is not contained in a line"),
    }
}

/// Deviation profile in direction `(vx, vy)` against the line level `alpha`.
///
/// # Safety
/// `map` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_deviation_profile(
    map: *const RdMap,
    vx: f64,
    vy: f64,
    alpha: f64,
    grid_res: usize,
    horizon: u64,
    out: *mut *mut RdProfile,
) -> RdStatus {
    guard(|| {
        if map.is_null() || out.is_null() {
            return fail(RdStatus::NullPointer, "null argument");
        }
        let Some(v) = Vec2::new(vx, vy).normalized() else {
            return fail(RdStatus::InvalidArgument, "direction must be non-zero");
        };
        match deviation_profile(&(*map).0, v, alpha, grid_res, horizon) {
            Ok(p) => boxed(out, RdProfile(p)),
            Err(e) => fail(RdStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `profile` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn rd_profile_free(profile: *mut RdProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Horizon `N` of the profile.
///
/// # Safety
/// `profile` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_profile_horizon(profile: *const RdProfile) -> u64 {
    (*profile).0.horizon
}

/// `D(n)` for `|n| ≤ N`.
///
/// # Safety
/// `profile` must be a live handle; `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rd_profile_value(profile: *const RdProfile, n: i64, value: *mut f64) -> RdStatus {
    if profile.is_null() || value.is_null() {
        return fail(RdStatus::NullPointer, "null argument");
    }
    let p = &(*profile).0;
    if n.unsigned_abs() > p.horizon {
        return fail(RdStatus::InvalidArgument, format!("|{n}| exceeds the horizon {}", p.horizon));
    }
    *value = p.d_at(n);
    RdStatus::Ok
}

/// `max_{|n| ≤ N} D(n)`.
///
/// # Safety
/// `profile` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_profile_sup(profile: *const RdProfile) -> f64 {
    (*profile).0.sup()
}

/// # Safety
/// `profile` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_profile_verdict(profile: *const RdProfile) -> RdVerdict {
    match (*profile).0.verdict {
        Verdict::Bounded => RdVerdict::Bounded,
        Verdict::Growing => RdVerdict::Growing,
        Verdict::Inconclusive => RdVerdict::Inconclusive,
    }
}

/// Runs a pipeline subcommand (`rotset`, `deviation`, `stableset`,
/// `foliation`, `verify`, `render`) as the `rotdev` binary would. `out_dir`
/// may be null to use the configured directory.
///
/// # Safety
/// String arguments must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rd_run(subcommand: *const c_char, config_path: *const c_char, out_dir: *const c_char, force: bool) -> RdStatus {
    guard(|| {
        let (sub, cfg) = match (text(subcommand), text(config_path)) {
            (Ok(s), Ok(c)) => (s, c),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let sub = match sub {
            "rotset" => Subcommand::Rotset,
            "deviation" => Subcommand::Deviation,
            "stableset" => Subcommand::Stableset,
            "foliation" => Subcommand::Foliation,
            "verify" => Subcommand::Verify,
            "render" => Subcommand::Render,
            other => return fail(RdStatus::InvalidArgument, format!("unknown subcommand {other:?}")),
        };
        let out = if out_dir.is_null() {
            None
        } else {
            match text(out_dir) {
                Ok(s) => Some(Path::new(s)),
                Err(e) => return e,
            }
        };
        match RunConfig::load(Path::new(cfg)).and_then(|c| cli::run(sub, &c, out, force)) {
            Ok(_) => RdStatus::Ok,
            Err(e) => from_cli(e),
        }
    })
}

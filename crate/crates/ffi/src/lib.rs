//! C ABI over the fiberscope engine.
//!
//! Every function returns an [`FsStatus`]; results come back through out
//! pointers. On failure a message is available from [`fs_last_error`] on
//! the calling thread. Handles are opaque and must be released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fiberscope::io::{parse_trk, parse_vtp, ScanOptions};
use fiberscope::model::{ClusterGeometry, Range};
use fiberscope::projection::{ProjectionError, ProjectionLayout};
use fiberscope::stats::minmax_normalize;
use fiberscope::{Engine, EngineConfig, EngineError, ProjectionRequest};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ScanFailed = 3,
    LoadFailed = 4,
    ParseFailed = 5,
    StatsFailed = 6,
    BadK = 7,
    UnknownAxis = 8,
    UnknownSubject = 9,
    UnknownCluster = 10,
    NoClusters = 11,
    ProjectionFailed = 12,
    OutOfRange = 13,
    InvalidRange = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

/// A scanned cohort with lazily loaded clusters.
pub struct FsEngine(Engine);

/// A 2D projection layout.
pub struct FsLayout(ProjectionLayout);

/// Parsed geometry of one cluster file.
pub struct FsGeometry(ClusterGeometry);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: FsStatus, msg: impl ToString) -> FsStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> FsStatus) -> FsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(FsStatus::Panic, "internal panic"),
    }
}

fn engine_status(e: &EngineError) -> FsStatus {
    match e {
        EngineError::Scan(_) => FsStatus::ScanFailed,
        EngineError::Load(_) => FsStatus::LoadFailed,
        EngineError::Stats { .. } => FsStatus::StatsFailed,
        EngineError::Projection(ProjectionError::BadK { .. }) => FsStatus::BadK,
        EngineError::Projection(_) => FsStatus::ProjectionFailed,
        EngineError::UnknownSubject(_) => FsStatus::UnknownSubject,
        EngineError::UnknownCluster(_) => FsStatus::UnknownCluster,
        EngineError::UnknownAxis(_) => FsStatus::UnknownAxis,
        EngineError::NoClusters => FsStatus::NoClusters,
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, FsStatus> {
    if p.is_null() {
        return Err(fail(FsStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(FsStatus::InvalidUtf8, e))
}

fn csv_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect()
}

macro_rules! ensure_nonnull {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            return fail(FsStatus::NullArgument, "null pointer argument");
        }
    };
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Scans the cohort under `root` with the default file pattern.
///
/// # Safety
/// `root` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_engine_open(root: *const c_char, out: *mut *mut FsEngine) -> FsStatus {
    guard(|| {
        ensure_nonnull!(out);
        let root = match str_arg(root) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match Engine::open(Path::new(root), &ScanOptions::default(), EngineConfig::default()) {
            Ok(e) => {
                *out = Box::into_raw(Box::new(FsEngine(e)));
                FsStatus::Ok
            }
            Err(e) => fail(engine_status(&e), e),
        }
    })
}

/// # Safety
/// `engine` must come from [`fs_engine_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_engine_free(engine: *mut FsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_engine_subject_count(engine: *const FsEngine, out: *mut usize) -> FsStatus {
    guard(|| {
        ensure_nonnull!(engine, out);
        *out = (*engine).0.cohort().subjects.len();
        FsStatus::Ok
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_engine_cluster_count(engine: *const FsEngine, out: *mut usize) -> FsStatus {
    guard(|| {
        ensure_nonnull!(engine, out);
        *out = (*engine).0.cohort().cluster_count();
        FsStatus::Ok
    })
}

/// Projects every cluster of the cohort. `axes_csv` may be null for all
/// fields. `k < 0` selects the default pivot count; `k = 0` is `BadK`.
///
/// # Safety
/// `engine` and `out` must be valid; `axes_csv` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fs_engine_project(
    engine: *const FsEngine,
    axes_csv: *const c_char,
    k: i64,
    seed: u64,
    out: *mut *mut FsLayout,
) -> FsStatus {
    guard(|| {
        ensure_nonnull!(engine, out);
        let axes = if axes_csv.is_null() {
            Vec::new()
        } else {
            match str_arg(axes_csv) {
                Ok(s) => csv_list(s),
                Err(s) => return s,
            }
        };
        let req = ProjectionRequest {
            subjects: Vec::new(),
            axes,
            k: usize::try_from(k).ok(),
            seed: Some(seed),
        };
        match (*engine).0.project(&req) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(FsLayout(o.layout)));
                FsStatus::Ok
            }
            Err(e) => fail(engine_status(&e), e),
        }
    })
}

/// # Safety
/// `layout` must come from [`fs_engine_project`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_layout_free(layout: *mut FsLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_layout_len(layout: *const FsLayout, out: *mut usize) -> FsStatus {
    guard(|| {
        ensure_nonnull!(layout, out);
        *out = (*layout).0.len();
        FsStatus::Ok
    })
}

/// Position, cluster id and pivot flag of point `index`. Any out pointer
/// may be null.
///
/// # Safety
/// `layout` must be valid; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_layout_point(
    layout: *const FsLayout,
    index: usize,
    x: *mut f64,
    y: *mut f64,
    cluster_id: *mut u32,
    is_pivot: *mut bool,
) -> FsStatus {
    guard(|| {
        ensure_nonnull!(layout);
        let l = &(*layout).0;
        if index >= l.len() {
            return fail(FsStatus::OutOfRange, format!("index {index} >= {}", l.len()));
        }
        if !x.is_null() {
            *x = l.x(index);
        }
        if !y.is_null() {
            *y = l.y(index);
        }
        if !cluster_id.is_null() {
            *cluster_id = l.keys[index].cluster_id;
        }
        if !is_pivot.is_null() {
            *is_pivot = l.pivots.contains(&index);
        }
        FsStatus::Ok
    })
}

/// Copies the subject id of point `index` into `buf` with a trailing NUL.
/// `needed` receives the required size including the NUL; a short buffer
/// yields `BufferTooSmall`.
///
/// # Safety
/// `layout` and `needed` must be valid; `buf` writable for `buf_len` bytes
/// or null when `buf_len` is 0.
#[no_mangle]
pub unsafe extern "C" fn fs_layout_subject(
    layout: *const FsLayout,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    needed: *mut usize,
) -> FsStatus {
    guard(|| {
        ensure_nonnull!(layout, needed);
        let l = &(*layout).0;
        if index >= l.len() {
            return fail(FsStatus::OutOfRange, format!("index {index} >= {}", l.len()));
        }
        let id = l.keys[index].subject_id.as_bytes();
        *needed = id.len() + 1;
        if buf.is_null() || buf_len < id.len() + 1 {
            return fail(FsStatus::BufferTooSmall, format!("need {} bytes", id.len() + 1));
        }
        ptr::copy_nonoverlapping(id.as_ptr(), buf.cast::<u8>(), id.len());
        *buf.add(id.len()) = 0;
        FsStatus::Ok
    })
}

unsafe fn parse_geometry(
    bytes: *const u8,
    len: usize,
    out: *mut *mut FsGeometry,
    parse: impl FnOnce(&[u8]) -> Result<ClusterGeometry, String>,
) -> FsStatus {
    guard(|| {
        ensure_nonnull!(out);
        if bytes.is_null() && len > 0 {
            return fail(FsStatus::NullArgument, "null buffer");
        }
        let data = if len == 0 { &[][..] } else { std::slice::from_raw_parts(bytes, len) };
        match parse(data) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(FsGeometry(g)));
                FsStatus::Ok
            }
            Err(e) => fail(FsStatus::ParseFailed, e),
        }
    })
}

/// Parses an in-memory `.trk` file.
///
/// # Safety
/// `bytes` must be readable for `len` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_trk_parse(bytes: *const u8, len: usize, out: *mut *mut FsGeometry) -> FsStatus {
    parse_geometry(bytes, len, out, |b| parse_trk(b).map_err(|e| e.to_string()))
}

/// Parses an in-memory `.vtp` file.
///
/// # Safety
/// `bytes` must be readable for `len` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_vtp_parse(bytes: *const u8, len: usize, out: *mut *mut FsGeometry) -> FsStatus {
    parse_geometry(bytes, len, out, |b| parse_vtp(b).map_err(|e| e.to_string()))
}

/// # Safety
/// `geometry` must come from a parse function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_geometry_free(geometry: *mut FsGeometry) {
    if !geometry.is_null() {
        drop(Box::from_raw(geometry));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_geometry_counts(
    geometry: *const FsGeometry,
    fibers: *mut usize,
    points: *mut usize,
) -> FsStatus {
    guard(|| {
        ensure_nonnull!(geometry, fibers, points);
        *fibers = (*geometry).0.fiber_count();
        *points = (*geometry).0.point_count();
        FsStatus::Ok
    })
}

/// Copies fiber `index` as `x, y, z` triples into `xyz` (capacity `cap`
/// doubles). `n_points` always receives the fiber's vertex count.
///
/// # Safety
/// `geometry` and `n_points` must be valid; `xyz` writable for `cap`
/// doubles or null when `cap` is 0.
#[no_mangle]
pub unsafe extern "C" fn fs_geometry_fiber(
    geometry: *const FsGeometry,
    index: usize,
    xyz: *mut f64,
    cap: usize,
    n_points: *mut usize,
) -> FsStatus {
    guard(|| {
        ensure_nonnull!(geometry, n_points);
        let g = &(*geometry).0;
        let Some(fiber) = g.fibers.get(index) else {
            return fail(FsStatus::OutOfRange, format!("fiber {index} >= {}", g.fiber_count()));
        };
        *n_points = fiber.len();
        let needed = fiber.len() * 3;
        if xyz.is_null() || cap < needed {
            return fail(FsStatus::BufferTooSmall, format!("need {needed} doubles"));
        }
        for (i, v) in fiber.points.iter().flatten().enumerate() {
            *xyz.add(i) = *v;
        }
        FsStatus::Ok
    })
}

/// Min-max scaling of `x` into [0, 1]; a degenerate range gives 0.5.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_minmax_normalize(x: f64, min: f64, max: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        ensure_nonnull!(out);
        match minmax_normalize(x, Range::new(min, max)) {
            Ok(v) => {
                *out = v;
                FsStatus::Ok
            }
            Err(e) => fail(FsStatus::InvalidRange, e),
        }
    })
}

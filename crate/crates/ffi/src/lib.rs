//! C interface to `permlab`.
//!
//! Every fallible function returns a [`PermlabStatus`]; on failure the
//! message is available from [`permlab_last_error`] on the same thread.
//! Objects cross the boundary as opaque handles that must be released with
//! their matching `_free` function. Strings returned to the caller are owned
//! by the caller and released with [`permlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use permlab::lattice::Lattice;
use permlab::runner::{run, ExperimentConfig, RunOutput};
use permlab::PermlabError;

/// Status codes. The nonzero values of the first four match the exit
/// codes of the `permlab` binary.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermlabStatus {
    Ok = 0,
    Internal = 1,
    InvalidConfig = 2,
    Precondition = 3,
    CapExceeded = 4,
    NullArgument = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// Periodic lattice.
pub struct PermlabLattice(Lattice);

/// Outcome of one experiment: its JSON envelope and CSV table.
pub struct PermlabResult(RunOutput);

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

fn status_of(e: &PermlabError) -> PermlabStatus {
    match e.exit_code() {
        2 => PermlabStatus::InvalidConfig,
        3 => PermlabStatus::Precondition,
        4 => PermlabStatus::CapExceeded,
        _ => PermlabStatus::Internal,
    }
}

fn fail(status: PermlabStatus, msg: impl Into<String>) -> PermlabStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PermlabStatus) -> PermlabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(PermlabStatus::Panic, msg)
        }
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn permlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn permlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn permlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates the periodic cube of dimension `dim` and edge `edge`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn permlab_lattice_new(dim: usize, edge: usize, out: *mut *mut PermlabLattice) -> PermlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(PermlabStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        match Lattice::new(dim, edge) {
            Ok(l) => {
                *out = Box::into_raw(Box::new(PermlabLattice(l)));
                PermlabStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `lattice` must come from [`permlab_lattice_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn permlab_lattice_free(lattice: *mut PermlabLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn permlab_lattice_vertex_count(lattice: *const PermlabLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.vertex_count())
}

/// Writes the heat kernel `e^{Δt}` row-major into `buf`, which must hold
/// exactly `N * N` doubles.
///
/// # Safety
/// `lattice` must be a live handle and `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn permlab_lattice_heat_kernel(
    lattice: *const PermlabLattice,
    t: f64,
    buf: *mut f64,
    len: usize,
) -> PermlabStatus {
    guard(|| {
        let Some(lattice) = lattice.as_ref() else {
            return fail(PermlabStatus::NullArgument, "lattice is null");
        };
        if buf.is_null() {
            return fail(PermlabStatus::NullArgument, "buf is null");
        }
        let n = lattice.0.vertex_count();
        if n.checked_mul(n) != Some(len) {
            return fail(PermlabStatus::Precondition, format!("buffer holds {len} values, kernel needs {n}²"));
        }
        match lattice.0.heat_kernel_spectral(t) {
            Ok(k) => {
                std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&k.entries);
                PermlabStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Runs the experiment described by a JSON config, with the same keys as
/// the `permlab run --config` file. Nothing is written to disk.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer
/// to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn permlab_run_json(config_json: *const c_char, out: *mut *mut PermlabResult) -> PermlabStatus {
    guard(|| {
        if config_json.is_null() || out.is_null() {
            return fail(PermlabStatus::NullArgument, "config_json and out must be non-null");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(PermlabStatus::InvalidUtf8, "config is not valid UTF-8");
        };
        match ExperimentConfig::from_json(text).and_then(|cfg| run(&cfg)) {
            Ok(output) => {
                *out = Box::into_raw(Box::new(PermlabResult(output)));
                PermlabStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// The result envelope as JSON. Free with [`permlab_string_free`].
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn permlab_result_json(result: *const PermlabResult) -> *mut c_char {
    clear_error();
    let Some(result) = result.as_ref() else {
        set_error("result is null");
        return ptr::null_mut();
    };
    match result.0.envelope.to_json() {
        Ok(s) => to_c_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// The result table as CSV. Free with [`permlab_string_free`].
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn permlab_result_csv(result: *const PermlabResult) -> *mut c_char {
    clear_error();
    match result.as_ref() {
        Some(r) => to_c_string(r.0.table.to_string_lossy()),
        None => {
            set_error("result is null");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `result` must come from [`permlab_run_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn permlab_result_free(result: *mut PermlabResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

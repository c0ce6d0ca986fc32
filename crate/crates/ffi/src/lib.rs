//! C ABI over `qpn-core`.
//!
//! Models and states are opaque handles owned by the caller and released with
//! the matching `*_free` function. Every fallible call returns a
//! [`QpnStatus`]; on failure the message is kept per thread and read with
//! [`qpn_last_error`]. Complex arrays are interleaved `re, im` doubles, and
//! matrices are row-major with `R[dst, src]` layout.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qpn_core::io::{self, Model};
use qpn_core::quantum::{Complex64, RatedGraph, Superposition};
use qpn_core::{ErrorKind, QpnError};

/// Status codes. The error classes match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpnStatus {
    Ok = 0,
    Validation = 2,
    Analysis = 3,
    Verification = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Loaded model: the rate graph of a QPN, net, GSPN or composed file.
pub struct QpnModel {
    graph: RatedGraph,
}

/// Superposition over the markings of one model.
pub struct QpnState {
    state: Superposition,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: QpnStatus, msg: impl Into<String>) -> QpnStatus {
    set_error(msg);
    status
}

fn from_error(e: QpnError) -> QpnStatus {
    let status = match e.kind() {
        ErrorKind::Validation => QpnStatus::Validation,
        ErrorKind::Analysis => QpnStatus::Analysis,
        ErrorKind::Verification => QpnStatus::Verification,
    };
    fail(status, e.to_string())
}

/// Runs `f`, mapping panics to [`QpnStatus::Panic`] and clearing the error on success.
fn guard(f: impl FnOnce() -> Result<(), QpnStatus>) -> QpnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QpnStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(QpnStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: qpn_core::Result<T>) -> Result<T, QpnStatus> {
    r.map_err(from_error)
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, QpnStatus> {
    // SAFETY: caller passes a handle from this library or null
    unsafe { p.as_ref() }.ok_or_else(|| fail(QpnStatus::NullPointer, format!("{what} is null")))
}

fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), QpnStatus> {
    if out.is_null() {
        return Err(fail(QpnStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: checked non-null; the caller provides writable storage
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn write_complex(values: &[Complex64], out: *mut f64, len: usize) -> Result<(), QpnStatus> {
    if out.is_null() {
        return Err(fail(QpnStatus::NullPointer, "output buffer is null"));
    }
    if len < 2 * values.len() {
        return Err(fail(
            QpnStatus::BufferTooSmall,
            format!("need {} doubles, got {len}", 2 * values.len()),
        ));
    }
    // SAFETY: `out` holds at least `2 * values.len()` doubles
    let buf = unsafe { std::slice::from_raw_parts_mut(out, 2 * values.len()) };
    for (pair, z) in buf.chunks_exact_mut(2).zip(values) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
    Ok(())
}

/// Copies `text` NUL-terminated into `buf`; `needed` receives the size
/// including the terminator even when `buf` is too small.
fn write_str(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), QpnStatus> {
    let n = text.len() + 1;
    if !needed.is_null() {
        // SAFETY: checked non-null
        unsafe { *needed = n };
    }
    if buf.is_null() || cap < n {
        return Err(QpnStatus::BufferTooSmall);
    }
    // SAFETY: `buf` holds at least `n` bytes
    unsafe {
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qpn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
///
/// # Safety
/// `buf` must hold `cap` bytes or be null; `needed` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn qpn_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> QpnStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match write_str(&msg, buf, cap, needed) {
        Ok(()) => QpnStatus::Ok,
        Err(s) => s,
    }
}

/// Parses a model document (net, QPN, GSPN or composed JSON) and builds its
/// rate graph with at most `max_states` markings.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpn_model_from_json(
    json: *const c_char,
    max_states: usize,
    out: *mut *mut QpnModel,
) -> QpnStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(QpnStatus::NullPointer, "json is null"));
        }
        // SAFETY: caller guarantees a NUL-terminated string
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| fail(QpnStatus::InvalidUtf8, e.to_string()))?;
        let graph = match lift(io::parse_model(text))? {
            Model::Composed(c) => c.graph,
            Model::Qpn(q) => lift(q.rated_graph(max_states))?,
            Model::Gspn(g) => lift(lift(qpn_core::gspn::to_qpn(&g))?.rated_graph(max_states))?,
            Model::Net(sys) => {
                lift(lift(qpn_core::quantum::Qpn::new(sys, Default::default()))?.rated_graph(max_states))?
            }
        };
        write_out(out, QpnModel { graph })
    })
}

/// # Safety
/// `model` must come from [`qpn_model_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qpn_model_free(model: *mut QpnModel) {
    if !model.is_null() {
        // SAFETY: allocated by `write_out`
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of reachable markings.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpn_model_dim(model: *const QpnModel, out: *mut usize) -> QpnStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| fail(QpnStatus::NullPointer, "out is null"))?;
        *out = m.graph.dim();
        Ok(())
    })
}

/// Monomial text of marking `index` in canonical order.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `cap` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn qpn_model_marking(
    model: *const QpnModel,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> QpnStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let space = m.graph.space();
        if index >= space.len() {
            return Err(fail(
                QpnStatus::Validation,
                format!("marking index {index} out of range"),
            ));
        }
        write_str(&space.marking(index).to_string(), buf, cap, needed).map_err(|s| fail(s, "marking buffer too small"))
    })
}

/// Rate matrix (or its row-normalised form) into `out`, which must hold
/// `2 * dim * dim` doubles.
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qpn_model_rate_matrix(
    model: *const QpnModel,
    normal: bool,
    out: *mut f64,
    len: usize,
) -> QpnStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let r = m.graph.rate_matrix();
        let r = if normal { r.normalize_rows() } else { r };
        let n = r.dim();
        let rows: Vec<Complex64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|ij| r.matrix()[ij])
            .collect();
        write_complex(&rows, out, len)
    })
}

/// Basis state on the initial marking.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpn_state_initial(model: *const QpnModel, out: *mut *mut QpnState) -> QpnStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let state = Superposition::basis(m.graph.space(), m.graph.initial());
        write_out(out, QpnState { state })
    })
}

/// State from `dim` interleaved amplitudes.
///
/// # Safety
/// `model` must be a live handle; `amps` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qpn_state_from_amplitudes(
    model: *const QpnModel,
    amps: *const f64,
    len: usize,
    out: *mut *mut QpnState,
) -> QpnStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        if amps.is_null() {
            return Err(fail(QpnStatus::NullPointer, "amplitudes are null"));
        }
        if len != 2 * m.graph.dim() {
            return Err(fail(
                QpnStatus::Validation,
                format!("expected {} doubles, got {len}", 2 * m.graph.dim()),
            ));
        }
        // SAFETY: caller guarantees `len` readable doubles
        let raw = unsafe { std::slice::from_raw_parts(amps, len) };
        let z = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let state = lift(Superposition::new(m.graph.space().clone(), z))?;
        write_out(out, QpnState { state })
    })
}

/// # Safety
/// `state` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qpn_state_free(state: *mut QpnState) {
    if !state.is_null() {
        // SAFETY: allocated by `write_out`
        drop(unsafe { Box::from_raw(state) });
    }
}

/// `steps` edge-sum evolution steps of `state` under `model` into a new state.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpn_evolve(
    model: *const QpnModel,
    state: *const QpnState,
    steps: usize,
    out: *mut *mut QpnState,
) -> QpnStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let s = unsafe { deref(state, "state") }?;
        if !m.graph.space().same_shape(s.state.space()) {
            return Err(fail(QpnStatus::Validation, "state belongs to a different state space"));
        }
        let next = lift(m.graph.evolve(&s.state, steps))?;
        write_out(out, QpnState { state: next })
    })
}

/// Interleaved amplitudes; `out` must hold `2 * dim` doubles.
///
/// # Safety
/// `state` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qpn_state_amplitudes(state: *const QpnState, out: *mut f64, len: usize) -> QpnStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        write_complex(s.state.amplitudes(), out, len)
    })
}

/// Born probabilities `|a_m|^2 / ||a||^2`; `out` must hold `dim` doubles.
///
/// # Safety
/// `state` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qpn_state_probabilities(state: *const QpnState, out: *mut f64, len: usize) -> QpnStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        let p = lift(s.state.born_probabilities())?;
        if out.is_null() {
            return Err(fail(QpnStatus::NullPointer, "output buffer is null"));
        }
        if len < p.len() {
            return Err(fail(
                QpnStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", p.len()),
            ));
        }
        // SAFETY: `out` holds at least `p.len()` doubles
        unsafe { ptr::copy_nonoverlapping(p.as_ptr(), out, p.len()) };
        Ok(())
    })
}

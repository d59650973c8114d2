//! C ABI over `ampctl`.
//!
//! Every entry point returns an [`AmpStatus`]; on failure the message is
//! available from [`amp_last_error`] on the same thread. Objects are opaque
//! handles released with their `*_free` function. Panics never cross the
//! boundary: they are caught and reported as `AMP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;
use std::sync::Arc;

use ampctl::config::{self, SimConfig};
use ampctl::control::{poles_to_coefficients, Complex};
use ampctl::dictionary::{build_dictionary, Dictionary, DictionarySpec};
use ampctl::identifier::{AmpIdentifier, Regressor, RegressorConfig, Safeguard};
use ampctl::simulation::{run_closed_loop, SimRun};
use ampctl::trace::write_trace_file;
use ampctl::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmpStatus {
    Ok = 0,
    /// A required pointer was null.
    Null = 1,
    InvalidArgument = 2,
    /// Config could not be parsed, resolved, or validated.
    Config = 3,
    /// A computation produced or received a non-finite value.
    NonFinite = 4,
    Io = 5,
    Panic = 6,
}

/// Dictionary of periodic atoms.
pub struct AmpDictionary {
    inner: Arc<Dictionary>,
}

/// Online identifier bound to a dictionary.
pub struct AmpIdentifierHandle {
    inner: AmpIdentifier,
}

/// A finished closed-loop run.
pub struct AmpRun {
    inner: SimRun,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AmpUpdate {
    pub error_before: f64,
    pub selected_index: usize,
    pub correlation: f64,
    pub applied: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AmpTraceRow {
    pub k: usize,
    pub t: f64,
    pub r: f64,
    pub ym: f64,
    pub y: f64,
    pub u: f64,
    pub f_true: f64,
    pub f_hat: f64,
    pub eta: f64,
    pub e: f64,
    /// -1 when no atom was selected.
    pub selected_index: i64,
    pub a: f64,
    pub applied: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AmpMetrics {
    pub tracking_rmse: f64,
    pub identification_rmse: f64,
    pub max_abs_u: f64,
    pub max_abs_y: f64,
    pub window_start: f64,
    pub window_rows: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AmpStatus {
    match err {
        Error::Config(_) | Error::UnknownKey(_) | Error::ConfigNotFound(_) | Error::Json(_) => {
            AmpStatus::Config
        }
        Error::NonFinite { .. } | Error::NonFiniteInput(_) => AmpStatus::NonFinite,
        Error::Io { .. } | Error::Csv(_) => AmpStatus::Io,
        _ => AmpStatus::InvalidArgument,
    }
}

struct Failure(AmpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AmpStatus::Null, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> AmpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AmpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            AmpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AmpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn short(len: usize, need: usize, what: &str) -> Result<(), Failure> {
    if len < need {
        Err(Failure(
            AmpStatus::InvalidArgument,
            format!("{what} holds {len} values but {need} are needed"),
        ))
    } else {
        Ok(())
    }
}

/// Message of the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn amp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn amp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Expands `n` poles (`re[i] + im[i] i`) into `out_s[0..n]`, the coefficients
/// of `y_m(k) = sum s_i y_m(k-i) + r(k)`.
///
/// # Safety
/// `re`, `im` and `out_s` must each point to `n` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn amp_poles_to_coefficients(
    re: *const f64,
    im: *const f64,
    n: usize,
    out_s: *mut f64,
) -> AmpStatus {
    guard(|| {
        let re = slice_arg(re, n, "re")?;
        let im = slice_arg(im, n, "im")?;
        let out = out_slice(out_s, n, "out_s")?;
        let poles: Vec<Complex<f64>> = re
            .iter()
            .zip(im)
            .map(|(&a, &b)| Complex::new(a, b))
            .collect();
        out.copy_from_slice(&poles_to_coefficients(&poles)?);
        Ok(())
    })
}

/// Builds a dictionary from a JSON dictionary spec (the `dictionary` section
/// of a run config) for a regressor of `regressor_dim` entries.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_dictionary_new(
    spec_json: *const c_char,
    regressor_dim: usize,
    out: *mut *mut AmpDictionary,
) -> AmpStatus {
    guard(|| {
        let text = str_arg(spec_json, "spec_json")?;
        let spec: DictionarySpec =
            serde_json::from_str(text).map_err(|e| Failure(AmpStatus::Config, e.to_string()))?;
        let dict = build_dictionary(&spec, regressor_dim)?;
        let boxed = Box::new(AmpDictionary {
            inner: Arc::new(dict),
        });
        write_out(out, Box::into_raw(boxed), "out")
    })
}

/// Number of atoms.
///
/// # Safety
/// `dict` must be a live handle; `out_len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_dictionary_len(
    dict: *const AmpDictionary,
    out_len: *mut usize,
) -> AmpStatus {
    guard(|| write_out(out_len, handle(dict, "dict")?.inner.len(), "out_len"))
}

/// Evaluates every atom at the scalar `x` into `out[0..len]`.
///
/// # Safety
/// `dict` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn amp_dictionary_eval(
    dict: *const AmpDictionary,
    x: f64,
    out: *mut f64,
    len: usize,
) -> AmpStatus {
    guard(|| {
        let dict = &handle(dict, "dict")?.inner;
        if !x.is_finite() {
            return Err(Error::NonFiniteInput("x").into());
        }
        short(len, dict.len(), "out")?;
        out_slice(out, dict.len(), "out")?.copy_from_slice(&dict.evaluate_at(x));
        Ok(())
    })
}

/// # Safety
/// `dict` must be null or a handle from [`amp_dictionary_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amp_dictionary_free(dict: *mut AmpDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Creates an identifier with zero coefficients. `safeguard` is 0 for clamp,
/// 1 for skip. The identifier keeps its own reference to the dictionary.
///
/// # Safety
/// `dict` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_identifier_new(
    dict: *const AmpDictionary,
    p: usize,
    q: usize,
    epsilon: f64,
    safeguard: i32,
    out: *mut *mut AmpIdentifierHandle,
) -> AmpStatus {
    guard(|| {
        let dict = Arc::clone(&handle(dict, "dict")?.inner);
        let safeguard = match safeguard {
            0 => Safeguard::Clamp,
            1 => Safeguard::Skip,
            other => {
                return Err(Failure(
                    AmpStatus::InvalidArgument,
                    format!("unknown safeguard {other}"),
                ))
            }
        };
        let inner = AmpIdentifier::new(dict, RegressorConfig::new(p, q)?, epsilon, safeguard)?;
        write_out(
            out,
            Box::into_raw(Box::new(AmpIdentifierHandle { inner })),
            "out",
        )
    })
}

/// Current estimate `f_hat` at the regressor `reg[0..len]`.
///
/// # Safety
/// `id` must be a live handle; `reg` must hold `len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amp_identifier_predict(
    id: *const AmpIdentifierHandle,
    reg: *const f64,
    len: usize,
    out: *mut f64,
) -> AmpStatus {
    guard(|| {
        let id = &handle(id, "id")?.inner;
        let reg = Regressor::from_values(slice_arg(reg, len, "reg")?.to_vec());
        write_out(out, id.predict(&reg)?, "out")
    })
}

/// One adaptive update towards the target `y`. `out` may be null.
///
/// # Safety
/// `id` must be a live handle; `reg` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn amp_identifier_update(
    id: *mut AmpIdentifierHandle,
    reg: *const f64,
    len: usize,
    y: f64,
    out: *mut AmpUpdate,
) -> AmpStatus {
    guard(|| {
        let id = &mut id.as_mut().ok_or_else(|| null("id"))?.inner;
        let reg = Regressor::from_values(slice_arg(reg, len, "reg")?.to_vec());
        let rec = id.update(&reg, y)?;
        if !out.is_null() {
            out.write(AmpUpdate {
                error_before: rec.error_before,
                selected_index: rec.selected_index,
                correlation: rec.correlation,
                applied: rec.applied,
            });
        }
        Ok(())
    })
}

/// Copies the coefficient vector into `out[0..len]`; `len` must be at least
/// the dictionary size.
///
/// # Safety
/// `id` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn amp_identifier_theta(
    id: *const AmpIdentifierHandle,
    out: *mut f64,
    len: usize,
) -> AmpStatus {
    guard(|| {
        let theta = handle(id, "id")?.inner.theta();
        short(len, theta.len(), "out")?;
        out_slice(out, theta.len(), "out")?.copy_from_slice(theta);
        Ok(())
    })
}

/// # Safety
/// `id` must be null or a handle from [`amp_identifier_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amp_identifier_free(id: *mut AmpIdentifierHandle) {
    if !id.is_null() {
        drop(Box::from_raw(id));
    }
}

fn run(config: SimConfig, out: *mut *mut AmpRun) -> Result<(), Failure> {
    let inner = run_closed_loop(&config)?;
    unsafe { write_out(out, Box::into_raw(Box::new(AmpRun { inner })), "out") }
}

/// Runs built-in example 1 or 2 with its default config.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_run_example(which: i32, out: *mut *mut AmpRun) -> AmpStatus {
    guard(|| {
        let config = match which {
            1 => SimConfig::example1(),
            2 => SimConfig::example2(),
            other => {
                return Err(Failure(
                    AmpStatus::InvalidArgument,
                    format!("no example {other}"),
                ))
            }
        };
        run(config, out)
    })
}

/// Runs a config given as JSON, merged over the defaults of its
/// `plant.kind` exactly as the CLI's `custom` command does.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_run_from_json(
    config_json: *const c_char,
    out: *mut *mut AmpRun,
) -> AmpStatus {
    guard(|| {
        let text = str_arg(config_json, "config_json")?;
        let doc =
            serde_json::from_str(text).map_err(|e| Failure(AmpStatus::Config, e.to_string()))?;
        run(config::resolve(None, Some(doc), &[])?, out)
    })
}

/// Number of trace rows.
///
/// # Safety
/// `run` must be a live handle; `out_len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_run_len(run: *const AmpRun, out_len: *mut usize) -> AmpStatus {
    guard(|| write_out(out_len, handle(run, "run")?.inner.trace.len(), "out_len"))
}

/// Copies trace row `index`.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_run_row(
    run: *const AmpRun,
    index: usize,
    out: *mut AmpTraceRow,
) -> AmpStatus {
    guard(|| {
        let trace = &handle(run, "run")?.inner.trace;
        let r = trace.get(index).ok_or_else(|| {
            Failure(
                AmpStatus::InvalidArgument,
                format!("row {index} out of range for trace of {} rows", trace.len()),
            )
        })?;
        write_out(
            out,
            AmpTraceRow {
                k: r.k,
                t: r.t,
                r: r.r,
                ym: r.ym,
                y: r.y,
                u: r.u,
                f_true: r.f_true,
                f_hat: r.f_hat,
                eta: r.eta,
                e: r.e,
                selected_index: r.selected_index.map_or(-1, |i| i as i64),
                a: r.a,
                applied: r.applied,
            },
            "out",
        )
    })
}

/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amp_run_metrics(run: *const AmpRun, out: *mut AmpMetrics) -> AmpStatus {
    guard(|| {
        let m = handle(run, "run")?.inner.metrics;
        write_out(
            out,
            AmpMetrics {
                tracking_rmse: m.tracking_rmse,
                identification_rmse: m.identification_rmse,
                max_abs_u: m.max_abs_u,
                max_abs_y: m.max_abs_y,
                window_start: m.window_start,
                window_rows: m.window_rows,
            },
            "out",
        )
    })
}

/// Writes the trace as CSV (same format as the CLI's `trace.csv`).
///
/// # Safety
/// `run` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn amp_run_write_csv(run: *const AmpRun, path: *const c_char) -> AmpStatus {
    guard(|| {
        let run = &handle(run, "run")?.inner;
        let path = str_arg(path, "path")?;
        write_trace_file(Path::new(path), &run.trace)?;
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from an `amp_run_*` constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amp_run_free(run: *mut AmpRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

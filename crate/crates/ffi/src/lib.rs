//! C ABI over the mode checker.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Strings returned through `char **` out
//! parameters are owned by the caller and must be released with
//! [`modal_string_free`]. Every function that can fail returns one of the
//! `MODAL_*` status codes and leaves a message for [`modal_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use modal::cli::{self, CliError};
use modal::frontend::{self, Program};
use modal::scheduler::{check_program, CheckOptions, CheckReport};

/// Success, or a check without errors.
pub const MODAL_OK: i32 = 0;
/// The check found mode errors (or warnings under `MODAL_WERROR`).
pub const MODAL_MODE: i32 = 1;
/// Syntax, definition or type error in the input.
pub const MODAL_PARSE: i32 = 2;
/// Internal failure; the message says what.
pub const MODAL_INTERNAL: i32 = 3;
/// A required pointer argument was null.
pub const MODAL_NULL: i32 = -1;
/// A string argument was not valid UTF-8.
pub const MODAL_UTF8: i32 = -2;
/// An index was out of range.
pub const MODAL_RANGE: i32 = -3;

/// Never insert `init` calls.
pub const MODAL_NO_INIT: u32 = 1;
/// Count warnings as errors in the report status.
pub const MODAL_WERROR: u32 = 2;
/// Skip parameter recovery at polymorphic calls.
pub const MODAL_NO_POLY: u32 = 4;

/// A loaded program.
pub struct ModalProgram {
    source: String,
    program: Program,
}

/// The result of checking a program.
pub struct ModalReport {
    program: Program,
    report: CheckReport,
    werror: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Run `f`, turning a panic into `MODAL_INTERNAL`.
fn guard(f: impl FnOnce() -> Result<i32, i32>) -> i32 {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) | Ok(Err(code)) => code,
        Err(_) => {
            set_error("internal error: panic in the checker");
            MODAL_INTERNAL
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, i32> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(MODAL_NULL);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        MODAL_UTF8
    })
}

unsafe fn give_string(s: String, out: *mut *mut c_char) -> Result<i32, i32> {
    let c = CString::new(s.replace('\0', " ")).expect("nul bytes replaced");
    *out = c.into_raw();
    Ok(MODAL_OK)
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), i32> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(MODAL_NULL)
    } else {
        Ok(())
    }
}

/// Parse, normalize and type `source`. On success `*out` holds a new handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modal_program_parse(
    source: *const c_char,
    out: *mut *mut ModalProgram,
) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let src = text(source, "source")?;
        let program = frontend::load(src).map_err(|e| {
            set_error(e.to_string());
            MODAL_PARSE
        })?;
        *out = Box::into_raw(Box::new(ModalProgram {
            source: src.to_string(),
            program,
        }));
        Ok(MODAL_OK)
    })
}

/// # Safety
/// `program` must come from [`modal_program_parse`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn modal_program_free(program: *mut ModalProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Check every mode declaration. `flags` combines `MODAL_NO_INIT`,
/// `MODAL_WERROR` and `MODAL_NO_POLY`. Returns the report status
/// (`MODAL_OK`, `MODAL_MODE` or `MODAL_INTERNAL`) with `*out` set, or a
/// negative code or `MODAL_PARSE` with `*out` null.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modal_check(
    program: *const ModalProgram,
    flags: u32,
    out: *mut *mut ModalReport,
) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(program, "program")?;
        let p = &*program;
        let opts = CheckOptions {
            init: flags & MODAL_NO_INIT == 0,
            poly: flags & MODAL_NO_POLY == 0,
        };
        let report = check_program(&p.program, opts).map_err(|e| {
            set_error(e.to_string());
            MODAL_PARSE
        })?;
        let werror = flags & MODAL_WERROR != 0;
        let status = cli::status(&report, werror);
        *out = Box::into_raw(Box::new(ModalReport {
            program: p.program.clone(),
            report,
            werror,
        }));
        Ok(status)
    })
}

/// `MODAL_OK`, `MODAL_MODE` or `MODAL_INTERNAL`, as returned by [`modal_check`].
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn modal_report_status(report: *const ModalReport) -> i32 {
    guard(|| {
        non_null(report, "report")?;
        let r = &*report;
        Ok(cli::status(&r.report, r.werror))
    })
}

/// Number of diagnostics in the report; 0 for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn modal_report_diagnostic_count(report: *const ModalReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).report.diagnostics.len()
}

/// Diagnostic `index` formatted as `line:col: severity[CODE] ...: message`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modal_report_diagnostic(
    report: *const ModalReport,
    index: usize,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(report, "report")?;
        let diags = &(*report).report.diagnostics;
        let d = diags.get(index).ok_or_else(|| {
            set_error(format!("diagnostic {index} of {}", diags.len()));
            MODAL_RANGE
        })?;
        give_string(d.to_string(), out)
    })
}

/// The emitted procedures, one clause per line.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modal_report_listing(
    report: *const ModalReport,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(report, "report")?;
        let r = &*report;
        give_string(cli::listing(&r.program, &r.report), out)
    })
}

/// # Safety
/// `report` must come from [`modal_check`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn modal_report_free(report: *mut ModalReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The type-instantiation grammar of a type under an instantiation, both
/// in source syntax, one production per line.
///
/// # Safety
/// `program` must be a live handle, `ty` and `inst` NUL-terminated strings
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modal_dump_ti(
    program: *const ModalProgram,
    ty: *const c_char,
    inst: *const c_char,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(program, "program")?;
        let ty = text(ty, "type")?;
        let inst = text(inst, "inst")?;
        let dump = cli::dump_ti(&(*program).source, ty, inst).map_err(|e| {
            set_error(e.to_string());
            match e {
                CliError::Io { .. } => MODAL_INTERNAL,
                CliError::Frontend(_) | CliError::Definitions(_) => MODAL_PARSE,
            }
        })?;
        give_string(dump, out)
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn modal_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failing call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn modal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn modal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

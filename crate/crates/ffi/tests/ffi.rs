use std::ffi::{c_char, CStr, CString};
use std::ptr;

use modal_ffi::*;

const STACK: &str = "\
:- typedef list(T) -> ([] ; [T|list(T)]).
:- instdef nelist(I) -> [I|list(I)].
:- instdef list(I) -> ([] ; [I|list(I)]).
:- pred pop(list(T),T,list(T)).
:- mode pop(in(nelist(ground)),out,out) is det.
pop(S0,E,S1) :- S0 = [E|S1].
";

const UNSCHEDULABLE: &str = "\
:- typedef abc -> a ; b ; c.
:- pred p(abc).
:- mode p(out).
p(X) :- X = Y.
";

fn parse(src: &str) -> *mut ModalProgram {
    let c = CString::new(src).unwrap();
    let mut prog = ptr::null_mut();
    assert_eq!(
        unsafe { modal_program_parse(c.as_ptr(), &mut prog) },
        MODAL_OK
    );
    assert!(!prog.is_null());
    prog
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { modal_string_free(s) };
    out
}

fn last_error() -> String {
    let p = modal_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn check_and_list() {
    let prog = parse(STACK);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { modal_check(prog, 0, &mut report) }, MODAL_OK);
    assert_eq!(unsafe { modal_report_status(report) }, MODAL_OK);
    assert_eq!(unsafe { modal_report_diagnostic_count(report) }, 0);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { modal_report_listing(report, &mut text) }, MODAL_OK);
    assert_eq!(take(text), "pop_mode1(S0, E, S1) :- S0 =: [E|S1].\n");
    unsafe {
        modal_report_free(report);
        modal_program_free(prog);
    }
}

#[test]
fn mode_errors_are_reported() {
    let prog = parse(UNSCHEDULABLE);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { modal_check(prog, 0, &mut report) }, MODAL_MODE);
    assert_eq!(unsafe { modal_report_diagnostic_count(report) }, 1);
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { modal_report_diagnostic(report, 0, &mut text) },
        MODAL_OK
    );
    assert!(take(text).contains("error[E001]"));
    assert_eq!(
        unsafe { modal_report_diagnostic(report, 1, &mut text) },
        MODAL_RANGE
    );
    assert!(text.is_null());
    assert!(last_error().contains("diagnostic 1"));
    unsafe {
        modal_report_free(report);
        modal_program_free(prog);
    }
}

#[test]
fn flags_reach_the_checker() {
    let src = "\
:- typedef cint deriving solver.
:- typedef list(T) -> ([] ; [T|list(T)]).
:- instdef list(I) -> ([] ; [I|list(I)]).
:- pred p(list(cint)).
:- mode p(out(list(old))).
p(L) :- L = [X].
";
    let prog = parse(src);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { modal_check(prog, 0, &mut report) }, MODAL_OK);
    unsafe { modal_report_free(report) };
    assert_eq!(
        unsafe { modal_check(prog, MODAL_NO_INIT, &mut report) },
        MODAL_MODE
    );
    unsafe {
        modal_report_free(report);
        modal_program_free(prog);
    }
}

#[test]
fn parse_errors_and_bad_arguments() {
    let bad = CString::new(":- pred p(").unwrap();
    let mut prog = ptr::null_mut();
    assert_eq!(
        unsafe { modal_program_parse(bad.as_ptr(), &mut prog) },
        MODAL_PARSE
    );
    assert!(prog.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(
        unsafe { modal_program_parse(ptr::null(), &mut prog) },
        MODAL_NULL
    );
    let invalid = [0xffu8 as c_char, 0];
    assert_eq!(
        unsafe { modal_program_parse(invalid.as_ptr(), &mut prog) },
        MODAL_UTF8
    );

    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { modal_check(ptr::null(), 0, &mut report) },
        MODAL_NULL
    );
    assert_eq!(unsafe { modal_report_status(ptr::null()) }, MODAL_NULL);
    assert_eq!(unsafe { modal_report_diagnostic_count(ptr::null()) }, 0);
    unsafe {
        modal_program_free(ptr::null_mut());
        modal_report_free(ptr::null_mut());
        modal_string_free(ptr::null_mut());
    }
}

#[test]
fn dump_ti_and_version() {
    let prog = parse(STACK);
    let (ty, inst) = (
        CString::new("list(T)").unwrap(),
        CString::new("nelist(ground)").unwrap(),
    );
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { modal_dump_ti(prog, ty.as_ptr(), inst.as_ptr(), &mut text) },
        MODAL_OK
    );
    assert!(take(text).starts_with("ti(list(T),nelist(ground)) -> "));
    let undefined = CString::new("wrap(ground)").unwrap();
    assert_eq!(
        unsafe { modal_dump_ti(prog, ty.as_ptr(), undefined.as_ptr(), &mut text) },
        MODAL_PARSE
    );
    unsafe { modal_program_free(prog) };
    let v = unsafe { CStr::from_ptr(modal_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

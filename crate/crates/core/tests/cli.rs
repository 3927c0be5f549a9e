//! The `modal` binary: output streams and exit codes.

mod common;

use std::process::{Command, Output};

use common::*;

fn modal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modal"))
        .args(args)
        .output()
        .unwrap()
}

fn path(name: &str) -> String {
    fixture_path(name).display().to_string()
}

#[test]
fn clean_check_prints_listing() {
    let out = modal(&["check", &path("stack")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), STACK);
    assert!(out.stderr.is_empty());
}

#[test]
fn mode_errors_exit_one() {
    let out = modal(&["check", &path("lcint")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error[E002] in p/2 mode 1"), "{err}");
}

#[test]
fn warnings_only_fail_with_werror() {
    assert_eq!(modal(&["check", &path("append")]).status.code(), Some(0));
    assert_eq!(
        modal(&["check", "--werror", &path("append")]).status.code(),
        Some(1)
    );
}

#[test]
fn flags_switch_off_init_and_recovery() {
    assert_eq!(
        modal(&["check", "--no-init", &path("pairlist")])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        modal(&["check", "--no-poly", &path("hopush")])
            .status
            .code(),
        Some(1)
    );
    let quiet = modal(&["check", "--quiet", &path("stack")]);
    assert!(quiet.stdout.is_empty());
}

#[test]
fn unreadable_or_malformed_input_exits_two() {
    assert_eq!(
        modal(&["check", "/nonexistent/x.hal"]).status.code(),
        Some(2)
    );
    let dir = std::env::temp_dir().join(format!("modal-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.hal");
    std::fs::write(&bad, ":- pred p(abc.\n").unwrap();
    let out = modal(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn dump_ti_prints_rules() {
    let out = modal(&[
        "dump-ti",
        &path("stack"),
        "--type",
        "list(T)",
        "--inst",
        "nelist(ground)",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("ti(list(T),nelist(ground)) -> [ti(T,ground)|"),
        "{text}"
    );
    assert!(text.contains("ti(T,ground) -> $ground(T)$"));
}

#[test]
fn oracle_subcommand_reports_properties() {
    let out = modal(&["oracle", "--samples", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("30 samples"), "{text}");
}

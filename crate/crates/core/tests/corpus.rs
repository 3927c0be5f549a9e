//! Generated programs: scale, self-check and output stability.

use std::time::Instant;

use modal::cli::{check_source, listing};
use modal::diag::Code;
use modal::scheduler::CheckOptions;
use modal::synth;

#[test]
fn generated_programs_check_cleanly() {
    let start = Instant::now();
    let (mut procs, mut errors) = (0, 0);
    for seed in 0..50 {
        let src = synth::program(seed, 200);
        let (_, report) = check_source(&src, CheckOptions::default())
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        assert_eq!(
            report.count(Code::I001),
            0,
            "seed {seed}: {:?}",
            report.diagnostics
        );
        procs += report.procedures.len();
        errors += report.diagnostics.iter().filter(|d| d.is_error()).count();
    }
    println!("{procs} procedures, {errors} errors, {:?}", start.elapsed());
    assert!(procs > errors * 4, "{procs} procedures vs {errors} errors");
}

#[test]
fn listing_is_byte_stable() {
    for seed in [3, 11, 29] {
        let src = synth::program(seed, 200);
        let a = check_source(&src, CheckOptions::default()).unwrap();
        let b = check_source(&src, CheckOptions::default()).unwrap();
        assert_eq!(listing(&a.0, &a.1), listing(&b.0, &b.1));
        assert_eq!(a.1.diagnostics, b.1.diagnostics);
    }
}

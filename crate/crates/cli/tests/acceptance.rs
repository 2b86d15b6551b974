//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use std::io::Write;
use std::process::Command;
use std::sync::Mutex;

use persistlab_cli::suite::{mc_payloads, run_criterion, SuiteOptions};
use persistlab_cli::{Payload, ResultRecord};

// Criteria time themselves, so they run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

// Written to the stdout handle directly so the line survives output capture.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn check(id: u8) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let r = run_criterion(id, &SuiteOptions::default()).expect("known criterion");
    report(format!(
        "criterion {:>2} {:<26} {} ({:.2}s of {}s) {}",
        r.id,
        r.name,
        if r.passed { "PASS" } else { "FAIL" },
        r.seconds,
        r.limit_seconds,
        r.detail
    ));
    assert!(r.passed, "criterion {id} failed: {}", r.detail);
}

#[test]
fn criterion_01_sparre_andersen() {
    check(1);
}

#[test]
fn criterion_02_double_factorial_sandwich() {
    check(2);
}

#[test]
fn criterion_03_dp_matches_enumeration() {
    check(3);
}

#[test]
fn criterion_04_gaussian_density_case() {
    check(4);
}

#[test]
fn criterion_05_persistence_exponents() {
    check(5);
}

#[test]
fn criterion_06_exact_upper_bounds() {
    check(6);
}

#[test]
fn criterion_07_lower_convolution_bound() {
    check(7);
}

#[test]
fn criterion_08_interval_partition() {
    check(8);
}

#[test]
fn criterion_09_moment_identity() {
    check(9);
}

#[test]
fn criterion_10_slepian_covariance() {
    check(10);
}

#[test]
fn criterion_11_ibm_scaling() {
    check(11);
}

#[test]
fn criterion_12_determinism() {
    check(12);
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let args = [
        "mc",
        "--dist",
        "gaussian:1",
        "--order",
        "2",
        "--n",
        "64..8192",
        "--paths",
        "100000",
        "--seed",
        "42",
        "--json",
    ];
    let payloads = |workers: &str| -> Vec<String> {
        let out = Command::new(env!("CARGO_BIN_EXE_persistlab"))
            .args(args)
            .args(["--workers", workers])
            .output()
            .expect("binary runs");
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| match ResultRecord::from_line(l).unwrap().payload {
                p @ Payload::Estimate(_) => serde_json::to_string(&p).unwrap(),
                p => panic!("{p:?}"),
            })
            .collect()
    };
    let one = payloads("1");
    let same = payloads("4") == one && payloads("8") == one;
    let in_process = mc_payloads(&args[1..args.len() - 1], 1).unwrap() == one;
    report(format!(
        "criterion 12 binary                     {} ({} payload lines, workers 1/4/8, in-process run agrees: {in_process})",
        if same && in_process { "PASS" } else { "FAIL" },
        one.len()
    ));
    assert!(same && in_process);
}

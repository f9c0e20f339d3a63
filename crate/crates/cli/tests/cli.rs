//! End-to-end tests against the built binary.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU32, Ordering};

static DIR_COUNTER: AtomicU32 = AtomicU32::new(0);

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "pfqmc-cli-{}-{}-{}",
        tag,
        std::process::id(),
        DIR_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn pfqmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pfqmc"))
}

fn short_run_args(out_dir: &std::path::Path) -> Vec<String> {
    [
        "--fixture",
        "single_level:-1.0,0.5",
        "--mode",
        "omega=1.0 gdiag=0.1 nmax=5",
        "--dtau",
        "0.005",
        "--total-time",
        "2.0",
        "--walkers",
        "32",
        "--seed",
        "7",
        "--out-dir",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out_dir.to_str().unwrap().to_string()])
    .collect()
}

#[test]
fn run_produces_trace_and_summary() {
    let dir = scratch_dir("basic");
    let output = pfqmc().args(short_run_args(&dir)).output().unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,tau,e_numerator_re,e_numerator_im,weight_denominator,e_mixed_re,e_mixed_im,total_weight,n_alive"
    );
    // 400 steps / estimator stride 10
    assert_eq!(lines.count(), 40);

    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    for key in [
        "e_mean=",
        "e_error=",
        "tau_int=",
        "n_samples_used=",
        "wall_time_seconds=",
        "seed=7",
        "scheme=two_field",
        "constraint=phaseless",
    ] {
        assert!(summary.contains(key), "summary missing {key}:\n{summary}");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("e_mean="));
}

#[test]
fn identical_seeds_give_byte_identical_traces() {
    let dir_a = scratch_dir("det-a");
    let dir_b = scratch_dir("det-b");
    assert!(pfqmc()
        .args(short_run_args(&dir_a))
        .output()
        .unwrap()
        .status
        .success());
    assert!(pfqmc()
        .args(short_run_args(&dir_b))
        .output()
        .unwrap()
        .status
        .success());
    let a = std::fs::read(dir_a.join("trace.csv")).unwrap();
    let b = std::fs::read(dir_b.join("trace.csv")).unwrap();
    assert_eq!(a, b);

    let dir_c = scratch_dir("det-c");
    let mut args = short_run_args(&dir_c);
    let seed_pos = args.iter().position(|a| a == "--seed").unwrap();
    args[seed_pos + 1] = "8".into();
    assert!(pfqmc().args(args).output().unwrap().status.success());
    let c = std::fs::read(dir_c.join("trace.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn oracle_summary_reports_fci_distance() {
    let dir = scratch_dir("oracle");
    let mut args = short_run_args(&dir);
    args.push("--oracle".into());
    let tt_pos = args.iter().position(|a| a == "--total-time").unwrap();
    args[tt_pos + 1] = "4.0".into();
    let output = pfqmc().args(args).output().unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    assert!(summary.contains("e_fci="));
    assert!(summary.contains("sigma_distance="));
}

#[test]
fn config_file_with_flag_override() {
    let dir = scratch_dir("config");
    let config_path = dir.join("run.conf");
    std::fs::write(
        &config_path,
        "fixture = single_level:-1.0,0.5\nmode = omega=1.0 gdiag=0.1 nmax=4\n\
         dtau = 0.005\ntotal_time = 1.0\nwalkers = 16\nseed = 3\n",
    )
    .unwrap();
    let output = pfqmc()
        .args([
            "--config",
            config_path.to_str().unwrap(),
            "--total-time",
            "2.0",
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    // flag wins: 2.0 / 0.005 / 10 = 40 samples
    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count() - 1, 40);
}

#[test]
fn fcidump_and_cavity_files_ingest() {
    let dir = scratch_dir("files");
    let fcidump = dir.join("FCIDUMP");
    std::fs::write(
        &fcidump,
        "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 1\n-1.0 1 1 0 0\n0.0 0 0 0 0\n",
    )
    .unwrap();
    let cavity = dir.join("cavity.txt");
    std::fs::write(
        &cavity,
        "NMODES 1 NORB 1\nMODE omega=1.0 nmax=4 dnuc=0.0\n1 1 0.1\n",
    )
    .unwrap();
    let output = pfqmc()
        .args([
            "--fcidump",
            fcidump.to_str().unwrap(),
            "--cavity",
            cavity.to_str().unwrap(),
            "--total-time",
            "2.0",
            "--walkers",
            "16",
            "--seed",
            "2",
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn nonzero_exit_on_bad_inputs() {
    // no system at all
    let output = pfqmc().output().unwrap();
    assert!(!output.status.success());

    // invalid dtau caught by validation with a diagnostic
    let dir = scratch_dir("bad");
    let mut args = short_run_args(&dir);
    let dtau_pos = args.iter().position(|a| a == "--dtau").unwrap();
    args[dtau_pos + 1] = "0.0".into();
    let output = pfqmc().args(args).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("dtau must be positive"));

    // unparseable FCIDUMP names the ingest stage
    let fcidump = dir.join("FCIDUMP");
    std::fs::write(&fcidump, "&FCI NELEC=2\n&END\n").unwrap();
    let output = pfqmc()
        .args([
            "--fcidump",
            fcidump.to_str().unwrap(),
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("ingest"));

    // unknown fixture
    let output = pfqmc()
        .args(["--fixture", "bogus:1.0", "--out-dir", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

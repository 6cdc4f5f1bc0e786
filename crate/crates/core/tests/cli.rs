use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ehmm::cli::csvio::{read_data, read_oracle, read_samples};
use ehmm::diagnostics::median_sign_run;

fn ehmm(out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ehmm"));
    cmd.args(&args[..1]).arg("--out").arg(out).args(&args[1..]);
    cmd.output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = ehmm(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn code(out: &Path, args: &[&str]) -> i32 {
    ehmm(out, args).status.code().unwrap()
}

#[test]
fn simulate_writes_n_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "3"]);
    let text = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let lines: Vec<&str> = text.split_terminator('\n').collect();
    assert_eq!(lines[0], "t,x,y");
    assert_eq!(lines.len(), 4);
    assert!(!text.contains('\r'));
    assert!(dir.path().join("config_resolved.txt").exists());
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["simulate", "--seed", "7"]);
    ok(b.path(), &["simulate", "--seed", "7"]);
    let (da, db) = (
        fs::read(a.path().join("data.csv")).unwrap(),
        fs::read(b.path().join("data.csv")).unwrap(),
    );
    assert_eq!(da, db);
    ok(b.path(), &["simulate", "--seed", "8"]);
    assert_ne!(da, fs::read(b.path().join("data.csv")).unwrap());
}

#[test]
fn demo_simulation_has_long_sign_runs_for_documented_seed() {
    // holds for about half of all seeds; seed 2 is the documented instance
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--seed", "2"]);
    let data = read_data(&dir.path().join("data.csv")).unwrap();
    assert_eq!(data.x.len(), 1000);
    assert!(median_sign_run(&data.x) > 20.0);
}

#[test]
fn zero_iterations_give_header_only_samples() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "20"]);
    ok(dir.path(), &["sample", "--n", "20", "--iters", "0"]);
    assert_eq!(
        fs::read_to_string(dir.path().join("samples.csv")).unwrap(),
        "iter,t,x\n"
    );
    assert!(!dir.path().join("timing.csv").exists());
}

#[test]
fn k1_samples_repeat_the_initial_sequence() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "25"]);
    ok(
        dir.path(),
        &["sample", "--n", "25", "--K", "1", "--iters", "4", "--timing"],
    );
    let y = read_data(&dir.path().join("data.csv")).unwrap().y;
    let samples = read_samples(&dir.path().join("samples.csv")).unwrap();
    assert_eq!(samples.len(), 4);
    for x in samples.values() {
        assert_eq!(x, &y);
    }
    assert!(dir.path().join("timing.csv").exists());
}

#[test]
fn zero_init_and_thinning() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "10"]);
    ok(
        dir.path(),
        &[
            "sample", "--n", "10", "--K", "1", "--iters", "9", "--burnin", "3", "--thin", "2", "--init", "zero",
        ],
    );
    let samples = read_samples(&dir.path().join("samples.csv")).unwrap();
    assert_eq!(samples.keys().copied().collect::<Vec<_>>(), vec![5, 7, 9]);
    assert!(samples.values().all(|x| x.iter().all(|v| *v == 0.0)));
}

#[test]
fn several_seeds_write_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "30"]);
    ok(dir.path(), &["sample", "--n", "30", "--iters", "3", "--seed", "4,5"]);
    for s in [4, 5] {
        assert!(dir.path().join(format!("samples_seed{s}.csv")).exists());
        assert!(dir.path().join(format!("summary_seed{s}.csv")).exists());
    }
    let a = fs::read(dir.path().join("samples_seed4.csv")).unwrap();
    let b = fs::read(dir.path().join("samples_seed5.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn metropolis_sampler_runs() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "30"]);
    ok(
        dir.path(),
        &[
            "sample",
            "--n",
            "30",
            "--iters",
            "5",
            "--sampler",
            "metropolis",
            "--proposal",
            "random-walk",
            "--proposal-sd",
            "0.5",
        ],
    );
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("iter,log_joint,switches,moves,ops\n"));
    assert_eq!(summary.lines().count(), 7);
}

#[test]
fn oracle_symmetric_case() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("data.csv"), "t,x,y\n0,0,0\n").unwrap();
    ok(dir.path(), &["oracle", "--n", "1"]);
    let rows = read_oracle(&dir.path().join("oracle.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].p_positive - 0.5).abs() < 1e-6);
}

#[test]
fn strict_grid_warning_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "50"]);
    ok(dir.path(), &["oracle", "--n", "50", "--grid", "-1", "1", "50"]);
    assert_eq!(
        code(
            dir.path(),
            &["oracle", "--n", "50", "--grid", "-1", "1", "50", "--strict"]
        ),
        2
    );
}

#[test]
fn report_errors() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--n", "40"]);
    ok(dir.path(), &["oracle", "--n", "40"]);
    ok(dir.path(), &["sample", "--n", "40", "--iters", "0"]);
    assert_eq!(code(dir.path(), &["report", "--n", "40", "--probe", "1"]), 1);
    ok(dir.path(), &["sample", "--n", "40", "--iters", "30"]);
    ok(
        dir.path(),
        &["report", "--n", "40", "--probe", "3", "17", "--max-lag", "5"],
    );
    let diag = fs::read_to_string(dir.path().join("diag.csv")).unwrap();
    assert!(diag.starts_with("metric,t,k,value\n"));
    assert!(diag.contains("\nacf,17,5,"));
    assert_eq!(code(dir.path(), &["report", "--n", "40", "--probe", "40"]), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["sample", "--n", "10"]), 3);
    ok(dir.path(), &["simulate", "--n", "10"]);
    assert_eq!(code(dir.path(), &["sample", "--n", "11"]), 1);
    assert_eq!(code(dir.path(), &["sample", "--n", "10", "--K", "0"]), 1);
    assert_eq!(code(dir.path(), &["sample", "--n", "10", "--bogus"]), 1);
    assert_eq!(code(dir.path(), &["sample", "--n", "10", "--tau", "-1"]), 1);
    fs::write(dir.path().join("data.csv"), "t,x,y\n0,0,oops\n").unwrap();
    assert_eq!(code(dir.path(), &["sample", "--n", "1"]), 3);
}

#[test]
fn config_file_and_resolved_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# short run\nn = 60\nK = 4\niters = 8\nburnin = 2\nseed = 3\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(dir.path(), &["simulate", "--config", cfg]);
    ok(dir.path(), &["oracle", "--config", cfg]);
    ok(dir.path(), &["sample", "--config", cfg]);
    ok(dir.path(), &["report", "--config", cfg, "--probe", "10"]);
    let names = ["data.csv", "oracle.csv", "samples.csv", "summary.csv", "diag.csv"];
    let before: Vec<Vec<u8>> = names.iter().map(|n| fs::read(dir.path().join(n)).unwrap()).collect();
    let resolved = fs::read_to_string(dir.path().join("config_resolved.txt")).unwrap();
    assert!(resolved.contains("K = 4"));
    assert!(resolved.contains("probe = 10"));

    let copy = dir.path().join("resolved.conf");
    fs::write(&copy, &resolved).unwrap();
    let copy = copy.to_str().unwrap();
    for sub in ["simulate", "oracle", "sample", "report"] {
        ok(dir.path(), &[sub, "--config", copy]);
    }
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(&fs::read(dir.path().join(n)).unwrap(), b, "{n} changed");
    }
}

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sde-tv-lab");

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn weights_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["weights", "--r", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("r=3 w=(1/3, -2, 8/3)\nresidual=(0, 0, 0)"));
    let csv = std::fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    assert!(csv.starts_with("i,n_i,w_exact,w_float\n1,1,1/3,"));
    assert!(dir.path().join("weights.csv.manifest.toml").exists());
}

#[test]
fn counterexample_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["counterexample", "--out", "ce.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("slope=0.50"), "{}", stdout(&out));
    let csv = std::fs::read_to_string(dir.path().join("ce.csv")).unwrap();
    assert!(csv.starts_with("t,value,stderr\n"));
    assert!(csv.contains("# slope="));
}

#[test]
fn unknown_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["tv-curve", "--model", "heston"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("`model`") && err.contains("clamped-gbm"), "{err}");
}

#[test]
fn degenerate_fokker_planck_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        dir.path(),
        &[
            "tv-curve",
            "--model",
            "gbm",
            "--params",
            "1",
            "--method",
            "fokker-planck",
            "--k-min",
            "4",
            "--k-max",
            "6",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("elliptic"), "{}", stderr(&out));
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "seed = 3\nout = \"from-file.csv\"\n").unwrap();
    let out = lab(
        dir.path(),
        &["--config", "run.toml", "counterexample", "--seed", "7"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest = std::fs::read_to_string(dir.path().join("from-file.csv.manifest.toml")).unwrap();
    assert!(manifest.contains("\nseed = 7\n"), "{manifest}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "sed = 3\n").unwrap();
    let out = lab(dir.path(), &["--config", "run.toml", "counterexample"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sed"), "{}", stderr(&out));
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "w1-curve",
        "--model",
        "sine-diffusion",
        "--w1-method",
        "coupled",
        "--n-paths",
        "5000",
        "--k-min",
        "4",
        "--k-max",
        "7",
        "--fit-skip",
        "0",
    ];
    for (threads, file) in [("1", "a.csv"), ("2", "b.csv")] {
        let mut args = common.to_vec();
        args.extend(["--threads", threads, "--out", file]);
        let out = lab(dir.path(), &args);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        dir.path(),
        &[
            "w1-curve",
            "--model",
            "ou",
            "--params",
            "1,1",
            "--w1-method",
            "coupled",
            "--n-paths",
            "2000",
            "--out",
            "first.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rerun = lab(
        dir.path(),
        &[
            "--config",
            "first.csv.manifest.toml",
            "w1-curve",
            "--out",
            "second.csv",
        ],
    );
    assert!(rerun.status.success(), "{}", stderr(&rerun));
    assert_eq!(
        std::fs::read(dir.path().join("first.csv")).unwrap(),
        std::fs::read(dir.path().join("second.csv")).unwrap()
    );
    assert_eq!(stdout(&out), stdout(&rerun));
}

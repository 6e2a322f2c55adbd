use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "seed = 4
simulation.dims = [150, 150, 150]
simulation.volume_fraction = 0.1
test.directions = { offset = 2, step = 2, min_extent = 6, gamma0 = 0.05, gamma1 = 0.5, m = 5, sigma2 = 0.2, m0 = 0.5 }
test.entropy = { offset = 1, step = 1, min_extent = 1, gamma0 = 0.05, gamma1 = 0.5, m = 1, sigma2 = 0.5, m0 = 0.7071 }
cluster.fields = 50
";

fn fibrescan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibrescan"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn calibrate_prints_a_table() {
    let o = fibrescan(&[
        "calibrate",
        "--dims",
        "24,24,24",
        "--step",
        "4",
        "--min-extent",
        "8",
        "--format",
        "json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn zero_alpha_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}test.alpha = 0.0\n"));
    let o = fibrescan(&["pipeline", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alpha"), "{err}");
    assert!(err.contains("run.toml"), "{err}");
}

#[test]
fn malformed_and_unknown_keys_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["seed = = 3\n", "grid.colour = 2\n"] {
        let cfg = write_config(dir.path(), text);
        assert_eq!(
            fibrescan(&["pipeline", "--config", &cfg]).status.code(),
            Some(2),
            "{text}"
        );
    }
    assert_eq!(
        fibrescan(&["pipeline", "--format", "yaml"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let empty = dir.path().join("nothing");
    let o = fibrescan(&["test", "--config", &cfg, "--input", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn staged_commands_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let o = fibrescan(&["pipeline", "--config", &cfg, "--out", out, "--threads", "1"]);
    let code = o.status.code().unwrap();
    assert!(
        code == 0 || code == 10,
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.contains("anomaly detected"), "{text}");
    for f in [
        "fibres.csv",
        "directions.csv",
        "entropy.csv",
        "test.json",
        "report.json",
    ] {
        assert!(Path::new(out).join(f).exists(), "{f} missing");
    }
    let staged = dir.path().join("staged");
    let staged = staged.to_str().unwrap();
    for cmd in ["simulate", "fields", "test"] {
        let o = fibrescan(&[cmd, "--config", &cfg, "--out", staged]);
        assert!(
            matches!(o.status.code(), Some(0 | 10)),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        if cmd == "test" {
            assert_eq!(o.status.code(), Some(code));
        }
    }
    let a = fs::read(Path::new(out).join("fibres.csv")).unwrap();
    let b = fs::read(Path::new(staged).join("fibres.csv")).unwrap();
    assert!(a == b);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |seed: &str| {
        let o = fibrescan(&[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            dir.path().join(seed).to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(dir.path().join(seed).join("fibres.csv")).unwrap()
    };
    assert!(run("1") != run("2"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cohere(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohere")).args(args).output().unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn shipped_short_config_compares_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = cohere(&[
        "compare",
        "--config",
        &cfg("free_particle_short.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"], report["config_hash"]);
    assert_eq!(meta["command"], "compare");
}

#[test]
fn coarse_grid_fails_compare_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("free_particle_short.toml"))
        .unwrap()
        .replace("n_x = 256", "n_x = 16")
        .replace("cn_substeps = 100", "cn_substeps = 1");
    let path = write_config(dir.path(), "coarse.toml", &text);
    let out = dir.path().join("r.json");
    let o = cohere(&["compare", "--config", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(!report["errors"].as_array().unwrap().is_empty());
}

#[test]
fn missing_config_names_the_flag() {
    let o = cohere(&["propagate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let o = cohere(&["propagate", "--config", &cfg("free_particle.toml"), "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).to_lowercase().contains("usage"));
    assert_eq!(cohere(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cohere(&["--help"]).status.code(), Some(0));
    assert_eq!(cohere(&["compare", "--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohere(&[
        "propagate",
        "--config",
        dir.path().join("absent.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let text = std::fs::read_to_string(configs().join("free_particle.toml")).unwrap();
    let typo = write_config(dir.path(), "typo.toml", &text.replace("sigma0", "sigma_0"));
    assert_eq!(cohere(&["propagate", "--config", &typo]).status.code(), Some(1));

    let bad = write_config(dir.path(), "bad.toml", &text.replace("n_x = 256", "n_x = 0"));
    assert_eq!(cohere(&["propagate", "--config", &bad]).status.code(), Some(1));

    let o = cohere(&[
        "coherence",
        "--config",
        &cfg("coherent_selection.toml"),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, config, fmt) in [
        ("sample", "coherent_selection.toml", "jsonl"),
        ("coherence", "coherent_selection.toml", "json"),
        ("prune", "coherent_selection.toml", "json"),
        ("relax", "coherent_selection.toml", "json"),
        ("propagate", "harmonic.toml", "csv"),
    ] {
        let outs: Vec<Vec<u8>> = ["1", "2"]
            .iter()
            .map(|tag| {
                let out = dir.path().join(format!("{cmd}-{tag}.{fmt}"));
                let o = cohere(&[
                    cmd,
                    "--config",
                    &cfg(config),
                    "--seed",
                    "3",
                    "--format",
                    fmt,
                    "--out",
                    out.to_str().unwrap(),
                ]);
                assert_eq!(
                    o.status.code(),
                    Some(0),
                    "{cmd}: {}",
                    String::from_utf8_lossy(&o.stderr)
                );
                std::fs::read(&out).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{cmd}");
    }
}

#[test]
fn sampled_ensemble_feeds_back_through_input() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("paths.jsonl");
    let c = cfg("coherent_selection.toml");
    assert_eq!(
        cohere(&["sample", "--config", &c, "--out", ens.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let direct = cohere(&["coherence", "--config", &c]);
    let via_file = cohere(&["coherence", "--config", &c, "--input", ens.to_str().unwrap()]);
    assert_eq!(direct.status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_slice(&direct.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&via_file.stdout).unwrap();
    assert_eq!(a["raw_measure"], b["raw_measure"]);
    assert_eq!(a["n_events"], b["n_events"]);
    assert!(a["events"].as_array().unwrap().len() <= 100);
}

#[test]
fn double_slit_writes_histogram_and_screen() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hist.csv");
    let o = cohere(&[
        "double-slit",
        "--config",
        &cfg("double_slit.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let hist = std::fs::read_to_string(&out).unwrap();
    assert!(hist.starts_with("x,count"));
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 100_000);
    let screen = std::fs::read_to_string(dir.path().join("hist.csv.screen.csv")).unwrap();
    assert!(screen.starts_with("x,re,im"));
}

use std::path::Path;
use std::process::Command;

fn skillscape() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skillscape"))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                entries.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    entries.sort();
    entries
}

#[test]
fn enumerate_prints_the_convergent_profiles() {
    let out = skillscape()
        .args(["enumerate", "--hierarchy", "convergent", "--k", "6"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.ends_with("12 profiles\n"));
    assert!(text.starts_with("000000\n100000\n"));
}

#[test]
fn enumerate_rejects_unsupported_shape() {
    let out = skillscape()
        .args(["enumerate", "--hierarchy", "convergent", "--k", "5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("K = 6"), "{err}");
}

#[test]
fn run_with_missing_config_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = skillscape()
        .args(["run", "--config", "does_not_exist.json", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out_dir.exists(), "no partial output directory");
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}

#[test]
fn run_twice_produces_identical_directories() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{
            "N": 80,
            "hierarchies": ["linear"],
            "generating_models": ["DINA"],
            "methods": ["hc", "kmeans", "emptyk_pseudo_dina"],
            "subset_sizes": [3, 5],
            "replications": 2,
            "pseudo_M": 15,
            "seed": 11
        }"#,
    )
    .unwrap();
    for (out_dir, workers) in [("a", "1"), ("b", "2")] {
        let status = skillscape()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out_dir))
            .env("SKILLSCAPE_WORKERS", workers)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        read_dir_bytes(&dir.path().join("a")),
        read_dir_bytes(&dir.path().join("b"))
    );
}

#[test]
fn simulate_cluster_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let status = skillscape()
        .args([
            "simulate",
            "--hierarchy",
            "convergent",
            "--students",
            "60",
            "--seed",
            "9",
            "--out",
        ])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "q_matrix.csv",
        "responses.csv",
        "capability.csv",
        "truth.csv",
        "sim_meta.json",
    ] {
        assert!(data.join(file).exists(), "{file} missing");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("sim_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["model"]["model"], "dina");
    assert_eq!(meta["model"]["slip"].as_array().unwrap().len(), 30);

    let assignments = dir.path().join("assign.csv");
    let trace = dir.path().join("trace.csv");
    let status = skillscape()
        .args(["cluster", "--method", "emptyk_rescaled", "--hierarchy", "convergent"])
        .arg("--input")
        .arg(data.join("capability.csv"))
        .arg("--out")
        .arg(&assignments)
        .arg("--trace-out")
        .arg(&trace)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&assignments).unwrap();
    assert!(text.starts_with("student,cluster,profile\n"));
    assert_eq!(text.lines().count(), 61);
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("iteration,objective\n"));

    // Semisup requires the Q-matrix; without it the command must fail.
    let out = skillscape()
        .args(["cluster", "--method", "semisup_dina", "--hierarchy", "convergent"])
        .arg("--input")
        .arg(data.join("capability.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("--q"));

    // A tiny run + plot from its CSV.
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"N": 60, "hierarchies": ["linear"], "generating_models": ["DINA", "NIDA"],
            "methods": ["kmeans", "emptyk_pseudo_dina"], "subset_sizes": [3],
            "replications": 2, "pseudo_M": 10, "seed": 5}"#,
    )
    .unwrap();
    let run_dir = dir.path().join("run");
    let status = skillscape()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&run_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let figs = dir.path().join("figs");
    let status = skillscape()
        .args(["plot", "--results"])
        .arg(run_dir.join("results.csv"))
        .arg("--out")
        .arg(&figs)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_dir(&figs).unwrap().count(), 2);
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"N": 60, "hierarchies": ["linear"], "generating_models": ["DINA"],
            "methods": ["kmeans"], "subset_sizes": [3], "replications": 1,
            "seed": 1}"#,
    )
    .unwrap();
    let base = dir.path().join("base");
    let overridden = dir.path().join("override");
    for (out, seed) in [(&base, None), (&overridden, Some("2"))] {
        let mut cmd = skillscape();
        cmd.args(["run", "--config"]).arg(&cfg).arg("--out").arg(out);
        if let Some(seed) = seed {
            cmd.args(["--seed", seed]);
        }
        assert!(cmd.status().unwrap().success());
    }
    assert_ne!(
        std::fs::read(base.join("results.csv")).unwrap(),
        std::fs::read(overridden.join("results.csv")).unwrap()
    );
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mpflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpflow"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bundled() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn validate_bundled_configs() {
    for cfg in bundled() {
        let out = mpflow(&["validate", cfg.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{}: {}",
            cfg.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("config hash"));
    }
    let out = mpflow(&[
        "validate",
        configs().join("meniscus.toml").to_str().unwrap(),
    ]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("designed contact angle 30.00°"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\ndims = [4, 4]\n").unwrap();
    let out = mpflow(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fluids") && err.contains("shapes"), "{err}");

    let missing = dir.path().join("absent.toml");
    assert_eq!(
        mpflow(&["validate", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mpflow(&["bench", "contact-angle", "--angle", "50"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bundled_runs_are_byte_identical_when_reproducible() {
    let root = tempfile::tempdir().unwrap();
    for cfg in bundled() {
        let name = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        let mut trees = vec![];
        // the directory is part of the configuration, so both runs use the same one
        let dir = root.path().join(&name);
        for _ in 0..2 {
            let out = mpflow(&[
                "run",
                cfg.to_str().unwrap(),
                "--reproducible",
                "--max-steps",
                "3",
                "--output-dir",
                dir.to_str().unwrap(),
            ]);
            assert!(
                out.status.success(),
                "{name}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            trees.push(tree(&dir));
            std::fs::remove_dir_all(&dir).unwrap();
        }
        assert!(trees[0].iter().any(|(f, _)| f == "diagnostics.csv"));
        assert!(trees[0].iter().any(|(f, _)| f == "final.vtk"));
        assert!(trees[0] == trees[1], "{name}: outputs differ");
    }
}

fn small_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("laplace_cylinder.toml")).unwrap();
    let text = text
        .replace("dims = [64, 2, 64]", "dims = [16, 2, 16]")
        .replace("spacing_um = 1.0", "spacing_um = 0.25")
        .replace("center = [32.0, 0.0, 32.0]", "center = [2.0, 0.0, 2.0]")
        .replace("radius = 16.0", "radius = 1.0")
        .replace("end_time_us = 1000.0", "end_time_us = 0.2")
        .replace("cadence_us = 10.0", "cadence_us = 0.02")
        .replace(
            "mode = \"auto\"\nsafety = 0.5\nmax_us = 0.1",
            "mode = \"fixed\"\ndt_us = 0.01",
        );
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn resume_continues_the_series() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(root.path());
    let whole = root.path().join("whole");
    let part = root.path().join("part");
    let run = |dir: &Path, extra: &[&str]| {
        let mut args = vec![
            "run",
            cfg.to_str().unwrap(),
            "--reproducible",
            "--output-dir",
            dir.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = mpflow(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&whole, &[]);
    run(&part, &["--end-time", "0.1"]);
    let ck = part.join("checkpoint.bin");
    let out = mpflow(&["resume", ck.to_str().unwrap(), "--end-time", "0.2"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = std::fs::read_to_string(whole.join("diagnostics.csv")).unwrap();
    let b = std::fs::read_to_string(part.join("diagnostics.csv")).unwrap();
    assert_eq!(a.lines().count(), 12);
    assert_eq!(a, b);
}

#[test]
fn damaged_checkpoint_is_refused() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(root.path());
    let dir = root.path().join("out");
    let out = mpflow(&[
        "run",
        cfg.to_str().unwrap(),
        "--max-steps",
        "2",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ck = dir.join("checkpoint.bin");
    let bytes = std::fs::read(&ck).unwrap();
    std::fs::write(&ck, &bytes[..bytes.len() / 2]).unwrap();
    let out = mpflow(&["resume", ck.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"));
}

#[test]
fn blow_up_exits_with_3() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(root.path());
    let text = std::fs::read_to_string(&cfg).unwrap();
    let text = text
        .replace(
            "proper_sigma_pg_per_us2 = [0.0, 0.5, 0.5]",
            "proper_sigma_pg_per_us2 = [0.0, 50.0, 50.0]",
        )
        .replace("dt_us = 0.01", "dt_us = 5.0")
        .replace("end_time_us = 0.2", "end_time_us = 500.0");
    std::fs::write(&cfg, text).unwrap();
    let dir = root.path().join("out");
    let out = mpflow(&[
        "run",
        cfg.to_str().unwrap(),
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("abort.vtk").exists());
}

use std::fs;

use zeno_sim::emit::parse_csv;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["zeno-sim"];
    argv.extend_from_slice(args);
    let code = zeno_sim::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["zeno-n", "--help"]).0, 0);
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["no-such-experiment"]).0, 2);
    let (code, _, err) = run(&["zeno-n", "--kapa", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("kapa"));
}

#[test]
fn bad_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["zeno-n", "--out", out, "--kappa", "fast"]).0, 2);
    assert_eq!(
        run(&["transparency", "--out", out, "--modes", "upper"]).0,
        2
    );
    assert_eq!(run(&["zeno-n", "--out", out, "--format", "png"]).0, 2);
}

#[test]
fn engine_rejections_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = run(&["zeno-n", "--out", out, "--kappa", "-1"]);
    assert_eq!(code, 3);
    assert!(err.starts_with("zeno-sim zeno-n:"), "{err}");
    let (code, _, err) = run(&[
        "zeno-tpa",
        "--out",
        out,
        "--gamma1",
        "0.1",
        "--gamma1_ratio",
        "0.1",
    ]);
    assert_eq!(code, 3);
    assert!(err.contains("gamma1_ratio"));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "kappa = 1\ngamma = 3\n").unwrap();
    let (code, _, err) = run(&[
        "zeno-n",
        "--out",
        dir.path().to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("gamma"));
}

#[test]
fn missing_config_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("absent.cfg");
    let code = run(&[
        "zeno-n",
        "--out",
        dir.path().to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ])
    .0;
    assert_eq!(code, 4);
}

#[test]
fn flags_override_config_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep\nkappa = 2\nn = 3..5\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&[
        "zeno-n",
        "--config",
        cfg.to_str().unwrap(),
        "--kappa",
        "0.5",
        "--out",
        out.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 1);
    let curve = parse_csv(&fs::read_to_string(out.join("zeno-n.csv")).unwrap()).unwrap();
    assert_eq!(curve.metadata()["param.kappa"], "0.5");
    assert_eq!(curve.metadata()["param.n"], "3..5");
    assert_eq!(curve.column("n").unwrap(), vec![3.0, 4.0, 5.0]);
    assert!(!out.join("zeno-n.json").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut snapshots = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let (code, _, _) = run(&[
            "transparency",
            "--points",
            "101",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        snapshots.push(
            files
                .iter()
                .map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap()))
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(snapshots[0].len(), 3);
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn svg_only_for_plottable_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(run(&["cnot", "--out", out.to_str().unwrap()]).0, 0);
    assert!(out.join("cnot.csv").exists());
    assert!(out.join("cnot-patterns.json").exists());
    assert!(!out.join("cnot.svg").exists());
}

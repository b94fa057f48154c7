use std::path::Path;
use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 11] =
    ["synth", "gram", "shrink", "hsic-test", "risk", "power", "spectra", "singular", "scatter", "ratio", "oracle-check"];

fn kshrink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kshrink")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_two_column_sample(dir: &Path) -> String {
    let path = dir.join("pairs.csv");
    let mut text = String::from("x,y\n");
    for i in 0..40 {
        let x = (i as f64 * 0.37).sin() * 2.0;
        let y = x * x + 0.1 * (i as f64 * 1.3).cos();
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_exits_zero_for_every_subcommand() {
    let top = kshrink(&["--help"]);
    assert_eq!(top.status.code(), Some(0));
    for sub in SUBCOMMANDS {
        let o = kshrink(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub} --help");
        assert!(stdout(&o).contains("Usage"), "{sub} --help prints usage");
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["risk", "--no-such-flag"],
        vec!["no-such-command"],
        vec!["hsic-test"],
        vec!["hsic-test", "--input", "/nonexistent/file.csv"],
    ] {
        let o = kshrink(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?} reports on stderr");
    }
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"risk_curve\"\nkernel = \"gaussian\"\nn = [20]\nunknown_key = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = kshrink(&["risk", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown"));
}

#[test]
fn hsic_test_prints_p_value_and_writes_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_two_column_sample(dir.path());
    let out = dir.path().join("test");
    let o = kshrink(&["hsic-test", "--input", &input, "--kind", "lw", "--B", "200", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let p: f64 = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("p_value="))
        .expect("p-value printed")
        .parse()
        .unwrap();
    assert!((1.0 / 201.0..=1.0).contains(&p));
    let csv = std::fs::read_to_string(out.join("outcome.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("statistic,observed,p_value"));
    assert!(lines[1].starts_with("hsic_lw,"));
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (run, workers) in [(0, "1"), (1, "3")] {
        let out = dir.path().join(format!("run{run}"));
        let o = kshrink(&[
            "power",
            "--set",
            "distribution=\"four_gaussians\"",
            "--set",
            "kernel=\"gaussian\"",
            "--set",
            "n=[12]",
            "--set",
            "sweep=\"theta\"",
            "--set",
            "sweep_values=[0, pi/8]",
            "--set",
            "repetitions=3",
            "--set",
            "permutations=19",
            "--set",
            "seed=21",
            "--workers",
            workers,
            "--svg",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<Vec<u8>> = ["results.csv", "summary.csv", "config.resolved"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        assert!(std::fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/risk_gaussian.toml");
    let o = kshrink(&["power", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("sub");
    let o = kshrink(&[
        "spectra",
        "--set",
        "distribution=\"sinusoid\"",
        "--set",
        "kernel=\"gaussian\"",
        "--set",
        "n=[10]",
        "--set",
        "proxy_n=30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_then_shrink_and_gram() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("s.csv");
    let o = kshrink(&["synth", "--distribution", "hollow_gaussian", "--n", "25", "--seed", "3", "--out", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let again = dir.path().join("s2.csv");
    kshrink(&["synth", "--distribution", "hollow_gaussian", "--n", "25", "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());

    let out = dir.path().join("o");
    let o = kshrink(&["shrink", "--input", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rho_lw="));
    let shrink = std::fs::read_to_string(out.join("shrink.csv")).unwrap();
    assert_eq!(shrink.lines().filter(|l| l.starts_with("fcose,beta,")).count(), 25);

    let o = kshrink(&["gram", "--input", data.to_str().unwrap(), "--kernel", "linear", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let k = std::fs::read_to_string(out.join("k_centered.csv")).unwrap();
    assert_eq!(k.lines().count(), 25);
    assert!(k.lines().all(|l| l.split(',').count() == 25));
}

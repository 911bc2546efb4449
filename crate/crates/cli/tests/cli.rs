use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sparse-effort");

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(o: &Output, key: &str) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {}", stdout(o)))
        .parse()
        .unwrap()
}

fn column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn generate_third_order() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["generate", "--n", "3", "--D", "1", "--T", "1", "--svg"],
    );
    assert!(o.status.success());
    assert_eq!(value(&o, "K"), 32.0);
    let starts = column(&d.path().join("signal.csv"), 0);
    let expected = [0.0, 0.25, 0.75];
    assert!(starts
        .iter()
        .zip(expected)
        .all(|(a, b)| (a - b).abs() < 1e-12));
    assert_eq!(column(&d.path().join("signal.csv"), 1).last(), Some(&1.0));
    assert_eq!(
        column(&d.path().join("spikes_paper.csv"), 1),
        [32.0, -32.0, 32.0, -32.0]
    );
    assert_eq!(
        column(&d.path().join("spikes_derivative.csv"), 1),
        [32.0, -64.0, 64.0, -32.0]
    );
    let svg = fs::read_to_string(d.path().join("generate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<path"));
}

#[test]
fn generate_first_order_is_constant() {
    let d = tempfile::tempdir().unwrap();
    assert!(
        run(d.path(), &["generate", "--n", "1", "--D", "5", "--T", "2"])
            .status
            .success()
    );
    assert_eq!(column(&d.path().join("signal.csv"), 2), [2.5]);
}

#[test]
fn invalid_order_is_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["generate", "--n", "0", "--D", "1", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(
        run(d.path(), &["generate", "--n", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(d.path(), &["solve", "--n", "3", "--D", "1", "--T", "-1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn solve_modes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["solve", "--n", "3", "--D", "1", "--T", "1", "--N", "400"],
    );
    assert!(o.status.success());
    assert!((value(&o, "K") / 32.0 - 1.0).abs() <= 0.01);
    assert_eq!(column(&d.path().join("solve_controls.csv"), 0).len(), 400);
    let summary = fs::read_to_string(d.path().join("solve_summary.csv")).unwrap();
    assert!(summary.starts_with("K,K1,K2,status,iterations\n"));

    let o = run(d.path(), &["solve", "--n", "1", "--D", "1", "--T", "1"]);
    assert!((value(&o, "K") - 1.0).abs() < 1e-9);

    let o = run(
        d.path(),
        &["solve", "--n", "3", "--D", "1", "--T", "1", "--soft", "1e9"],
    );
    assert!(o.status.success());
    assert!(value(&o, "K").abs() < 1e-9);
    assert!((value(&o, "K2") - 1.0).abs() < 1e-9);

    let o = run(
        d.path(),
        &["solve", "--n", "3", "--D", "1", "--T", "1", "--l2"],
    );
    assert!(o.status.success());
    assert_eq!(
        run(
            d.path(),
            &["solve", "--n", "3", "--D", "1", "--T", "1", "--l2", "--soft", "1"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn simulate_signal_and_spikes() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(
        d.path(),
        &["generate", "--n", "4", "--D", "0.5", "--T", "2"]
    )
    .status
    .success());
    let sim = d.path().join("sim");
    let signal = d.path().join("signal.csv");
    let o = run(
        &sim,
        &["simulate", "--signal", signal.to_str().unwrap(), "--n", "4"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let state: Vec<f64> = stdout(&o)
        .trim()
        .strip_prefix("terminal_state=")
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((state[0] - 0.5).abs() < 1e-12);
    assert!(state[1..].iter().all(|v| v.abs() < 1e-12));

    let spikes = d.path().join("spikes_derivative.csv");
    let o = run(
        &sim,
        &[
            "simulate",
            "--spikes",
            spikes.to_str().unwrap(),
            "--T",
            "2",
            "--n",
            "4",
        ],
    );
    assert!(o.status.success());
    let paper = d.path().join("spikes_paper.csv");
    let o = run(
        &sim,
        &[
            "simulate",
            "--spikes",
            paper.to_str().unwrap(),
            "--T",
            "2",
            "--n",
            "4",
        ],
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn encode_modes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["encode", "--n", "3", "--D", "1", "--T", "1"]);
    assert!(stdout(&o).contains("round_trip_exact=true"));
    let o = run(
        d.path(),
        &[
            "encode", "--n", "3", "--D", "1", "--T", "1", "--mode", "paper",
        ],
    );
    assert!(o.status.success());
    assert_eq!(
        column(&d.path().join("spikes.csv"), 1),
        [32.0, -32.0, 32.0, -32.0]
    );
    assert_eq!(
        run(
            d.path(),
            &["encode", "--n", "3", "--D", "1", "--T", "1", "--mode", "x"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn synthesize_empty_and_seeded() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(d.path(), &["synthesize", "--count", "0"])
        .status
        .success());
    assert_eq!(
        fs::read_to_string(d.path().join("manifest.csv")).unwrap(),
        "file,subject,movement_type\n"
    );

    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        assert!(run(dir, &["--seed", seed, "synthesize", "--count", "3"])
            .status
            .success());
    }
    let read = |dir: &Path| fs::read(dir.join("trials/trial_001.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let rows = column(&a.join("trials/trial_000.csv"), 0);
    // 0.1 s padding on each side of the 0.33 s movement at 1 kHz.
    assert_eq!(rows.len(), 531);
}

#[test]
fn analyze_empty_manifest() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(d.path(), &["synthesize", "--count", "0"])
        .status
        .success());
    let manifest = d.path().join("manifest.csv");
    let out = d.path().join("res");
    let o = run(&out, &["analyze", "--manifest", manifest.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(
        fs::read_to_string(out.join("results.csv")).unwrap(),
        "subject,movement_type,model,mean_mse,n_trials\n"
    );
    assert_eq!(
        fs::read_to_string(out.join("comparison.csv")).unwrap(),
        "model_a,model_b,U,p\n"
    );
}

#[test]
fn analyze_flags_unreadable_file_and_scores_the_rest() {
    let d = tempfile::tempdir().unwrap();
    assert!(
        run(d.path(), &["synthesize", "--count", "4", "--noise", "0"])
            .status
            .success()
    );
    fs::write(d.path().join("trials/trial_002.csv"), "t,x\n0,0\n1,oops\n").unwrap();
    let manifest = d.path().join("manifest.csv");
    let out = d.path().join("res");
    let o = run(&out, &["analyze", "--manifest", manifest.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(value(&o, "trials_loaded"), 3.0);
    assert_eq!(value(&o, "trials_scored"), 3.0);
    let flagged = fs::read_to_string(out.join("flagged.csv")).unwrap();
    assert!(flagged.starts_with("id,flag,reason\ntrial_002,load_error,"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.contains("s1,reach,sparse-n3,"));
    assert!(results.contains(",3\n"));

    let scores = out.join("scores.csv");
    let cmp = d.path().join("cmp");
    let o = run(
        &cmp,
        &[
            "compare",
            "--scores",
            scores.to_str().unwrap(),
            "--models",
            "sparse-n3,quintic-l2",
        ],
    );
    assert!(o.status.success());
    let text = fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    assert!(text.starts_with("model_a,model_b,U,p\nsparse-n3,quintic-l2,"));
}

#[test]
fn data_errors_exit_four() {
    let d = tempfile::tempdir().unwrap();
    let missing = d.path().join("none.csv");
    assert_eq!(
        run(
            d.path(),
            &["analyze", "--manifest", missing.to_str().unwrap()]
        )
        .status
        .code(),
        Some(4)
    );
    fs::write(&missing, "bad,header\n").unwrap();
    assert_eq!(
        run(
            d.path(),
            &["analyze", "--manifest", missing.to_str().unwrap()]
        )
        .status
        .code(),
        Some(4)
    );
}
